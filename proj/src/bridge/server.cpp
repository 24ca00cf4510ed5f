#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "playclone/bridge.hpp"
#include "playclone/playdata.hpp"

namespace playclone::bridge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Socket = websocket::stream<tcp::socket>;

namespace {

struct Command {
  MessageType type;
  std::optional<std::uint64_t> seed;
};

}  // namespace

struct TeleopServer::Impl {
  explicit Impl(ServerConfig c) : cfg(std::move(c)), acceptor(ioc), env(cfg.scene) {}

  ServerConfig cfg;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::thread io_thread;
  std::thread tick_thread;
  std::atomic<bool> running{false};

  // I/O thread only.
  std::shared_ptr<Socket> session;
  std::deque<std::pair<std::string, bool>> outbox;  // (frame, is_state)
  std::size_t queued_states = 0;
  bool writing = false;
  bool greeted = false;
  beast::flat_buffer read_buf;

  // Shared between the two threads.
  mutable std::mutex mu;
  std::optional<sim::ActVec> mailbox;  // latest action, replaced on every action frame
  std::deque<Command> commands;
  bool session_ended = false;
  bool session_greeted = false;

  // Tick thread only.
  sim::Simulator env;
  std::uint64_t resets = 0;
  std::optional<data::Episode> recording;
  std::atomic<std::int64_t> tick{0};
  std::atomic<std::size_t> recorded{0};

  // ---- I/O thread ----

  void accept_next() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket sock) {
      if (ec) {
        if (running) accept_next();
        return;
      }
      auto ws = std::make_shared<Socket>(std::move(sock));
      ws->text(true);
      ws->async_accept([this, ws](beast::error_code ec2) {
        if (ec2) return;
        if (session) {
          auto msg = std::make_shared<std::string>(error_message("session busy"));
          ws->async_write(asio::buffer(*msg), [ws, msg](beast::error_code, std::size_t) {
            ws->async_close(websocket::close_reason(websocket::close_code::try_again_later, "session busy"),
                            [ws](beast::error_code) {});
          });
          return;
        }
        session = ws;
        greeted = false;
        {
          std::lock_guard lock(mu);
          mailbox.reset();
          session_ended = false;
          session_greeted = false;
        }
        read_next();
      });
      accept_next();
    });
  }

  void end_session() {
    if (!session) return;
    beast::error_code ignored;
    session->next_layer().shutdown(tcp::socket::shutdown_both, ignored);
    session->next_layer().close(ignored);
    session.reset();
    outbox.clear();
    queued_states = 0;
    writing = false;
    greeted = false;
    std::lock_guard lock(mu);
    session_ended = true;
    session_greeted = false;
    mailbox.reset();
  }

  void read_next() {
    auto ws = session;
    ws->async_read(read_buf, [this, ws](beast::error_code ec, std::size_t) {
      if (ws != session) return;
      if (ec) {
        end_session();
        return;
      }
      const std::string text = beast::buffers_to_string(read_buf.data());
      read_buf.consume(read_buf.size());
      handle(text);
      if (session == ws) read_next();
    });
  }

  void handle(const std::string& text) {
    ClientMessage m;
    try {
      m = parse_client_message(text);
    } catch (const Error& e) {
      enqueue(error_message(e.what()), false);
      return;
    }
    std::lock_guard lock(mu);
    switch (m.type) {
      case MessageType::Hello:
        greeted = true;
        session_greeted = true;
        enqueue(hello_message(cfg.scene), false);
        break;
      case MessageType::Action:
        mailbox = m.act;
        break;
      default:
        commands.push_back({m.type, m.seed});
        break;
    }
  }

  void enqueue(std::string frame, bool is_state) {
    if (!session) return;
    if (is_state) {
      if (!greeted || queued_states >= cfg.max_queued_states) return;
      ++queued_states;
    }
    outbox.emplace_back(std::move(frame), is_state);
    if (!writing) write_next();
  }

  void write_next() {
    if (outbox.empty() || !session) {
      writing = false;
      return;
    }
    writing = true;
    auto ws = session;
    ws->async_write(asio::buffer(outbox.front().first), [this, ws](beast::error_code ec, std::size_t) {
      if (ws != session) return;
      if (ec) {
        end_session();
        return;
      }
      if (outbox.front().second) --queued_states;
      outbox.pop_front();
      write_next();
    });
  }

  void post(std::string frame, bool is_state) {
    asio::post(ioc, [this, f = std::move(frame), is_state]() mutable { enqueue(std::move(f), is_state); });
  }

  // ---- tick thread ----

  void finalize(const char* flags) {
    data::Episode ep = std::move(*recording);
    recording.reset();
    ep.header.flags = flags;
    if (ep.frames.empty()) {
      post(error_message("recording stopped before any tick; nothing saved"), false);
      return;
    }
    try {
      const auto path = data::append_episode(cfg.output_dir, ep);
      ++recorded;
      log_info("teleop: saved " + path.string() + " (" + std::to_string(ep.frames.size()) + " frames, flags=" +
               flags + ")");
      post(recorded_message(path.string(), ep.frames.size()), false);
    } catch (const Error& e) {
      log_warn(std::string("teleop: could not save episode: ") + e.what());
      post(error_message(std::string("could not save episode: ") + e.what()), false);
    }
  }

  void do_reset(std::optional<std::uint64_t> seed) {
    const std::uint64_t s = seed ? *seed : mix_seed(cfg.seed, resets);
    ++resets;
    env.reset(s);
    last_reset_seed = s;
  }
  std::uint64_t last_reset_seed = 0;

  void tick_once() {
    std::optional<sim::ActVec> act;
    std::deque<Command> cmds;
    bool ended = false;
    bool greeted_now = false;
    {
      std::lock_guard lock(mu);
      act = mailbox;
      cmds.swap(commands);
      ended = session_ended;
      session_ended = false;
      greeted_now = session_greeted;
    }
    if (ended && recording) finalize("disconnected");
    for (const Command& c : cmds) {
      switch (c.type) {
        case MessageType::Reset:
          if (recording) {
            post(error_message("reset refused while recording"), false);
          } else {
            do_reset(c.seed);
          }
          break;
        case MessageType::RecordStart:
          if (recording) {
            post(error_message("already recording"), false);
          } else {
            data::Episode ep;
            ep.header.source = data::Source::Human;
            ep.header.seed = last_reset_seed;
            ep.header.hz = cfg.scene.control_hz;
            ep.header.created = data::now_timestamp();
            recording = std::move(ep);
          }
          break;
        case MessageType::RecordStop:
          if (!recording) {
            post(error_message("record_stop without an active recording"), false);
          } else {
            finalize("none");
          }
          break;
        default:
          break;
      }
    }
    const sim::Action a = sim::clamp_action(cfg.scene, sim::Action::from_flat(act.value_or(sim::ActVec{})));
    const sim::Obs obs = env.observe().flat();
    if (recording) {
      recording->frames.push_back({static_cast<std::int64_t>(recording->frames.size()), obs, a.flat()});
    }
    env.step(a);
    const std::int64_t t = ++tick;
    if (greeted_now) post(state_message(t, env.observe().flat(), recording.has_value()), true);
  }

  void tick_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / cfg.hz));
    auto next = clock::now() + period;
    while (running) {
      std::this_thread::sleep_until(next);
      if (!running) break;
      tick_once();
      next += period;
      // After a stall, resume the cadence instead of bursting.
      if (clock::now() > next + 5 * period) next = clock::now() + period;
    }
    if (recording) finalize("disconnected");
  }
};

TeleopServer::TeleopServer(ServerConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
  if (!(impl_->cfg.hz > 0)) throw Error(ErrorKind::InvalidArgument, "teleop tick rate must be > 0");
}

TeleopServer::~TeleopServer() { stop(); }

std::uint16_t TeleopServer::start() {
  Impl& m = *impl_;
  if (m.running) throw Error(ErrorKind::InvalidState, "teleop server already running");
  try {
    const tcp::endpoint ep(asio::ip::make_address(m.cfg.host), m.cfg.port);
    m.acceptor.open(ep.protocol());
    m.acceptor.set_option(asio::socket_base::reuse_address(true));
    m.acceptor.bind(ep);
    m.acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorKind::Io, "teleop: cannot listen on " + m.cfg.host + ":" + std::to_string(m.cfg.port) + ": " +
                                   e.what());
  }
  m.do_reset(m.cfg.seed);
  m.running = true;
  m.accept_next();
  m.io_thread = std::thread([&m] {
    auto guard = asio::make_work_guard(m.ioc);
    m.ioc.run();
  });
  m.tick_thread = std::thread([&m] { m.tick_loop(); });
  return m.acceptor.local_endpoint().port();
}

void TeleopServer::stop() {
  Impl& m = *impl_;
  if (!m.running.exchange(false)) return;
  if (m.tick_thread.joinable()) m.tick_thread.join();
  // Let the final "recorded" frame go out before tearing the socket down.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  asio::post(m.ioc, [&m] {
    beast::error_code ignored;
    m.acceptor.close(ignored);
    m.end_session();
    m.ioc.stop();
  });
  if (m.io_thread.joinable()) m.io_thread.join();
}

void TeleopServer::wait(const std::atomic<bool>* interrupted) {
  while (impl_->running && !(interrupted != nullptr && interrupted->load())) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  stop();
}

std::int64_t TeleopServer::ticks() const { return impl_->tick.load(); }
std::size_t TeleopServer::episodes_recorded() const { return impl_->recorded.load(); }

// ---- client ----------------------------------------------------------------------

struct Client::Impl {
  asio::io_context ioc;
  Socket ws{ioc};
  beast::flat_buffer buf;
};

Client::Client(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  try {
    tcp::resolver resolver(impl_->ioc);
    asio::connect(impl_->ws.next_layer(), resolver.resolve(host, std::to_string(port)));
    impl_->ws.handshake(host, "/");
    impl_->ws.text(true);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorKind::Io, "teleop client: cannot connect to " + host + ":" + std::to_string(port) + ": " +
                                   e.what());
  }
}

Client::~Client() {
  beast::error_code ignored;
  impl_->ws.next_layer().close(ignored);
}

void Client::send(const std::string& text) {
  try {
    impl_->ws.write(asio::buffer(text));
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorKind::Io, std::string("teleop client: send failed: ") + e.what());
  }
}

std::string Client::receive() {
  try {
    impl_->buf.consume(impl_->buf.size());
    impl_->ws.read(impl_->buf);
    return beast::buffers_to_string(impl_->buf.data());
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorKind::Io, std::string("teleop client: connection closed: ") + e.what());
  }
}

std::string Client::receive_type(std::string_view type, int max_frames) {
  for (int i = 0; i < max_frames; ++i) {
    std::string frame = receive();
    const auto j = nlohmann::json::parse(frame, nullptr, false);
    if (j.is_object() && j.value("type", "") == type) return frame;
  }
  throw Error(ErrorKind::Io, "teleop client: no '" + std::string(type) + "' frame received");
}

void Client::close() {
  beast::error_code ec;
  impl_->ws.close(websocket::close_code::normal, ec);
}

}  // namespace playclone::bridge
