#include <doctest.h>

#include <chrono>
#include <thread>

#include <json.hpp>

#include "helpers.hpp"
#include "playclone/bridge.hpp"
#include "playclone/pipeline.hpp"
#include "playclone/playdata.hpp"

using namespace playclone;
using namespace playclone::bridge;
using nlohmann::json;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("bridge") {
  TEST_CASE("client messages parse and malformed ones are schema errors") {
    CHECK(parse_client_message(hello_request()).type == MessageType::Hello);
    const ClientMessage r = parse_client_message(reset_request(17));
    CHECK(r.type == MessageType::Reset);
    CHECK(r.seed == 17u);
    CHECK_FALSE(parse_client_message(reset_request()).seed.has_value());
    sim::ActVec a{};
    a[0] = 0.01;
    a[7] = -0.1;
    const ClientMessage m = parse_client_message(action_request(a));
    CHECK(m.type == MessageType::Action);
    CHECK(m.act == a);
    CHECK(parse_client_message(record_start_request()).type == MessageType::RecordStart);
    CHECK(parse_client_message(record_stop_request()).type == MessageType::RecordStop);

    for (const char* bad : {"not json", "[]", R"({"type":"dance"})", R"({"act":[0,0,0,0,0,0,0,0]})",
                            R"({"type":"action","act":[0,0,0]})", R"({"type":"action","act":[0,0,0,0,0,0,0,"x"]})",
                            R"({"type":"action"})", R"({"type":"reset","seed":-1})"}) {
      CAPTURE(bad);
      CHECK(kind_of([&] { parse_client_message(bad); }) == ErrorKind::Schema);
    }
    CHECK(kind_of([] { parse_client_message(R"({"type":"action","act":[0,0,0,0,0,0,0,1e999]})"); }) ==
          ErrorKind::Schema);
  }

  TEST_CASE("server messages carry the documented fields") {
    const json h = json::parse(hello_message(sim::SceneConfig{}));
    CHECK(h["type"] == "hello");
    CHECK(h["obs_dim"] == 19);
    CHECK(h["act_dim"] == 8);
    CHECK(h["hz"] == 30.0);
    sim::Obs o{};
    o[4] = 0.25;
    const json s = json::parse(state_message(12, o, true));
    CHECK(s["type"] == "state");
    CHECK(s["tick"] == 12);
    CHECK(s["obs"].size() == 19);
    CHECK(s["obs"][4] == 0.25);
    CHECK(s["recording"] == true);
    const json r = json::parse(recorded_message("a/b.play", 90));
    CHECK(r["frames"] == 90);
    CHECK(r["episode_path"] == "a/b.play");
    CHECK(json::parse(error_message("x"))["type"] == "error");
  }

  TEST_CASE("a scripted session records an episode that validates and trains") {
    testutil::TempDir dir("teleop");
    testutil::LogCapture logs;
    ServerConfig cfg;
    cfg.port = 0;
    cfg.hz = 200.0;
    cfg.output_dir = dir / "human";
    cfg.max_queued_states = 1000;
    TeleopServer server(cfg);
    const std::uint16_t port = server.start();
    REQUIRE(port != 0);

    json recorded;
    {
      Client c("127.0.0.1", port);
      c.send(hello_request());
      const json hello = json::parse(c.receive_type("hello"));
      CHECK(hello["act_dim"] == 8);
      c.send(reset_request(5));
      c.send(record_start_request());
      // Wait until the server is recording before streaming actions.
      while (!json::parse(c.receive_type("state"))["recording"].get<bool>()) {
      }
      for (int i = 0; i < 90; ++i) {
        sim::ActVec a{};
        a[0] = 0.02 * ((i / 10) % 2 == 0 ? 1 : -1);
        a[7] = i < 45 ? -0.1 : 0.1;
        c.send(action_request(a));
        c.receive_type("state");
      }
      c.send(record_stop_request());
      recorded = json::parse(c.receive_type("recorded"));

      // The session slot is taken; a second client is turned away.
      Client second("127.0.0.1", port);
      second.send(hello_request());
      const json busy = json::parse(second.receive_type("error"));
      CHECK(busy["message"] == "session busy");
    }
    server.stop();

    CHECK(recorded["frames"].get<int>() >= 90);
    CHECK(server.episodes_recorded() == 1);
    CHECK_NOTHROW(data::validate_dataset(dir / "human"));
    const data::Dataset d = data::load_dataset(dir / "human");
    REQUIRE(d.episodes.size() == 1);
    CHECK(d.episodes[0].header.source == data::Source::Human);
    CHECK(d.episodes[0].header.flags == "none");

    pipeline::TrainConfig tc;
    tc.spec.layers = 1;
    tc.spec.width = 16;
    tc.batch = 4;
    tc.steps = 100;
    const auto r = pipeline::train_play_bc(d, tc);
    CHECK(r.log.size() == 100);
    CHECK(std::isfinite(r.final_loss));
  }

  TEST_CASE("dropping the connection mid-recording saves a flagged episode") {
    testutil::TempDir dir("teleop_drop");
    testutil::LogCapture logs;
    ServerConfig cfg;
    cfg.port = 0;
    cfg.hz = 200.0;
    cfg.output_dir = dir / "human";
    TeleopServer server(cfg);
    const std::uint16_t port = server.start();
    {
      Client c("127.0.0.1", port);
      c.send(hello_request());
      c.receive_type("hello");
      c.send(record_start_request());
      while (!json::parse(c.receive_type("state"))["recording"].get<bool>()) {
      }
      for (int i = 0; i < 5; ++i) c.receive_type("state");
      c.close();
    }
    for (int i = 0; i < 200 && server.episodes_recorded() == 0; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    server.stop();
    REQUIRE(server.episodes_recorded() == 1);
    const data::Dataset d = data::load_dataset(dir / "human");
    CHECK(d.episodes[0].header.flags == "disconnected");
  }
}
