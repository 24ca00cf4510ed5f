#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "playclone/sim.hpp"

namespace playclone::bridge {

// ---- protocol ------------------------------------------------------------------
// One JSON object per WebSocket text frame.
//   client -> server: hello, reset{seed?}, action{act[8]}, record_start, record_stop
//   server -> client: hello{scene, hz, obs_dim, act_dim}, state{tick, obs[19], recording},
//                     recorded{episode_path, frames}, error{message}

enum class MessageType { Hello, Reset, Action, RecordStart, RecordStop };

struct ClientMessage {
  MessageType type = MessageType::Hello;
  std::optional<std::uint64_t> seed;  // reset only
  sim::ActVec act{};                  // action only
};

// Throws Error(Schema) for malformed frames, unknown types, wrong action width or non-finite values.
ClientMessage parse_client_message(std::string_view text);

std::string hello_message(const sim::SceneConfig& scene);
std::string state_message(std::int64_t tick, const sim::Obs& obs, bool recording);
std::string recorded_message(const std::string& episode_path, std::size_t frames);
std::string error_message(const std::string& message);

// Client-side helpers.
std::string hello_request();
std::string reset_request(std::optional<std::uint64_t> seed = std::nullopt);
std::string action_request(const sim::ActVec& act);
std::string record_start_request();
std::string record_stop_request();

// ---- server --------------------------------------------------------------------

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  sim::SceneConfig scene;
  std::filesystem::path output_dir = "human_play";
  std::uint64_t seed = 0;  // reset seed used when a reset frame carries none
  double hz = kControlHz;  // wall-clock tick rate
  std::size_t max_queued_states = 8;  // states beyond this are dropped for a slow client
};

// Single-session teleoperation server. One thread drives the simulator at a
// fixed rate and owns recording; one thread does all socket I/O.
class TeleopServer {
 public:
  explicit TeleopServer(ServerConfig cfg);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Binds and starts both threads. Returns the bound port.
  std::uint16_t start();
  void stop();
  // Blocks until stop() is called from another thread or a signal handler sets `interrupted`.
  void wait(const std::atomic<bool>* interrupted = nullptr);

  std::int64_t ticks() const;
  std::size_t episodes_recorded() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---- scripted client -----------------------------------------------------------

// Blocking WebSocket client used by tests and scripted sessions.
class Client {
 public:
  Client(const std::string& host, std::uint16_t port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void send(const std::string& text);
  // Next text frame; throws Error(Io) once the server closes the connection.
  std::string receive();
  // Reads frames until one of the given type arrives (others are discarded).
  std::string receive_type(std::string_view type, int max_frames = 100000);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace playclone::bridge
