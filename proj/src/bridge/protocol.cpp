#include <cmath>

#include <json.hpp>

#include "playclone/bridge.hpp"

namespace playclone::bridge {

using nlohmann::json;

namespace {

json range(const sim::Range& r) { return json::array({r.lo, r.hi}); }

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::Schema, "protocol: " + what); }

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("frame is not valid JSON (") + e.what() + ")");
  }
  if (!j.is_object()) bad("frame must be a JSON object");
  const auto t = j.find("type");
  if (t == j.end() || !t->is_string()) bad("frame has no string 'type'");
  const std::string type = t->get<std::string>();
  ClientMessage m;
  if (type == "hello") {
    m.type = MessageType::Hello;
  } else if (type == "reset") {
    m.type = MessageType::Reset;
    if (const auto s = j.find("seed"); s != j.end() && !s->is_null()) {
      if (!s->is_number_unsigned()) bad("reset 'seed' must be a non-negative integer");
      m.seed = s->get<std::uint64_t>();
    }
  } else if (type == "action") {
    m.type = MessageType::Action;
    const auto a = j.find("act");
    if (a == j.end() || !a->is_array()) bad("action frame needs an 'act' array");
    if (a->size() != static_cast<std::size_t>(sim::kActDim)) {
      bad("action has " + std::to_string(a->size()) + " values, expected " + std::to_string(sim::kActDim));
    }
    for (int i = 0; i < sim::kActDim; ++i) {
      const json& v = (*a)[static_cast<std::size_t>(i)];
      if (!v.is_number()) bad("action value " + std::to_string(i) + " is not a number");
      m.act[i] = v.get<double>();
      if (!std::isfinite(m.act[i])) bad("action value " + std::to_string(i) + " is not finite");
    }
  } else if (type == "record_start") {
    m.type = MessageType::RecordStart;
  } else if (type == "record_stop") {
    m.type = MessageType::RecordStop;
  } else {
    bad("unknown message type '" + type + "'");
  }
  return m;
}

std::string hello_message(const sim::SceneConfig& s) {
  json buttons = json::array();
  for (const auto& b : s.button_xy) buttons.push_back({b.x, b.y});
  json scene = {
      {"work_x", range(s.work_x)},
      {"work_y", range(s.work_y)},
      {"work_z", range(s.work_z)},
      {"block_half", s.block_half},
      {"drawer_max", s.drawer_max},
      {"slider_max", s.slider_max},
      {"button_max", s.button_max},
      {"button_radius", s.button_radius},
      {"button_xy", buttons},
      {"drawer_handle", s.drawer_handle},
      {"slider_handle", s.slider_handle},
      {"shelf_x", range(s.shelf_x)},
      {"shelf_y", range(s.shelf_y)},
      {"shelf_surface", s.shelf_surface},
      {"shelf_top", s.shelf_top},
      {"max_delta_pos", s.max_delta_pos},
      {"max_delta_angle", s.max_delta_angle},
      {"max_delta_finger", s.max_delta_finger},
  };
  json j = {{"type", "hello"},
            {"scene", scene},
            {"hz", s.control_hz},
            {"obs_dim", sim::kObsDim},
            {"act_dim", sim::kActDim}};
  return j.dump();
}

std::string state_message(std::int64_t tick, const sim::Obs& obs, bool recording) {
  return json{{"type", "state"}, {"tick", tick}, {"obs", obs}, {"recording", recording}}.dump();
}

std::string recorded_message(const std::string& episode_path, std::size_t frames) {
  return json{{"type", "recorded"}, {"episode_path", episode_path}, {"frames", frames}}.dump();
}

std::string error_message(const std::string& message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

std::string hello_request() { return json{{"type", "hello"}}.dump(); }

std::string reset_request(std::optional<std::uint64_t> seed) {
  json j = {{"type", "reset"}};
  if (seed) j["seed"] = *seed;
  return j.dump();
}

std::string action_request(const sim::ActVec& act) { return json{{"type", "action"}, {"act", act}}.dump(); }
std::string record_start_request() { return json{{"type", "record_start"}}.dump(); }
std::string record_stop_request() { return json{{"type", "record_stop"}}.dump(); }

}  // namespace playclone::bridge
