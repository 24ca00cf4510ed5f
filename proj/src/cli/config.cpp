#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "playclone/cli.hpp"

namespace playclone::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& want) {
  throw Error(ErrorKind::InvalidArgument, "config: " + key + " = '" + value + "' is not " + want);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& k, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(k, v, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(k, v, "a number");
  }
}

std::int64_t to_int(const std::string& k, const std::string& v) {
  std::int64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(k, v, "an integer");
  return x;
}

std::uint64_t to_u64(const std::string& k, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(k, v, "a non-negative integer");
  return x;
}

bool to_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(k, v, "a boolean");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class Get>
Setter dbl(Get get) {
  return [get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = to_double(k, v); };
}
template <class Get>
Setter integer(Get get) {
  return [get](RunConfig& c, const std::string& k, const std::string& v) {
    get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(to_int(k, v));
  };
}
template <class Get>
Setter boolean(Get get) {
  return [get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = to_bool(k, v); };
}

void add_train_keys(std::map<std::string, Setter>& t, const std::string& p,
                    pipeline::TrainConfig& (*get)(RunConfig&)) {
  t[p + ".layers"] = integer([get](RunConfig& c) -> int& { return get(c).spec.layers; });
  t[p + ".width"] = integer([get](RunConfig& c) -> int& { return get(c).spec.width; });
  t[p + ".mixtures"] = integer([get](RunConfig& c) -> int& { return get(c).spec.mixtures; });
  t[p + ".batch"] = integer([get](RunConfig& c) -> int& { return get(c).batch; });
  t[p + ".steps"] = integer([get](RunConfig& c) -> long& { return get(c).steps; });
  t[p + ".lr"] = dbl([get](RunConfig& c) -> double& { return get(c).adam.lr; });
  t[p + ".clip_norm"] = dbl([get](RunConfig& c) -> double& { return get(c).clip_norm; });
  t[p + ".precision"] = [get](RunConfig& c, const std::string& k, const std::string& v) {
    if (v == "double") {
      get(c).precision = seqnet::Precision::Double;
    } else if (v == "single") {
      get(c).precision = seqnet::Precision::Single;
    } else {
      bad_value(k, v, "'double' or 'single'");
    }
  };
}

pipeline::TrainConfig& bc_of(RunConfig& c) { return c.bc; }
pipeline::TrainConfig& lfp_of(RunConfig& c) { return c.lfp; }

const std::map<std::string, Setter>& table() {
  static const std::map<std::string, Setter> t = [] {
    std::map<std::string, Setter> t;
    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); };
    t["paths.data_root"] = [](RunConfig& c, const std::string&, const std::string& v) { c.data_root = v; };
    t["paths.checkpoint_root"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.checkpoint_root = v;
    };
    t["paths.report_root"] = [](RunConfig& c, const std::string&, const std::string& v) { c.report_root = v; };

    t["scene.grasp_angle"] = dbl([](RunConfig& c) -> double& { return c.scene.grasp_angle; });
    t["scene.drawer_max"] = dbl([](RunConfig& c) -> double& { return c.scene.drawer_max; });
    t["scene.slider_max"] = dbl([](RunConfig& c) -> double& { return c.scene.slider_max; });
    t["scene.button_max"] = dbl([](RunConfig& c) -> double& { return c.scene.button_max; });
    t["scene.press_threshold"] = dbl([](RunConfig& c) -> double& { return c.scene.press_threshold; });
    t["scene.button_radius"] = dbl([](RunConfig& c) -> double& { return c.scene.button_radius; });
    t["scene.button_relax"] = dbl([](RunConfig& c) -> double& { return c.scene.button_relax; });
    t["scene.handle_radius"] = dbl([](RunConfig& c) -> double& { return c.scene.handle_radius; });
    t["scene.shelf_surface"] = dbl([](RunConfig& c) -> double& { return c.scene.shelf_surface; });
    t["scene.shelf_top"] = dbl([](RunConfig& c) -> double& { return c.scene.shelf_top; });
    t["scene.grasp_radius"] = dbl([](RunConfig& c) -> double& { return c.scene.grasp_radius; });
    t["scene.effector_radius"] = dbl([](RunConfig& c) -> double& { return c.scene.effector_radius; });
    t["scene.lift_height"] = dbl([](RunConfig& c) -> double& { return c.scene.lift_height; });
    t["scene.tip_fraction"] = dbl([](RunConfig& c) -> double& { return c.scene.tip_fraction; });
    t["scene.upright_tol"] = dbl([](RunConfig& c) -> double& { return c.scene.upright_tol; });
    t["scene.flat_tol"] = dbl([](RunConfig& c) -> double& { return c.scene.flat_tol; });
    t["scene.rotate_threshold"] = dbl([](RunConfig& c) -> double& { return c.scene.rotate_threshold; });
    t["scene.sweep_distance"] = dbl([](RunConfig& c) -> double& { return c.scene.sweep_distance; });
    t["scene.max_delta_pos"] = dbl([](RunConfig& c) -> double& { return c.scene.max_delta_pos; });
    t["scene.max_delta_angle"] = dbl([](RunConfig& c) -> double& { return c.scene.max_delta_angle; });
    t["scene.max_delta_finger"] = dbl([](RunConfig& c) -> double& { return c.scene.max_delta_finger; });
    t["scene.task_budget"] = integer([](RunConfig& c) -> int& { return c.scene.task_budget; });

    t["oracle.wander_prob"] = dbl([](RunConfig& c) -> double& { return c.oracle.wander_prob; });
    t["oracle.primitive_tick_limit"] = integer([](RunConfig& c) -> int& { return c.oracle.primitive_tick_limit; });
    t["oracle.action_noise"] = dbl([](RunConfig& c) -> double& { return c.oracle.action_noise; });

    t["collect.minutes"] = dbl([](RunConfig& c) -> double& { return c.collect_minutes; });
    t["collect.episode_minutes"] = dbl([](RunConfig& c) -> double& { return c.collect_episode_minutes; });

    add_train_keys(t, "bc", &bc_of);
    add_train_keys(t, "lfp", &lfp_of);

    t["clone.episodes"] = integer([](RunConfig& c) -> std::size_t& { return c.clone.episodes; });
    t["clone.minutes"] = dbl([](RunConfig& c) -> double& { return c.clone.minutes; });
    t["clone.temperature"] = dbl([](RunConfig& c) -> double& { return c.clone.temperature; });
    t["clone.context_ticks"] = integer([](RunConfig& c) -> int& { return c.clone.context_ticks; });
    t["clone.greedy"] = boolean([](RunConfig& c) -> bool& { return c.clone.greedy; });

    t["eval.trials"] = integer([](RunConfig& c) -> int& { return c.eval_trials; });
    t["eval.temperature"] = dbl([](RunConfig& c) -> double& { return c.rollout.temperature; });
    t["eval.greedy"] = boolean([](RunConfig& c) -> bool& { return c.rollout.greedy; });
    t["eval.context_ticks"] = integer([](RunConfig& c) -> int& { return c.rollout.context_ticks; });

    t["sweep.kind"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.sweep = bench::default_sweep(bench::parse_sweep(v));
    };
    t["sweep.grid"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.sweep.grid.clear();
      for (const auto& s : split(v, ',')) c.sweep.grid.push_back(to_double(k, s));
    };
    t["sweep.seeds"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.sweep.seeds.clear();
      for (const auto& s : split(v, ',')) c.sweep.seeds.push_back(to_u64(k, s));
    };
    t["sweep.human_minutes"] = dbl([](RunConfig& c) -> double& { return c.sweep_base.human_minutes; });
    t["sweep.clone_hours"] = dbl([](RunConfig& c) -> double& { return c.sweep_base.clone_hours; });
    t["sweep.clone_minutes"] = dbl([](RunConfig& c) -> double& { return c.sweep_base.clone_minutes; });
    t["sweep.clone_temperature"] = dbl([](RunConfig& c) -> double& { return c.sweep_base.clone_temperature; });
    t["sweep.capacities"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.sweep_base.capacities.clear();
      for (const auto& s : split(v, ',')) {
        const auto x = s.find('x');
        if (x == std::string::npos) bad_value(k, v, "a list like 2x128,1x64");
        c.sweep_base.capacities.push_back(
            {static_cast<int>(to_int(k, s.substr(0, x))), static_cast<int>(to_int(k, s.substr(x + 1)))});
      }
    };

    t["serve.host"] = [](RunConfig& c, const std::string&, const std::string& v) { c.serve.host = v; };
    t["serve.port"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const auto p = to_int(k, v);
      if (p < 0 || p > 65535) bad_value(k, v, "a port number");
      c.serve.port = static_cast<std::uint16_t>(p);
    };
    t["serve.hz"] = dbl([](RunConfig& c) -> double& { return c.serve.hz; });
    t["serve.max_queued_states"] = integer([](RunConfig& c) -> std::size_t& { return c.serve.max_queued_states; });
    t["serve.output"] = [](RunConfig& c, const std::string&, const std::string& v) { c.serve.output_dir = v; };
    return t;
  }();
  return t;
}

}  // namespace

RunConfig::RunConfig() {
  bc.precision = seqnet::Precision::Single;
  lfp.precision = seqnet::Precision::Single;
  sweep = bench::default_sweep(bench::SweepKind::DataQuantity);
}

bench::BaseConfig sweep_config(const RunConfig& c) {
  bench::BaseConfig base = c.sweep_base;
  base.scene = c.scene;
  base.oracle = c.oracle;
  base.bc = c.bc;
  base.lfp = c.lfp;
  base.eval_trials = c.eval_trials;
  base.rollout = c.rollout;
  return base;
}

fs::path RunConfig::checkpoints() const { return checkpoint_root.empty() ? data_root / "checkpoints" : checkpoint_root; }
fs::path RunConfig::reports() const { return report_root.empty() ? data_root / "reports" : report_root; }

void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  static const std::string weight = "lfp.weight.";
  if (key.rfind(weight, 0) == 0) {
    const data::Source s = data::parse_source(key.substr(weight.size()));
    const double w = to_double(key, value);
    if (!(w >= 0.0)) bad_value(key, value, "a non-negative weight");
    c.lfp.source_weights[s] = w;
    return;
  }
  const auto& t = table();
  const auto it = t.find(key);
  if (it == t.end()) throw Error(ErrorKind::InvalidArgument, "config: unknown key '" + key + "'");
  it->second(c, key, value);
}

void load_config_text(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidArgument, "config line " + std::to_string(n) + ": expected key = value");
    }
    set_key(c, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
}

void load_config_file(RunConfig& c, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "config file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  load_config_text(c, ss.str());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : table()) keys.push_back(k);
  keys.push_back("lfp.weight.<human|oracle|cloned|random>");
  return keys;
}

int exit_code(ErrorKind kind) { return 10 + static_cast<int>(kind); }

}  // namespace playclone::cli
