#include "liam/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace liam {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

const std::set<std::string>& known_parameter_groups() {
  static const std::set<std::string> groups = {"text",        "frame",      "action", "map",
                                               "pair_fusion", "modal_type", "fusion", "heads",
                                               "temperature"};
  return groups;
}

std::size_t TrainConfig::default_batch(const std::string& stage) {
  if (stage == "pair") return 64;
  if (stage == "triple") return 3;
  return 8;
}

void TrainConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  if (key == "stage") {
    stage = v;
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "d") {
    d = parse_number<std::size_t>(key, v);
  } else if (key == "heads") {
    heads = parse_number<std::size_t>(key, v);
  } else if (key == "layers") {
    layers = parse_number<std::size_t>(key, v);
  } else if (key == "frame_hidden") {
    frame_hidden = parse_number<std::size_t>(key, v);
  } else if (key == "world.extent") {
    world.extent = parse_number<int>(key, v);
  } else if (key == "world.view") {
    world.view = parse_number<int>(key, v);
  } else if (key == "world.objects") {
    world.num_objects = parse_number<int>(key, v);
  } else if (key == "batch_size") {
    batch_size = parse_number<std::size_t>(key, v);
  } else if (key == "seq_cap") {
    seq_cap = parse_number<std::size_t>(key, v);
  } else if (key == "triple_alpha") {
    triple_alpha = parse_number<double>(key, v);
  } else if (key == "aux_object_weight") {
    aux_object_weight = parse_number<double>(key, v);
  } else if (key == "aux_gp_weight") {
    aux_gp_weight = parse_number<double>(key, v);
  } else if (key == "optimizer") {
    optimizer = v;
  } else if (key == "lr") {
    lr = parse_number<double>(key, v);
  } else if (key == "adam_beta1") {
    adam_beta1 = parse_number<double>(key, v);
  } else if (key == "adam_beta2") {
    adam_beta2 = parse_number<double>(key, v);
  } else if (key == "adam_eps") {
    adam_eps = parse_number<double>(key, v);
  } else if (key == "steps") {
    steps = parse_number<std::size_t>(key, v);
  } else if (key == "tau_init") {
    tau_init = parse_number<double>(key, v);
  } else if (key == "eval_every") {
    eval_every = parse_number<std::size_t>(key, v);
  } else if (key == "eval_pairs") {
    eval_pairs = parse_number<std::size_t>(key, v);
  } else if (key == "map_enabled") {
    map_enabled = parse_bool(key, v);
  } else if (key == "freeze") {
    freeze.clear();
    std::stringstream ss(v);
    std::string g;
    while (std::getline(ss, g, ',')) {
      g = trim(g);
      if (!g.empty()) freeze.insert(g);
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
  };
  if (stage != "pair" && stage != "triple" && stage != "e2e")
    fail("stage", "must be pair, triple or e2e");
  if (d == 0) fail("d", "must be positive");
  if (heads == 0 || d % heads != 0) fail("heads", "must divide d");
  if (frame_hidden == 0) fail("frame_hidden", "must be positive");
  try {
    world.validate();
  } catch (const std::exception& e) {
    fail("world", e.what());
  }
  if (stage == "pair" && batch_size == 1) fail("batch_size", "pair batches need at least 2 pairs");
  if (stage == "triple" && batch_size == 1) fail("batch_size", "triple batches need at least 2");
  if (seq_cap < 2) fail("seq_cap", "must be at least 2");
  if (!(triple_alpha >= 0.0 && triple_alpha <= 1.0)) fail("triple_alpha", "must lie in [0, 1]");
  if (!(aux_object_weight >= 0.0)) fail("aux_object_weight", "must be non-negative");
  if (!(aux_gp_weight >= 0.0)) fail("aux_gp_weight", "must be non-negative");
  if (optimizer != "sgd" && optimizer != "adam") fail("optimizer", "must be sgd or adam");
  if (!(lr > 0.0)) fail("lr", "must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1", "must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2", "must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps", "must be positive");
  if (!(tau_init >= 0.01 && tau_init <= 100.0)) fail("tau_init", "must lie in [0.01, 100]");
  if (eval_pairs == 0) fail("eval_pairs", "must be positive");
  for (const auto& g : freeze)
    if (!known_parameter_groups().count(g)) fail("freeze", "unknown parameter group '" + g + "'");
}

std::string TrainConfig::dump() const {
  std::ostringstream os;
  std::string fz;
  for (const auto& g : freeze) fz += (fz.empty() ? "" : ",") + g;
  os << "stage = " << stage << '\n'
     << "seed = " << seed << '\n'
     << "d = " << d << '\n'
     << "heads = " << heads << '\n'
     << "layers = " << layers << '\n'
     << "frame_hidden = " << frame_hidden << '\n'
     << "world.extent = " << world.extent << '\n'
     << "world.view = " << world.view << '\n'
     << "world.objects = " << world.num_objects << '\n'
     << "batch_size = " << resolved_batch() << '\n'
     << "seq_cap = " << seq_cap << '\n'
     << "triple_alpha = " << fmt(triple_alpha) << '\n'
     << "aux_object_weight = " << fmt(aux_object_weight) << '\n'
     << "aux_gp_weight = " << fmt(aux_gp_weight) << '\n'
     << "optimizer = " << optimizer << '\n'
     << "lr = " << fmt(lr) << '\n'
     << "adam_beta1 = " << fmt(adam_beta1) << '\n'
     << "adam_beta2 = " << fmt(adam_beta2) << '\n'
     << "adam_eps = " << fmt(adam_eps) << '\n'
     << "steps = " << steps << '\n'
     << "tau_init = " << fmt(tau_init) << '\n'
     << "eval_every = " << eval_every << '\n'
     << "eval_pairs = " << eval_pairs << '\n'
     << "map_enabled = " << (map_enabled ? "true" : "false") << '\n'
     << "freeze = " << fz << '\n';
  return os.str();
}

std::uint64_t TrainConfig::architecture_hash() const {
  std::ostringstream os;
  os << "d=" << d << ";heads=" << heads << ";layers=" << layers << ";frame_hidden=" << frame_hidden
     << ";extent=" << world.extent << ";view=" << world.view;
  return fnv1a(os.str());
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

TrainConfig parse_config(const std::string& text, const std::string& source) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      const auto [k, v] = split_assignment(line);
      cfg.set(k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace liam
