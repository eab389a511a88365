#pragma once

// Run configuration: a flat `key = value` file plus `--set key=value`
// overrides. Every key is validated; unknown keys are an error.

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "liam/world.hpp"

namespace liam {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  std::string stage = "pair";  // pair | triple | e2e
  std::uint64_t seed = 0;

  // architecture
  std::size_t d = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t frame_hidden = 128;
  world::WorldConfig world;

  // optimisation
  std::size_t batch_size = 0;  // 0 resolves to the stage default
  std::size_t seq_cap = 21;
  double triple_alpha = 0.8;
  double aux_object_weight = 0.1;
  double aux_gp_weight = 0.1;
  std::string optimizer = "sgd";  // sgd | adam
  double lr = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t steps = 200;
  double tau_init = 0.07;
  std::size_t eval_every = 50;
  std::size_t eval_pairs = 2000;
  bool map_enabled = true;
  std::set<std::string> freeze;

  /// Pair 64, triple 3, e2e 8.
  static std::size_t default_batch(const std::string& stage);
  std::size_t resolved_batch() const { return batch_size ? batch_size : default_batch(stage); }

  /// Throws ConfigError naming the offending key.
  void validate() const;

  /// Applies one `key=value` assignment.
  void set(const std::string& key, const std::string& value);

  /// Every key with its effective value, one `key = value` per line.
  std::string dump() const;

  /// Hash of the keys that determine parameter shapes; checkpoints carry it.
  std::uint64_t architecture_hash() const;
};

/// Parses a config file; `#` starts a comment, blank lines are skipped. Unknown
/// keys and unparsable values throw here; call validate() once overrides are applied.
TrainConfig load_config(const std::string& path);
TrainConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Splits "key=value"; throws ConfigError when '=' is missing.
std::pair<std::string, std::string> split_assignment(const std::string& text);

/// The parameter groups a freeze list may name.
const std::set<std::string>& known_parameter_groups();

}  // namespace liam
