#pragma once

// The {with map, without map} x {seen, unseen} grid: two end-to-end runs that
// differ only in map_enabled, each evaluated on both held-out splits.

#include <string>
#include <vector>

#include "liam/checkpoint.hpp"
#include "liam/config.hpp"
#include "liam/evaluate.hpp"
#include "liam/metrics.hpp"

namespace liam {

struct AblationCell {
  bool map_enabled = true;
  std::string split;
  SequenceMetrics metrics;
};

/// `init` (optional) seeds both runs with pretrained parameters.
std::vector<AblationCell> run_map_ablation(const TrainConfig& config,
                                           const std::vector<world::Episode>& train,
                                           const std::vector<world::Episode>& seen,
                                           const std::vector<world::Episode>& unseen,
                                           const Checkpoint* init, metrics::CsvWriter* csv);

/// Fixed-width text table of the grid.
std::string format_ablation(const std::vector<AblationCell>& cells);

}  // namespace liam
