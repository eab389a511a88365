#pragma once

// Training loops for the three stages. Step s draws its batch from a stream
// seeded by (seed, s), so a run resumed from a checkpoint at step k continues
// exactly as the uninterrupted run would have.

#include <functional>
#include <vector>

#include "liam/checkpoint.hpp"
#include "liam/episode.hpp"
#include "liam/evaluate.hpp"
#include "liam/metrics.hpp"
#include "liam/model.hpp"
#include "liam/optimizer.hpp"

namespace liam {

/// Parameters (and optimizer moments when given) plus the run metadata.
Checkpoint make_checkpoint(const LiamModel& model, const Optimizer* optimizer, std::size_t step);

/// Copies parameters from `ckpt` into `model`. Throws CheckpointError when the
/// architecture hash differs or a parameter is missing or misshapen.
void load_parameters(LiamModel& model, const Checkpoint& ckpt);

struct StepLosses {
  double loss = 0.0;
  double loss_ia = 0.0, loss_ti = 0.0;
  double loss_action = 0.0, loss_object = 0.0, loss_gp = 0.0;
};

struct TrainOptions {
  /// Held-out episodes for the periodic evaluation rows (may be null).
  const std::vector<world::Episode>* valid = nullptr;
  metrics::CsvWriter* csv = nullptr;
  /// Continue a run of the same stage: parameters, optimizer state and step.
  const Checkpoint* resume = nullptr;
  /// Called for every metrics row, after it is written.
  std::function<void(const metrics::MetricsRow&)> on_row;
};

class Trainer {
 public:
  Trainer(LiamModel& model, const std::vector<world::Episode>& train);

  /// Forward + backward for step `step`; returns the loss components.
  StepLosses compute_step(std::size_t step);

  /// Runs steps until config.steps and returns the final checkpoint.
  Checkpoint run(const TrainOptions& options);

  /// Evaluation row for `split` at `step` (matching accuracy or sequence metrics).
  metrics::MetricsRow evaluate(const std::vector<world::Episode>& episodes,
                               const std::string& split, std::size_t step) const;

  Optimizer& optimizer() { return optimizer_; }

 private:
  StepLosses pair_step(Rng& rng);
  StepLosses triple_step(Rng& rng);
  StepLosses e2e_step(Rng& rng);
  void clamp_temperatures();

  LiamModel& model_;
  const std::vector<world::Episode>& train_;
  std::vector<PairRef> pairs_;
  Optimizer optimizer_;
};

}  // namespace liam
