#pragma once

// Batch construction shared by training and evaluation, matching-accuracy
// evaluation for the pretraining stages, and sequence metrics for the fusion
// model (teacher-forced and open-loop rollout).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "liam/episode.hpp"
#include "liam/model.hpp"

namespace liam {

/// Frame t and t + 1 of an episode together with the action between them.
struct PairRef {
  std::size_t episode = 0;
  std::size_t t = 0;
  int action = 0;
};

/// Every transition whose action is a motor/interaction class, restricted to
/// the first `seq_cap` frames of each episode.
std::vector<PairRef> collect_pairs(const std::vector<world::Episode>& episodes,
                                   std::size_t seq_cap = static_cast<std::size_t>(-1));

/// f(frame_t, frame_t+1) for each ref -> [N, d].
Tensor pair_representations(const LiamModel& model, const std::vector<world::Episode>& episodes,
                            std::span<const PairRef> refs);

/// Unit-norm mean of the first min(n, seq_cap) frame embeddings -> [d].
Tensor sequence_representation(const LiamModel& model, const world::Episode& ep,
                               std::size_t seq_cap);

/// Image-to-action matching accuracy over `num_pairs` held-out pairs. Each
/// batch holds one randomly drawn pair per action class present in the pool,
/// so every batch has U = number of classes columns and chance is exactly 1/U.
struct MatchingResult {
  double accuracy = 0.0;
  std::size_t rows = 0;
  std::size_t columns_per_batch = 0;
};
MatchingResult evaluate_i2a(const LiamModel& model, const std::vector<world::Episode>& episodes,
                            std::size_t num_pairs, std::uint64_t seed);

/// Text-to-frame-sequence matching over random batches of `batch` distinct episodes.
MatchingResult evaluate_t2i(const LiamModel& model, const std::vector<world::Episode>& episodes,
                            std::size_t num_rows, std::size_t batch, std::size_t seq_cap,
                            std::uint64_t seed);

enum class EvalMode { teacher_forced, rollout };
EvalMode parse_eval_mode(const std::string& name);

struct SequenceMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t positions = 0;
};

/// Argmax action at every step with the ground-truth transcript as input.
std::vector<int> predict_teacher_forced(const LiamModel& model, const world::Episode& ep,
                                        bool map_enabled);
/// Open-loop decoding: predictions are fed back as action inputs, frames and
/// maps come from the expert trajectory; stops at <<stop>> or the episode length.
/// Positions after an early stop are filled with <<pad>>.
std::vector<int> predict_rollout(const LiamModel& model, const world::Episode& ep,
                                 bool map_enabled);

/// Throws std::invalid_argument on an empty dataset.
SequenceMetrics evaluate_sequences(const LiamModel& model,
                                   const std::vector<world::Episode>& episodes, EvalMode mode,
                                   bool map_enabled);

}  // namespace liam
