#pragma once

// Image<->action matching over unique-action columns and the triple
// objective that adds text<->frame-sequence matching.

#include <cstddef>
#include <span>
#include <vector>

#include "liam/tensor.hpp"

namespace liam::contrastive {

inline constexpr double kTauInit = 0.07;
inline constexpr double kTauMin = 0.01;
inline constexpr double kTauMax = 100.0;

/// Ground-truth matching matrix for a batch of frame pairs. Column j stands for
/// unique_actions[j] (first-occurrence order); each row has a single 1.
struct AffinityTargets {
  std::vector<int> unique_actions;
  std::vector<int> column_of_row;  // index into unique_actions for each row
  std::size_t rows() const { return column_of_row.size(); }
  std::size_t cols() const { return unique_actions.size(); }
  /// Dense row-major N x U matrix Q.
  std::vector<double> dense() const;
};

/// Throws std::invalid_argument for fewer than 2 rows or ids outside [0, 14).
AffinityTargets build_affinity_targets(std::span<const int> action_ids);

/// (rows . cols^T) / tau for unit-normalized rows [R, d] and cols [C, d].
template <typename T>
ad::Tensor<T> similarity_logits(const ad::Tensor<T>& rows, const ad::Tensor<T>& cols,
                                const ad::Tensor<T>& tau);

/// Half the sum of the row-direction KL (targets || row softmax) averaged over
/// frame pairs and the column-direction KL averaged over unique actions. Column
/// targets with several positives are renormalized to sum to 1.
template <typename T>
ad::Tensor<T> loss_image_action(const ad::Tensor<T>& logits, const AffinityTargets& targets);

/// Symmetric cross-entropy against the diagonal of the B x B similarity logits.
template <typename T>
ad::Tensor<T> loss_text_image(const ad::Tensor<T>& text_reps, const ad::Tensor<T>& seq_reps,
                              const ad::Tensor<T>& tau);

/// (1 - alpha) * l_ti + alpha * l_ia, alpha in [0, 1].
template <typename T>
ad::Tensor<T> loss_triple(const ad::Tensor<T>& l_ti, const ad::Tensor<T>& l_ia, double alpha);
double loss_triple(double l_ti, double l_ia, double alpha);

double clamp_temperature(double tau);
/// Clamp for a temperature stored in 32 bits. The bounds are rounded inward, so
/// the stored value compares within [kTauMin, kTauMax] exactly.
float clamp_stored_temperature(float tau);

/// Fraction of rows whose argmax column equals target_columns[row]. Ties go to
/// the lowest column index.
double matching_accuracy(std::span<const float> logits, std::size_t rows, std::size_t cols,
                         std::span<const int> target_columns);
std::size_t argmax(std::span<const float> row);

}  // namespace liam::contrastive
