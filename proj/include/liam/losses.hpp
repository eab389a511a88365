#pragma once

// Supervised objectives for the fusion model. Each is a mean over the
// non-pad positions, so episode length does not change the loss scale.

#include <cstdint>
#include <span>
#include <vector>

#include "liam/tensor.hpp"

namespace liam::losses {

/// Cross-entropy of logits [n, 14] against action ids; positions with
/// pad_mask != 0 are ignored.
/// Throws std::invalid_argument when every position is padded.
template <typename T>
ad::Tensor<T> action_loss(const ad::Tensor<T>& logits, std::span<const int> targets,
                          std::span<const std::uint8_t> pad_mask);

/// Same contract over the 85 object labels.
template <typename T>
ad::Tensor<T> object_loss(const ad::Tensor<T>& logits, std::span<const int> targets,
                          std::span<const std::uint8_t> pad_mask);

/// [(i + 1) / n for i in 0..n-1]; n = 0 throws.
std::vector<double> goal_progress_targets(std::size_t n);

template <typename T>
ad::Tensor<T> goal_progress_loss(const ad::Tensor<T>& pred, std::span<const double> targets,
                                 std::span<const std::uint8_t> pad_mask);

/// l_a + object_weight * l_o + gp_weight * l_gp.
template <typename T>
ad::Tensor<T> total_loss(const ad::Tensor<T>& l_a, const ad::Tensor<T>& l_o,
                         const ad::Tensor<T>& l_gp, double object_weight, double gp_weight);

}  // namespace liam::losses
