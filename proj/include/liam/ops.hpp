#pragma once

// The closed set of differentiable primitives. Shapes are explicit: apart
// from add_row (bias over rows) and divide_by (scalar tensor) nothing
// broadcasts. "Row" ops accept a vector [n] and treat it as a single row.

#include <cstdint>
#include <span>
#include <vector>

#include "liam/tensor.hpp"

namespace liam::ops {

using ad::Tensor;

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
/// a [r, c] + bias [c] on every row.
template <typename T> Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& bias);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
/// a / s for a one-element tensor s (differentiable in both).
template <typename T> Tensor<T> divide_by(const Tensor<T>& a, const Tensor<T>& s);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

/// Rows of `table` selected by `ids`; throws std::out_of_range naming the position.
template <typename T> Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids);

/// Valid 1-D convolution: x [L, Cin], w [k, Cin, Cout], b [Cout] -> [L - k + 1, Cout].
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
/// Mean over the temporal (first) axis of [L, C] -> [C].
template <typename T> Tensor<T> global_average_pool(const Tensor<T>& x);
/// Mean of a matrix over `axis` (0 -> [cols], 1 -> [rows]).
template <typename T> Tensor<T> mean(const Tensor<T>& x, int axis);
template <typename T> Tensor<T> sum(const Tensor<T>& x);

/// Unit L2 norm along the last axis. A zero row throws std::domain_error.
template <typename T> Tensor<T> l2_normalize(const Tensor<T>& x);
template <typename T> Tensor<T> softmax(const Tensor<T>& x);
/// Softmax over the entries with mask != 0; masked entries are exactly 0.
/// Every row must allow at least one entry.
template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, std::span<const std::uint8_t> mask);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));
/// Exact (erf) GELU.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
/// Pairwise cosine similarity of the rows of a [R, d] and b [C, d] -> [R, C].
template <typename T> Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b);

// Row-weighted reductions to a scalar. Targets are constants; rows whose
// weight is 0 are skipped entirely and their logits receive zero gradient.

/// sum_r w_r * H(target_r, softmax(logits_r)).
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const Tensor<T>& target,
                        std::span<const T> row_weights);
/// sum_r w_r * KL(target_r || softmax(logits_r)), with 0 log 0 = 0.
template <typename T>
Tensor<T> kl_divergence(const Tensor<T>& logits, const Tensor<T>& target,
                        std::span<const T> row_weights);
/// sum_i w_i * (pred_i - target_i)^2 over flattened elements.
template <typename T>
Tensor<T> mse(const Tensor<T>& pred, const Tensor<T>& target, std::span<const T> weights);

/// Gradient is 1 on [lo, hi] (boundary included) and 0 outside.
template <typename T> Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);

/// Uniform weights 1/n for a batch of n rows.
template <typename T> std::vector<T> mean_weights(std::size_t n);

}  // namespace liam::ops
