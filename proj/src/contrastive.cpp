#include "liam/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "liam/encoders.hpp"
#include "liam/ops.hpp"

namespace liam::contrastive {

using ad::Tensor;

std::vector<double> AffinityTargets::dense() const {
  std::vector<double> q(rows() * cols(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) q[i * cols() + column_of_row[i]] = 1.0;
  return q;
}

AffinityTargets build_affinity_targets(std::span<const int> action_ids) {
  if (action_ids.size() < 2) {
    throw std::invalid_argument("build_affinity_targets: need at least 2 frame pairs, got " +
                                std::to_string(action_ids.size()));
  }
  AffinityTargets t;
  for (std::size_t i = 0; i < action_ids.size(); ++i) {
    const int id = action_ids[i];
    if (id < 0 || id >= kNumActions) {
      throw std::invalid_argument("build_affinity_targets: action id " + std::to_string(id) +
                                  " at row " + std::to_string(i));
    }
    auto it = std::find(t.unique_actions.begin(), t.unique_actions.end(), id);
    if (it == t.unique_actions.end()) {
      t.column_of_row.push_back(static_cast<int>(t.unique_actions.size()));
      t.unique_actions.push_back(id);
    } else {
      t.column_of_row.push_back(static_cast<int>(it - t.unique_actions.begin()));
    }
  }
  return t;
}

template <typename T>
Tensor<T> similarity_logits(const Tensor<T>& rows, const Tensor<T>& cols, const Tensor<T>& tau) {
  ad::detail::check_finite("similarity_logits", rows.data());
  ad::detail::check_finite("similarity_logits", cols.data());
  return ops::divide_by(ops::matmul(rows, ops::transpose(cols)), tau);
}

template <typename T>
Tensor<T> loss_image_action(const Tensor<T>& logits, const AffinityTargets& targets) {
  const std::size_t n = targets.rows(), u = targets.cols();
  if (logits.rank() != 2 || logits.dim(0) != n || logits.dim(1) != u) {
    throw ShapeError("loss_image_action: logits " + shape_str(logits.shape()) + " vs targets " +
                     shape_str({n, u}));
  }
  const auto q = targets.dense();
  std::vector<T> row_q(q.begin(), q.end());
  // Column direction: Q^T with each row (one action) spread over its positives.
  std::vector<T> col_q(u * n, T(0));
  for (std::size_t j = 0; j < u; ++j) {
    T count = 0;
    for (std::size_t i = 0; i < n; ++i) count += static_cast<T>(q[i * u + j]);
    if (count == T(0)) throw std::logic_error("loss_image_action: empty affinity column");
    for (std::size_t i = 0; i < n; ++i) col_q[j * n + i] = static_cast<T>(q[i * u + j]) / count;
  }
  auto i2a = ops::kl_divergence(logits, Tensor<T>::constant({n, u}, std::move(row_q)),
                                std::span<const T>(ops::mean_weights<T>(n)));
  auto a2i = ops::kl_divergence(ops::transpose(logits), Tensor<T>::constant({u, n}, std::move(col_q)),
                                std::span<const T>(ops::mean_weights<T>(u)));
  return ops::scale(ops::add(i2a, a2i), T(0.5));
}

template <typename T>
Tensor<T> loss_text_image(const Tensor<T>& text_reps, const Tensor<T>& seq_reps,
                          const Tensor<T>& tau) {
  if (text_reps.rank() != 2 || text_reps.shape() != seq_reps.shape()) {
    throw ShapeError("loss_text_image: " + shape_str(text_reps.shape()) + " vs " +
                     shape_str(seq_reps.shape()));
  }
  const std::size_t b = text_reps.dim(0);
  if (b < 2) throw std::invalid_argument("loss_text_image: batch of " + std::to_string(b) +
                                         " cannot be contrasted");
  auto s = similarity_logits(text_reps, seq_reps, tau);
  std::vector<T> eye(b * b, T(0));
  for (std::size_t i = 0; i < b; ++i) eye[i * b + i] = T(1);
  auto target = Tensor<T>::constant({b, b}, eye);
  const auto w = ops::mean_weights<T>(b);
  auto rows = ops::cross_entropy(s, target, std::span<const T>(w));
  auto cols = ops::cross_entropy(ops::transpose(s), target, std::span<const T>(w));
  return ops::scale(ops::add(rows, cols), T(0.5));
}

template <typename T>
Tensor<T> loss_triple(const Tensor<T>& l_ti, const Tensor<T>& l_ia, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("loss_triple: alpha " + std::to_string(alpha) + " not in [0, 1]");
  }
  return ops::add(ops::scale(l_ti, static_cast<T>(1.0 - alpha)),
                  ops::scale(l_ia, static_cast<T>(alpha)));
}

double loss_triple(double l_ti, double l_ia, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("loss_triple: alpha " + std::to_string(alpha) + " not in [0, 1]");
  }
  return (1.0 - alpha) * l_ti + alpha * l_ia;
}

double clamp_temperature(double tau) { return std::min(kTauMax, std::max(kTauMin, tau)); }

float clamp_stored_temperature(float tau) {
  // float(0.01) rounds below 0.01; step up to the first float inside the range.
  static const float lo = static_cast<double>(static_cast<float>(kTauMin)) < kTauMin
                              ? std::nextafter(static_cast<float>(kTauMin), 1.0f)
                              : static_cast<float>(kTauMin);
  static const float hi = static_cast<double>(static_cast<float>(kTauMax)) > kTauMax
                              ? std::nextafter(static_cast<float>(kTauMax), 0.0f)
                              : static_cast<float>(kTauMax);
  return std::min(hi, std::max(lo, tau));
}

std::size_t argmax(std::span<const float> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

double matching_accuracy(std::span<const float> logits, std::size_t rows, std::size_t cols,
                         std::span<const int> target_columns) {
  if (logits.size() != rows * cols || target_columns.size() != rows) {
    throw ShapeError("matching_accuracy: " + std::to_string(logits.size()) + " logits for " +
                     shape_str({rows, cols}) + " with " + std::to_string(target_columns.size()) +
                     " targets");
  }
  if (rows == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (static_cast<int>(argmax(logits.subspan(i * cols, cols))) == target_columns[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows);
}

#define LIAM_INSTANTIATE(T)                                                                      \
  template Tensor<T> similarity_logits(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> loss_image_action(const Tensor<T>&, const AffinityTargets&);                \
  template Tensor<T> loss_text_image(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> loss_triple(const Tensor<T>&, const Tensor<T>&, double);

LIAM_INSTANTIATE(float)
LIAM_INSTANTIATE(double)

#undef LIAM_INSTANTIATE

}  // namespace liam::contrastive
