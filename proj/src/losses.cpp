#include "liam/losses.hpp"

#include <stdexcept>
#include <string>

#include "liam/encoders.hpp"
#include "liam/ops.hpp"

namespace liam::losses {

using ad::Tensor;

namespace {

template <typename T>
std::vector<T> non_pad_weights(std::span<const std::uint8_t> pad_mask, std::size_t n, const char* op) {
  if (pad_mask.size() != n) {
    throw ShapeError(std::string(op) + ": pad mask of " + std::to_string(pad_mask.size()) +
                     " for " + std::to_string(n) + " positions");
  }
  std::size_t live = 0;
  for (auto p : pad_mask) live += p ? 0 : 1;
  if (live == 0) throw std::invalid_argument(std::string(op) + ": every position is padded");
  std::vector<T> w(n, T(0));
  for (std::size_t i = 0; i < n; ++i)
    if (!pad_mask[i]) w[i] = T(1) / T(live);
  return w;
}

template <typename T>
Tensor<T> class_loss(const Tensor<T>& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> pad_mask, int classes, const char* op) {
  if (logits.rank() != 2 || logits.dim(1) != static_cast<std::size_t>(classes) ||
      logits.dim(0) != targets.size()) {
    throw ShapeError(std::string(op) + ": logits " + shape_str(logits.shape()) + " for " +
                     std::to_string(targets.size()) + " targets of " + std::to_string(classes) +
                     " classes");
  }
  const auto w = non_pad_weights<T>(pad_mask, targets.size(), op);
  std::vector<T> onehot(logits.size(), T(0));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (pad_mask[i]) continue;
    if (targets[i] < 0 || targets[i] >= classes) {
      throw std::out_of_range(std::string(op) + ": target " + std::to_string(targets[i]) +
                              " at position " + std::to_string(i));
    }
    onehot[i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(targets[i])] = T(1);
  }
  return ops::cross_entropy(logits, Tensor<T>::constant(logits.shape(), std::move(onehot)),
                            std::span<const T>(w));
}

}  // namespace

template <typename T>
Tensor<T> action_loss(const Tensor<T>& logits, std::span<const int> targets,
                      std::span<const std::uint8_t> pad_mask) {
  return class_loss(logits, targets, pad_mask, kNumActions, "action_loss");
}

template <typename T>
Tensor<T> object_loss(const Tensor<T>& logits, std::span<const int> targets,
                      std::span<const std::uint8_t> pad_mask) {
  return class_loss(logits, targets, pad_mask, kNumObjectLabels, "object_loss");
}

std::vector<double> goal_progress_targets(std::size_t n) {
  if (n == 0) throw std::invalid_argument("goal_progress_targets: n must be >= 1");
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return q;
}

template <typename T>
Tensor<T> goal_progress_loss(const Tensor<T>& pred, std::span<const double> targets,
                             std::span<const std::uint8_t> pad_mask) {
  if (pred.size() != targets.size()) {
    throw ShapeError("goal_progress_loss: predictions " + shape_str(pred.shape()) + " for " +
                     std::to_string(targets.size()) + " targets");
  }
  const auto w = non_pad_weights<T>(pad_mask, targets.size(), "goal_progress_loss");
  std::vector<T> tgt(targets.begin(), targets.end());
  return ops::mse(pred, Tensor<T>::constant(pred.shape(), std::move(tgt)), std::span<const T>(w));
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& l_a, const Tensor<T>& l_o, const Tensor<T>& l_gp,
                     double object_weight, double gp_weight) {
  return ops::add(ops::add(l_a, ops::scale(l_o, static_cast<T>(object_weight))),
                  ops::scale(l_gp, static_cast<T>(gp_weight)));
}

#define LIAM_INSTANTIATE(T)                                                                    \
  template Tensor<T> action_loss(const Tensor<T>&, std::span<const int>, std::span<const std::uint8_t>); \
  template Tensor<T> object_loss(const Tensor<T>&, std::span<const int>, std::span<const std::uint8_t>); \
  template Tensor<T> goal_progress_loss(const Tensor<T>&, std::span<const double>,             \
                                        std::span<const std::uint8_t>);                                \
  template Tensor<T> total_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double,  \
                                double);

LIAM_INSTANTIATE(float)
LIAM_INSTANTIATE(double)

#undef LIAM_INSTANTIATE

}  // namespace liam::losses
