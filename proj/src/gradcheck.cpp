#include "liam/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace liam {

template <typename T>
T finite_difference_check(const std::function<ad::Tensor<T>()>& f,
                          const std::vector<ad::Tensor<T>>& leaves, T step) {
  const auto loss = f();
  ad::backward(loss);
  std::vector<std::vector<T>> analytic;
  for (const auto& leaf : leaves) {
    if (leaf.has_grad()) {
      analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
    } else {
      // Not reached from the loss: the derivative is identically zero.
      analytic.emplace_back(leaf.size(), T(0));
    }
  }
  T worst = 0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto leaf = leaves[l];
    auto data = leaf.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const T saved = data[i];
      data[i] = saved + step;
      const T up = f().item();
      data[i] = saved - step;
      const T down = f().item();
      data[i] = saved;
      const T fd = (up - down) / (T(2) * step);
      const T err = std::abs(analytic[l][i] - fd) / std::max(T(1), std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

template <typename T>
T finite_difference_check(const std::function<ad::Tensor<T>(const ad::Tensor<T>&)>& f,
                          const ad::Tensor<T>& point, T step) {
  auto leaf = ad::Tensor<T>::leaf(point.shape(), {point.data().begin(), point.data().end()}, true);
  return finite_difference_check<T>(std::function<ad::Tensor<T>()>([&] { return f(leaf); }),
                                    std::vector<ad::Tensor<T>>{leaf}, step);
}

template float finite_difference_check(const std::function<ad::Tensor<float>()>&,
                                       const std::vector<ad::Tensor<float>>&, float);
template double finite_difference_check(const std::function<ad::Tensor<double>()>&,
                                        const std::vector<ad::Tensor<double>>&, double);
template float finite_difference_check(
    const std::function<ad::Tensor<float>(const ad::Tensor<float>&)>&, const ad::Tensor<float>&,
    float);
template double finite_difference_check(
    const std::function<ad::Tensor<double>(const ad::Tensor<double>&)>&,
    const ad::Tensor<double>&, double);

}  // namespace liam
