#pragma once

#include <functional>
#include <vector>

#include "liam/tensor.hpp"

namespace liam {

/// Max over all coordinates of every leaf of
///   |analytic - central difference| / max(1, |central difference|).
/// `f` must rebuild its graph from the leaves' current values on each call.
/// Non-finite intermediates surface as NonFiniteError naming the op.
template <typename T>
T finite_difference_check(const std::function<ad::Tensor<T>()>& f,
                          const std::vector<ad::Tensor<T>>& leaves, T step = T(1e-5));

/// Single-argument form: `point` is copied into a fresh leaf.
template <typename T>
T finite_difference_check(const std::function<ad::Tensor<T>(const ad::Tensor<T>&)>& f,
                          const ad::Tensor<T>& point, T step = T(1e-5));

}  // namespace liam
