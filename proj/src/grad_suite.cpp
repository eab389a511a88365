#include "liam/grad_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "liam/contrastive.hpp"
#include "liam/losses.hpp"
#include "liam/ops.hpp"
#include "liam/params.hpp"

namespace liam {

namespace {

using ad::Tensor;

enum class Domain { symmetric, positive, clamp_safe };

struct GradCase {
  std::string name;
  std::vector<Shape> shapes;
  std::vector<Domain> domains;
  std::function<Tensor<float>(const std::vector<Tensor<float>>&)> build32;
  std::function<Tensor<double>(const std::vector<Tensor<double>>&)> build64;
};

template <typename F>
GradCase make_case(std::string name, std::vector<Shape> shapes, F f,
                   std::vector<Domain> domains = {}) {
  if (domains.empty()) domains.assign(shapes.size(), Domain::symmetric);
  return {std::move(name), std::move(shapes), std::move(domains),
          [f](const std::vector<Tensor<float>>& x) { return f(x); },
          [f](const std::vector<Tensor<double>>& x) { return f(x); }};
}

// Reduces any tensor to a scalar through a fixed weighted squared error, so
// every output coordinate contributes a distinct weight to the gradient.
template <typename T>
Tensor<T> project(const Tensor<T>& out) {
  const auto n = out.size();
  std::vector<T> target(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = T(0.3) * std::sin(T(0.7) * T(i + 1));
    w[i] = T(0.5) + T(0.5) * std::cos(T(1.3) * T(i)) * std::cos(T(1.3) * T(i));
  }
  return ops::mse(out, Tensor<T>::constant(out.shape(), std::move(target)), std::span<const T>(w));
}

template <typename T>
Tensor<T> distribution_rows(std::size_t rows, std::size_t cols) {
  std::vector<T> v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    T s = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      v[r * cols + c] = T(1) + std::sin(T(r * cols + c));
      s += v[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] /= s;
  }
  return Tensor<T>::constant({rows, cols}, std::move(v));
}

template <typename T>
using elem_t = typename std::decay_t<T>::value_type::value_type;

std::vector<GradCase> build_cases() {
  std::vector<GradCase> c;
  // Primitives.
  c.push_back(make_case("matmul", {{3, 4}, {4, 2}}, [](const auto& x) {
    return project(ops::matmul(x[0], x[1]));
  }));
  c.push_back(make_case("transpose", {{3, 2}}, [](const auto& x) {
    return project(ops::transpose(x[0]));
  }));
  c.push_back(make_case("add", {{2, 3}, {2, 3}}, [](const auto& x) {
    return project(ops::add(x[0], x[1]));
  }));
  c.push_back(make_case("add_row", {{3, 4}, {4}}, [](const auto& x) {
    return project(ops::add_row(x[0], x[1]));
  }));
  c.push_back(make_case("scale", {{2, 3}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    return project(ops::scale(x[0], T(-1.7)));
  }));
  c.push_back(make_case("divide_by", {{2, 3}, {1}}, [](const auto& x) {
    return project(ops::divide_by(x[0], x[1]));
  }, {Domain::symmetric, Domain::positive}));
  c.push_back(make_case("reshape", {{2, 3}}, [](const auto& x) {
    return project(ops::reshape(x[0], {3, 2}));
  }));
  c.push_back(make_case("embedding", {{5, 3}}, [](const auto& x) {
    const int ids[] = {4, 0, 4, 2};
    return project(ops::embedding(x[0], std::span<const int>(ids)));
  }));
  c.push_back(make_case("conv1d", {{5, 3}, {2, 3, 4}, {4}}, [](const auto& x) {
    return project(ops::conv1d(x[0], x[1], x[2]));
  }));
  c.push_back(make_case("global_average_pool", {{4, 3}}, [](const auto& x) {
    return project(ops::global_average_pool(x[0]));
  }));
  c.push_back(make_case("mean_axis0", {{4, 3}}, [](const auto& x) {
    return project(ops::mean(x[0], 0));
  }));
  c.push_back(make_case("mean_axis1", {{4, 3}}, [](const auto& x) {
    return project(ops::mean(x[0], 1));
  }));
  c.push_back(make_case("sum", {{3, 3}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    return ops::scale(ops::sum(ops::gelu(x[0])), T(0.5));
  }));
  c.push_back(make_case("l2_normalize", {{3, 4}}, [](const auto& x) {
    return project(ops::l2_normalize(x[0]));
  }));
  c.push_back(make_case("softmax", {{3, 5}}, [](const auto& x) {
    return project(ops::softmax(x[0]));
  }));
  c.push_back(make_case("masked_softmax", {{3, 4}}, [](const auto& x) {
    static const std::uint8_t mask[] = {1, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1};
    return project(ops::masked_softmax(x[0], std::span<const std::uint8_t>(mask)));
  }));
  c.push_back(make_case("layer_norm", {{3, 5}, {5}, {5}}, [](const auto& x) {
    return project(ops::layer_norm(x[0], x[1], x[2]));
  }));
  c.push_back(make_case("gelu", {{3, 4}}, [](const auto& x) { return project(ops::gelu(x[0])); }));
  c.push_back(make_case("sigmoid", {{3, 4}}, [](const auto& x) {
    return project(ops::sigmoid(x[0]));
  }));
  c.push_back(make_case("cosine_similarity", {{3, 4}, {2, 4}}, [](const auto& x) {
    return project(ops::cosine_similarity(x[0], x[1]));
  }));
  c.push_back(make_case("cross_entropy", {{3, 4}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    const std::vector<T> w = {T(0.5), T(0), T(0.25)};
    return ops::cross_entropy(x[0], distribution_rows<T>(3, 4), std::span<const T>(w));
  }));
  c.push_back(make_case("kl_divergence", {{3, 4}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    const std::vector<T> w = {T(1) / 3, T(1) / 3, T(1) / 3};
    return ops::kl_divergence(x[0], distribution_rows<T>(3, 4), std::span<const T>(w));
  }));
  c.push_back(make_case("mse", {{2, 3}, {2, 3}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    const std::vector<T> w = {T(1), T(0.5), T(2), T(0), T(1), T(0.25)};
    return ops::mse(x[0], ops::scale(x[1], T(0.5)), std::span<const T>(w));
  }));
  c.push_back(make_case("clamp", {{3, 4}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    return project(ops::clamp(x[0], T(-0.5), T(0.5)));
  }, {Domain::clamp_safe}));
  c.push_back(make_case("slice_rows", {{4, 3}}, [](const auto& x) {
    return project(ops::slice_rows(x[0], 1, 3));
  }));
  c.push_back(make_case("slice_cols", {{3, 4}}, [](const auto& x) {
    return project(ops::slice_cols(x[0], 1, 4));
  }));
  c.push_back(make_case("concat_rows", {{2, 3}, {1, 3}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    return project(ops::concat_rows(std::vector<Tensor<T>>{x[0], x[1]}));
  }));
  c.push_back(make_case("concat_cols", {{2, 3}, {2, 1}}, [](const auto& x) {
    using T = elem_t<decltype(x)>;
    return project(ops::concat_cols(std::vector<Tensor<T>>{x[0], x[1]}));
  }));

  // Composite losses.
  c.push_back(make_case("loss_image_action", {{5, 4}, {3, 4}, {1}}, [](const auto& x) {
    const int ids[] = {2, 5, 2, 7, 5};
    const auto q = contrastive::build_affinity_targets(ids);
    auto logits =
        contrastive::similarity_logits(ops::l2_normalize(x[0]), ops::l2_normalize(x[1]), x[2]);
    return contrastive::loss_image_action(logits, q);
  }, {Domain::symmetric, Domain::symmetric, Domain::positive}));
  c.push_back(make_case("loss_text_image", {{3, 4}, {3, 4}, {1}}, [](const auto& x) {
    return contrastive::loss_text_image(ops::l2_normalize(x[0]), ops::l2_normalize(x[1]), x[2]);
  }, {Domain::symmetric, Domain::symmetric, Domain::positive}));
  c.push_back(make_case("loss_triple", {{3, 4}, {3, 4}, {4, 4}, {3, 4}, {1}, {1}}, [](const auto& x) {
    const int ids[] = {0, 3, 0, 1};
    const auto q = contrastive::build_affinity_targets(ids);
    auto l_ti =
        contrastive::loss_text_image(ops::l2_normalize(x[0]), ops::l2_normalize(x[1]), x[4]);
    auto l_ia = contrastive::loss_image_action(
        contrastive::similarity_logits(ops::l2_normalize(x[2]), ops::l2_normalize(x[3]), x[5]), q);
    return contrastive::loss_triple(l_ti, l_ia, 0.8);
  }, {Domain::symmetric, Domain::symmetric, Domain::symmetric, Domain::symmetric,
      Domain::positive, Domain::positive}));
  c.push_back(make_case("action_loss", {{4, 14}}, [](const auto& x) {
    const int targets[] = {0, 5, 12, 13};
    const std::uint8_t pad[] = {0, 0, 0, 1};
    return losses::action_loss(x[0], targets, pad);
  }));
  c.push_back(make_case("object_loss", {{3, 85}}, [](const auto& x) {
    const int targets[] = {0, 17, 84};
    const std::uint8_t pad[] = {0, 0, 0};
    return losses::object_loss(x[0], targets, pad);
  }));
  c.push_back(make_case("goal_progress_loss", {{4, 1}}, [](const auto& x) {
    const auto q = losses::goal_progress_targets(4);
    const std::uint8_t pad[] = {0, 0, 1, 0};
    return losses::goal_progress_loss(ops::sigmoid(x[0]), q, pad);
  }));
  c.push_back(make_case("total_loss", {{3, 14}, {3, 85}, {3, 1}}, [](const auto& x) {
    const int actions[] = {1, 0, 12};
    const int objects[] = {0, 0, 42};
    const std::uint8_t pad[] = {0, 0, 0};
    const auto q = losses::goal_progress_targets(3);
    return losses::total_loss(losses::action_loss(x[0], actions, pad),
                              losses::object_loss(x[1], objects, pad),
                              losses::goal_progress_loss(ops::sigmoid(x[2]), q, pad), 0.1, 0.1);
  }));
  return c;
}

const std::vector<GradCase>& cases() {
  static const std::vector<GradCase> all = build_cases();
  return all;
}

double draw(Rng& rng, Domain d) {
  switch (d) {
    case Domain::positive:
      return 0.5 + rng.uniform();
    case Domain::clamp_safe:
      // Keep every coordinate well away from the kinks at +-0.5.
      for (;;) {
        const double v = 2.0 * rng.uniform() - 1.0;
        if (std::abs(std::abs(v) - 0.5) > 0.05) return v;
      }
    case Domain::symmetric:
      break;
  }
  return 2.0 * rng.uniform() - 1.0;
}

template <typename T>
std::vector<Tensor<T>> make_leaves(const GradCase& gc, const std::vector<std::vector<float>>& values) {
  std::vector<Tensor<T>> leaves;
  for (std::size_t i = 0; i < gc.shapes.size(); ++i) {
    leaves.push_back(
        Tensor<T>::leaf(gc.shapes[i], std::vector<T>(values[i].begin(), values[i].end()), true));
  }
  return leaves;
}

template <typename T, typename Build>
std::vector<std::vector<double>> analytic(const Build& build, const std::vector<Tensor<T>>& leaves) {
  ad::backward(build(leaves));
  std::vector<std::vector<double>> g;
  for (const auto& l : leaves) {
    if (l.has_grad()) {
      g.emplace_back(l.grad().begin(), l.grad().end());
    } else {
      g.emplace_back(l.size(), 0.0);
    }
  }
  return g;
}

// 64-bit central differences at the current leaf values.
std::vector<std::vector<double>> central_differences(const GradCase& gc,
                                                     std::vector<Tensor<double>>& leaves) {
  constexpr double h = 1e-6;
  std::vector<std::vector<double>> out;
  for (auto& leaf : leaves) {
    auto data = leaf.mutable_data();
    std::vector<double> g(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = gc.build64(leaves).item();
      data[i] = saved - h;
      const double down = gc.build64(leaves).item();
      data[i] = saved;
      g[i] = (up - down) / (2 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double max_rel_error(const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& fd) {
  double worst = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l)
    for (std::size_t i = 0; i < a[l].size(); ++i)
      worst = std::max(worst, std::abs(a[l][i] - fd[l][i]) / std::max(1.0, std::abs(fd[l][i])));
  return worst;
}

}  // namespace

std::vector<std::string> gradient_case_names() {
  std::vector<std::string> names;
  for (const auto& gc : cases()) names.push_back(gc.name);
  return names;
}

std::vector<GradCheckResult> run_gradient_suite(std::span<const std::uint64_t> seeds) {
  std::vector<GradCheckResult> results;
  for (auto seed : seeds) {
    for (std::size_t ci = 0; ci < cases().size(); ++ci) {
      const auto& gc = cases()[ci];
      Rng rng(mix_seed(seed, ci));
      // Values are drawn as floats so both precisions see the identical point.
      std::vector<std::vector<float>> values;
      for (std::size_t i = 0; i < gc.shapes.size(); ++i) {
        std::vector<float> v(numel(gc.shapes[i]));
        for (auto& e : v) e = static_cast<float>(draw(rng, gc.domains[i]));
        values.push_back(std::move(v));
      }
      auto l32 = make_leaves<float>(gc, values);
      auto l64 = make_leaves<double>(gc, values);
      const auto g32 = analytic(gc.build32, l32);
      const auto g64 = analytic(gc.build64, l64);
      const auto fd = central_differences(gc, l64);
      results.push_back({gc.name, seed, max_rel_error(g32, fd), max_rel_error(g64, fd)});
    }
  }
  return results;
}

}  // namespace liam
