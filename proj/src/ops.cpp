#include "liam/ops.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "liam/kernels.hpp"

namespace liam::ops {

using ad::Node;
using ad::detail::make_result;
using kernels::MatView;
using kernels::row_major;

namespace {

struct RowsCols {
  std::size_t rows;
  std::size_t cols;
};

template <typename T>
RowsCols as_rows(const Tensor<T>& x, const char* op) {
  if (x.rank() == 1) return {1, x.dim(0)};
  if (x.rank() == 2) return {x.dim(0), x.dim(1)};
  throw ShapeError(std::string(op) + ": expected a vector or matrix, got " + shape_str(x.shape()));
}

template <typename T>
void require_matrix(const Tensor<T>& x, const char* op) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_str(x.shape()));
  }
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

template <typename T>
void check_weights(const char* op, std::span<const T> w, std::size_t rows) {
  if (w.size() != rows) {
    throw ShapeError(std::string(op) + ": " + std::to_string(w.size()) + " row weights for " +
                     std::to_string(rows) + " rows");
  }
}

template <typename T>
std::vector<T> log_softmax_row(const T* x, std::size_t n) {
  T mx = x[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  T s = 0;
  for (std::size_t j = 0; j < n; ++j) s += std::exp(x[j] - mx);
  const T lse = mx + std::log(s);
  std::vector<T> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = x[j] - lse;
  return out;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) mismatch("matmul", a.shape(), b.shape());
  std::vector<T> out(m * n, T(0));
  kernels::gemm(row_major(a.data().data(), m, k), row_major(b.data().data(), k, n), out.data());
  return make_result<T>("matmul", {m, n}, std::move(out), {a.shared(), b.shared()},
                        [m, k, n](Node<T>& self) {
                          auto& A = *self.inputs[0];
                          auto& B = *self.inputs[1];
                          auto dc = row_major(self.grad.data(), m, n);
                          if (A.requires_grad) {
                            kernels::gemm(dc, row_major(B.value.data(), k, n).transposed(),
                                          A.grad.data());
                          }
                          if (B.requires_grad) {
                            kernels::gemm(row_major(A.value.data(), m, k).transposed(), dc,
                                          B.grad.data());
                          }
                        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<T> out(r * c);
  const auto src = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = src[i * c + j];
  return make_result<T>("transpose", {c, r}, std::move(out), {a.shared()}, [r, c](Node<T>& self) {
    auto& A = *self.inputs[0];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) A.grad[i * c + j] += self.grad[j * r + i];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return make_result<T>("add", a.shape(), std::move(out), {a.shared(), b.shared()},
                        [](Node<T>& self) {
                          for (auto& in : self.inputs) {
                            if (!in->requires_grad) continue;
                            for (std::size_t i = 0; i < self.grad.size(); ++i)
                              in->grad[i] += self.grad[i];
                          }
                        });
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& bias) {
  const auto [r, c] = as_rows(a, "add_row");
  if (bias.rank() != 1 || bias.dim(0) != c) mismatch("add_row", a.shape(), bias.shape());
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = a.at(i * c + j) + bias.at(j);
  return make_result<T>("add_row", a.shape(), std::move(out), {a.shared(), bias.shared()},
                        [r, c](Node<T>& self) {
                          auto& A = *self.inputs[0];
                          auto& B = *self.inputs[1];
                          if (A.requires_grad)
                            for (std::size_t i = 0; i < r * c; ++i) A.grad[i] += self.grad[i];
                          if (B.requires_grad)
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j)
                                B.grad[j] += self.grad[i * c + j];
                        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * factor;
  return make_result<T>("scale", a.shape(), std::move(out), {a.shared()},
                        [factor](Node<T>& self) {
                          auto& A = *self.inputs[0];
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            A.grad[i] += self.grad[i] * factor;
                        });
}

template <typename T>
Tensor<T> divide_by(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.size() != 1) mismatch("divide_by", a.shape(), s.shape());
  const T sv = s.at(0);
  if (sv == T(0)) throw std::domain_error("divide_by: division by zero");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) / sv;
  return make_result<T>("divide_by", a.shape(), std::move(out), {a.shared(), s.shared()},
                        [](Node<T>& self) {
                          auto& A = *self.inputs[0];
                          auto& S = *self.inputs[1];
                          const T sv = S.value[0];
                          if (A.requires_grad)
                            for (std::size_t i = 0; i < self.grad.size(); ++i)
                              A.grad[i] += self.grad[i] / sv;
                          if (S.requires_grad) {
                            T acc = 0;
                            for (std::size_t i = 0; i < self.grad.size(); ++i)
                              acc += self.grad[i] * A.value[i];
                            S.grad[0] -= acc / (sv * sv);
                          }
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size()) mismatch("reshape", a.shape(), shape);
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>("reshape", std::move(shape), std::move(out), {a.shared()},
                        [](Node<T>& self) {
                          auto& A = *self.inputs[0];
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            A.grad[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids) {
  require_matrix(table, "embedding");
  const std::size_t v = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw ShapeError("embedding: empty id sequence");
  std::vector<int> rows(ids.begin(), ids.end());
  std::vector<T> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= v) {
      throw std::out_of_range("embedding: id " + std::to_string(rows[i]) + " at position " +
                              std::to_string(i) + " outside table of " + std::to_string(v) +
                              " rows");
    }
    const auto src = table.data().subspan(static_cast<std::size_t>(rows[i]) * d, d);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  const std::size_t n = rows.size();
  return make_result<T>("embedding", {n, d}, std::move(out), {table.shared()},
                        [rows = std::move(rows), d](Node<T>& self) {
                          auto& W = *self.inputs[0];
                          for (std::size_t i = 0; i < rows.size(); ++i) {
                            T* dst = W.grad.data() + static_cast<std::size_t>(rows[i]) * d;
                            for (std::size_t j = 0; j < d; ++j) dst[j] += self.grad[i * d + j];
                          }
                        });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_matrix(x, "conv1d");
  if (w.rank() != 3) mismatch("conv1d", x.shape(), w.shape());
  const std::size_t len = x.dim(0), cin = x.dim(1);
  const std::size_t k = w.dim(0), cout = w.dim(2);
  if (w.dim(1) != cin || k > len) mismatch("conv1d", x.shape(), w.shape());
  if (b.rank() != 1 || b.dim(0) != cout) mismatch("conv1d", w.shape(), b.shape());
  const std::size_t lout = len - k + 1;
  // Overlapping windows of k consecutive rows, read in place.
  const MatView<T> windows{x.data().data(), lout, k * cin, cin, 1};
  std::vector<T> out(lout * cout);
  for (std::size_t t = 0; t < lout; ++t)
    for (std::size_t o = 0; o < cout; ++o) out[t * cout + o] = b.at(o);
  kernels::gemm(windows, row_major(w.data().data(), k * cin, cout), out.data());
  return make_result<T>(
      "conv1d", {lout, cout}, std::move(out), {x.shared(), w.shared(), b.shared()},
      [lout, cin, k, cout](Node<T>& self) {
        auto& X = *self.inputs[0];
        auto& W = *self.inputs[1];
        auto& B = *self.inputs[2];
        auto dout = row_major(self.grad.data(), lout, cout);
        if (W.requires_grad) {
          const MatView<T> windows{X.value.data(), lout, k * cin, cin, 1};
          kernels::gemm(windows.transposed(), dout, W.grad.data());
        }
        if (X.requires_grad) {
          std::vector<T> dwin(lout * k * cin, T(0));
          kernels::gemm(dout, row_major(W.value.data(), k * cin, cout).transposed(), dwin.data());
          for (std::size_t t = 0; t < lout; ++t)
            for (std::size_t q = 0; q < k * cin; ++q) X.grad[t * cin + q] += dwin[t * k * cin + q];
        }
        if (B.requires_grad)
          for (std::size_t t = 0; t < lout; ++t)
            for (std::size_t o = 0; o < cout; ++o) B.grad[o] += self.grad[t * cout + o];
      });
}

namespace {
template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, int axis, const char* op) {
  require_matrix(x, op);
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (axis != 0 && axis != 1) throw ShapeError(std::string(op) + ": axis must be 0 or 1");
  const std::size_t out_n = axis == 0 ? c : r;
  const T inv = T(1) / T(axis == 0 ? r : c);
  std::vector<T> out(out_n, T(0));
  const auto src = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[axis == 0 ? j : i] += src[i * c + j];
  for (auto& v : out) v *= inv;
  return make_result<T>(op, {out_n}, std::move(out), {x.shared()},
                        [r, c, axis, inv](Node<T>& self) {
                          auto& X = *self.inputs[0];
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j)
                              X.grad[i * c + j] += self.grad[axis == 0 ? j : i] * inv;
                        });
}
}  // namespace

template <typename T>
Tensor<T> global_average_pool(const Tensor<T>& x) {
  return mean_axis(x, 0, "global_average_pool");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, int axis) {
  return mean_axis(x, axis, "mean");
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.data()) s += v;
  return make_result<T>("sum", {1}, {s}, {x.shared()}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (auto& g : X.grad) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x) {
  const auto [r, c] = as_rows(x, "l2_normalize");
  std::vector<T> out(x.size());
  std::vector<T> norms(r);
  const auto src = x.data();
  for (std::size_t i = 0; i < r; ++i) {
    T ss = 0;
    for (std::size_t j = 0; j < c; ++j) ss += src[i * c + j] * src[i * c + j];
    if (ss == T(0)) {
      throw std::domain_error("l2_normalize: zero vector at row " + std::to_string(i));
    }
    norms[i] = std::sqrt(ss);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = src[i * c + j] / norms[i];
  }
  return make_result<T>("l2_normalize", x.shape(), std::move(out), {x.shared()},
                        [r, c, norms = std::move(norms)](Node<T>& self) {
                          auto& X = *self.inputs[0];
                          for (std::size_t i = 0; i < r; ++i) {
                            const T* y = self.value.data() + i * c;
                            const T* dy = self.grad.data() + i * c;
                            T dot = 0;
                            for (std::size_t j = 0; j < c; ++j) dot += y[j] * dy[j];
                            for (std::size_t j = 0; j < c; ++j)
                              X.grad[i * c + j] += (dy[j] - y[j] * dot) / norms[i];
                          }
                        });
}

namespace {
template <typename T>
void softmax_backward(Node<T>& self, std::size_t r, std::size_t c) {
  auto& X = *self.inputs[0];
  for (std::size_t i = 0; i < r; ++i) {
    const T* y = self.value.data() + i * c;
    const T* dy = self.grad.data() + i * c;
    T dot = 0;
    for (std::size_t j = 0; j < c; ++j) dot += y[j] * dy[j];
    for (std::size_t j = 0; j < c; ++j) X.grad[i * c + j] += y[j] * (dy[j] - dot);
  }
}
}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const auto [r, c] = as_rows(x, "softmax");
  std::vector<T> out(x.size());
  kernels::softmax_rows<T>(x.data().data(), nullptr, out.data(), r, c);
  return make_result<T>("softmax", x.shape(), std::move(out), {x.shared()},
                        [r, c](Node<T>& self) { softmax_backward(self, r, c); });
}

template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, std::span<const std::uint8_t> mask) {
  const auto [r, c] = as_rows(x, "masked_softmax");
  if (mask.size() != x.size()) {
    throw ShapeError("masked_softmax: mask of " + std::to_string(mask.size()) +
                     " entries for " + shape_str(x.shape()));
  }
  for (std::size_t i = 0; i < r; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) any = any || mask[i * c + j];
    if (!any) throw std::invalid_argument("masked_softmax: row " + std::to_string(i) +
                                          " has no allowed entries");
  }
  std::vector<T> out(x.size());
  kernels::softmax_rows<T>(x.data().data(), mask.data(), out.data(), r, c);
  return make_result<T>("masked_softmax", x.shape(), std::move(out), {x.shared()},
                        [r, c](Node<T>& self) { softmax_backward(self, r, c); });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const auto [r, c] = as_rows(x, "layer_norm");
  if (gamma.rank() != 1 || gamma.dim(0) != c) mismatch("layer_norm", x.shape(), gamma.shape());
  if (beta.rank() != 1 || beta.dim(0) != c) mismatch("layer_norm", x.shape(), beta.shape());
  std::vector<T> xhat(x.size()), inv_std(r), out(x.size());
  kernels::standardize_rows<T>(x.data().data(), xhat.data(), inv_std.data(), r, c, eps);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = xhat[i * c + j] * gamma.at(j) + beta.at(j);
  return make_result<T>(
      "layer_norm", x.shape(), std::move(out), {x.shared(), gamma.shared(), beta.shared()},
      [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& X = *self.inputs[0];
        auto& G = *self.inputs[1];
        auto& B = *self.inputs[2];
        std::vector<T> dxhat(c);
        for (std::size_t i = 0; i < r; ++i) {
          const T* dy = self.grad.data() + i * c;
          const T* xh = xhat.data() + i * c;
          if (G.requires_grad)
            for (std::size_t j = 0; j < c; ++j) G.grad[j] += dy[j] * xh[j];
          if (B.requires_grad)
            for (std::size_t j = 0; j < c; ++j) B.grad[j] += dy[j];
          if (!X.requires_grad) continue;
          T m1 = 0, m2 = 0;
          for (std::size_t j = 0; j < c; ++j) {
            dxhat[j] = dy[j] * G.value[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * xh[j];
          }
          m1 /= T(c);
          m2 /= T(c);
          for (std::size_t j = 0; j < c; ++j)
            X.grad[i * c + j] += inv_std[i] * (dxhat[j] - m1 - xh[j] * m2);
        }
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.at(i);
    out[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  }
  return make_result<T>("gelu", x.shape(), std::move(out), {x.shared()},
                        [inv_sqrt2](Node<T>& self) {
                          auto& X = *self.inputs[0];
                          const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
                          for (std::size_t i = 0; i < self.grad.size(); ++i) {
                            const T v = X.value[i];
                            const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
                            const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
                            X.grad[i] += self.grad[i] * (cdf + v * pdf);
                          }
                        });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-x.at(i)));
  return make_result<T>("sigmoid", x.shape(), std::move(out), {x.shared()}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T s = self.value[i];
      X.grad[i] += self.grad[i] * s * (T(1) - s);
    }
  });
}

template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "cosine_similarity");
  require_matrix(b, "cosine_similarity");
  if (a.dim(1) != b.dim(1)) mismatch("cosine_similarity", a.shape(), b.shape());
  return matmul(l2_normalize(a), transpose(l2_normalize(b)));
}

namespace {
// Shared by cross_entropy and kl_divergence: both have gradient
// w_r * (p * sum(q) - q) with respect to the logits.
template <typename T>
Tensor<T> target_distribution_loss(const char* op, const Tensor<T>& logits,
                                   const Tensor<T>& target, std::span<const T> row_weights,
                                   bool kl) {
  const auto [r, c] = as_rows(logits, op);
  if (target.shape() != logits.shape()) mismatch(op, logits.shape(), target.shape());
  check_weights(op, row_weights, r);
  std::vector<T> weights(row_weights.begin(), row_weights.end());
  std::vector<T> probs(logits.size(), T(0));
  T total = 0;
  const auto q = target.data();
  for (std::size_t i = 0; i < r; ++i) {
    if (weights[i] == T(0)) continue;
    const auto logp = log_softmax_row(logits.data().data() + i * c, c);
    T row = 0;
    for (std::size_t j = 0; j < c; ++j) {
      const T qj = q[i * c + j];
      probs[i * c + j] = std::exp(logp[j]);
      if (qj == T(0)) continue;
      row += kl ? qj * (std::log(qj) - logp[j]) : -qj * logp[j];
    }
    total += weights[i] * row;
  }
  std::vector<T> qcopy(q.begin(), q.end());
  return make_result<T>(
      op, {1}, {total}, {logits.shared()},
      [r, c, weights = std::move(weights), probs = std::move(probs),
       q = std::move(qcopy)](Node<T>& self) {
        auto& L = *self.inputs[0];
        const T g = self.grad[0];
        for (std::size_t i = 0; i < r; ++i) {
          if (weights[i] == T(0)) continue;
          T qs = 0;
          for (std::size_t j = 0; j < c; ++j) qs += q[i * c + j];
          for (std::size_t j = 0; j < c; ++j)
            L.grad[i * c + j] += g * weights[i] * (probs[i * c + j] * qs - q[i * c + j]);
        }
      });
}
}  // namespace

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const Tensor<T>& target,
                        std::span<const T> row_weights) {
  return target_distribution_loss("cross_entropy", logits, target, row_weights, false);
}

template <typename T>
Tensor<T> kl_divergence(const Tensor<T>& logits, const Tensor<T>& target,
                        std::span<const T> row_weights) {
  return target_distribution_loss("kl_divergence", logits, target, row_weights, true);
}

template <typename T>
Tensor<T> mse(const Tensor<T>& pred, const Tensor<T>& target, std::span<const T> weights) {
  if (pred.size() != target.size()) mismatch("mse", pred.shape(), target.shape());
  check_weights("mse", weights, pred.size());
  std::vector<T> w(weights.begin(), weights.end());
  T total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (w[i] == T(0)) continue;
    const T e = pred.at(i) - target.at(i);
    total += w[i] * e * e;
  }
  return make_result<T>("mse", {1}, {total}, {pred.shared(), target.shared()},
                        [w = std::move(w)](Node<T>& self) {
                          auto& P = *self.inputs[0];
                          auto& Q = *self.inputs[1];
                          for (std::size_t i = 0; i < w.size(); ++i) {
                            if (w[i] == T(0)) continue;
                            const T g = self.grad[0] * w[i] * T(2) * (P.value[i] - Q.value[i]);
                            if (P.requires_grad) P.grad[i] += g;
                            if (Q.requires_grad) Q.grad[i] -= g;
                          }
                        });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, x.at(i)));
  return make_result<T>("clamp", x.shape(), std::move(out), {x.shared()},
                        [lo, hi](Node<T>& self) {
                          auto& X = *self.inputs[0];
                          for (std::size_t i = 0; i < self.grad.size(); ++i) {
                            const T v = X.value[i];
                            if (v >= lo && v <= hi) X.grad[i] += self.grad[i];
                          }
                        });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  const std::size_t c = x.dim(1);
  if (begin >= end || end > x.dim(0)) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + shape_str(x.shape()));
  }
  std::vector<T> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                     x.data().begin() + static_cast<std::ptrdiff_t>(end * c));
  return make_result<T>("slice_rows", {end - begin, c}, std::move(out), {x.shared()},
                        [begin, c](Node<T>& self) {
                          auto& X = *self.inputs[0];
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            X.grad[begin * c + i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  const std::size_t r = x.dim(0), c = x.dim(1), w = end - begin;
  if (begin >= end || end > c) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + shape_str(x.shape()));
  }
  std::vector<T> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = x.at(i * c + begin + j);
  return make_result<T>("slice_cols", {r, w}, std::move(out), {x.shared()},
                        [r, c, w, begin](Node<T>& self) {
                          auto& X = *self.inputs[0];
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < w; ++j)
                              X.grad[i * c + begin + j] += self.grad[i * w + j];
                        });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  std::vector<std::shared_ptr<Node<T>>> inputs;
  for (const auto& p : parts) {
    if (p.cols() != c) mismatch("concat_rows", parts[0].shape(), p.shape());
    r += p.rows();
    inputs.push_back(p.shared());
  }
  std::vector<T> out;
  out.reserve(r * c);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result<T>("concat_rows", {r, c}, std::move(out), std::move(inputs),
                        [](Node<T>& self) {
                          std::size_t off = 0;
                          for (auto& in : self.inputs) {
                            const std::size_t n = in->value.size();
                            if (in->requires_grad)
                              for (std::size_t i = 0; i < n; ++i) in->grad[i] += self.grad[off + i];
                            off += n;
                          }
                        });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  std::vector<std::shared_ptr<Node<T>>> inputs;
  for (const auto& p : parts) {
    if (p.rows() != r) mismatch("concat_cols", parts[0].shape(), p.shape());
    c += p.cols();
    inputs.push_back(p.shared());
  }
  std::vector<T> out(r * c);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * c + off + j] = p.at(i * w + j);
    off += w;
  }
  return make_result<T>("concat_cols", {r, c}, std::move(out), std::move(inputs),
                        [r, c](Node<T>& self) {
                          std::size_t off = 0;
                          for (auto& in : self.inputs) {
                            const std::size_t w = in->shape[1];
                            if (in->requires_grad)
                              for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t j = 0; j < w; ++j)
                                  in->grad[i * w + j] += self.grad[i * c + off + j];
                            off += w;
                          }
                        });
}

template <typename T>
std::vector<T> mean_weights(std::size_t n) {
  return std::vector<T>(n, T(1) / T(n));
}

#define LIAM_INSTANTIATE(T)                                                                      \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> transpose(const Tensor<T>&);                                                \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> divide_by(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const int>);                          \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> global_average_pool(const Tensor<T>&);                                      \
  template Tensor<T> mean(const Tensor<T>&, int);                                                \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> l2_normalize(const Tensor<T>&);                                             \
  template Tensor<T> softmax(const Tensor<T>&);                                                  \
  template Tensor<T> masked_softmax(const Tensor<T>&, std::span<const std::uint8_t>);            \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);        \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                  \
  template Tensor<T> cosine_similarity(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> cross_entropy(const Tensor<T>&, const Tensor<T>&, std::span<const T>);      \
  template Tensor<T> kl_divergence(const Tensor<T>&, const Tensor<T>&, std::span<const T>);      \
  template Tensor<T> mse(const Tensor<T>&, const Tensor<T>&, std::span<const T>);                \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                              \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                                 \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                                 \
  template std::vector<T> mean_weights<T>(std::size_t);

LIAM_INSTANTIATE(float)
LIAM_INSTANTIATE(double)

#undef LIAM_INSTANTIATE

}  // namespace liam::ops
