#include "liam/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace liam::kernels {

namespace {
std::atomic<Mode> g_mode{Mode::parallel};

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

template <typename T>
inline void gemm_row(MatView<T> a, MatView<T> b, T* out, std::size_t i) {
  T* o = out + i * b.cols;
  for (std::size_t p = 0; p < a.cols; ++p) {
    const T av = a(i, p);
    if (av == T(0)) continue;
    if (b.col_stride == 1) {
      const T* brow = b.data + p * b.row_stride;
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += av * brow[j];
    } else {
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += av * b(p, j);
    }
  }
}

template <typename T>
inline void softmax_row(const T* x, const std::uint8_t* mask, T* y, std::size_t cols) {
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < cols; ++j)
    if (!mask || mask[j]) mx = std::max(mx, x[j]);
  T sum = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (mask && !mask[j]) {
      y[j] = 0;
      continue;
    }
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  for (std::size_t j = 0; j < cols; ++j) y[j] /= sum;
}

template <typename T>
inline void standardize_row(const T* x, T* xhat, T* inv_std, std::size_t cols, T eps) {
  T mean = 0;
  for (std::size_t j = 0; j < cols; ++j) mean += x[j];
  mean /= T(cols);
  T var = 0;
  for (std::size_t j = 0; j < cols; ++j) var += (x[j] - mean) * (x[j] - mean);
  var /= T(cols);
  const T is = T(1) / std::sqrt(var + eps);
  *inv_std = is;
  for (std::size_t j = 0; j < cols; ++j) xhat[j] = (x[j] - mean) * is;
}

}  // namespace

void set_mode(Mode m) { g_mode.store(m); }
Mode mode() { return g_mode.load(); }

template <typename T>
void gemm_serial(MatView<T> a, MatView<T> b, T* out) {
  for (std::size_t i = 0; i < a.rows; ++i) gemm_row(a, b, out, i);
}

template <typename T>
void gemm_parallel(MatView<T> a, MatView<T> b, T* out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) gemm_row(a, b, out, static_cast<std::size_t>(i));
}

template <typename T>
void gemm(MatView<T> a, MatView<T> b, T* out) {
  if (mode() == Mode::parallel && a.rows > 1 && a.rows * a.cols * b.cols >= kParallelWork) {
    gemm_parallel(a, b, out);
  } else {
    gemm_serial(a, b, out);
  }
}

template <typename T>
void softmax_rows_serial(const T* x, const std::uint8_t* mask, T* y, std::size_t rows,
                         std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i)
    softmax_row(x + i * cols, mask ? mask + i * cols : nullptr, y + i * cols, cols);
}

template <typename T>
void softmax_rows_parallel(const T* x, const std::uint8_t* mask, T* y, std::size_t rows,
                           std::size_t cols) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    softmax_row(x + r * cols, mask ? mask + r * cols : nullptr, y + r * cols, cols);
  }
}

template <typename T>
void softmax_rows(const T* x, const std::uint8_t* mask, T* y, std::size_t rows, std::size_t cols) {
  if (mode() == Mode::parallel && rows > 1 && rows * cols >= kParallelWork / 8) {
    softmax_rows_parallel(x, mask, y, rows, cols);
  } else {
    softmax_rows_serial(x, mask, y, rows, cols);
  }
}

template <typename T>
void standardize_rows_serial(const T* x, T* xhat, T* inv_std, std::size_t rows, std::size_t cols,
                             T eps) {
  for (std::size_t i = 0; i < rows; ++i)
    standardize_row(x + i * cols, xhat + i * cols, inv_std + i, cols, eps);
}

template <typename T>
void standardize_rows_parallel(const T* x, T* xhat, T* inv_std, std::size_t rows,
                               std::size_t cols, T eps) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    standardize_row(x + r * cols, xhat + r * cols, inv_std + r, cols, eps);
  }
}

template <typename T>
void standardize_rows(const T* x, T* xhat, T* inv_std, std::size_t rows, std::size_t cols, T eps) {
  if (mode() == Mode::parallel && rows > 1 && rows * cols >= kParallelWork / 8) {
    standardize_rows_parallel(x, xhat, inv_std, rows, cols, eps);
  } else {
    standardize_rows_serial(x, xhat, inv_std, rows, cols, eps);
  }
}

#define LIAM_INSTANTIATE(T)                                                                    \
  template void gemm_serial<T>(MatView<T>, MatView<T>, T*);                                    \
  template void gemm_parallel<T>(MatView<T>, MatView<T>, T*);                                  \
  template void gemm<T>(MatView<T>, MatView<T>, T*);                                           \
  template void softmax_rows_serial<T>(const T*, const std::uint8_t*, T*, std::size_t,         \
                                       std::size_t);                                           \
  template void softmax_rows_parallel<T>(const T*, const std::uint8_t*, T*, std::size_t,       \
                                         std::size_t);                                         \
  template void softmax_rows<T>(const T*, const std::uint8_t*, T*, std::size_t, std::size_t);  \
  template void standardize_rows_serial<T>(const T*, T*, T*, std::size_t, std::size_t, T);     \
  template void standardize_rows_parallel<T>(const T*, T*, T*, std::size_t, std::size_t, T);   \
  template void standardize_rows<T>(const T*, T*, T*, std::size_t, std::size_t, T);

LIAM_INSTANTIATE(float)
LIAM_INSTANTIATE(double)

#undef LIAM_INSTANTIATE

}  // namespace liam::kernels
