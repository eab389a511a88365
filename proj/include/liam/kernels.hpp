#pragma once

// Dense inner loops used by the differentiation ops. Every kernel has a serial
// reference and an OpenMP version that splits work by output row; the two
// perform the same floating-point operations in the same order per row, so
// their results are bit-identical.

#include <cstddef>
#include <cstdint>

namespace liam::kernels {

enum class Mode { serial, parallel };

void set_mode(Mode mode);
Mode mode();

/// Strided read-only matrix view: element (r, c) is data[r * row_stride + c * col_stride].
template <typename T>
struct MatView {
  const T* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t row_stride;
  std::size_t col_stride;

  T operator()(std::size_t r, std::size_t c) const { return data[r * row_stride + c * col_stride]; }
  MatView transposed() const { return {data, cols, rows, col_stride, row_stride}; }
};

template <typename T>
MatView<T> row_major(const T* data, std::size_t rows, std::size_t cols) {
  return {data, rows, cols, cols, 1};
}

// out (a.rows x b.cols, row-major) += a * b. Zero entries of `a` are skipped,
// so masked attention weights contribute nothing at all.
template <typename T>
void gemm_serial(MatView<T> a, MatView<T> b, T* out);
template <typename T>
void gemm_parallel(MatView<T> a, MatView<T> b, T* out);
template <typename T>
void gemm(MatView<T> a, MatView<T> b, T* out);

// Row-wise softmax. When `mask` is non-null, entries with mask == 0 get
// probability exactly 0 and do not enter the normalizer.
template <typename T>
void softmax_rows_serial(const T* x, const std::uint8_t* mask, T* y, std::size_t rows,
                         std::size_t cols);
template <typename T>
void softmax_rows_parallel(const T* x, const std::uint8_t* mask, T* y, std::size_t rows,
                           std::size_t cols);
template <typename T>
void softmax_rows(const T* x, const std::uint8_t* mask, T* y, std::size_t rows, std::size_t cols);

// Row-wise standardization: xhat = (x - mean) * inv_std, inv_std = 1/sqrt(var + eps).
template <typename T>
void standardize_rows_serial(const T* x, T* xhat, T* inv_std, std::size_t rows, std::size_t cols,
                             T eps);
template <typename T>
void standardize_rows_parallel(const T* x, T* xhat, T* inv_std, std::size_t rows,
                               std::size_t cols, T eps);
template <typename T>
void standardize_rows(const T* x, T* xhat, T* inv_std, std::size_t rows, std::size_t cols, T eps);

}  // namespace liam::kernels
