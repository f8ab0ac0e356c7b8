#include <immintrin.h>

#include "tablehop/simd/kernels.hpp"

namespace tablehop::simd::detail {

namespace {

// One 4-wide accumulator; lane j holds the scalar kernel's s_j.
inline double fold_and_tail(__m256d acc, const double* a, const double* b, std::size_t i,
                            std::size_t n) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, prod);
  }
  return fold_and_tail(acc, a, b, i, n);
}

void dot_rows_avx2(const double* rows, std::size_t n_rows, std::size_t dim, const double* query,
                   double* out) {
  // Two rows per pass share each query load.
  std::size_t r = 0;
  for (; r + 2 <= n_rows; r += 2) {
    const double* row0 = rows + r * dim;
    const double* row1 = row0 + dim;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= dim; i += 4) {
      __m256d q = _mm256_loadu_pd(query + i);
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(row0 + i), q));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(row1 + i), q));
    }
    out[r] = fold_and_tail(acc0, row0, query, i, dim);
    out[r + 1] = fold_and_tail(acc1, row1, query, i, dim);
  }
  for (; r < n_rows; ++r) out[r] = dot_avx2(rows + r * dim, query, dim);
}

}  // namespace tablehop::simd::detail
