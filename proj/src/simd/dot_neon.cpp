#include <arm_neon.h>

#include "tablehop/simd/kernels.hpp"

namespace tablehop::simd::detail {

// lo holds lanes (s0, s1), hi holds (s2, s3) of the scalar reduction.
double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

void dot_rows_neon(const double* rows, std::size_t n_rows, std::size_t dim, const double* query,
                   double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_neon(rows + r * dim, query, dim);
}

}  // namespace tablehop::simd::detail
