#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Dense dot-product kernels behind the cosine scorer and the index scan.
//
// Every variant uses the same reduction order: four interleaved partial sums
// over blocks of four elements (lane j accumulates a[i+j]*b[i+j]), folded as
// (s0 + s1) + (s2 + s3), after which the tail elements are added one at a
// time. Multiplies and adds are never fused. Under that contract every ISA
// returns bit-identical results, which keeps rankings and tie-breaks stable
// no matter which kernel the dispatcher picks.
namespace tablehop::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct Kernels {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[r] = dot(rows + r * dim, query, dim) for r in [0, n_rows)
  void (*dot_rows)(const double* rows, std::size_t n_rows, std::size_t dim, const double* query,
                   double* out);
};

/// Kernels selected for this process: the widest ISA that is both compiled in
/// and supported by the CPU, unless TABLEHOP_SIMD names another available one.
const Kernels& active();

/// Kernels for a specific ISA, or nullptr when it is not usable here.
const Kernels* for_isa(Isa isa);

/// Every ISA usable on this machine, scalar first.
std::vector<Isa> available();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void dot_rows_scalar(const double* rows, std::size_t n_rows, std::size_t dim, const double* query,
                     double* out);
#if defined(TABLEHOP_HAVE_AVX2_KERNEL)
double dot_avx2(const double* a, const double* b, std::size_t n);
void dot_rows_avx2(const double* rows, std::size_t n_rows, std::size_t dim, const double* query,
                   double* out);
#endif
#if defined(TABLEHOP_HAVE_NEON_KERNEL)
double dot_neon(const double* a, const double* b, std::size_t n);
void dot_rows_neon(const double* rows, std::size_t n_rows, std::size_t dim, const double* query,
                   double* out);
#endif
}  // namespace detail

}  // namespace tablehop::simd
