#include <cstdlib>
#include <string>

#include <spdlog/spdlog.h>

#include "tablehop/simd/kernels.hpp"

namespace tablehop::simd {

namespace {

constexpr Kernels kScalar{Isa::scalar, &detail::dot_scalar, &detail::dot_rows_scalar};
#if defined(TABLEHOP_HAVE_AVX2_KERNEL)
constexpr Kernels kAvx2{Isa::avx2, &detail::dot_avx2, &detail::dot_rows_avx2};
#endif
#if defined(TABLEHOP_HAVE_NEON_KERNEL)
constexpr Kernels kNeon{Isa::neon, &detail::dot_neon, &detail::dot_rows_neon};
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(TABLEHOP_HAVE_AVX2_KERNEL) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(TABLEHOP_HAVE_NEON_KERNEL)
      return true;  // baseline on aarch64
#else
      return false;
#endif
  }
  return false;
}

const Kernels& select() {
  if (const char* forced = std::getenv("TABLEHOP_SIMD"); forced != nullptr && *forced != '\0') {
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (to_string(isa) == forced) {
        if (const Kernels* k = for_isa(isa)) return *k;
      }
    }
    spdlog::warn("TABLEHOP_SIMD={} is not available here; using automatic selection", forced);
  }
  const Kernels* best = &kScalar;
  for (Isa isa : available()) best = for_isa(isa);
  return *best;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "scalar";
}

const Kernels* for_isa(Isa isa) {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
#if defined(TABLEHOP_HAVE_AVX2_KERNEL)
      return &kAvx2;
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(TABLEHOP_HAVE_NEON_KERNEL)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::neon, Isa::avx2}) {
    if (for_isa(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const Kernels& active() {
  static const Kernels& chosen = select();
  return chosen;
}

}  // namespace tablehop::simd
