// AVX2 variants. Compiled with -mavx2 only; reached through dispatch after a
// CPUID check. Arithmetic mirrors scalar.cpp operation for operation.

#include <immintrin.h>

#include <cstdint>
#include <limits>

#include "dyntok/kernels.hpp"
#include "log2_poly.hpp"

namespace dyntok::kernels::avx2 {

using namespace detail;

namespace {

inline __m256d log2_finite(__m256d x) {
  const __m256d tiny = _mm256_cmp_pd(x, _mm256_set1_pd(kMinNormal), _CMP_LT_OQ);
  x = _mm256_blendv_pd(x, _mm256_mul_pd(x, _mm256_set1_pd(kSubnormalScale)), tiny);
  const __m256d shift = _mm256_and_pd(tiny, _mm256_set1_pd(-kSubnormalShift));

  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i biased = _mm256_or_si256(_mm256_srli_epi64(bits, 52),
                                         _mm256_set1_epi64x(static_cast<long long>(kExponentMagic)));
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(biased), _mm256_set1_pd(kExponentBias));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(static_cast<long long>(kMantissaMask))),
                      _mm256_set1_epi64x(static_cast<long long>(kOneExponent))));

  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_blendv_pd(e, _mm256_add_pd(e, _mm256_set1_pd(1.0)), big);
  e = _mm256_add_pd(e, shift);

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d z = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(kSeries[kSeriesTerms - 1]);
  for (int k = kSeriesTerms - 2; k >= 0; --k) {
    p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kSeries[k]));
  }
  p = _mm256_add_pd(_mm256_mul_pd(p, z), one);
  const __m256d ln_m = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), s), p);
  return _mm256_add_pd(e, _mm256_mul_pd(ln_m, _mm256_set1_pd(kInvLn2)));
}

inline double reduce_lanes(__m256d acc) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

double sum(std::span<const double> values) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= values.size(); i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(values.data() + i));
  double total = reduce_lanes(acc);
  for (; i < values.size(); ++i) total = total + values[i];
  return total;
}

double xlog2x_sum(std::span<const double> weights) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= weights.size(); i += 4) {
    const __m256d w = _mm256_loadu_pd(weights.data() + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(w, log2_finite(w)));
  }
  double total = reduce_lanes(acc);
  if (i < weights.size()) {
    // Tail goes through the same vector log2 on a zero-padded block, then is
    // accumulated sequentially like the scalar tail.
    alignas(32) double block[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; i + j < weights.size(); ++j) block[j] = weights[i + j];
    const __m256d w = _mm256_load_pd(block);
    alignas(32) double terms[4];
    _mm256_store_pd(terms, _mm256_mul_pd(w, log2_finite(w)));
    for (std::size_t j = 0; i + j < weights.size(); ++j) total = total + terms[j];
  }
  return total;
}

void neg_log2(std::span<const double> in, std::span<double> out) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  auto block = [&](__m256d x) {
    const __m256d r = _mm256_sub_pd(zero, log2_finite(x));
    return _mm256_blendv_pd(r, inf, _mm256_cmp_pd(x, zero, _CMP_EQ_OQ));
  };
  for (; i + 4 <= in.size(); i += 4) _mm256_storeu_pd(out.data() + i, block(_mm256_loadu_pd(in.data() + i)));
  if (i < in.size()) {
    alignas(32) double buf[4] = {1.0, 1.0, 1.0, 1.0};
    for (std::size_t j = 0; i + j < in.size(); ++j) buf[j] = in[i + j];
    _mm256_store_pd(buf, block(_mm256_load_pd(buf)));
    for (std::size_t j = 0; i + j < in.size(); ++j) out[i + j] = buf[j];
  }
}

void descent_mask(std::span<const double> h, double epsilon, std::span<std::uint8_t> out) {
  if (h.empty()) return;
  out[0] = 0;
  const __m256d eps = _mm256_set1_pd(epsilon);
  std::size_t t = 1;
  for (; t + 4 <= h.size(); t += 4) {
    const __m256d cur = _mm256_loadu_pd(h.data() + t);
    const __m256d prev = _mm256_loadu_pd(h.data() + t - 1);
    const __m256d ok = _mm256_and_pd(_mm256_cmp_pd(cur, prev, _CMP_LT_OQ), _mm256_cmp_pd(cur, eps, _CMP_LT_OQ));
    const int bits = _mm256_movemask_pd(ok);
    for (int j = 0; j < 4; ++j) out[t + j] = static_cast<std::uint8_t>((bits >> j) & 1);
  }
  for (; t < h.size(); ++t) out[t] = (h[t] < h[t - 1] && h[t] < epsilon) ? 1 : 0;
}

std::size_t ascii_prefix(std::string_view bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t i = 0;
  for (; i + 32 <= bytes.size(); i += 32) {
    const int high = _mm256_movemask_epi8(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i)));
    if (high != 0) return i + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(high)));
  }
  while (i < bytes.size() && p[i] < 0x80) ++i;
  return i;
}

void widen_ascii(std::string_view bytes, char32_t* out) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t i = 0;
  for (; i + 8 <= bytes.size(); i += 8) {
    const __m128i eight = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(p + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_cvtepu8_epi32(eight));
  }
  for (; i < bytes.size(); ++i) out[i] = p[i];
}

}  // namespace dyntok::kernels::avx2
