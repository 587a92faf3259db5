#include <bit>
#include <cstdint>
#include <limits>

#include "dyntok/kernels.hpp"
#include "log2_poly.hpp"

namespace dyntok::kernels::scalar {

using namespace detail;

namespace {

// log2 without the zero special case; 0 maps to a large finite negative value
// so that 0 * log2(0) == 0, matching the vector path.
double log2_finite(double x) {
  double shift = 0.0;
  if (x < kMinNormal) {
    x = x * kSubnormalScale;
    shift = -kSubnormalShift;
  }
  const auto bits = std::bit_cast<std::uint64_t>(x);
  double e = std::bit_cast<double>((bits >> 52) | kExponentMagic) - kExponentBias;
  double m = std::bit_cast<double>((bits & kMantissaMask) | kOneExponent);
  if (m > kSqrt2) {
    m = m * 0.5;
    e = e + 1.0;
  }
  e = e + shift;
  const double s = (m - 1.0) / (m + 1.0);
  const double z = s * s;
  double p = kSeries[kSeriesTerms - 1];
  for (int k = kSeriesTerms - 2; k >= 0; --k) p = p * z + kSeries[k];
  p = p * z + 1.0;
  const double ln_m = (2.0 * s) * p;
  return e + ln_m * kInvLn2;
}

}  // namespace

double log2(double x) {
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  return log2_finite(x);
}

double sum(std::span<const double> values) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= values.size(); i += 4) {
    for (int j = 0; j < 4; ++j) acc[j] = acc[j] + values[i + j];
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (; i < values.size(); ++i) total = total + values[i];
  return total;
}

double xlog2x_sum(std::span<const double> weights) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= weights.size(); i += 4) {
    for (int j = 0; j < 4; ++j) {
      const double w = weights[i + j];
      acc[j] = acc[j] + w * log2_finite(w);
    }
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (; i < weights.size(); ++i) {
    const double w = weights[i];
    total = total + w * log2_finite(w);
  }
  return total;
}

void neg_log2(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    // 0 - y rather than -y: a certain event costs +0 bits, as in the vector path.
    out[i] = in[i] == 0.0 ? std::numeric_limits<double>::infinity() : 0.0 - log2_finite(in[i]);
  }
}

void descent_mask(std::span<const double> h, double epsilon, std::span<std::uint8_t> out) {
  if (h.empty()) return;
  out[0] = 0;
  for (std::size_t t = 1; t < h.size(); ++t) {
    out[t] = (h[t] < h[t - 1] && h[t] < epsilon) ? 1 : 0;
  }
}

std::size_t ascii_prefix(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size() && static_cast<unsigned char>(bytes[i]) < 0x80) ++i;
  return i;
}

void widen_ascii(std::string_view bytes, char32_t* out) {
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = static_cast<unsigned char>(bytes[i]);
}

}  // namespace dyntok::kernels::scalar
