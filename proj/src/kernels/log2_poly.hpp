#pragma once

// Constants for the log2 shared by the scalar and AVX2 kernels. Both paths
// evaluate exactly the same sequence of IEEE operations on these.
//
//   x = 2^e * m,  m in [sqrt(1/2), sqrt(2)]
//   ln m = 2s * (1 + z/3 + z^2/5 + ... + z^10/21),  s = (m-1)/(m+1), z = s^2
//
// |s| <= 0.1716 so the truncated series is below 2^-53 relative.

namespace dyntok::kernels::detail {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvLn2 = 1.4426950408889634;
inline constexpr double kMinNormal = 2.2250738585072014e-308;
inline constexpr double kSubnormalScale = 18014398509481984.0;  // 2^54
inline constexpr double kSubnormalShift = 54.0;
// 2^52 + 1023: subtracting it from (2^52 | biased exponent) yields e exactly.
inline constexpr double kExponentBias = 4503599627370496.0 + 1023.0;
inline constexpr unsigned long long kExponentMagic = 0x4330000000000000ULL;
inline constexpr unsigned long long kMantissaMask = 0x000FFFFFFFFFFFFFULL;
inline constexpr unsigned long long kOneExponent = 0x3FF0000000000000ULL;

inline constexpr int kSeriesTerms = 10;
inline constexpr double kSeries[kSeriesTerms] = {
    1.0 / 3.0,  1.0 / 5.0,  1.0 / 7.0,  1.0 / 9.0,  1.0 / 11.0,
    1.0 / 13.0, 1.0 / 15.0, 1.0 / 17.0, 1.0 / 19.0, 1.0 / 21.0,
};

}  // namespace dyntok::kernels::detail
