#pragma once

// Data-parallel inner loops shared by the entropy, merge and metrics paths.
//
// Every kernel has a scalar reference and, on x86-64, an AVX2 variant chosen
// at runtime. The variants are bit-identical: reductions use the same
// four-lane blocked order and log2 uses the same polynomial in both, so
// results never depend on which CPU ran them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace dyntok::kernels {

enum class Backend { scalar, avx2 };

/// Backend used by the free functions below. Picked once from CPUID; the
/// DYNTOK_SIMD environment variable ("scalar" or "avx2") overrides it.
Backend active_backend();
/// Forces a backend. Throws dyntok::Error when the CPU or build lacks it.
void set_backend(Backend b);
bool backend_available(Backend b);
const char* backend_name(Backend b);

/// Sum of values.
double sum(std::span<const double> values);
/// Sum of w * log2(w), with 0 * log2(0) taken as 0. Inputs must be >= 0.
double xlog2x_sum(std::span<const double> weights);
/// out[i] = -log2(in[i]). Inputs must be >= 0; sizes must match.
void neg_log2(std::span<const double> in, std::span<double> out);
/// out[0] = 0; out[t] = (h[t] < h[t-1] && h[t] < epsilon) for t >= 1.
void descent_mask(std::span<const double> h, double epsilon, std::span<std::uint8_t> out);
/// Length of the leading run of ASCII bytes.
std::size_t ascii_prefix(std::string_view bytes);
/// Widens ASCII bytes to code points; bytes must all be < 0x80.
void widen_ascii(std::string_view bytes, char32_t* out);

// Explicit-backend entry points, used by the equivalence tests.
namespace scalar {
double sum(std::span<const double> values);
double xlog2x_sum(std::span<const double> weights);
double log2(double x);
void neg_log2(std::span<const double> in, std::span<double> out);
void descent_mask(std::span<const double> h, double epsilon, std::span<std::uint8_t> out);
std::size_t ascii_prefix(std::string_view bytes);
void widen_ascii(std::string_view bytes, char32_t* out);
}  // namespace scalar

namespace avx2 {
double sum(std::span<const double> values);
double xlog2x_sum(std::span<const double> weights);
void neg_log2(std::span<const double> in, std::span<double> out);
void descent_mask(std::span<const double> h, double epsilon, std::span<std::uint8_t> out);
std::size_t ascii_prefix(std::string_view bytes);
void widen_ascii(std::string_view bytes, char32_t* out);
}  // namespace avx2

}  // namespace dyntok::kernels
