#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "dyntok/error.hpp"
#include "dyntok/kernels.hpp"

namespace dyntok::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(DYNTOK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("DYNTOK_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

bool use_avx2() {
#if defined(DYNTOK_HAVE_AVX2)
  return current().load(std::memory_order_relaxed) == Backend::avx2;
#else
  return false;
#endif
}

}  // namespace

bool backend_available(Backend b) { return b == Backend::scalar || cpu_has_avx2(); }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b)) throw Error(std::string("SIMD backend not available: ") + backend_name(b));
  current().store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

#if defined(DYNTOK_HAVE_AVX2)
#define DYNTOK_DISPATCH(fn, ...) return use_avx2() ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define DYNTOK_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double sum(std::span<const double> values) { DYNTOK_DISPATCH(sum, values); }
double xlog2x_sum(std::span<const double> weights) { DYNTOK_DISPATCH(xlog2x_sum, weights); }
void neg_log2(std::span<const double> in, std::span<double> out) { DYNTOK_DISPATCH(neg_log2, in, out); }
void descent_mask(std::span<const double> h, double epsilon, std::span<std::uint8_t> out) {
  DYNTOK_DISPATCH(descent_mask, h, epsilon, out);
}
std::size_t ascii_prefix(std::string_view bytes) { DYNTOK_DISPATCH(ascii_prefix, bytes); }
void widen_ascii(std::string_view bytes, char32_t* out) { DYNTOK_DISPATCH(widen_ascii, bytes, out); }

#undef DYNTOK_DISPATCH

}  // namespace dyntok::kernels
