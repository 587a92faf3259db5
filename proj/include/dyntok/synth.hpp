#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace dyntok {

/// Synthetic corpus: phrases from a fixed bank, chained by a sparse Markov
/// transition table, with a small rate of character noise. Every phrase ends
/// in one of a few link words, so which phrase comes next depends on more
/// than the last few characters. Deterministic for a given spec on every
/// platform.
struct SynthSpec {
  std::size_t chars = 1'000'000;
  std::size_t phrases = 200;
  double noise = 0.002;
  std::uint64_t seed = 7;
};

std::u32string synth_corpus(const SynthSpec& spec);

}  // namespace dyntok
