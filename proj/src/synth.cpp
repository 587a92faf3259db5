#include "dyntok/synth.hpp"

#include <array>
#include <random>
#include <vector>

namespace dyntok {

namespace {

// Raw engine output only: std distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

constexpr char32_t kLetters[] = U"abcdefghijklmnopqrstuvwxyz";
// Noise alphabet includes a few non-ASCII characters so corpora exercise the
// multi-byte path.
constexpr char32_t kNoise[] = U"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;:'-éüßø€";
constexpr const char32_t* kLinkWords[] = {U"of", U"and", U"to", U"in", U"the"};
constexpr double kSuccessorWeights[] = {0.6, 0.3, 0.1};

}  // namespace

std::u32string synth_corpus(const SynthSpec& spec) {
  Rng rng(spec.seed);
  std::vector<std::u32string> words(spec.phrases + 16);
  for (auto& w : words) {
    const std::size_t len = 3 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i) w.push_back(kLetters[rng.below(26)]);
  }
  // A phrase is two or three content words followed by a link word, so the
  // characters just before a phrase boundary say little about the phrase.
  std::vector<std::u32string> bank(spec.phrases);
  for (auto& phrase : bank) {
    const std::size_t n = 3 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i) {
      phrase += words[rng.below(words.size())];
      phrase.push_back(U' ');
    }
    phrase += kLinkWords[rng.below(std::size(kLinkWords))];
    phrase.push_back(rng.below(6) == 0 ? U',' : U' ');
    if (phrase.back() == U',') phrase.push_back(U' ');
  }
  // Each phrase has three likely successors; occasionally the chain jumps.
  std::vector<std::array<std::size_t, 3>> successors(bank.size());
  for (auto& s : successors)
    for (auto& next : s) next = rng.below(bank.size());

  const std::size_t noise_size = std::char_traits<char32_t>::length(kNoise);
  std::u32string out;
  out.reserve(spec.chars + 64);
  std::size_t current = 0;
  while (out.size() < spec.chars) {
    for (char32_t c : bank[current]) out.push_back(rng.unit() < spec.noise ? kNoise[rng.below(noise_size)] : c);
    const double r = rng.unit();
    if (r < 0.05) {
      current = rng.below(bank.size());
    } else {
      double acc = 0.05;
      std::size_t k = 0;
      while (k + 1 < std::size(kSuccessorWeights) && r >= acc + kSuccessorWeights[k] * 0.95) acc += kSuccessorWeights[k++] * 0.95;
      current = successors[current][k];
    }
  }
  out.resize(spec.chars);
  return out;
}

}  // namespace dyntok
