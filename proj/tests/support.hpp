#pragma once
// Helpers shared by the unit tests and the acceptance suite: random inputs
// and reference implementations written independently of the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dyntok/candidate.hpp"
#include "dyntok/codec.hpp"
#include "dyntok/vocab.hpp"

namespace dyntok::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

/// Mixed alphabet: ASCII letters and punctuation plus 2-, 3- and 4-byte
/// UTF-8 characters.
inline const std::u32string& mixed_alphabet() {
  static const std::u32string a = U"abcdefgh ijk.,!\nxyzé߀中😀ñ";
  return a;
}

inline std::u32string random_text(Rng& rng, std::size_t len, const std::u32string& alphabet = mixed_alphabet()) {
  std::u32string out;
  out.reserve(len);
  // Biased toward a few characters so repeated substrings, and therefore
  // long vocabulary matches, are common.
  const std::size_t hot = std::max<std::size_t>(1, alphabet.size() / 4);
  for (std::size_t i = 0; i < len; ++i) out.push_back(alphabet[pick(rng, 3) ? pick(rng, hot) : pick(rng, alphabet.size())]);
  return out;
}

/// Appends up to n random merges of 2-3 existing tokens.
inline Vocabulary grow_random(const Vocabulary& vocab, Rng& rng, std::size_t n) {
  if (n == 0) return vocab;
  std::vector<MergeCandidate> cands;
  std::set<std::u32string> seen;
  for (std::size_t attempt = 0; attempt < n * 4 && cands.size() < n; ++attempt) {
    MergeCandidate c;
    const std::size_t parts = 2 + pick(rng, 2);
    for (std::size_t p = 0; p < parts; ++p) {
      const auto id = static_cast<TokenId>(pick(rng, vocab.size()));
      c.component_ids.push_back(id);
      c.surface += vocab[id].surface;
    }
    if (vocab.find(c.surface) || !seen.insert(c.surface).second) continue;
    c.frequency = 1 + pick(rng, 50);
    cands.push_back(std::move(c));
  }
  return add(vocab, cands, n);
}

/// Greedy longest match by scanning every surface at every position.
inline std::vector<TokenId> naive_encode(const std::u32string& text, const Vocabulary& vocab) {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best_len = 0;
    TokenId best = 0;
    for (const Token& t : vocab.tokens()) {
      const std::size_t len = t.surface.size();
      if (len > best_len && text.compare(pos, len, t.surface) == 0) {
        best_len = len;
        best = t.id;
      }
    }
    if (best_len == 0) return {};  // character outside the vocabulary
    out.push_back(best);
    pos += best_len;
  }
  return out;
}

/// Span aggregation written from the definition: at each scan position take
/// the longest window (at most max_len tokens) whose every entropy after the
/// first is below both its predecessor and epsilon, then group by surface.
inline std::vector<MergeCandidate> oracle_candidates(const std::vector<TokenId>& ids, const std::vector<double>& h,
                                                     const Vocabulary& vocab, double epsilon, std::size_t max_len,
                                                     std::uint64_t min_frequency) {
  std::map<std::vector<TokenId>, std::uint64_t> by_ids;
  std::size_t i = 0;
  while (i < ids.size()) {
    std::size_t len = 1;
    while (len < max_len && i + len < ids.size() && h[i + len] < h[i + len - 1] && h[i + len] < epsilon) ++len;
    if (len >= 2) ++by_ids[std::vector<TokenId>(ids.begin() + static_cast<long>(i), ids.begin() + static_cast<long>(i + len))];
    i += len;
  }
  struct Group {
    std::uint64_t total = 0;
    std::uint64_t best_freq = 0;
    std::vector<TokenId> best_ids;
  };
  std::map<std::u32string, Group> groups;
  for (const auto& [key, freq] : by_ids) {
    std::u32string s;
    for (TokenId id : key) s += vocab[id].surface;
    Group& g = groups[s];
    g.total += freq;
    if (freq > g.best_freq || (freq == g.best_freq && key < g.best_ids)) {
      g.best_freq = freq;
      g.best_ids = key;
    }
  }
  std::vector<MergeCandidate> out;
  for (auto& [s, g] : groups) {
    if (g.total >= min_frequency && !vocab.find(s)) out.push_back({g.best_ids, s, g.total});
  }
  std::sort(out.begin(), out.end(), [](const MergeCandidate& a, const MergeCandidate& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    if (a.surface.size() != b.surface.size()) return a.surface.size() < b.surface.size();
    if (a.surface != b.surface) return a.surface < b.surface;
    return a.component_ids < b.component_ids;
  });
  return out;
}

/// Entropy in bits of a probability vector, straight from the definition.
inline double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0) h -= x * std::log2(x);
  return h;
}

}  // namespace dyntok::testing
