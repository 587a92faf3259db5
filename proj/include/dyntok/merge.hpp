#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dyntok/candidate.hpp"
#include "dyntok/codec.hpp"
#include "dyntok/entropy.hpp"

namespace dyntok {

struct MergeConfig {
  /// Entropy threshold in bits.
  double epsilon = 0.3;
  /// Max new tokens per vocabulary update.
  std::size_t growth_cap = 3000;
  /// Longest span, in tokens, that may become one token.
  std::size_t max_span_tokens = 8;
  /// Spans seen fewer times are not proposed.
  std::uint64_t min_frequency = 2;

  void validate() const;
};

/// True iff every entropy after the first is strictly below both its
/// predecessor and epsilon. Throws for fewer than two values.
bool is_mergeable(std::span<const double> entropies, double epsilon);

/// Maximal mergeable spans of the stream, aggregated by id sequence, sorted
/// by id sequence. Surfaces are left empty. Scans left to right: from each
/// start the span is extended while the predicate holds (up to
/// max_span_tokens), and scanning resumes after its last token.
std::vector<MergeCandidate> collect_spans(const TokenStream& stream, const EntropyTrace& trace, const MergeConfig& cfg);

/// Reference for collect_spans(): tests every window with is_mergeable().
std::vector<MergeCandidate> verify_candidates_bruteforce(const TokenStream& stream, const EntropyTrace& trace,
                                                         const MergeConfig& cfg);

/// Candidates for the next vocabulary: spans aggregated by surface (keeping
/// the ids of the most frequent variant), minus surfaces already in the
/// vocabulary and spans below min_frequency, ranked by ranks_before().
std::vector<MergeCandidate> find_candidates(const TokenStream& stream, const EntropyTrace& trace,
                                            const Vocabulary& vocab, const MergeConfig& cfg);

// {"surface": "...", "components": [...], "frequency": n} per line.
std::string candidates_to_jsonl(std::span<const MergeCandidate> candidates);
std::vector<MergeCandidate> candidates_from_jsonl(std::string_view text);

}  // namespace dyntok
