#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dyntok/codec.hpp"

namespace dyntok {

enum class TraceKind { entropy, nll };

const char* trace_kind_name(TraceKind kind);

/// Per-position values in bits aligned to a token stream: predictive
/// distribution entropy (kind entropy) or realized surprisal (kind nll).
struct EntropyTrace {
  TraceKind kind = TraceKind::entropy;
  std::uint64_t vocab_hash = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Total bits. Uses the same reduction as the BPC report.
  double total_bits() const;
  bool operator==(const EntropyTrace&) const = default;
};

/// Entropy in bits of add-alpha smoothed counts over `vocab_size` outcomes,
/// where `counts` lists the nonzero entries. alpha may be 0 here; a context
/// without observations is uniform.
double smoothed_entropy_bits(std::span<const std::uint64_t> counts, std::size_t vocab_size, double alpha);

inline constexpr unsigned kMaxNgramOrder = 8;

/// Add-alpha smoothed n-gram model. Counts are kept for every context length
/// 0..order-1 so that early positions can use the shorter context available.
class NgramModel {
 public:
  struct ContextKey {
    std::array<TokenId, kMaxNgramOrder - 1> ids{};
    std::uint8_t len = 0;
    bool operator==(const ContextKey&) const = default;
  };
  struct ContextKeyHash {
    std::size_t operator()(const ContextKey& k) const noexcept;
  };
  /// Next-token counts of one context: sorted ids with their counts.
  struct Table {
    std::span<const TokenId> next;
    std::span<const std::uint64_t> counts;
    std::uint64_t total = 0;
  };

  NgramModel(unsigned order, double alpha, std::size_t vocab_size);

  unsigned order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t context_count() const { return entries_.size(); }

  /// Table for a context; empty (total 0) when never observed.
  Table table(std::span<const TokenId> context) const;
  std::uint64_t count(std::span<const TokenId> context, TokenId next) const;
  /// Predictive entropy in bits for a context.
  double entropy(std::span<const TokenId> context) const;
  /// Smoothed probability of `next` after `context`.
  double probability(std::span<const TokenId> context, TokenId next) const;

  /// Adds raw counts. Contexts longer than order-1 are rejected.
  void add_counts(std::span<const TokenId> context, std::span<const TokenId> next,
                  std::span<const std::uint64_t> counts);
  /// Sum of the counts of two models with equal order, alpha and vocab size.
  static NgramModel merged(const NgramModel& a, const NgramModel& b);

  /// Visits contexts in (length, ids) order.
  template <typename F>
  void for_each_context(F&& visit) const;

  std::string to_bytes() const;
  static NgramModel from_bytes(std::string_view bytes);

  bool operator==(const NgramModel& other) const;

 private:
  struct Entry {
    std::vector<TokenId> next;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    double entropy = 0.0;
  };
  const Entry* lookup(std::span<const TokenId> context) const;
  void refresh(Entry& e) const;
  std::vector<const std::pair<const ContextKey, Entry>*> sorted_entries() const;

  unsigned order_;
  double alpha_;
  std::size_t vocab_size_;
  std::unordered_map<ContextKey, Entry, ContextKeyHash> entries_;

  friend NgramModel fit_ngram(const TokenStream&, std::size_t, unsigned, double);
};

template <typename F>
void NgramModel::for_each_context(F&& visit) const {
  for (const auto* kv : sorted_entries()) {
    const ContextKey& key = kv->first;
    const Entry& e = kv->second;
    visit(std::span<const TokenId>(key.ids.data(), key.len),
          Table{std::span<const TokenId>(e.next), std::span<const std::uint64_t>(e.counts), e.total});
  }
}

/// Counts every (context, next) pair of the stream, for all context lengths
/// 0..order-1.
NgramModel fit_ngram(const TokenStream& stream, std::size_t vocab_size, unsigned order, double alpha);

/// values[t] = entropy of the predictive distribution at t.
EntropyTrace entropy_trace(const NgramModel& model, const TokenStream& stream);
/// values[t] = -log2 p(ids[t] | context).
EntropyTrace nll_trace(const NgramModel& model, const TokenStream& stream);

void save_model(const NgramModel& model, const std::string& path);
NgramModel load_model(const std::string& path);

enum class DumpEncoding { f32le, text };

// Entropy dump file: one JSON header line
//   {"vocab_hash":"<16 hex>","stream_length":N,"unit":"bits","kind":"entropy"|"nll","encoding":"f32le"|"text"}
// followed by N packed little-endian float32 values, or N text lines.
void save_entropy_dump(const EntropyTrace& trace, const std::string& path, DumpEncoding encoding = DumpEncoding::f32le);
std::string entropy_dump_to_bytes(const EntropyTrace& trace, DumpEncoding encoding = DumpEncoding::f32le);
/// Parses a dump without checking it against a stream.
EntropyTrace entropy_dump_from_bytes(std::string_view bytes);
/// Loads a dump and checks its vocabulary hash and length against `stream`.
EntropyTrace load_entropy_dump(const std::string& path, const TokenStream& stream);

}  // namespace dyntok
