#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dyntok/vocab.hpp"

namespace dyntok {

/// Encoded text: token ids with the character offset where each starts.
struct TokenStream {
  std::vector<TokenId> ids;
  std::vector<std::uint64_t> offsets;
  /// Characters in the source text.
  std::uint64_t text_length = 0;
  /// Hash of the vocabulary used to encode.
  std::uint64_t vocab_hash = 0;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  bool operator==(const TokenStream&) const = default;
};

/// Checks offsets and ids against the vocabulary; throws dyntok::Error.
void validate(const TokenStream& stream, const Vocabulary& vocab);

/// Edge-labeled tree over vocabulary surfaces. Edge labels are base-token ids
/// (the alphabet), children are stored sorted in flat arrays.
class PrefixTrie {
 public:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  static PrefixTrie build(const Vocabulary& vocab);

  /// Alphabet index (= base token id) of a character.
  std::optional<std::uint32_t> symbol(char32_t c) const;
  std::size_t max_depth() const { return max_depth_; }
  std::size_t node_count() const { return terminal_.size(); }
  std::size_t terminal_count() const;
  std::size_t terminals_at_depth(std::size_t depth) const;
  std::uint64_t vocab_hash() const { return vocab_hash_; }
  /// Exact lookup of a surface.
  std::optional<TokenId> find(std::u32string_view surface) const;

  /// Longest surface that prefixes symbols[pos..]. Always at least one symbol
  /// long because every base character is a terminal.
  std::size_t longest_match(const std::uint32_t* symbols, std::size_t n, std::size_t pos, TokenId& id) const;

 private:
  std::uint32_t child(std::uint32_t node, std::uint32_t sym) const;

  // Node 0 is the root; its children are dense: root child of symbol s is 1 + s.
  std::vector<std::uint32_t> first_child_;  // size nodes + 1
  std::vector<std::uint32_t> child_sym_;
  std::vector<std::uint32_t> child_node_;
  std::vector<std::uint32_t> terminal_;  // token id or kNone
  std::vector<std::uint32_t> depth_;
  std::vector<char32_t> alphabet_;       // sorted, index = symbol
  std::int32_t ascii_[128];
  std::size_t max_depth_ = 0;
  std::uint64_t vocab_hash_ = 0;
};

enum class UnknownPolicy { strict, replace };

struct EncodeOptions {
  UnknownPolicy unknown = UnknownPolicy::strict;
  /// Substitute for unknown characters under UnknownPolicy::replace; must be
  /// in the alphabet.
  char32_t replacement = U' ';
};

/// Maps text to alphabet symbols, applying the unknown-character policy.
std::vector<std::uint32_t> to_symbols(std::u32string_view text, const PrefixTrie& trie, const EncodeOptions& opts = {});

/// Greedy leftmost-longest segmentation. Merges may cross spaces.
TokenStream encode(std::u32string_view text, const PrefixTrie& trie, const Vocabulary& vocab,
                   const EncodeOptions& opts = {});

/// Same output as encode(), computed chunk by chunk (optionally on several
/// threads) and stitched at chunk boundaries.
TokenStream encode_batched(std::u32string_view text, const PrefixTrie& trie, const Vocabulary& vocab,
                           std::size_t chunk_chars, const EncodeOptions& opts = {}, unsigned threads = 1);

std::u32string decode(const TokenStream& stream, const Vocabulary& vocab);

// Binary stream file, little-endian:
//   "DTKSTRM1" | u64 vocab_hash | u64 text_length | u64 count | count x (u32 id, u64 offset)
std::string stream_to_bytes(const TokenStream& stream);
TokenStream stream_from_bytes(std::string_view bytes);
void save_stream(const TokenStream& stream, const std::string& path);
TokenStream load_stream(const std::string& path);

}  // namespace dyntok
