#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dyntok/candidate.hpp"

namespace dyntok {

struct Token {
  TokenId id = 0;
  std::u32string surface;
  /// Ids this token merges, in order. Empty for base characters.
  std::vector<TokenId> components;
  /// Curriculum stage that introduced the token.
  std::uint32_t iteration = 0;

  bool operator==(const Token&) const = default;
};

/// Ordered token table. Position equals id; tokens [0, base_size) are the
/// base characters in code-point order; every component id is smaller than
/// the id of the token that uses it, so any prefix is itself a vocabulary.
///
/// Immutable once built. Updates return new values.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Validates every invariant and throws dyntok::Error naming the first
  /// offending id otherwise.
  static Vocabulary from_tokens(std::vector<Token> tokens, std::uint32_t stage);

  std::size_t size() const { return tokens_.size(); }
  std::size_t base_size() const { return base_size_; }
  std::uint32_t stage() const { return stage_; }
  std::span<const Token> tokens() const { return tokens_; }
  const Token& operator[](TokenId id) const { return tokens_[id]; }
  const Token& at(TokenId id) const;
  std::optional<TokenId> find(std::u32string_view surface) const;
  std::size_t max_surface_length() const { return max_len_; }
  /// FNV-1a of the interchange serialization; ignores the stage counter.
  std::uint64_t hash() const { return hash_; }

  /// Same tokens, regardless of stage.
  bool same_tokens(const Vocabulary& other) const { return tokens_ == other.tokens_; }
  bool operator==(const Vocabulary& other) const {
    return stage_ == other.stage_ && tokens_ == other.tokens_;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t base_size_ = 0;
  std::uint32_t stage_ = 0;
  std::size_t max_len_ = 0;
  std::uint64_t hash_ = 0;
  std::unordered_map<std::u32string, TokenId> index_;
};

/// Returns a description of the first invariant violation, if any.
std::optional<std::string> check_invariants(std::span<const Token> tokens);

/// One token per distinct character of the corpus, sorted by code point.
Vocabulary init_base(std::u32string_view corpus);

/// Appends up to `cap` candidates, ranked by ranks_before(), tagged stage+1.
/// Duplicate surfaces keep their most frequent instance. Throws if a
/// candidate references an unknown id, disagrees with its components'
/// surfaces, or repeats a surface already in the vocabulary.
Vocabulary add(const Vocabulary& vocab, std::span<const MergeCandidate> candidates, std::size_t cap);

/// Prefix slice to the first n_target tokens.
Vocabulary reduce(const Vocabulary& vocab, std::size_t n_target);

// JSON Lines interchange format:
//   {"id": 0, "surface": "a", "components": [], "iteration": 0}
std::string to_jsonl(const Vocabulary& vocab);
/// Stage is restored as the largest iteration tag.
Vocabulary from_jsonl(std::string_view text);
void save(const Vocabulary& vocab, const std::string& path);
Vocabulary load(const std::string& path);

std::string hash_hex(std::uint64_t hash);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dyntok
