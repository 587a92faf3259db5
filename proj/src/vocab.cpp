#include "dyntok/vocab.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <map>

#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

namespace {

std::string id_str(std::size_t id) { return "token " + std::to_string(id); }

std::int64_t integer_field(const nlohmann::json& j, const char* name) {
  const auto& v = j.at(name);
  if (!v.is_number_integer()) throw Error(std::string("\"") + name + "\" must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < 0) throw Error(std::string("\"") + name + "\" must be non-negative");
  return n;
}

std::string serialize(std::span<const Token> tokens) {
  std::string out;
  for (const Token& t : tokens) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["surface"] = utf8_encode(t.surface);
    j["components"] = t.components;
    j["iteration"] = t.iteration;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace

bool ranks_before(const MergeCandidate& a, const MergeCandidate& b) {
  if (a.frequency != b.frequency) return a.frequency > b.frequency;
  if (a.surface.size() != b.surface.size()) return a.surface.size() < b.surface.size();
  if (a.surface != b.surface) return a.surface < b.surface;
  return a.component_ids < b.component_ids;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::optional<std::string> check_invariants(std::span<const Token> tokens) {
  if (tokens.empty()) return "empty vocabulary";
  std::size_t base = 0;
  while (base < tokens.size() && tokens[base].components.empty()) ++base;
  if (base == 0) return "vocabulary has no base characters";

  std::unordered_map<std::u32string_view, TokenId> seen;
  seen.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.id != i) return id_str(i) + ": id field is " + std::to_string(t.id);
    if (i < base) {
      if (t.surface.size() != 1) return id_str(i) + ": base token must be a single character";
      if (t.iteration != 0) return id_str(i) + ": base token must have iteration 0";
      if (i > 0 && tokens[i - 1].surface[0] >= t.surface[0])
        return id_str(i) + ": base characters must be in ascending code-point order";
    } else {
      if (t.components.empty()) return id_str(i) + ": merged token without components after base block";
      std::u32string joined;
      for (TokenId c : t.components) {
        if (c >= i) return id_str(i) + ": component id " + std::to_string(c) + " is not smaller than its own id";
        joined += tokens[c].surface;
      }
      if (joined != t.surface) return id_str(i) + ": surface differs from concatenated components";
      if (t.iteration < tokens[i - 1].iteration) return id_str(i) + ": iteration tags decrease";
    }
    if (!seen.emplace(t.surface, t.id).second) return id_str(i) + ": duplicate surface";
  }
  return std::nullopt;
}

Vocabulary Vocabulary::from_tokens(std::vector<Token> tokens, std::uint32_t stage) {
  if (auto err = check_invariants(tokens)) throw Error("invalid vocabulary: " + *err);
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.stage_ = stage;
  v.base_size_ = 0;
  while (v.base_size_ < v.tokens_.size() && v.tokens_[v.base_size_].components.empty()) ++v.base_size_;
  v.index_.reserve(v.tokens_.size());
  for (const Token& t : v.tokens_) {
    v.index_.emplace(t.surface, t.id);
    v.max_len_ = std::max(v.max_len_, t.surface.size());
  }
  v.hash_ = fnv1a64(serialize(v.tokens_));
  return v;
}

const Token& Vocabulary::at(TokenId id) const {
  if (id >= tokens_.size())
    throw Error("token id " + std::to_string(id) + " out of range (vocabulary size " + std::to_string(tokens_.size()) + ")");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(std::u32string_view surface) const {
  auto it = index_.find(std::u32string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary init_base(std::u32string_view corpus) {
  if (corpus.empty()) throw Error("empty corpus");
  std::vector<char32_t> chars(corpus.begin(), corpus.end());
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  std::vector<Token> tokens;
  tokens.reserve(chars.size());
  for (char32_t c : chars) {
    tokens.push_back(Token{static_cast<TokenId>(tokens.size()), std::u32string(1, c), {}, 0});
  }
  return Vocabulary::from_tokens(std::move(tokens), 0);
}

Vocabulary add(const Vocabulary& vocab, std::span<const MergeCandidate> candidates, std::size_t cap) {
  if (cap == 0) throw Error("growth cap must be positive");
  // Validate, then keep the best instance per surface.
  std::map<std::u32string, const MergeCandidate*> best;
  for (const MergeCandidate& c : candidates) {
    if (c.component_ids.empty()) throw Error("merge candidate without components");
    std::u32string joined;
    for (TokenId id : c.component_ids) {
      if (id >= vocab.size()) throw Error("merge candidate references unknown token id " + std::to_string(id));
      joined += vocab[id].surface;
    }
    if (joined != c.surface) throw Error("merge candidate surface does not match its components: " + utf8_encode(c.surface));
    if (vocab.find(c.surface)) throw Error("merge candidate surface already in vocabulary: " + utf8_encode(c.surface));
    auto [it, inserted] = best.emplace(c.surface, &c);
    if (!inserted && ranks_before(c, *it->second)) it->second = &c;
  }
  std::vector<const MergeCandidate*> ranked;
  ranked.reserve(best.size());
  for (const auto& [surface, c] : best) ranked.push_back(c);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) { return ranks_before(*a, *b); });
  if (ranked.size() > cap) ranked.resize(cap);

  const std::uint32_t stage = vocab.stage() + 1;
  std::vector<Token> tokens(vocab.tokens().begin(), vocab.tokens().end());
  tokens.reserve(tokens.size() + ranked.size());
  for (const MergeCandidate* c : ranked) {
    tokens.push_back(Token{static_cast<TokenId>(tokens.size()), c->surface, c->component_ids, stage});
  }
  return Vocabulary::from_tokens(std::move(tokens), stage);
}

Vocabulary reduce(const Vocabulary& vocab, std::size_t n_target) {
  if (n_target < vocab.base_size()) throw Error("cannot remove base characters");
  if (n_target > vocab.size())
    throw Error("reduce target " + std::to_string(n_target) + " exceeds vocabulary size " + std::to_string(vocab.size()));
  std::vector<Token> tokens(vocab.tokens().begin(), vocab.tokens().begin() + static_cast<std::ptrdiff_t>(n_target));
  return Vocabulary::from_tokens(std::move(tokens), vocab.stage() + 1);
}

std::string to_jsonl(const Vocabulary& vocab) { return serialize(vocab.tokens()); }

Vocabulary from_jsonl(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.empty()) throw Error(where + "empty line");
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw Error("expected a JSON object");
      Token t;
      const auto id = integer_field(j, "id");
      if (id != static_cast<std::int64_t>(tokens.size()))
        throw Error("id " + std::to_string(id) + " out of sequence (expected " + std::to_string(tokens.size()) + ")");
      t.id = static_cast<TokenId>(id);
      t.surface = utf8_decode(j.at("surface").get<std::string>());
      const auto& comps = j.at("components");
      if (!comps.is_array()) throw Error("\"components\" must be an array");
      for (const auto& c : comps) {
        if (!c.is_number_integer() || c.get<std::int64_t>() < 0) throw Error("component ids must be non-negative integers");
        t.components.push_back(static_cast<TokenId>(c.get<std::int64_t>()));
      }
      t.iteration = static_cast<std::uint32_t>(integer_field(j, "iteration"));
      tokens.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw Error(where + e.what());
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
  }
  std::uint32_t stage = 0;
  for (const Token& t : tokens) stage = std::max(stage, t.iteration);
  return Vocabulary::from_tokens(std::move(tokens), stage);
}

void save(const Vocabulary& vocab, const std::string& path) { write_file_atomic(path, to_jsonl(vocab)); }

Vocabulary load(const std::string& path) {
  try {
    return from_jsonl(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace dyntok
