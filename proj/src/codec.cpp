#include "dyntok/codec.hpp"

#include <algorithm>
#include <thread>

#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

PrefixTrie PrefixTrie::build(const Vocabulary& vocab) {
  PrefixTrie trie;
  trie.vocab_hash_ = vocab.hash();
  const std::size_t base = vocab.base_size();
  trie.alphabet_.reserve(base);
  std::fill(std::begin(trie.ascii_), std::end(trie.ascii_), -1);
  for (std::size_t s = 0; s < base; ++s) {
    const char32_t c = vocab[static_cast<TokenId>(s)].surface[0];
    trie.alphabet_.push_back(c);
    if (c < 128) trie.ascii_[c] = static_cast<std::int32_t>(s);
  }

  struct Node {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> kids;
    std::uint32_t terminal = kNone;
    std::uint32_t depth = 0;
  };
  std::vector<Node> nodes(1 + base);
  for (std::size_t s = 0; s < base; ++s) {
    nodes[1 + s].terminal = static_cast<std::uint32_t>(s);
    nodes[1 + s].depth = 1;
  }
  trie.max_depth_ = base > 0 ? 1 : 0;

  for (std::size_t id = base; id < vocab.size(); ++id) {
    const std::u32string& surface = vocab[static_cast<TokenId>(id)].surface;
    std::uint32_t node = 1 + *trie.symbol(surface[0]);
    for (std::size_t k = 1; k < surface.size(); ++k) {
      const std::uint32_t sym = *trie.symbol(surface[k]);
      auto& kids = nodes[node].kids;
      auto it = std::find_if(kids.begin(), kids.end(), [&](const auto& kid) { return kid.first == sym; });
      if (it != kids.end()) {
        node = it->second;
      } else {
        const auto next = static_cast<std::uint32_t>(nodes.size());
        const std::uint32_t depth = nodes[node].depth + 1;
        kids.emplace_back(sym, next);
        nodes.push_back(Node{{}, kNone, depth});
        node = next;
      }
    }
    nodes[node].terminal = static_cast<std::uint32_t>(id);
    trie.max_depth_ = std::max(trie.max_depth_, surface.size());
  }

  trie.first_child_.reserve(nodes.size() + 1);
  trie.terminal_.reserve(nodes.size());
  trie.depth_.reserve(nodes.size());
  for (Node& n : nodes) {
    std::sort(n.kids.begin(), n.kids.end());
    trie.first_child_.push_back(static_cast<std::uint32_t>(trie.child_sym_.size()));
    for (const auto& [sym, child] : n.kids) {
      trie.child_sym_.push_back(sym);
      trie.child_node_.push_back(child);
    }
    trie.terminal_.push_back(n.terminal);
    trie.depth_.push_back(n.depth);
  }
  trie.first_child_.push_back(static_cast<std::uint32_t>(trie.child_sym_.size()));
  return trie;
}

std::optional<std::uint32_t> PrefixTrie::symbol(char32_t c) const {
  if (c < 128) {
    if (ascii_[c] < 0) return std::nullopt;
    return static_cast<std::uint32_t>(ascii_[c]);
  }
  auto it = std::lower_bound(alphabet_.begin(), alphabet_.end(), c);
  if (it == alphabet_.end() || *it != c) return std::nullopt;
  return static_cast<std::uint32_t>(it - alphabet_.begin());
}

std::size_t PrefixTrie::terminal_count() const {
  return static_cast<std::size_t>(std::count_if(terminal_.begin(), terminal_.end(), [](auto t) { return t != kNone; }));
}

std::size_t PrefixTrie::terminals_at_depth(std::size_t depth) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < terminal_.size(); ++i) {
    if (terminal_[i] != kNone && depth_[i] == depth) ++n;
  }
  return n;
}

std::uint32_t PrefixTrie::child(std::uint32_t node, std::uint32_t sym) const {
  const std::uint32_t begin = first_child_[node];
  const std::uint32_t end = first_child_[node + 1];
  if (end - begin <= 8) {
    for (std::uint32_t i = begin; i < end; ++i) {
      if (child_sym_[i] == sym) return child_node_[i];
    }
    return kNone;
  }
  const auto* first = child_sym_.data() + begin;
  const auto* last = child_sym_.data() + end;
  const auto* it = std::lower_bound(first, last, sym);
  if (it == last || *it != sym) return kNone;
  return child_node_[static_cast<std::size_t>(it - child_sym_.data())];
}

std::optional<TokenId> PrefixTrie::find(std::u32string_view surface) const {
  if (surface.empty()) return std::nullopt;
  auto first = symbol(surface[0]);
  if (!first) return std::nullopt;
  std::uint32_t node = 1 + *first;
  for (std::size_t k = 1; k < surface.size(); ++k) {
    auto sym = symbol(surface[k]);
    if (!sym) return std::nullopt;
    node = child(node, *sym);
    if (node == kNone) return std::nullopt;
  }
  if (terminal_[node] == kNone) return std::nullopt;
  return terminal_[node];
}

std::size_t PrefixTrie::longest_match(const std::uint32_t* symbols, std::size_t n, std::size_t pos, TokenId& id) const {
  std::uint32_t node = 1 + symbols[pos];
  id = terminal_[node];
  std::size_t best = 1;
  for (std::size_t k = pos + 1; k < n; ++k) {
    node = child(node, symbols[k]);
    if (node == kNone) break;
    if (terminal_[node] != kNone) {
      id = terminal_[node];
      best = k - pos + 1;
    }
  }
  return best;
}

std::vector<std::uint32_t> to_symbols(std::u32string_view text, const PrefixTrie& trie, const EncodeOptions& opts) {
  std::vector<std::uint32_t> symbols(text.size());
  std::optional<std::uint32_t> fallback;
  if (opts.unknown == UnknownPolicy::replace) {
    fallback = trie.symbol(opts.replacement);
    if (!fallback) throw Error("replacement character " + describe_char(opts.replacement) + " is not in the vocabulary");
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto sym = trie.symbol(text[i]);
    if (!sym) {
      if (!fallback) {
        throw Error("character " + describe_char(text[i]) + " at position " + std::to_string(i) +
                    " is not in the base alphabet");
      }
      sym = fallback;
    }
    symbols[i] = *sym;
  }
  return symbols;
}

namespace {

void check_trie(const PrefixTrie& trie, const Vocabulary& vocab) {
  if (trie.vocab_hash() != vocab.hash()) throw Error("trie was built from a different vocabulary");
}

}  // namespace

TokenStream encode(std::u32string_view text, const PrefixTrie& trie, const Vocabulary& vocab, const EncodeOptions& opts) {
  check_trie(trie, vocab);
  const std::vector<std::uint32_t> symbols = to_symbols(text, trie, opts);
  TokenStream out;
  out.text_length = text.size();
  out.vocab_hash = vocab.hash();
  out.ids.reserve(text.size() / 2 + 1);
  out.offsets.reserve(text.size() / 2 + 1);
  std::size_t pos = 0;
  while (pos < symbols.size()) {
    TokenId id;
    const std::size_t len = trie.longest_match(symbols.data(), symbols.size(), pos, id);
    out.ids.push_back(id);
    out.offsets.push_back(pos);
    pos += len;
  }
  return out;
}

TokenStream encode_batched(std::u32string_view text, const PrefixTrie& trie, const Vocabulary& vocab,
                           std::size_t chunk_chars, const EncodeOptions& opts, unsigned threads) {
  check_trie(trie, vocab);
  if (chunk_chars == 0 || chunk_chars < trie.max_depth()) throw Error("chunk smaller than longest token");
  const std::vector<std::uint32_t> symbols = to_symbols(text, trie, opts);
  const std::size_t n = symbols.size();
  const std::size_t chunks = (n + chunk_chars - 1) / chunk_chars;

  // Each chunk is encoded greedily from its own first character. A token may
  // run past the chunk end; the chunk stops once a token starts beyond it.
  struct Piece {
    std::vector<TokenId> ids;
    std::vector<std::uint64_t> starts;
    std::uint64_t end = 0;
  };
  std::vector<Piece> pieces(chunks);
  auto encode_chunk = [&](std::size_t k) {
    Piece& piece = pieces[k];
    std::size_t pos = k * chunk_chars;
    const std::size_t stop = std::min(n, pos + chunk_chars);
    while (pos < stop) {
      TokenId id;
      const std::size_t len = trie.longest_match(symbols.data(), n, pos, id);
      piece.ids.push_back(id);
      piece.starts.push_back(pos);
      pos += len;
    }
    piece.end = pos;
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < chunks; ++k) encode_chunk(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < chunks; k += workers) encode_chunk(k);
      });
    }
  }

  // Stitch: continue the previous chunk's greedy cursor into the next chunk,
  // re-tokenizing until it lands on a token start the next chunk also chose.
  // Greedy matching depends only on the position, so from that point on the
  // chunk's own tokens are exactly what a single pass would emit.
  TokenStream out;
  out.text_length = n;
  out.vocab_hash = vocab.hash();
  out.ids.reserve(n / 2 + 1);
  out.offsets.reserve(n / 2 + 1);
  std::uint64_t cursor = 0;
  for (std::size_t k = 0; k < chunks; ++k) {
    const Piece& piece = pieces[k];
    const std::uint64_t chunk_end = std::min<std::uint64_t>(n, (k + 1) * chunk_chars);
    auto idx = static_cast<std::size_t>(std::lower_bound(piece.starts.begin(), piece.starts.end(), cursor) -
                                        piece.starts.begin());
    while (cursor < chunk_end) {
      if (idx < piece.starts.size() && piece.starts[idx] == cursor) {
        out.ids.insert(out.ids.end(), piece.ids.begin() + static_cast<std::ptrdiff_t>(idx), piece.ids.end());
        out.offsets.insert(out.offsets.end(), piece.starts.begin() + static_cast<std::ptrdiff_t>(idx),
                           piece.starts.end());
        cursor = piece.end;
        break;
      }
      TokenId id;
      const std::size_t len = trie.longest_match(symbols.data(), n, cursor, id);
      out.ids.push_back(id);
      out.offsets.push_back(cursor);
      cursor += len;
      while (idx < piece.starts.size() && piece.starts[idx] < cursor) ++idx;
    }
  }
  return out;
}

std::u32string decode(const TokenStream& stream, const Vocabulary& vocab) {
  std::u32string out;
  out.reserve(stream.text_length);
  for (TokenId id : stream.ids) out += vocab.at(id).surface;
  return out;
}

void validate(const TokenStream& stream, const Vocabulary& vocab) {
  if (stream.vocab_hash != vocab.hash()) {
    throw Error("token stream was encoded with vocabulary " + hash_hex(stream.vocab_hash) + ", not " +
                hash_hex(vocab.hash()));
  }
  if (stream.ids.size() != stream.offsets.size()) throw Error("token stream ids and offsets differ in length");
  std::uint64_t expect = 0;
  for (std::size_t t = 0; t < stream.ids.size(); ++t) {
    if (stream.offsets[t] != expect) throw Error("token stream offset mismatch at position " + std::to_string(t));
    expect += vocab.at(stream.ids[t]).surface.size();
  }
  if (expect != stream.text_length) throw Error("token stream does not cover the stated text length");
}

}  // namespace dyntok
