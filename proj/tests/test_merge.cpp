#include <doctest.h>

#include "dyntok/entropy.hpp"
#include "dyntok/error.hpp"
#include "dyntok/merge.hpp"
#include "support.hpp"

using namespace dyntok;

namespace {

TokenStream stream_over(const Vocabulary& v, std::vector<TokenId> ids) {
  TokenStream s;
  std::uint64_t off = 0;
  for (TokenId id : ids) {
    s.offsets.push_back(off);
    off += v[id].surface.size();
  }
  s.ids = std::move(ids);
  s.text_length = off;
  s.vocab_hash = v.hash();
  return s;
}

EntropyTrace trace_of(const TokenStream& s, std::vector<double> h) {
  return EntropyTrace{TraceKind::entropy, s.vocab_hash, std::move(h)};
}

}  // namespace

TEST_CASE("mergeability predicate") {
  const std::vector<double> ok{2.0, 0.25, 0.10};
  const std::vector<double> over{2.0, 0.40, 0.20};
  const std::vector<double> rises{2.0, 0.10, 0.20};
  const std::vector<double> tie{2.0, 0.10, 0.10};
  const std::vector<double> at_eps{2.0, 0.3};
  CHECK(is_mergeable(ok, 0.3));
  CHECK_FALSE(is_mergeable(over, 0.3));
  CHECK_FALSE(is_mergeable(rises, 0.3));
  CHECK_FALSE(is_mergeable(tie, 0.3));
  CHECK_FALSE(is_mergeable(at_eps, 0.3));
  const std::vector<double> one{0.1};
  CHECK_THROWS_WITH_AS(is_mergeable(one, 0.3), "span too short", Error);
}

TEST_CASE("maximal spans restart after the span end") {
  const Vocabulary v = init_base(U"abcdefgh");
  const TokenStream s = stream_over(v, {0, 1, 2, 3, 4, 5, 6, 7});
  MergeConfig cfg;
  cfg.min_frequency = 1;
  // Tokens 0..2 form one span; token 3 fails the descent, so it starts the
  // next span 3..4; 5 is high, and 6..7 descend from it.
  const EntropyTrace h = trace_of(s, {2.0, 0.2, 0.1, 1.5, 0.05, 1.0, 0.2, 0.1});
  const auto spans = collect_spans(s, h, cfg);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].component_ids == std::vector<TokenId>{0, 1, 2});
  CHECK(spans[1].component_ids == std::vector<TokenId>{3, 4});
  CHECK(spans[2].component_ids == std::vector<TokenId>{5, 6, 7});
  CHECK(spans == verify_candidates_bruteforce(s, h, cfg));

  cfg.max_span_tokens = 2;
  const auto capped = collect_spans(s, h, cfg);
  // 0..1, then 2 alone cannot start (3 rises), 3..4, 5..6, 7 alone.
  REQUIRE(capped.size() == 3);
  CHECK(capped[0].component_ids == std::vector<TokenId>{0, 1});
  CHECK(capped[1].component_ids == std::vector<TokenId>{3, 4});
  CHECK(capped[2].component_ids == std::vector<TokenId>{5, 6});
}

TEST_CASE("spans sharing a token at distinct occurrences are both reported") {
  // Token c ends the span "abc" and starts the span "cd" elsewhere.
  const Vocabulary v = init_base(U"abcdx");
  const TokenStream s = stream_over(v, {0, 1, 2, 4, 2, 3, 4, 0, 1, 2, 4, 2, 3});
  const EntropyTrace h = trace_of(s, {2.0, 0.2, 0.1, 3.0, 1.0, 0.1, 3.0, 2.0, 0.2, 0.1, 3.0, 1.0, 0.1});
  const auto cands = find_candidates(s, h, v, MergeConfig{});
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].surface == U"cd");
  CHECK(cands[0].frequency == 2);
  CHECK(cands[1].surface == U"abc");
  CHECK(cands[1].frequency == 2);
}

TEST_CASE("find_candidates examples") {
  const Vocabulary v = init_base(U"abcdefgh");
  const TokenStream s = stream_over(v, {0, 1, 2, 3, 4, 5, 6, 7});
  MergeConfig cfg;
  cfg.min_frequency = 1;
  const auto c = find_candidates(s, trace_of(s, {3, 3, 3, 3, 3, 1.9, 0.2, 0.1}), v, cfg);
  REQUIRE(c.size() == 1);
  CHECK(c[0].surface == U"fgh");
  CHECK(c[0].component_ids == std::vector<TokenId>{5, 6, 7});
  CHECK(find_candidates(s, trace_of(s, std::vector<double>(8, 0.5)), v, cfg).empty());

  const TokenStream one = stream_over(v, {3});
  CHECK(find_candidates(one, trace_of(one, {0.1}), v, cfg).empty());
  CHECK(verify_candidates_bruteforce(one, trace_of(one, {0.1}), cfg).empty());
}

TEST_CASE("surface aggregation and filtering") {
  // "abc" is reachable as (ab, c) and as (a, bc).
  Vocabulary v = init_base(U"abc");
  v = add(v, std::vector<MergeCandidate>{{{0, 1}, U"ab", 2}, {{1, 2}, U"bc", 2}}, 2);  // ab=3, bc=4
  const TokenStream s = stream_over(v, {3, 2, 0, 4, 3, 2, 0, 4, 0, 4, 0, 1});
  const EntropyTrace h = trace_of(s, {1, 0.1, 1, 0.1, 1, 0.1, 1, 0.1, 1, 0.1, 1, 0.1});
  MergeConfig cfg;
  const auto c = find_candidates(s, h, v, cfg);
  // (0,1) = "ab" is already a token; "abc" gathers 2 + 3 occurrences and keeps
  // the ids of the more frequent variant (a, bc).
  REQUIRE(c.size() == 1);
  CHECK(c[0].surface == U"abc");
  CHECK(c[0].frequency == 5);
  CHECK(c[0].component_ids == std::vector<TokenId>{0, 4});

  cfg.min_frequency = 6;
  CHECK(find_candidates(s, h, v, cfg).empty());
}

TEST_CASE("input checks") {
  const Vocabulary v = init_base(U"ab");
  const TokenStream s = stream_over(v, {0, 1, 0});
  MergeConfig cfg;
  CHECK_THROWS_AS(find_candidates(s, trace_of(s, {1, 0.1}), v, cfg), Error);
  CHECK_THROWS_AS(find_candidates(s, EntropyTrace{TraceKind::nll, s.vocab_hash, {1, 0.1, 0.05}}, v, cfg), Error);
  CHECK_THROWS_AS(find_candidates(s, EntropyTrace{TraceKind::entropy, 99, {1, 0.1, 0.05}}, v, cfg), Error);
  cfg.max_span_tokens = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = MergeConfig{};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("scan equals the definition on random inputs") {
  testing::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    Vocabulary v = init_base(U"abcdefghij");
    v = testing::grow_random(v, rng, testing::pick(rng, 20));
    std::vector<TokenId> ids(testing::pick(rng, 600));
    for (auto& id : ids) id = static_cast<TokenId>(testing::pick(rng, v.size()));
    const TokenStream s = stream_over(v, ids);
    std::vector<double> h(ids.size());
    for (auto& x : h) x = static_cast<double>(testing::pick(rng, 12)) * 0.05;
    MergeConfig cfg;
    cfg.epsilon = 0.1 + 0.1 * static_cast<double>(testing::pick(rng, 5));
    cfg.max_span_tokens = 2 + testing::pick(rng, 6);
    cfg.min_frequency = 1 + testing::pick(rng, 2);
    const EntropyTrace trace = trace_of(s, h);
    REQUIRE(collect_spans(s, trace, cfg) == verify_candidates_bruteforce(s, trace, cfg));
    REQUIRE(find_candidates(s, trace, v, cfg) ==
            testing::oracle_candidates(ids, h, v, cfg.epsilon, cfg.max_span_tokens, cfg.min_frequency));
  }
}

TEST_CASE("deterministic corpus proposes a piece of the repeated word") {
  // Every context of a periodic text has the same count, so entropies tie at
  // most positions and strict descent only holds where counts differ by one.
  std::u32string text;
  for (int i = 0; i < 300; ++i) text += U"the ";
  const Vocabulary v = init_base(text);
  const TokenStream s = encode(text, PrefixTrie::build(v), v);
  const NgramModel m = fit_ngram(s, v.size(), 4, 0.01);
  const EntropyTrace h = entropy_trace(m, s);
  const auto c = find_candidates(s, h, v, MergeConfig{});
  REQUIRE_FALSE(c.empty());
  // Check the leader against a scan of every window with the predicate.
  const auto brute = verify_candidates_bruteforce(s, h, MergeConfig{});
  bool found = false;
  for (const auto& b : brute) {
    std::u32string surface;
    for (TokenId id : b.component_ids) surface += v[id].surface;
    found = found || surface == c[0].surface;
  }
  CHECK(found);
  CHECK(c[0].frequency >= 2);
  CHECK(std::u32string(U"the the ").find(c[0].surface) != std::u32string::npos);
}

TEST_CASE("candidate JSONL round trip") {
  const std::vector<MergeCandidate> c{{{1, 2}, U"x€", 5}, {{0, 3, 1}, U"a\"b", 2}};
  const std::string text = candidates_to_jsonl(c);
  CHECK(text.substr(0, text.find('\n')) == R"({"surface":"x€","components":[1,2],"frequency":5})");
  CHECK(candidates_from_jsonl(text) == c);
  CHECK_THROWS_AS(candidates_from_jsonl("{\"surface\":1}\n"), Error);
}
