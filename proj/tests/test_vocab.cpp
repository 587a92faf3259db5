#include <doctest.h>

#include <filesystem>

#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"
#include "dyntok/vocab.hpp"
#include "support.hpp"

using namespace dyntok;

namespace {

MergeCandidate cand(const Vocabulary& v, std::vector<TokenId> ids, std::uint64_t freq) {
  MergeCandidate c{std::move(ids), {}, freq};
  for (TokenId id : c.component_ids) c.surface += v[id].surface;
  return c;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("init_base collects distinct characters in code-point order") {
  const Vocabulary v = init_base(U"banana é!");
  REQUIRE(v.size() == 6);
  CHECK(v.base_size() == 6);
  CHECK(v[0].surface == U" ");
  CHECK(v[1].surface == U"!");
  CHECK(v[2].surface == U"a");
  CHECK(v[5].surface == U"é");
  CHECK(v.stage() == 0);
  CHECK(v.find(U"n") == TokenId{4});
  CHECK_FALSE(v.find(U"z"));
  CHECK_THROWS_WITH_AS(init_base(U""), "empty corpus", Error);
}

TEST_CASE("add ranks, deduplicates, caps and tags") {
  const Vocabulary base = init_base(U"abc");  // a=0 b=1 c=2
  std::vector<MergeCandidate> cands{cand(base, {0, 1}, 5), cand(base, {1, 2}, 9), cand(base, {0, 1}, 7),
                                    cand(base, {2, 0}, 5), cand(base, {0, 0, 0}, 5)};
  const Vocabulary v = add(base, cands, 3);
  REQUIRE(v.size() == 6);
  CHECK(v[3].surface == U"bc");  // frequency 9
  CHECK(v[4].surface == U"ab");  // kept once, best instance frequency 7
  CHECK(v[5].surface == U"ca");  // 5, shorter than aaa
  CHECK(v[5].iteration == 1);
  CHECK(v.stage() == 1);

  const Vocabulary w = add(v, std::vector<MergeCandidate>{cand(v, {4, 2}, 3)}, 10);
  CHECK(w[6].surface == U"abc");
  CHECK(w[6].iteration == 2);
  CHECK(w.max_surface_length() == 3);
}

TEST_CASE("add rejects malformed candidates") {
  const Vocabulary base = init_base(U"ab");
  MergeCandidate bad_id{{0, 7}, U"ab", 1};
  CHECK(error_of([&] { add(base, std::vector{bad_id}, 5); }).find("unknown token id 7") != std::string::npos);
  MergeCandidate bad_surface{{0, 1}, U"ba", 1};
  CHECK(error_of([&] { add(base, std::vector{bad_surface}, 5); }).find("does not match") != std::string::npos);
  const Vocabulary v = add(base, std::vector{cand(base, {0, 1}, 2)}, 5);
  CHECK(error_of([&] { add(v, std::vector{cand(v, {0, 1}, 2)}, 5); }).find("already in vocabulary") != std::string::npos);
  CHECK_THROWS_AS(add(base, std::vector{cand(base, {0, 1}, 2)}, 0), Error);
}

TEST_CASE("reduce is a prefix slice") {
  testing::Rng rng(5);
  const Vocabulary base = init_base(U"abcdef");
  const Vocabulary grown = testing::grow_random(testing::grow_random(base, rng, 20), rng, 20);
  const Vocabulary r = reduce(grown, 15);
  REQUIRE(r.size() == 15);
  for (TokenId i = 0; i < 15; ++i) CHECK(r[i] == grown[i]);
  CHECK(reduce(grown, grown.size()).same_tokens(grown));
  CHECK_THROWS_WITH_AS(reduce(grown, 3), "cannot remove base characters", Error);
  CHECK_THROWS_AS(reduce(grown, grown.size() + 1), Error);
}

TEST_CASE("from_tokens enforces invariants") {
  const Vocabulary v = add(init_base(U"ab"), std::vector<MergeCandidate>{{{0, 1}, U"ab", 2}}, 1);
  auto tokens = std::vector<Token>(v.tokens().begin(), v.tokens().end());

  auto broken = tokens;
  broken[2].components = {1, 0};
  CHECK(error_of([&] { Vocabulary::from_tokens(broken, 1); }).find("surface differs") != std::string::npos);
  broken = tokens;
  broken[2].components = {0, 2};
  CHECK(error_of([&] { Vocabulary::from_tokens(broken, 1); }).find("not smaller than its own id") != std::string::npos);
  broken = tokens;
  std::swap(broken[0].surface, broken[1].surface);
  CHECK(error_of([&] { Vocabulary::from_tokens(broken, 1); }).find("ascending") != std::string::npos);
  broken = tokens;
  broken.push_back(Token{3, U"ab", {0, 1}, 1});
  CHECK(error_of([&] { Vocabulary::from_tokens(broken, 1); }).find("duplicate surface") != std::string::npos);
  broken = tokens;
  broken.push_back(Token{3, U"aab", {0, 2}, 0});
  CHECK(error_of([&] { Vocabulary::from_tokens(broken, 1); }).find("iteration tags decrease") != std::string::npos);
  broken = tokens;
  broken[1].id = 5;
  CHECK(error_of([&] { Vocabulary::from_tokens(broken, 1); }).find("id field") != std::string::npos);
  CHECK(check_invariants(tokens) == std::nullopt);
}

TEST_CASE("JSONL round trip and format") {
  const Vocabulary base = init_base(U"a\"b\n€");
  const Vocabulary v = add(base, std::vector<MergeCandidate>{{{2, 4}, U"a€", 3}}, 1);
  const std::string text = to_jsonl(v);
  CHECK(text.substr(0, text.find('\n')) == R"({"id":0,"surface":"\n","components":[],"iteration":0})");
  CHECK(text.find(R"({"id":5,"surface":"a€","components":[2,4],"iteration":1})") != std::string::npos);
  const Vocabulary back = from_jsonl(text);
  CHECK(back == v);
  CHECK(back.hash() == v.hash());
  CHECK(to_jsonl(back) == text);

  const auto path = (std::filesystem::temp_directory_path() / "dyntok_vocab_test.jsonl").string();
  save(v, path);
  CHECK(load(path) == v);
  CHECK(read_file_bytes(path) == text);
  std::filesystem::remove(path);
}

TEST_CASE("JSONL errors name the line") {
  CHECK(error_of([] { from_jsonl("{\"id\":0,\"surface\":\"a\",\"components\":[],\"iteration\":0}\n{\"id\":3}\n"); })
            .find("line 2") != std::string::npos);
  CHECK(error_of([] { from_jsonl("not json\n"); }).find("line 1") != std::string::npos);
  CHECK(error_of([] { from_jsonl("{\"id\":0,\"surface\":\"ab\",\"components\":[],\"iteration\":0}\n"); })
            .find("single character") != std::string::npos);
  CHECK_THROWS_AS(from_jsonl(""), Error);
}

TEST_CASE("hash ignores stage but not tokens") {
  const Vocabulary v = init_base(U"xyz");
  const Vocabulary same = Vocabulary::from_tokens({v.tokens().begin(), v.tokens().end()}, 4);
  CHECK(same.hash() == v.hash());
  CHECK_FALSE(same == v);
  CHECK(same.same_tokens(v));
  CHECK(init_base(U"xy").hash() != v.hash());
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
