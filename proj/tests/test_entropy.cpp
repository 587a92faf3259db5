#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "dyntok/entropy.hpp"
#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"
#include "support.hpp"

using namespace dyntok;

namespace {

// Smoothed distribution of a context counted straight from the stream.
std::vector<double> oracle_distribution(const std::vector<TokenId>& ids, std::size_t t, unsigned order, std::size_t V,
                                        double alpha) {
  const std::size_t len = std::min<std::size_t>(t, order - 1);
  std::vector<double> counts(V, 0.0);
  double total = 0.0;
  for (std::size_t u = len; u < ids.size(); ++u) {
    if (std::equal(ids.begin() + static_cast<long>(t - len), ids.begin() + static_cast<long>(t),
                   ids.begin() + static_cast<long>(u - len))) {
      counts[ids[u]] += 1.0;
      total += 1.0;
    }
  }
  std::vector<double> p(V);
  for (std::size_t i = 0; i < V; ++i) p[i] = (counts[i] + alpha) / (total + alpha * static_cast<double>(V));
  return p;
}

TokenStream stream_of(std::vector<TokenId> ids, std::uint64_t hash = 42) {
  TokenStream s;
  s.ids = std::move(ids);
  for (std::size_t i = 0; i < s.ids.size(); ++i) s.offsets.push_back(i);
  s.text_length = s.ids.size();
  s.vocab_hash = hash;
  return s;
}

}  // namespace

TEST_CASE("smoothed entropy known values") {
  CHECK(smoothed_entropy_bits({}, 92, 0.01) == doctest::Approx(std::log2(92.0)).epsilon(1e-12));
  const std::vector<std::uint64_t> three_one{3, 1};
  CHECK(smoothed_entropy_bits(three_one, 2, 0.0) == doctest::Approx(0.8112781244591328).epsilon(1e-12));
  const std::vector<std::uint64_t> one{7};
  CHECK(smoothed_entropy_bits(one, 1, 0.5) == 0.0);
  CHECK(smoothed_entropy_bits(one, 5, 0.0) == 0.0);
  CHECK_THROWS_AS(smoothed_entropy_bits(three_one, 1, 0.1), Error);
}

TEST_CASE("smoothed entropy against the definition") {
  testing::Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t V = 1 + testing::pick(rng, 60);
    const std::size_t k = testing::pick(rng, V + 1);
    std::vector<std::uint64_t> counts(k);
    for (auto& c : counts) c = 1 + testing::pick(rng, 1000);
    const double alpha = trial % 5 == 0 ? 0.0 : std::ldexp(1.0, -static_cast<int>(testing::pick(rng, 12)));
    double total = 0;
    for (auto c : counts) total += static_cast<double>(c);
    std::vector<double> p;
    const double z = total + alpha * static_cast<double>(V);
    if (z == 0.0) continue;
    for (auto c : counts) p.push_back((static_cast<double>(c) + alpha) / z);
    for (std::size_t i = k; i < V; ++i) p.push_back(alpha / z);
    CHECK(smoothed_entropy_bits(counts, V, alpha) == doctest::Approx(testing::entropy_of(p)).epsilon(1e-10));
  }
}

TEST_CASE("n-gram counts, probabilities and traces match direct counting") {
  testing::Rng rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t V = 2 + testing::pick(rng, 6);
    std::vector<TokenId> ids(5 + testing::pick(rng, 200));
    for (auto& id : ids) id = static_cast<TokenId>(testing::pick(rng, V));
    const unsigned order = 1 + static_cast<unsigned>(testing::pick(rng, 4));
    const double alpha = 0.01 * static_cast<double>(1 + testing::pick(rng, 100));
    const TokenStream s = stream_of(ids);
    const NgramModel m = fit_ngram(s, V, order, alpha);
    const EntropyTrace h = entropy_trace(m, s);
    const EntropyTrace nll = nll_trace(m, s);
    CHECK(h.kind == TraceKind::entropy);
    CHECK(nll.kind == TraceKind::nll);
    CHECK(h.vocab_hash == 42);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const auto p = oracle_distribution(ids, t, order, V, alpha);
      REQUIRE(h.values[t] == doctest::Approx(testing::entropy_of(p)).epsilon(1e-10));
      REQUIRE(nll.values[t] == doctest::Approx(-std::log2(p[ids[t]])).epsilon(1e-10));
    }
  }
}

TEST_CASE("unseen contexts are uniform") {
  const NgramModel m = fit_ngram(stream_of({0, 1, 0, 1}), 5, 3, 0.1);
  const std::vector<TokenId> ctx{4, 4};
  CHECK(m.entropy(ctx) == doctest::Approx(std::log2(5.0)));
  CHECK(m.probability(ctx, 2) == doctest::Approx(0.2));
  CHECK(m.table(ctx).total == 0);
  const std::vector<TokenId> seen{0};
  CHECK(m.count(seen, 1) == 2);
  double total = 0;
  for (TokenId x = 0; x < 5; ++x) total += m.probability(seen, x);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("model serialization and merging") {
  testing::Rng rng(23);
  std::vector<TokenId> a(300), b(200);
  for (auto& id : a) id = static_cast<TokenId>(testing::pick(rng, 9));
  for (auto& id : b) id = static_cast<TokenId>(testing::pick(rng, 9));
  const NgramModel ma = fit_ngram(stream_of(a), 9, 3, 0.05);
  const NgramModel mb = fit_ngram(stream_of(b), 9, 3, 0.05);
  CHECK(NgramModel::from_bytes(ma.to_bytes()) == ma);
  CHECK(NgramModel::from_bytes(ma.to_bytes()).to_bytes() == ma.to_bytes());
  CHECK_THROWS_AS(NgramModel::from_bytes(ma.to_bytes().substr(0, 20)), Error);

  const NgramModel merged = NgramModel::merged(ma, mb);
  const std::vector<TokenId> ctx{a[10], a[11]};
  CHECK(merged.table(ctx).total == ma.table(ctx).total + mb.table(ctx).total);
  CHECK_THROWS_AS(NgramModel::merged(ma, fit_ngram(stream_of(b), 9, 2, 0.05)), Error);

  const auto path = (std::filesystem::temp_directory_path() / "dyntok_model_test.bin").string();
  save_model(ma, path);
  CHECK(load_model(path) == ma);
  std::filesystem::remove(path);
}

TEST_CASE("fit_ngram argument checks") {
  CHECK_THROWS_AS(fit_ngram(stream_of({}), 4, 2, 0.1), Error);
  CHECK_THROWS_AS(fit_ngram(stream_of({0, 1}), 4, 2, 0.0), Error);
  CHECK_THROWS_AS(fit_ngram(stream_of({0, 7}), 4, 2, 0.1), Error);
  CHECK_THROWS_AS(fit_ngram(stream_of({0, 1}), 4, 0, 0.1), Error);
  CHECK_THROWS_AS(fit_ngram(stream_of({0, 1}), 4, kMaxNgramOrder + 1, 0.1), Error);
}

TEST_CASE("entropy dump formats") {
  EntropyTrace t{TraceKind::entropy, 0x1234abcdULL, {0.1, 2.0, 1.0 / 3.0, 0.0}};
  const std::string bin = entropy_dump_to_bytes(t);
  const std::string header = bin.substr(0, bin.find('\n'));
  CHECK(header ==
        R"({"vocab_hash":"000000001234abcd","stream_length":4,"unit":"bits","kind":"entropy","encoding":"f32le"})");
  CHECK(bin.size() == header.size() + 1 + 16);
  const EntropyTrace back = entropy_dump_from_bytes(bin);
  REQUIRE(back.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.values[i] == static_cast<double>(static_cast<float>(t.values[i])));

  const EntropyTrace exact = entropy_dump_from_bytes(entropy_dump_to_bytes(t, DumpEncoding::text));
  CHECK(exact == t);

  // A header without an encoding field is read by payload size.
  std::string legacy = R"({"vocab_hash":"000000001234abcd","stream_length":4,"unit":"bits","kind":"entropy"})";
  legacy += "\n" + bin.substr(header.size() + 1);
  CHECK(entropy_dump_from_bytes(legacy).values == back.values);

  CHECK_THROWS_AS(entropy_dump_from_bytes(bin.substr(0, bin.size() - 4)), Error);
  CHECK_THROWS_AS(entropy_dump_from_bytes("no header"), Error);
}

TEST_CASE("entropy dump checked against its stream") {
  const TokenStream s = stream_of({0, 1, 2}, 0x77);
  const auto path = (std::filesystem::temp_directory_path() / "dyntok_dump_test.bin").string();
  save_entropy_dump(EntropyTrace{TraceKind::nll, 0x77, {1, 2, 3}}, path);
  CHECK(load_entropy_dump(path, s).kind == TraceKind::nll);
  save_entropy_dump(EntropyTrace{TraceKind::nll, 0x78, {1, 2, 3}}, path);
  CHECK_THROWS_WITH_AS(load_entropy_dump(path, s), doctest::Contains("vocab hash mismatch"), Error);
  save_entropy_dump(EntropyTrace{TraceKind::nll, 0x77, {1, 2}}, path);
  CHECK_THROWS_WITH_AS(load_entropy_dump(path, s), doctest::Contains("length mismatch"), Error);
  std::filesystem::remove(path);
}
