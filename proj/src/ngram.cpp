#include <algorithm>
#include <cmath>
#include <numeric>

#include "binio.hpp"
#include "dyntok/entropy.hpp"
#include "dyntok/error.hpp"
#include "dyntok/kernels.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

const char* trace_kind_name(TraceKind kind) { return kind == TraceKind::nll ? "nll" : "entropy"; }

double EntropyTrace::total_bits() const { return kernels::sum(values); }

double smoothed_entropy_bits(std::span<const std::uint64_t> counts, std::size_t vocab_size, double alpha) {
  if (vocab_size == 0) throw Error("vocabulary size must be positive");
  if (counts.size() > vocab_size) throw Error("more observed outcomes than the vocabulary size");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  const double max_bits = std::log2(static_cast<double>(vocab_size));
  if (total == 0.0) return max_bits;
  std::vector<double> weights(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) weights[i] = static_cast<double>(counts[i]) + alpha;
  const double unseen = static_cast<double>(vocab_size - counts.size());
  const double z = total + alpha * static_cast<double>(vocab_size);
  double s = kernels::xlog2x_sum(weights);
  if (alpha > 0.0 && unseen > 0.0) s += unseen * alpha * std::log2(alpha);
  const double h = std::log2(z) - s / z;
  return std::clamp(h, 0.0, max_bits);
}

std::size_t NgramModel::ContextKeyHash::operator()(const ContextKey& k) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ k.len;
  for (std::uint8_t i = 0; i < k.len; ++i) {
    h ^= k.ids[i];
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
  }
  return static_cast<std::size_t>(h);
}

namespace {

NgramModel::ContextKey make_key(std::span<const TokenId> context) {
  NgramModel::ContextKey key;
  key.len = static_cast<std::uint8_t>(context.size());
  std::copy(context.begin(), context.end(), key.ids.begin());
  return key;
}

void check_params(unsigned order, double alpha, std::size_t vocab_size) {
  if (order < 1 || order > kMaxNgramOrder)
    throw Error("n-gram order must be in [1, " + std::to_string(kMaxNgramOrder) + "]");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error("alpha must be a finite non-negative number");
  if (vocab_size == 0) throw Error("vocabulary size must be positive");
}

}  // namespace

NgramModel::NgramModel(unsigned order, double alpha, std::size_t vocab_size)
    : order_(order), alpha_(alpha), vocab_size_(vocab_size) {
  check_params(order, alpha, vocab_size);
}

const NgramModel::Entry* NgramModel::lookup(std::span<const TokenId> context) const {
  if (context.size() >= order_) return nullptr;
  auto it = entries_.find(make_key(context));
  return it == entries_.end() ? nullptr : &it->second;
}

void NgramModel::refresh(Entry& e) const {
  e.total = std::accumulate(e.counts.begin(), e.counts.end(), std::uint64_t{0});
  e.entropy = smoothed_entropy_bits(e.counts, vocab_size_, alpha_);
}

NgramModel::Table NgramModel::table(std::span<const TokenId> context) const {
  const Entry* e = lookup(context);
  if (!e) return {};
  return Table{e->next, e->counts, e->total};
}

std::uint64_t NgramModel::count(std::span<const TokenId> context, TokenId next) const {
  const Entry* e = lookup(context);
  if (!e) return 0;
  auto it = std::lower_bound(e->next.begin(), e->next.end(), next);
  if (it == e->next.end() || *it != next) return 0;
  return e->counts[static_cast<std::size_t>(it - e->next.begin())];
}

double NgramModel::entropy(std::span<const TokenId> context) const {
  const Entry* e = lookup(context);
  return e ? e->entropy : std::log2(static_cast<double>(vocab_size_));
}

double NgramModel::probability(std::span<const TokenId> context, TokenId next) const {
  const Entry* e = lookup(context);
  const double v = static_cast<double>(vocab_size_);
  if (!e || e->total == 0) return 1.0 / v;
  const double c = static_cast<double>(count(context, next));
  return (c + alpha_) / (static_cast<double>(e->total) + alpha_ * v);
}

void NgramModel::add_counts(std::span<const TokenId> context, std::span<const TokenId> next,
                            std::span<const std::uint64_t> counts) {
  if (context.size() >= order_) throw Error("context longer than order - 1");
  if (next.size() != counts.size()) throw Error("next ids and counts differ in length");
  Entry& e = entries_[make_key(context)];
  std::vector<std::pair<TokenId, std::uint64_t>> merged;
  merged.reserve(e.next.size() + next.size());
  for (std::size_t i = 0; i < e.next.size(); ++i) merged.emplace_back(e.next[i], e.counts[i]);
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (next[i] >= vocab_size_) throw Error("token id " + std::to_string(next[i]) + " outside the model vocabulary");
    merged.emplace_back(next[i], counts[i]);
  }
  std::sort(merged.begin(), merged.end());
  e.next.clear();
  e.counts.clear();
  for (const auto& [id, c] : merged) {
    if (c == 0) continue;
    if (!e.next.empty() && e.next.back() == id) {
      e.counts.back() += c;
    } else {
      e.next.push_back(id);
      e.counts.push_back(c);
    }
  }
  refresh(e);
}

NgramModel NgramModel::merged(const NgramModel& a, const NgramModel& b) {
  if (a.order_ != b.order_ || a.alpha_ != b.alpha_ || a.vocab_size_ != b.vocab_size_)
    throw Error("cannot merge n-gram models with different order, alpha or vocabulary size");
  NgramModel out = a;
  b.for_each_context([&](std::span<const TokenId> ctx, const Table& t) { out.add_counts(ctx, t.next, t.counts); });
  return out;
}

std::vector<const std::pair<const NgramModel::ContextKey, NgramModel::Entry>*> NgramModel::sorted_entries() const {
  std::vector<const std::pair<const ContextKey, Entry>*> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(&kv);
  std::sort(out.begin(), out.end(), [](const auto* x, const auto* y) {
    if (x->first.len != y->first.len) return x->first.len < y->first.len;
    return std::lexicographical_compare(x->first.ids.begin(), x->first.ids.begin() + x->first.len,
                                        y->first.ids.begin(), y->first.ids.begin() + y->first.len);
  });
  return out;
}

bool NgramModel::operator==(const NgramModel& other) const {
  if (order_ != other.order_ || alpha_ != other.alpha_ || vocab_size_ != other.vocab_size_) return false;
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [key, e] : entries_) {
    auto it = other.entries_.find(key);
    if (it == other.entries_.end() || it->second.next != e.next || it->second.counts != e.counts) return false;
  }
  return true;
}

NgramModel fit_ngram(const TokenStream& stream, std::size_t vocab_size, unsigned order, double alpha) {
  if (stream.empty()) throw Error("cannot fit an n-gram model on an empty stream");
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  NgramModel model(order, alpha, vocab_size);
  const auto& ids = stream.ids;
  const TokenId max_id = *std::max_element(ids.begin(), ids.end());
  if (max_id >= vocab_size) throw Error("stream contains token id " + std::to_string(max_id) + " outside the model vocabulary");

  const std::size_t n = ids.size();
  std::vector<std::uint32_t> positions;
  for (unsigned len = 0; len < order && len < n; ++len) {
    // Sort positions by the (len+1)-gram ending there; equal contexts become
    // runs, and inside a run equal next ids are adjacent.
    positions.resize(n - len);
    std::iota(positions.begin(), positions.end(), static_cast<std::uint32_t>(len));
    const TokenId* data = ids.data();
    std::sort(positions.begin(), positions.end(), [&](std::uint32_t a, std::uint32_t b) {
      return std::lexicographical_compare(data + a - len, data + a + 1, data + b - len, data + b + 1);
    });
    std::size_t i = 0;
    while (i < positions.size()) {
      const TokenId* ctx = data + positions[i] - len;
      std::size_t j = i;
      auto& entry = model.entries_[make_key(std::span<const TokenId>(ctx, len))];
      while (j < positions.size() && std::equal(ctx, ctx + len, data + positions[j] - len)) {
        const TokenId next = data[positions[j]];
        if (!entry.next.empty() && entry.next.back() == next) {
          ++entry.counts.back();
        } else {
          entry.next.push_back(next);
          entry.counts.push_back(1);
        }
        ++j;
      }
      model.refresh(entry);
      i = j;
    }
  }
  return model;
}

namespace {

void check_model_fits(const NgramModel& model, const TokenStream& stream) {
  for (TokenId id : stream.ids) {
    if (id >= model.vocab_size()) {
      throw Error("stream token id " + std::to_string(id) + " exceeds model vocabulary size " +
                  std::to_string(model.vocab_size()));
    }
  }
}

std::span<const TokenId> context_at(const TokenStream& stream, std::size_t t, unsigned order) {
  const std::size_t len = std::min<std::size_t>(t, order - 1);
  return std::span<const TokenId>(stream.ids.data() + t - len, len);
}

}  // namespace

EntropyTrace entropy_trace(const NgramModel& model, const TokenStream& stream) {
  check_model_fits(model, stream);
  EntropyTrace trace{TraceKind::entropy, stream.vocab_hash, std::vector<double>(stream.size())};
  for (std::size_t t = 0; t < stream.size(); ++t) trace.values[t] = model.entropy(context_at(stream, t, model.order()));
  return trace;
}

EntropyTrace nll_trace(const NgramModel& model, const TokenStream& stream) {
  check_model_fits(model, stream);
  std::vector<double> probs(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    probs[t] = model.probability(context_at(stream, t, model.order()), stream.ids[t]);
  }
  EntropyTrace trace{TraceKind::nll, stream.vocab_hash, std::vector<double>(stream.size())};
  kernels::neg_log2(probs, trace.values);
  return trace;
}

namespace {
constexpr std::string_view kModelMagic = "DTKNGRM1";
}

std::string NgramModel::to_bytes() const {
  std::string out(kModelMagic);
  binio::put<std::uint32_t>(out, order_);
  binio::put<double>(out, alpha_);
  binio::put<std::uint64_t>(out, vocab_size_);
  binio::put<std::uint64_t>(out, entries_.size());
  for_each_context([&](std::span<const TokenId> ctx, const Table& t) {
    binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(ctx.size()));
    for (TokenId id : ctx) binio::put<std::uint32_t>(out, id);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.next.size()));
    for (std::size_t i = 0; i < t.next.size(); ++i) {
      binio::put<std::uint32_t>(out, t.next[i]);
      binio::put<std::uint64_t>(out, t.counts[i]);
    }
  });
  return out;
}

NgramModel NgramModel::from_bytes(std::string_view bytes) {
  binio::Reader in(bytes, "n-gram model");
  in.expect_magic(kModelMagic);
  const auto order = in.get<std::uint32_t>();
  const auto alpha = in.get<double>();
  const auto vocab_size = in.get<std::uint64_t>();
  NgramModel model(order, alpha, vocab_size);
  const auto contexts = in.get<std::uint64_t>();
  std::vector<TokenId> ctx, next;
  std::vector<std::uint64_t> counts;
  for (std::uint64_t c = 0; c < contexts; ++c) {
    const auto len = in.get<std::uint8_t>();
    ctx.resize(len);
    for (auto& id : ctx) id = in.get<std::uint32_t>();
    const auto k = in.get<std::uint32_t>();
    if (k > in.remaining() / 12) throw Error("n-gram model: truncated");
    next.resize(k);
    counts.resize(k);
    for (std::uint32_t i = 0; i < k; ++i) {
      next[i] = in.get<std::uint32_t>();
      counts[i] = in.get<std::uint64_t>();
    }
    model.add_counts(ctx, next, counts);
  }
  if (in.remaining() != 0) throw Error("n-gram model: trailing bytes");
  return model;
}

void save_model(const NgramModel& model, const std::string& path) { write_file_atomic(path, model.to_bytes()); }

NgramModel load_model(const std::string& path) {
  try {
    return NgramModel::from_bytes(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace dyntok
