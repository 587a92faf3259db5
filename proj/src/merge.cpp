#include "dyntok/merge.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>

#include "dyntok/error.hpp"
#include "dyntok/kernels.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

void MergeConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error("epsilon must be positive");
  if (growth_cap < 1) throw Error("growth cap must be at least 1");
  if (max_span_tokens < 2) throw Error("max span must be at least 2 tokens");
  if (min_frequency < 1) throw Error("min frequency must be at least 1");
}

bool is_mergeable(std::span<const double> entropies, double epsilon) {
  if (entropies.size() < 2) throw Error("span too short");
  for (std::size_t t = 1; t < entropies.size(); ++t) {
    if (!(entropies[t] < entropies[t - 1]) || !(entropies[t] < epsilon)) return false;
  }
  return true;
}

namespace {

void check_aligned(const TokenStream& stream, const EntropyTrace& trace) {
  if (trace.kind != TraceKind::entropy) throw Error("merge scan needs an entropy trace, got " + std::string(trace_kind_name(trace.kind)));
  if (trace.size() != stream.size()) {
    throw Error("entropy trace misaligned: " + std::to_string(trace.size()) + " values for " +
                std::to_string(stream.size()) + " tokens");
  }
  if (trace.vocab_hash != stream.vocab_hash) throw Error("entropy trace misaligned: vocabulary hash differs from stream");
}

std::vector<MergeCandidate> to_list(const std::map<std::vector<TokenId>, std::uint64_t>& counts) {
  std::vector<MergeCandidate> out;
  out.reserve(counts.size());
  for (const auto& [ids, freq] : counts) out.push_back(MergeCandidate{ids, {}, freq});
  return out;
}

}  // namespace

std::vector<MergeCandidate> collect_spans(const TokenStream& stream, const EntropyTrace& trace, const MergeConfig& cfg) {
  cfg.validate();
  check_aligned(stream, trace);
  const std::size_t n = stream.size();
  std::vector<std::uint8_t> ok(n);
  kernels::descent_mask(trace.values, cfg.epsilon, ok);

  std::map<std::vector<TokenId>, std::uint64_t> counts;
  std::vector<TokenId> key;
  std::size_t i = 0;
  while (i + 1 < n) {
    if (!ok[i + 1]) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j + 1 < n && ok[j + 1] && j + 2 - i <= cfg.max_span_tokens) ++j;
    key.assign(stream.ids.begin() + static_cast<std::ptrdiff_t>(i), stream.ids.begin() + static_cast<std::ptrdiff_t>(j + 1));
    ++counts[key];
    i = j + 1;
  }
  return to_list(counts);
}

std::vector<MergeCandidate> verify_candidates_bruteforce(const TokenStream& stream, const EntropyTrace& trace,
                                                         const MergeConfig& cfg) {
  cfg.validate();
  check_aligned(stream, trace);
  const std::size_t n = stream.size();
  const std::span<const double> h(trace.values);
  std::map<std::vector<TokenId>, std::uint64_t> counts;
  std::size_t i = 0;
  while (i < n) {
    std::size_t best = 0;
    for (std::size_t len = 2; len <= cfg.max_span_tokens && i + len <= n; ++len) {
      if (is_mergeable(h.subspan(i, len), cfg.epsilon)) best = len;
    }
    if (best == 0) {
      ++i;
      continue;
    }
    ++counts[std::vector<TokenId>(stream.ids.begin() + static_cast<std::ptrdiff_t>(i),
                                  stream.ids.begin() + static_cast<std::ptrdiff_t>(i + best))];
    i += best;
  }
  return to_list(counts);
}

std::vector<MergeCandidate> find_candidates(const TokenStream& stream, const EntropyTrace& trace,
                                            const Vocabulary& vocab, const MergeConfig& cfg) {
  if (stream.vocab_hash != vocab.hash()) throw Error("token stream was not encoded with this vocabulary");
  const std::vector<MergeCandidate> spans = collect_spans(stream, trace, cfg);

  struct BySurface {
    std::uint64_t total = 0;
    const MergeCandidate* best = nullptr;
  };
  std::map<std::u32string, BySurface> grouped;
  for (const MergeCandidate& span : spans) {
    std::u32string surface;
    for (TokenId id : span.component_ids) surface += vocab.at(id).surface;
    BySurface& g = grouped[surface];
    g.total += span.frequency;
    // spans arrive sorted by ids, so ties keep the smaller id sequence
    if (!g.best || span.frequency > g.best->frequency) g.best = &span;
  }

  std::vector<MergeCandidate> out;
  for (auto& [surface, g] : grouped) {
    if (g.total < cfg.min_frequency || vocab.find(surface)) continue;
    out.push_back(MergeCandidate{g.best->component_ids, surface, g.total});
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::string candidates_to_jsonl(std::span<const MergeCandidate> candidates) {
  std::string out;
  for (const MergeCandidate& c : candidates) {
    nlohmann::ordered_json j;
    j["surface"] = utf8_encode(c.surface);
    j["components"] = c.component_ids;
    j["frequency"] = c.frequency;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<MergeCandidate> candidates_from_jsonl(std::string_view text) {
  std::vector<MergeCandidate> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MergeCandidate c;
      c.surface = utf8_decode(j.at("surface").get<std::string>());
      c.component_ids = j.at("components").get<std::vector<TokenId>>();
      c.frequency = j.at("frequency").get<std::uint64_t>();
      out.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw Error("candidates line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dyntok
