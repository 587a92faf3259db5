#include "dyntok/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "dyntok/error.hpp"
#include "dyntok/kernels.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

BpcReport bpc_report(const TokenStream& stream, const EntropyTrace& nll, const Vocabulary& vocab) {
  if (nll.kind != TraceKind::nll) throw Error("BPC needs an nll trace, got an entropy trace");
  if (nll.size() != stream.size()) throw Error("nll trace is not aligned to the token stream");
  if (nll.vocab_hash != stream.vocab_hash) throw Error("nll trace and token stream use different vocabularies");
  if (stream.vocab_hash != vocab.hash()) throw Error("token stream was not encoded with this vocabulary");

  BpcReport r;
  r.n_tokens = stream.size();
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const Token& tok = vocab.at(stream.ids[t]);
    const std::uint64_t chars = tok.surface.size();
    const double bits = nll.values[t];
    r.n_chars += chars;
    for (BucketStats* b : {&r.per_length[tok.surface.size()], &r.per_group[tok.iteration]}) {
      b->bits += bits;
      b->token_count += 1;
      b->char_count += chars;
    }
  }
  if (r.n_chars != stream.text_length) throw Error("token surfaces do not cover the stream's text length");
  r.total_bits = nll.total_bits();
  r.global_bpc = r.n_chars > 0 ? r.total_bits / static_cast<double>(r.n_chars) : 0.0;
  for (auto& [len, b] : r.per_length) b.bpc = b.bits / static_cast<double>(b.char_count);
  for (auto& [group, b] : r.per_group) b.bpc = b.bits / static_cast<double>(b.char_count);
  return r;
}

namespace {

nlohmann::ordered_json bucket_json(const BucketStats& b) {
  nlohmann::ordered_json j;
  j["bpc"] = b.bpc;
  j["bits"] = b.bits;
  j["token_count"] = b.token_count;
  j["char_count"] = b.char_count;
  return j;
}

BucketStats bucket_from_json(const nlohmann::json& j) {
  return BucketStats{j.at("bpc").get<double>(), j.at("bits").get<double>(), j.at("token_count").get<std::uint64_t>(),
                     j.at("char_count").get<std::uint64_t>()};
}

}  // namespace

nlohmann::ordered_json to_json(const BpcReport& report) {
  nlohmann::ordered_json j;
  j["global_bpc"] = report.global_bpc;
  j["total_bits"] = report.total_bits;
  nlohmann::ordered_json lengths = nlohmann::ordered_json::object();
  for (const auto& [len, b] : report.per_length) lengths[std::to_string(len)] = bucket_json(b);
  j["per_length"] = std::move(lengths);
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const auto& [g, b] : report.per_group) groups[std::to_string(g)] = bucket_json(b);
  j["per_group"] = std::move(groups);
  j["n_chars"] = report.n_chars;
  j["n_tokens"] = report.n_tokens;
  return j;
}

BpcReport bpc_report_from_json(const nlohmann::json& j) {
  try {
    BpcReport r;
    r.global_bpc = j.at("global_bpc").get<double>();
    r.total_bits = j.at("total_bits").get<double>();
    for (const auto& [k, v] : j.at("per_length").items()) r.per_length[std::stoul(k)] = bucket_from_json(v);
    for (const auto& [k, v] : j.at("per_group").items())
      r.per_group[static_cast<std::uint32_t>(std::stoul(k))] = bucket_from_json(v);
    r.n_chars = j.at("n_chars").get<std::uint64_t>();
    r.n_tokens = j.at("n_tokens").get<std::uint64_t>();
    return r;
  } catch (const std::exception& e) {
    throw Error(std::string("bad BPC report: ") + e.what());
  }
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points) {
  std::set<double> sizes;
  for (const auto& [size, bpc] : points) {
    if (!(size > 0.0)) throw Error("vocabulary sizes must be positive");
    sizes.insert(size);
  }
  if (sizes.size() < 2) throw Error("slope fit needs at least two distinct vocabulary sizes");

  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [size, bpc] : points) {
    mx += std::log10(size);
    my += bpc;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [size, bpc] : points) {
    const double dx = std::log10(size) - mx;
    const double dy = bpc - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& [size, bpc] : points) {
    const double e = bpc - (fit.intercept + fit.slope * std::log10(size));
    ss_res += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

std::vector<double> improvement_table(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("improvement table needs equal-length series");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] == 0.0) throw Error("baseline BPC is zero at position " + std::to_string(i));
    out[i] = 100.0 * (b[i] - a[i]) / b[i];
  }
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string scaling_csv(std::span<const ScalingPoint> points) {
  std::string out = "vocab_size,bpc,series\n";
  for (const auto& p : points) out += std::to_string(p.vocab_size) + "," + fmt_double(p.bpc) + "," + p.series + "\n";
  return out;
}

std::string per_length_csv(const BpcReport& report) {
  std::string out = "length,bpc,count\n";
  for (const auto& [len, b] : report.per_length)
    out += std::to_string(len) + "," + fmt_double(b.bpc) + "," + std::to_string(b.token_count) + "\n";
  return out;
}

std::string group_matrix_csv(std::span<const BpcReport> stages) {
  std::string out = "group,stage,bpc\n";
  std::set<std::uint32_t> groups;
  for (const auto& r : stages)
    for (const auto& [g, b] : r.per_group) groups.insert(g);
  for (std::uint32_t g : groups) {
    for (std::size_t s = 0; s < stages.size(); ++s) {
      auto it = stages[s].per_group.find(g);
      if (it == stages[s].per_group.end()) continue;
      out += std::to_string(g) + "," + std::to_string(s) + "," + fmt_double(it->second.bpc) + "\n";
    }
  }
  return out;
}

void emit_plot_data(std::span<const ScalingPoint> scaling, std::span<const BpcReport> stages, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());
  write_file_atomic(dir + "/scaling.csv", scaling_csv(scaling));
  if (!stages.empty()) write_file_atomic(dir + "/per_length.csv", per_length_csv(stages.back()));
  write_file_atomic(dir + "/groups.csv", group_matrix_csv(stages));
}

}  // namespace dyntok
