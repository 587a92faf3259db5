#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dyntok/codec.hpp"
#include "dyntok/entropy.hpp"

namespace dyntok {

struct BucketStats {
  double bpc = 0.0;
  double bits = 0.0;
  std::uint64_t token_count = 0;
  std::uint64_t char_count = 0;

  bool operator==(const BucketStats&) const = default;
};

/// Bits per character of an nll trace, overall and broken down by token
/// length (in characters) and by the iteration that introduced each token.
struct BpcReport {
  double global_bpc = 0.0;
  double total_bits = 0.0;
  std::map<std::size_t, BucketStats> per_length;
  std::map<std::uint32_t, BucketStats> per_group;
  std::uint64_t n_chars = 0;
  std::uint64_t n_tokens = 0;

  bool operator==(const BpcReport&) const = default;
};

/// Throws if the trace is an entropy trace or is not aligned to the stream.
BpcReport bpc_report(const TokenStream& stream, const EntropyTrace& nll, const Vocabulary& vocab);

nlohmann::ordered_json to_json(const BpcReport& report);
BpcReport bpc_report_from_json(const nlohmann::json& j);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of bpc on log10(vocab size). Needs two distinct sizes.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points);

/// 100 * (b - a) / b per position, a = curriculum, b = baseline.
std::vector<double> improvement_table(std::span<const double> a, std::span<const double> b);

struct ScalingPoint {
  std::size_t vocab_size = 0;
  double bpc = 0.0;
  std::string series;
};

// CSV emitters for the plot inputs. Columns are fixed; rows follow input order.
std::string scaling_csv(std::span<const ScalingPoint> points);       // vocab_size,bpc,series
std::string per_length_csv(const BpcReport& report);                 // length,bpc,count
/// One report per stage; rows group,stage,bpc for every group present.
std::string group_matrix_csv(std::span<const BpcReport> stages);
void emit_plot_data(std::span<const ScalingPoint> scaling, std::span<const BpcReport> stages, const std::string& dir);

}  // namespace dyntok
