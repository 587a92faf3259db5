#include <charconv>

#include "dyntok/curriculum.hpp"
#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(const std::string& key, std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw UsageError("config key " + key + ": invalid number \"" + std::string(v) + "\"");
  return out;
}

bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key " + key + ": expected true or false");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<Phase> parse_phases(std::string_view text) {
  std::vector<Phase> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) {
      if (end == text.size()) break;
      throw UsageError("empty phase in phase list");
    }
    const std::size_t colon = item.find(':');
    const std::string_view kind = colon == std::string_view::npos ? item : item.substr(0, colon);
    Phase p;
    if (kind == "expand") {
      p.kind = Phase::Kind::expand;
    } else if (kind == "reduce") {
      p.kind = Phase::Kind::reduce;
    } else {
      throw UsageError("unknown phase \"" + std::string(item) + "\" (expected expand[:cap] or reduce:target)");
    }
    if (colon != std::string_view::npos) p.amount = parse_number<std::size_t>("phases", item.substr(colon + 1));
    if (p.kind == Phase::Kind::reduce && p.amount == 0) throw UsageError("reduce phase needs a target size");
    out.push_back(p);
  }
  return out;
}

std::string phases_to_text(const std::vector<Phase>& phases) {
  std::string out;
  for (const Phase& p : phases) {
    if (!out.empty()) out += ",";
    out += p.kind == Phase::Kind::expand ? "expand" : "reduce";
    if (p.amount != 0) out += ":" + std::to_string(p.amount);
  }
  return out;
}

void set_config_value(CurriculumConfig& cfg, const std::string& key, const std::string& value) {
  const std::string_view v = value;
  if (key == "phases") {
    cfg.phases = parse_phases(v);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_number<double>(key, v);
  } else if (key == "growth_cap") {
    cfg.growth_cap = parse_number<std::size_t>(key, v);
  } else if (key == "vocab_cap") {
    cfg.vocab_cap = parse_number<std::size_t>(key, v);
  } else if (key == "iterations") {
    cfg.iterations = parse_number<std::size_t>(key, v);
  } else if (key == "entropy_source") {
    if (v == "builtin-ngram") {
      cfg.entropy_source = EntropySourceKind::builtin_ngram;
    } else if (v == "external-dump") {
      cfg.entropy_source = EntropySourceKind::external_dump;
    } else {
      throw UsageError("config key entropy_source: expected builtin-ngram or external-dump");
    }
  } else if (key == "train_corpus") {
    cfg.train_corpus = value;
  } else if (key == "validation_corpus") {
    cfg.validation_corpus = value;
  } else if (key == "validation_fraction") {
    cfg.validation_fraction = parse_number<double>(key, v);
  } else if (key == "ngram_order") {
    cfg.ngram_order = parse_number<unsigned>(key, v);
  } else if (key == "ngram_alpha") {
    cfg.ngram_alpha = parse_number<double>(key, v);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "max_span_tokens") {
    cfg.max_span_tokens = parse_number<std::size_t>(key, v);
  } else if (key == "min_frequency") {
    cfg.min_frequency = parse_number<std::uint64_t>(key, v);
  } else if (key == "chunk_chars") {
    cfg.chunk_chars = parse_number<std::size_t>(key, v);
  } else if (key == "threads") {
    cfg.threads = parse_number<unsigned>(key, v);
  } else if (key == "baseline") {
    cfg.baseline = parse_bool(key, v);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else {
    throw UsageError("unknown config key \"" + key + "\"");
  }
}

CurriculumConfig parse_config(std::string_view text) {
  CurriculumConfig cfg;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;  // blank, comment, or TOML-style section header
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    try {
      set_config_value(cfg, key, std::string(value));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

CurriculumConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file_bytes(path);
  } catch (const Error&) {
    throw UsageError("cannot read config file " + path);
  }
  return parse_config(text);
}

std::vector<std::pair<std::string, std::string>> config_entries(const CurriculumConfig& cfg) {
  return {
      {"phases", phases_to_text(cfg.phases)},
      {"epsilon", fmt(cfg.epsilon)},
      {"growth_cap", std::to_string(cfg.growth_cap)},
      {"vocab_cap", std::to_string(cfg.vocab_cap)},
      {"iterations", std::to_string(cfg.iterations)},
      {"entropy_source", cfg.entropy_source == EntropySourceKind::builtin_ngram ? "builtin-ngram" : "external-dump"},
      {"train_corpus", cfg.train_corpus},
      {"validation_corpus", cfg.validation_corpus},
      {"validation_fraction", fmt(cfg.validation_fraction)},
      {"ngram_order", std::to_string(cfg.ngram_order)},
      {"ngram_alpha", fmt(cfg.ngram_alpha)},
      {"seed", std::to_string(cfg.seed)},
      {"max_span_tokens", std::to_string(cfg.max_span_tokens)},
      {"min_frequency", std::to_string(cfg.min_frequency)},
      {"chunk_chars", std::to_string(cfg.chunk_chars)},
      {"threads", std::to_string(cfg.threads)},
      {"baseline", cfg.baseline ? "true" : "false"},
      {"out_dir", cfg.out_dir},
  };
}

std::string config_to_text(const CurriculumConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : config_entries(cfg)) out += key + " = \"" + value + "\"\n";
  return out;
}

MergeConfig CurriculumConfig::merge_config() const {
  return MergeConfig{epsilon, growth_cap, max_span_tokens, min_frequency};
}

void CurriculumConfig::validate() const {
  try {
    merge_config().validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (ngram_order < 1 || ngram_order > kMaxNgramOrder) throw UsageError("ngram_order out of range");
  if (!(ngram_alpha > 0.0)) throw UsageError("ngram_alpha must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) throw UsageError("validation_fraction must be in (0, 1)");
  if (chunk_chars == 0) throw UsageError("chunk_chars must be positive");
}

}  // namespace dyntok
