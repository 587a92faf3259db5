#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "dyntok/codec.hpp"
#include "dyntok/error.hpp"
#include "dyntok/merge.hpp"
#include "dyntok/metrics.hpp"
#include "dyntok/vocab.hpp"

namespace dyntok {

struct Phase {
  enum class Kind { expand, reduce };
  Kind kind = Kind::expand;
  /// expand: growth cap for this stage (0 = use the config's growth_cap).
  /// reduce: target vocabulary size.
  std::size_t amount = 0;

  bool operator==(const Phase&) const = default;
};

enum class EntropySourceKind { builtin_ngram, external_dump };

/// Keys of the flat config file are the field names below.
struct CurriculumConfig {
  /// Stage k uses phases[k]; stages past the list expand.
  std::vector<Phase> phases;
  double epsilon = 0.3;
  std::size_t growth_cap = 3000;
  std::size_t vocab_cap = 18000;
  std::size_t iterations = 5;
  EntropySourceKind entropy_source = EntropySourceKind::builtin_ngram;
  std::string train_corpus;
  /// Empty: hold out the final validation_fraction of train_corpus by characters.
  std::string validation_corpus;
  double validation_fraction = 0.05;
  unsigned ngram_order = 4;
  double ngram_alpha = 0.01;
  std::uint64_t seed = 0;
  std::size_t max_span_tokens = 8;
  std::uint64_t min_frequency = 2;
  std::size_t chunk_chars = 65536;
  unsigned threads = 1;
  /// Also compute the compute-matched baseline at the end of run().
  bool baseline = true;
  /// Run directory for artifacts; empty keeps everything in memory.
  std::string out_dir;

  MergeConfig merge_config() const;
  void validate() const;
};

CurriculumConfig parse_config(std::string_view text);
CurriculumConfig load_config(const std::string& path);
/// Sets one key from its textual value; throws UsageError for unknown keys.
void set_config_value(CurriculumConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_text(const CurriculumConfig& cfg);
/// Key/value pairs in declaration order, values as config-file text.
std::vector<std::pair<std::string, std::string>> config_entries(const CurriculumConfig& cfg);
std::vector<Phase> parse_phases(std::string_view text);
std::string phases_to_text(const std::vector<Phase>& phases);

struct StageRecord {
  std::size_t stage = 0;
  std::size_t vocab_size = 0;
  /// NaN when the entropy source supplied no nll for that split.
  double train_bpc = 0.0;
  double validation_bpc = 0.0;
  std::size_t tokens_added = 0;
  std::size_t tokens_removed = 0;
  double wall_time_s = 0.0;
  /// Validation-split report (empty for external sources without nll).
  std::optional<BpcReport> report;
};

nlohmann::ordered_json to_json(const StageRecord& record);
StageRecord stage_record_from_json(const nlohmann::json& j);

struct CurriculumState {
  std::size_t stage = 0;
  Vocabulary vocab;
  std::vector<StageRecord> records;
  /// Set when an expand stage found no candidates.
  bool exhausted = false;
  /// Compute-matched baseline records, filled by run() when enabled.
  std::vector<StageRecord> baseline;
};

/// Raised in external-source mode when the entropy dump for the current
/// stage has not been written yet.
class AwaitingEntropy : public Error {
 public:
  explicit AwaitingEntropy(std::size_t stage)
      : Error("awaiting external entropy for stage " + std::to_string(stage)), stage_(stage) {}
  std::size_t stage() const { return stage_; }

 private:
  std::size_t stage_;
};

/// Alternates entropy-source fitting and vocabulary updates over a corpus.
class CurriculumDriver {
 public:
  explicit CurriculumDriver(CurriculumConfig cfg);
  /// Same driver over in-memory text.
  CurriculumDriver(CurriculumConfig cfg, std::u32string train, std::u32string validation);

  const CurriculumConfig& config() const { return cfg_; }
  const std::u32string& train_text() const { return train_; }
  const std::u32string& validation_text() const { return validation_; }

  /// Stage 0: the character vocabulary of train + validation text.
  CurriculumState initial_state() const;

  /// Encode under the current vocabulary, fit or ingest the entropy source,
  /// record metrics, update the vocabulary per the stage's phase.
  CurriculumState run_stage(CurriculumState state) const;
  /// Records metrics for the current vocabulary without updating it.
  CurriculumState evaluate_final(CurriculumState state) const;
  /// `iterations` stages plus a final evaluation; stops early when an expand
  /// stage yields no candidates.
  CurriculumState run() const;

  /// From-scratch fits on reduce(final_vocab, size) for each recorded size.
  std::vector<StageRecord> compute_matched_baseline(const Vocabulary& final_vocab,
                                                    const std::vector<StageRecord>& curriculum) const;

  /// Resumes a run directory for the external-source handshake: loads the
  /// latest stage and performs one step. Returns the new state.
  static CurriculumState step_directory(const std::string& dir, const std::function<void(const std::string&)>& log);

  void set_logger(std::function<void(const std::string&)> log) { log_ = std::move(log); }

 private:
  struct Encoded {
    TokenStream train;
    TokenStream validation;
  };
  struct Evaluation {
    Encoded streams;
    std::optional<EntropyTrace> entropy;
    StageRecord record;
  };
  /// Encodes both splits; with a run directory also writes the stage inputs.
  Encoded prepare(std::size_t stage, const Vocabulary& vocab) const;
  Evaluation evaluate(const CurriculumState& state) const;
  StageRecord fit_and_score(std::size_t stage, const Vocabulary& vocab, const Encoded& streams,
                            std::optional<EntropyTrace>* entropy) const;
  std::string stage_dir(std::size_t stage) const;
  void write_run_file() const;
  void write_record(const StageRecord& record) const;
  void log(const std::string& msg) const;

  CurriculumConfig cfg_;
  std::u32string train_;
  std::u32string validation_;
  std::function<void(const std::string&)> log_;
};

}  // namespace dyntok
