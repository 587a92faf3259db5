#include "dyntok/curriculum.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>

#include "dyntok/entropy.hpp"
#include "dyntok/error.hpp"
#include "dyntok/utf8.hpp"

namespace dyntok {

namespace fs = std::filesystem;

namespace {

nlohmann::ordered_json bpc_value(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double bpc_from_json(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

nlohmann::ordered_json to_json(const StageRecord& record) {
  nlohmann::ordered_json j;
  j["stage"] = record.stage;
  j["vocab_size"] = record.vocab_size;
  j["train_bpc"] = bpc_value(record.train_bpc);
  j["validation_bpc"] = bpc_value(record.validation_bpc);
  j["tokens_added"] = record.tokens_added;
  j["tokens_removed"] = record.tokens_removed;
  if (record.report) {
    const nlohmann::ordered_json report = to_json(*record.report);
    for (auto& [key, value] : report.items()) j[key] = value;
  }
  return j;
}

StageRecord stage_record_from_json(const nlohmann::json& j) {
  try {
    StageRecord r;
    r.stage = j.at("stage").get<std::size_t>();
    r.vocab_size = j.at("vocab_size").get<std::size_t>();
    r.train_bpc = bpc_from_json(j.at("train_bpc"));
    r.validation_bpc = bpc_from_json(j.at("validation_bpc"));
    r.tokens_added = j.at("tokens_added").get<std::size_t>();
    r.tokens_removed = j.at("tokens_removed").get<std::size_t>();
    if (j.contains("global_bpc")) r.report = bpc_report_from_json(j);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad stage record: ") + e.what());
  }
}

CurriculumDriver::CurriculumDriver(CurriculumConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.train_corpus.empty()) throw UsageError("train_corpus is required");
  std::u32string text = read_text_file(cfg_.train_corpus);
  if (!cfg_.validation_corpus.empty()) {
    train_ = std::move(text);
    validation_ = read_text_file(cfg_.validation_corpus);
  } else {
    const auto held_out = static_cast<std::size_t>(std::floor(static_cast<double>(text.size()) * cfg_.validation_fraction));
    validation_ = text.substr(text.size() - held_out);
    text.resize(text.size() - held_out);
    train_ = std::move(text);
  }
  if (train_.empty() || validation_.empty()) throw Error("corpus too small for a train/validation split");
}

CurriculumDriver::CurriculumDriver(CurriculumConfig cfg, std::u32string train, std::u32string validation)
    : cfg_(std::move(cfg)), train_(std::move(train)), validation_(std::move(validation)) {
  cfg_.validate();
  if (train_.empty() || validation_.empty()) throw Error("empty train or validation text");
}

void CurriculumDriver::log(const std::string& msg) const {
  if (log_) {
    log_(msg);
  } else {
    std::clog << msg << '\n';
  }
}

std::string CurriculumDriver::stage_dir(std::size_t stage) const {
  return (fs::path(cfg_.out_dir) / ("stage_" + std::to_string(stage))).string();
}

CurriculumState CurriculumDriver::initial_state() const {
  CurriculumState state;
  state.vocab = init_base(train_ + validation_);
  if (state.vocab.base_size() > cfg_.vocab_cap) {
    throw UsageError("vocab_cap " + std::to_string(cfg_.vocab_cap) + " is below the base alphabet size " +
                     std::to_string(state.vocab.base_size()));
  }
  return state;
}

CurriculumDriver::Encoded CurriculumDriver::prepare(std::size_t stage, const Vocabulary& vocab) const {
  const PrefixTrie trie = PrefixTrie::build(vocab);
  const std::size_t chunk = std::max(cfg_.chunk_chars, trie.max_depth());
  Encoded e{encode_batched(train_, trie, vocab, chunk, {}, cfg_.threads),
            encode_batched(validation_, trie, vocab, chunk, {}, cfg_.threads)};
  if (!cfg_.out_dir.empty()) {
    const std::string dir = stage_dir(stage);
    fs::create_directories(dir);
    save(vocab, dir + "/vocab.jsonl");
    save_stream(e.train, dir + "/stream.bin");
    save_stream(e.validation, dir + "/valid_stream.bin");
  }
  return e;
}

StageRecord CurriculumDriver::fit_and_score(std::size_t stage, const Vocabulary& vocab, const Encoded& streams,
                                            std::optional<EntropyTrace>* entropy) const {
  StageRecord record;
  record.stage = stage;
  record.vocab_size = vocab.size();
  if (cfg_.entropy_source == EntropySourceKind::builtin_ngram) {
    const NgramModel model = fit_ngram(streams.train, vocab.size(), cfg_.ngram_order, cfg_.ngram_alpha);
    if (entropy) *entropy = entropy_trace(model, streams.train);
    record.train_bpc = nll_trace(model, streams.train).total_bits() / static_cast<double>(streams.train.text_length);
    record.report = bpc_report(streams.validation, nll_trace(model, streams.validation), vocab);
    record.validation_bpc = record.report->global_bpc;
    return record;
  }

  // External source: dumps written by the trainer next to the stage inputs.
  const std::string dir = stage_dir(stage);
  record.train_bpc = nan();
  record.validation_bpc = nan();
  if (entropy && fs::exists(dir + "/entropy.bin")) {
    *entropy = load_entropy_dump(dir + "/entropy.bin", streams.train);
    if ((*entropy)->kind != TraceKind::entropy) throw Error(dir + "/entropy.bin: expected kind \"entropy\"");
  }
  if (fs::exists(dir + "/train_nll.bin")) {
    const EntropyTrace nll = load_entropy_dump(dir + "/train_nll.bin", streams.train);
    record.train_bpc = bpc_report(streams.train, nll, vocab).global_bpc;
  }
  if (fs::exists(dir + "/nll.bin")) {
    record.report = bpc_report(streams.validation, load_entropy_dump(dir + "/nll.bin", streams.validation), vocab);
    record.validation_bpc = record.report->global_bpc;
  }
  return record;
}

CurriculumDriver::Evaluation CurriculumDriver::evaluate(const CurriculumState& state) const {
  if (cfg_.entropy_source == EntropySourceKind::external_dump && cfg_.out_dir.empty())
    throw UsageError("external entropy source needs a run directory (out_dir)");
  Evaluation ev;
  ev.streams = prepare(state.stage, state.vocab);
  ev.record = fit_and_score(state.stage, state.vocab, ev.streams, &ev.entropy);
  if (ev.entropy && !cfg_.out_dir.empty() && cfg_.entropy_source == EntropySourceKind::builtin_ngram) {
    save_entropy_dump(*ev.entropy, stage_dir(state.stage) + "/entropy.bin");
  }
  return ev;
}

void CurriculumDriver::write_record(const StageRecord& record) const {
  if (cfg_.out_dir.empty()) return;
  const std::string dir = stage_dir(record.stage);
  fs::create_directories(dir);
  write_file_atomic(dir + "/metrics.json", dump_json(to_json(record)));
  nlohmann::ordered_json timing;
  timing["wall_time_s"] = record.wall_time_s;
  write_file_atomic(dir + "/timing.json", dump_json(timing));
}

void CurriculumDriver::write_run_file() const {
  if (cfg_.out_dir.empty()) return;
  fs::create_directories(cfg_.out_dir);
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_entries(cfg_)) config[key] = value;
  nlohmann::ordered_json run;
  run["config"] = std::move(config);
  run["seed"] = cfg_.seed;
  write_file_atomic((fs::path(cfg_.out_dir) / "run.json").string(), dump_json(run));
}

CurriculumState CurriculumDriver::run_stage(CurriculumState state) const {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t k = state.stage;
  Evaluation ev = evaluate(state);
  const Phase phase = k < cfg_.phases.size() ? cfg_.phases[k] : Phase{};

  Vocabulary next;
  if (phase.kind == Phase::Kind::expand) {
    if (!ev.entropy) throw AwaitingEntropy(k);
    std::size_t cap = phase.amount != 0 ? phase.amount : cfg_.growth_cap;
    const std::size_t room = cfg_.vocab_cap > state.vocab.size() ? cfg_.vocab_cap - state.vocab.size() : 0;
    if (cap > room) {
      log("warning: stage " + std::to_string(k) + ": vocab_cap " + std::to_string(cfg_.vocab_cap) +
          " limits growth to " + std::to_string(room) + " tokens");
      cap = room;
    }
    std::vector<MergeCandidate> candidates;
    if (cap > 0) candidates = find_candidates(ev.streams.train, *ev.entropy, state.vocab, cfg_.merge_config());
    next = add(state.vocab, candidates, std::max<std::size_t>(cap, 1));
    ev.record.tokens_added = next.size() - state.vocab.size();
    state.exhausted = ev.record.tokens_added == 0;
  } else {
    next = reduce(state.vocab, phase.amount);
    ev.record.tokens_removed = state.vocab.size() - next.size();
  }

  ev.record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_record(ev.record);
  log("stage " + std::to_string(k) + ": vocab " + std::to_string(state.vocab.size()) + " -> " +
      std::to_string(next.size()) + ", validation bpc " + std::to_string(ev.record.validation_bpc));
  state.records.push_back(std::move(ev.record));
  state.vocab = std::move(next);
  state.stage = k + 1;
  return state;
}

CurriculumState CurriculumDriver::evaluate_final(CurriculumState state) const {
  const auto started = std::chrono::steady_clock::now();
  Evaluation ev = evaluate(state);
  ev.record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_record(ev.record);
  log("stage " + std::to_string(state.stage) + ": final vocab " + std::to_string(state.vocab.size()) +
      ", validation bpc " + std::to_string(ev.record.validation_bpc));
  state.records.push_back(std::move(ev.record));
  return state;
}

CurriculumState CurriculumDriver::run() const {
  write_run_file();
  CurriculumState state = initial_state();
  for (std::size_t i = 0; i < cfg_.iterations; ++i) {
    state = run_stage(std::move(state));
    if (state.exhausted) {
      log("stage " + std::to_string(state.stage - 1) + " produced no candidates; stopping");
      break;
    }
  }
  if (!state.exhausted) state = evaluate_final(std::move(state));
  if (cfg_.baseline && cfg_.entropy_source == EntropySourceKind::builtin_ngram) {
    state.baseline = compute_matched_baseline(state.vocab, state.records);
    if (!cfg_.out_dir.empty()) {
      nlohmann::ordered_json records = nlohmann::ordered_json::array();
      for (const auto& r : state.baseline) records.push_back(to_json(r));
      write_file_atomic((fs::path(cfg_.out_dir) / "baseline.json").string(), dump_json(records));
    }
  }
  return state;
}

std::vector<StageRecord> CurriculumDriver::compute_matched_baseline(const Vocabulary& final_vocab,
                                                                    const std::vector<StageRecord>& curriculum) const {
  if (cfg_.entropy_source != EntropySourceKind::builtin_ngram)
    throw UsageError("compute-matched baselines for external sources are trained by the external trainer");
  // The n-gram refit is exact after one counting pass, so matching the
  // curriculum's pass count reduces to one from-scratch fit per size.
  std::vector<StageRecord> out;
  for (const StageRecord& r : curriculum) {
    if (r.vocab_size > final_vocab.size()) continue;
    const auto started = std::chrono::steady_clock::now();
    const Vocabulary vocab = reduce(final_vocab, r.vocab_size);
    const PrefixTrie trie = PrefixTrie::build(vocab);
    const std::size_t chunk = std::max(cfg_.chunk_chars, trie.max_depth());
    const Encoded streams{encode_batched(train_, trie, vocab, chunk, {}, cfg_.threads),
                          encode_batched(validation_, trie, vocab, chunk, {}, cfg_.threads)};
    StageRecord b = fit_and_score(r.stage, vocab, streams, nullptr);
    b.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log("baseline: vocab " + std::to_string(b.vocab_size) + ", validation bpc " + std::to_string(b.validation_bpc));
    out.push_back(std::move(b));
  }
  return out;
}

CurriculumState CurriculumDriver::step_directory(const std::string& dir,
                                                 const std::function<void(const std::string&)>& log) {
  const fs::path run_file = fs::path(dir) / "run.json";
  if (!fs::exists(run_file)) throw UsageError("no run.json in " + dir);
  CurriculumConfig cfg;
  try {
    const auto run = nlohmann::json::parse(read_file_bytes(run_file.string()));
    for (const auto& [key, value] : run.at("config").items()) set_config_value(cfg, key, value.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(run_file.string() + ": " + e.what());
  }
  cfg.out_dir = dir;
  CurriculumDriver driver(cfg);
  driver.set_logger(log);

  std::optional<std::size_t> latest;
  for (std::size_t k = 0; fs::exists(driver.stage_dir(k) + "/vocab.jsonl"); ++k) latest = k;

  CurriculumState state;
  if (!latest) {
    state = driver.initial_state();
  } else {
    state.stage = *latest;
    const Vocabulary loaded = load(driver.stage_dir(*latest) + "/vocab.jsonl");
    state.vocab = Vocabulary::from_tokens({loaded.tokens().begin(), loaded.tokens().end()},
                                          static_cast<std::uint32_t>(*latest));
    for (std::size_t k = 0; k <= *latest; ++k) {
      const std::string metrics = driver.stage_dir(k) + "/metrics.json";
      if (!fs::exists(metrics)) break;
      state.records.push_back(stage_record_from_json(nlohmann::json::parse(read_file_bytes(metrics))));
    }
    if (state.records.size() == *latest + 1) {
      log("run complete at stage " + std::to_string(*latest));
      return state;
    }
  }

  const bool previous_empty = !state.records.empty() && state.stage > 0 &&
                              (state.stage - 1 >= cfg.phases.size() ||
                               cfg.phases[state.stage - 1].kind == Phase::Kind::expand) &&
                              state.records.back().tokens_added == 0;
  if (state.stage >= cfg.iterations || previous_empty) return driver.evaluate_final(std::move(state));

  state = driver.run_stage(std::move(state));
  // Publish the next stage's inputs so the trainer can pick them up.
  driver.prepare(state.stage, state.vocab);
  return state;
}

}  // namespace dyntok
