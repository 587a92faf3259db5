// Command-line front end. Every subcommand reads and writes files named by
// flags; exit status is 0 on success, 1 for usage errors and 2 for data or
// validation errors, and every failure prints one line starting "error:".

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>

#include "dyntok/codec.hpp"
#include "dyntok/curriculum.hpp"
#include "dyntok/entropy.hpp"
#include "dyntok/error.hpp"
#include "dyntok/merge.hpp"
#include "dyntok/metrics.hpp"
#include "dyntok/utf8.hpp"
#include "dyntok/vocab.hpp"

namespace fs = std::filesystem;
using namespace dyntok;

namespace {

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void write_output(const std::string& path, std::string_view bytes) {
  if (path.empty() || path == "-") {
    std::cout.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    std::cout.flush();
  } else {
    write_file_atomic(path, bytes);
  }
}

UnknownPolicy parse_unknown(const std::string& s) {
  if (s == "strict") return UnknownPolicy::strict;
  if (s == "replace") return UnknownPolicy::replace;
  throw UsageError("--unknown must be strict or replace");
}

DumpEncoding parse_encoding(const std::string& s) {
  if (s == "f32le") return DumpEncoding::f32le;
  if (s == "text") return DumpEncoding::text;
  throw UsageError("--encoding must be f32le or text");
}

// Stage records of a run directory, in stage order.
std::vector<StageRecord> load_records(const fs::path& run) {
  std::vector<StageRecord> out;
  for (std::size_t k = 0;; ++k) {
    const fs::path metrics = run / ("stage_" + std::to_string(k)) / "metrics.json";
    if (!fs::exists(metrics)) break;
    try {
      out.push_back(stage_record_from_json(nlohmann::json::parse(read_file_bytes(metrics.string()))));
    } catch (const nlohmann::json::exception& e) {
      throw Error(metrics.string() + ": " + e.what());
    }
  }
  return out;
}

nlohmann::ordered_json slope_json(const std::vector<std::pair<double, double>>& points) {
  std::map<double, int> sizes;
  for (const auto& p : points) sizes[p.first]++;
  if (sizes.size() < 2) return nullptr;
  const SlopeFit fit = fit_slope(points);
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
}

void run_report(const std::string& run_dir, const std::string& out_dir) {
  const fs::path run(run_dir);
  if (!fs::is_directory(run)) throw UsageError("run directory " + run_dir + " does not exist");
  const std::vector<StageRecord> records = load_records(run);
  if (records.empty()) throw Error(run_dir + ": no stage metrics found");

  std::vector<ScalingPoint> scaling;
  std::vector<BpcReport> stages;
  std::vector<std::pair<double, double>> cur_points, base_points;
  for (const StageRecord& r : records) {
    if (std::isnan(r.validation_bpc)) continue;
    scaling.push_back({r.vocab_size, r.validation_bpc, "curriculum"});
    cur_points.emplace_back(static_cast<double>(r.vocab_size), r.validation_bpc);
    if (r.report) stages.push_back(*r.report);
  }
  std::vector<StageRecord> baseline;
  if (const fs::path b = run / "baseline.json"; fs::exists(b)) {
    for (const auto& j : nlohmann::json::parse(read_file_bytes(b.string()))) baseline.push_back(stage_record_from_json(j));
  }
  for (const StageRecord& r : baseline) {
    if (std::isnan(r.validation_bpc)) continue;
    scaling.push_back({r.vocab_size, r.validation_bpc, "baseline"});
    base_points.emplace_back(static_cast<double>(r.vocab_size), r.validation_bpc);
  }
  emit_plot_data(scaling, stages, out_dir);

  nlohmann::ordered_json summary;
  summary["stages"] = records.size();
  summary["curriculum"] = slope_json(cur_points);
  summary["baseline"] = slope_json(base_points);
  if (!base_points.empty() && base_points.size() == cur_points.size()) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < cur_points.size(); ++i) {
      a.push_back(cur_points[i].second);
      b.push_back(base_points[i].second);
    }
    summary["improvement_percent"] = improvement_table(a, b);
  }
  write_file_atomic((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyntok: entropy-guided dynamic tokenization engine"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough(false);

  // init-vocab
  std::string input, out, vocab_path, stream_path, model_path, entropy_path;
  auto* init_cmd = app.add_subcommand("init-vocab", "Character vocabulary of a corpus");
  init_cmd->add_option("--input", input, "UTF-8 corpus")->required();
  init_cmd->add_option("--out", out, "Vocabulary JSONL output")->required();

  // encode / decode
  std::size_t chunk = 65536;
  unsigned threads = default_threads();
  std::string unknown = "strict";
  auto* encode_cmd = app.add_subcommand("encode", "Encode text into a token stream");
  encode_cmd->add_option("--vocab", vocab_path, "Vocabulary JSONL")->required();
  encode_cmd->add_option("--input", input, "UTF-8 text")->required();
  encode_cmd->add_option("--out", out, "Stream output (binary)")->required();
  encode_cmd->add_option("--chunk", chunk, "Characters per encoding chunk");
  encode_cmd->add_option("--threads", threads, "Worker threads");
  encode_cmd->add_option("--unknown", unknown, "Characters outside the alphabet: strict or replace")
      ->check(CLI::IsMember({"strict", "replace"}));

  auto* decode_cmd = app.add_subcommand("decode", "Decode a token stream back to text");
  decode_cmd->add_option("--vocab", vocab_path, "Vocabulary JSONL")->required();
  decode_cmd->add_option("--input", input, "Stream file")->required();
  decode_cmd->add_option("--out", out, "Text output (stdout when omitted)");

  // fit-ngram / entropy
  unsigned order = 4;
  double alpha = 0.01;
  auto* fit_cmd = app.add_subcommand("fit-ngram", "Fit the built-in n-gram entropy source");
  fit_cmd->add_option("--vocab", vocab_path, "Vocabulary JSONL")->required();
  fit_cmd->add_option("--stream", stream_path, "Training stream")->required();
  fit_cmd->add_option("--order", order, "N-gram order")->check(CLI::Range(1u, kMaxNgramOrder));
  fit_cmd->add_option("--alpha", alpha, "Add-alpha smoothing");
  fit_cmd->add_option("--out", out, "Model output")->required();

  std::string kind = "entropy", encoding = "f32le";
  auto* entropy_cmd = app.add_subcommand("entropy", "Write a per-position entropy or surprisal dump");
  entropy_cmd->add_option("--model", model_path, "Model from fit-ngram")->required();
  entropy_cmd->add_option("--stream", stream_path, "Stream to score")->required();
  entropy_cmd->add_option("--kind", kind, "entropy or nll")->check(CLI::IsMember({"entropy", "nll"}));
  entropy_cmd->add_option("--encoding", encoding, "f32le or text")->check(CLI::IsMember({"f32le", "text"}));
  entropy_cmd->add_option("--out", out, "Dump output")->required();

  // merge-step / reduce
  MergeConfig merge_cfg;
  std::string vocab_out;
  auto* merge_cmd = app.add_subcommand("merge-step", "Find merge candidates for one vocabulary update");
  merge_cmd->add_option("--vocab", vocab_path, "Vocabulary JSONL")->required();
  merge_cmd->add_option("--stream", stream_path, "Stream encoded under --vocab")->required();
  merge_cmd->add_option("--entropy", entropy_path, "Entropy dump aligned to --stream")->required();
  merge_cmd->add_option("--epsilon", merge_cfg.epsilon, "Entropy threshold in bits");
  merge_cmd->add_option("--cap", merge_cfg.growth_cap, "Max new tokens");
  merge_cmd->add_option("--max-span", merge_cfg.max_span_tokens, "Longest span in tokens");
  merge_cmd->add_option("--min-frequency", merge_cfg.min_frequency, "Minimum span count");
  merge_cmd->add_option("--out", out, "Candidate JSONL output")->required();
  merge_cmd->add_option("--vocab-out", vocab_out, "Also write the expanded vocabulary");

  std::size_t target = 0;
  auto* reduce_cmd = app.add_subcommand("reduce", "Keep the first N tokens of a vocabulary");
  reduce_cmd->add_option("--vocab", vocab_path, "Vocabulary JSONL")->required();
  reduce_cmd->add_option("--size", target, "Target size")->required();
  reduce_cmd->add_option("--out", out, "Vocabulary JSONL output")->required();

  // curriculum run / step. Run flags mirror the config keys one to one.
  auto* cur_cmd = app.add_subcommand("curriculum", "Run or step the vocabulary curriculum");
  cur_cmd->require_subcommand(1);
  std::string config_path, state_dir;
  auto* run_cmd = cur_cmd->add_subcommand("run", "Run all stages; flags override config file values");
  run_cmd->add_option("--config", config_path, "Flat key = value config file");
  CurriculumConfig defaults;
  defaults.threads = default_threads();
  const auto entries = config_entries(defaults);
  std::map<std::string, std::string> overrides;
  std::vector<std::pair<std::string, CLI::Option*>> override_opts;
  for (const auto& [key, value] : entries) {
    overrides[key] = value;
    override_opts.emplace_back(key, run_cmd->add_option("--" + key, overrides[key], "Config key " + key));
  }
  auto* step_cmd = cur_cmd->add_subcommand("step", "Advance an external-source run directory by one stage");
  step_cmd->add_option("--state", state_dir, "Run directory")->required();

  // report
  std::string run_dir;
  auto* report_cmd = app.add_subcommand("report", "Emit plot tables and slope fits for a run");
  report_cmd->add_option("--run", run_dir, "Run directory")->required();
  report_cmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = &app;
    while (!sub->get_subcommands().empty()) sub = sub->get_subcommands().front();
    std::cerr << sub->help();
    return 1;
  }

  try {
    if (*init_cmd) {
      save(init_base(read_text_file(input)), out);
    } else if (*encode_cmd) {
      const Vocabulary vocab = load(vocab_path);
      const PrefixTrie trie = PrefixTrie::build(vocab);
      if (threads == 0) throw UsageError("--threads must be positive");
      EncodeOptions opts;
      opts.unknown = parse_unknown(unknown);
      save_stream(encode_batched(read_text_file(input), trie, vocab, chunk, opts, threads), out);
    } else if (*decode_cmd) {
      const Vocabulary vocab = load(vocab_path);
      const TokenStream stream = load_stream(input);
      if (stream.vocab_hash != vocab.hash()) throw Error(input + ": stream was encoded with a different vocabulary");
      validate(stream, vocab);
      write_output(out, utf8_encode(decode(stream, vocab)));
    } else if (*fit_cmd) {
      const Vocabulary vocab = load(vocab_path);
      const TokenStream stream = load_stream(stream_path);
      if (stream.vocab_hash != vocab.hash()) throw Error(stream_path + ": stream was encoded with a different vocabulary");
      validate(stream, vocab);
      save_model(fit_ngram(stream, vocab.size(), order, alpha), out);
    } else if (*entropy_cmd) {
      const NgramModel model = load_model(model_path);
      const TokenStream stream = load_stream(stream_path);
      for (TokenId id : stream.ids)
        if (id >= model.vocab_size()) throw Error(stream_path + ": token id " + std::to_string(id) + " outside the model");
      EntropyTrace trace = kind == "nll" ? nll_trace(model, stream) : entropy_trace(model, stream);
      save_entropy_dump(trace, out, parse_encoding(encoding));
    } else if (*merge_cmd) {
      merge_cfg.validate();
      const Vocabulary vocab = load(vocab_path);
      const TokenStream stream = load_stream(stream_path);
      if (stream.vocab_hash != vocab.hash()) throw Error(stream_path + ": stream was encoded with a different vocabulary");
      validate(stream, vocab);
      const EntropyTrace trace = load_entropy_dump(entropy_path, stream);
      std::vector<MergeCandidate> cands = find_candidates(stream, trace, vocab, merge_cfg);
      if (cands.size() > merge_cfg.growth_cap) cands.resize(merge_cfg.growth_cap);
      write_file_atomic(out, candidates_to_jsonl(cands));
      if (!vocab_out.empty()) save(add(vocab, cands, merge_cfg.growth_cap), vocab_out);
    } else if (*reduce_cmd) {
      save(reduce(load(vocab_path), target), out);
    } else if (*cur_cmd) {
      if (*run_cmd) {
        CurriculumConfig cfg = config_path.empty() ? defaults : load_config(config_path);
        if (config_path.empty()) cfg.threads = default_threads();
        for (const auto& [key, opt] : override_opts)
          if (opt->count() > 0) set_config_value(cfg, key, overrides[key]);
        if (cfg.threads == 0) throw UsageError("threads must be positive");
        CurriculumDriver driver(cfg);
        driver.set_logger([](const std::string& msg) { std::cerr << msg << '\n'; });
        try {
          driver.run();
        } catch (const AwaitingEntropy& e) {
          // The expected stop of an external-source run: stage inputs are on
          // disk and `curriculum step` continues once the dump exists.
          if (cfg.entropy_source != EntropySourceKind::external_dump) throw;
          std::cout << e.what() << '\n';
        }
      } else {
        const CurriculumState state =
            CurriculumDriver::step_directory(state_dir, [](const std::string& msg) { std::cerr << msg << '\n'; });
        if (state.records.size() == state.stage + 1) {
          std::cout << "complete at stage " << state.stage << '\n';
        } else {
          std::cout << "stage " << state.stage << " inputs ready, vocab " << state.vocab.size() << '\n';
        }
      }
    } else if (*report_cmd) {
      run_report(run_dir, out);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
