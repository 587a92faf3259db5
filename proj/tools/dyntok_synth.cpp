// Writes the synthetic phrase-bank corpus used by the acceptance suite, so
// the same text can be fed to the CLI or to an external trainer.

#include <CLI11.hpp>

#include <iostream>

#include "dyntok/error.hpp"
#include "dyntok/synth.hpp"
#include "dyntok/utf8.hpp"

int main(int argc, char** argv) {
  dyntok::SynthSpec spec;
  std::string out;
  CLI::App app{"dyntok-synth: generate the synthetic phrase-bank corpus"};
  app.option_defaults()->always_capture_default();
  app.add_option("--chars", spec.chars, "Corpus length in characters");
  app.add_option("--phrases", spec.phrases, "Phrase bank size")->check(CLI::PositiveNumber);
  app.add_option("--noise", spec.noise, "Per-character noise rate")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--out", out, "Output file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  try {
    dyntok::write_file_atomic(out, dyntok::utf8_encode(dyntok::synth_corpus(spec)));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
