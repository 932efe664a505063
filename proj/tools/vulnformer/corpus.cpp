#include <iostream>
#include <memory>
#include <optional>

#include "commands.hpp"
#include "vulnformer/harness/alpaca.hpp"
#include "vulnformer/harness/case_study.hpp"
#include "vulnformer/harness/synthetic.hpp"
#include "vulnformer/io/files.hpp"
#include "vulnformer/model/checkpoint.hpp"

namespace vulnformer::cli {

namespace fs = std::filesystem;

namespace {

struct CaseStudyOptions {
  std::string ckpt, pairs, out;
  bool builtin = false;
  std::optional<double> threshold;
};

int run_case_study(const CaseStudyOptions& opt) {
  if (opt.pairs.empty() == !opt.builtin)
    throw Error(ErrorKind::kInvalidConfig, "give exactly one of --pairs or --builtin");
  model::Checkpoint ckpt = model::load_checkpoint(opt.ckpt);
  if (!ckpt.vocab) throw Error(ErrorKind::kIncompatibleCheckpoint, opt.ckpt + ": checkpoint has no vocabulary");

  std::vector<std::string> unmatched;
  const auto pairs = opt.builtin ? harness::builtin_case_pairs() : harness::load_case_pairs(opt.pairs, &unmatched);
  for (const auto& file : unmatched) warn_json({{"warning", "unmatched-pair-file"}, {"file", file}});

  const double threshold = opt.threshold.value_or(ckpt.meta.threshold);
  const bool trained = ckpt.meta.trained_steps > 0;
  std::vector<harness::CaseVerdict> verdicts;
  for (const auto& pair : pairs) verdicts.push_back(harness::case_eval(ckpt.model, *ckpt.vocab, pair, threshold, trained));

  nlohmann::json rows = nlohmann::json::array();
  std::size_t resolved = 0;
  for (const auto& v : verdicts) {
    rows.push_back(v.to_json());
    resolved += v.resolved;
  }
  const nlohmann::json summary = {
      {"pairs", verdicts.size()}, {"resolved", resolved}, {"unmatched", unmatched}, {"verdicts", rows}};
  if (!opt.out.empty()) io::write_json(opt.out, summary);
  std::cout << harness::case_table_markdown(verdicts);
  return unmatched.empty() ? kExitOk : kExitPartial;
}

struct ExportOptions {
  std::string dataset, out;
};

int run_export_alpaca(const ExportOptions& opt) {
  const auto data = harness::load_dataset(opt.dataset);
  io::write_text(opt.out, harness::export_alpaca(data));
  print_json({{"records", data.size()}, {"out", opt.out}});
  return kExitOk;
}

struct SynthOptions {
  std::string kind = "marker", out;
  harness::SyntheticOptions gen;
};

int run_synth(const SynthOptions& opt) {
  if (opt.kind == "pairs") {
    const fs::path dir(opt.out);
    fs::create_directories(dir);
    const auto pairs = harness::builtin_case_pairs();
    for (const auto& p : pairs) {
      io::write_text(dir / (p.name + ".vuln.c"), p.vulnerable.code);
      io::write_text(dir / (p.name + ".fixed.c"), p.patched.code);
    }
    print_json({{"pairs", pairs.size()}, {"out", opt.out}});
    return kExitOk;
  }
  harness::DatasetSplit data;
  if (opt.kind == "marker")
    data = harness::marker_dataset(opt.gen);
  else if (opt.kind == "separability")
    data = harness::separability_dataset(opt.gen);
  else
    throw Error(ErrorKind::kInvalidConfig, "unknown synthetic kind '" + opt.kind + "'");
  io::write_text(opt.out, harness::dataset_to_jsonl(data));
  print_json({{"dataset", data.name}, {"out", opt.out}, {"counts", data.counts_json()}});
  return kExitOk;
}

}  // namespace

void register_case_study(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<CaseStudyOptions>();
  auto* cmd = app.add_subcommand("case-study", "Score vulnerable/patched pairs and tabulate resolved verdicts");
  cmd->add_option("--ckpt", opt->ckpt, "Checkpoint directory")->required();
  cmd->add_option("--pairs", opt->pairs, "Directory of <name>.vuln.c / <name>.fixed.c files");
  cmd->add_flag("--builtin", opt->builtin, "Use the four built-in pairs instead of --pairs");
  cmd->add_option("--threshold", opt->threshold, "Decision threshold (default: the checkpoint's)");
  cmd->add_option("--out", opt->out, "Also write verdicts as JSON");
  cmd->callback([opt, &exit_code] { exit_code = run_case_study(*opt); });
}

void register_export_alpaca(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<ExportOptions>();
  auto* cmd = app.add_subcommand("export-alpaca", "Write instruction/input/output JSONL records");
  cmd->add_option("--dataset", opt->dataset, "Labelled JSONL dataset")->required();
  cmd->add_option("--out", opt->out, "Output JSONL")->required();
  cmd->callback([opt, &exit_code] { exit_code = run_export_alpaca(*opt); });
}

void register_synth(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<SynthOptions>();
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic dataset or the built-in case pairs");
  cmd->add_option("--kind", opt->kind, "marker, separability or pairs")->capture_default_str();
  cmd->add_option("--out", opt->out, "JSONL path (directory for pairs)")->required();
  cmd->add_option("--count", opt->gen.count, "Number of functions")->capture_default_str();
  cmd->add_option("--seed", opt->gen.seed, "Generator seed")->capture_default_str();
  cmd->add_option("--train-fraction", opt->gen.train_fraction)->capture_default_str();
  cmd->add_option("--validation-fraction", opt->gen.validation_fraction)->capture_default_str();
  cmd->callback([opt, &exit_code] { exit_code = run_synth(*opt); });
}

}  // namespace vulnformer::cli
