#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "commands.hpp"
#include "vulnformer/harness/ablation.hpp"
#include "vulnformer/harness/dataset.hpp"
#include "vulnformer/io/files.hpp"
#include "vulnformer/model/checkpoint.hpp"

namespace vulnformer::cli {

namespace fs = std::filesystem;

namespace {

harness::Split split_or_throw(const std::string& name) {
  auto split = harness::parse_split(name);
  if (!split) throw Error(ErrorKind::kInvalidConfig, "unknown split '" + name + "'");
  return *split;
}

embedding::PreserveList read_preserve_file(const std::string& path) {
  embedding::PreserveList names;
  if (path.empty()) return names;
  std::istringstream in(io::read_text(path));
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line.front() != '#') names.insert(line);
  }
  return names;
}

// ---- fit-vocab -------------------------------------------------------------

struct FitVocabOptions {
  std::string dataset, out, split = "train", preserve;
  std::size_t min_count = 1;
  bool no_declared = false;
};

int run_fit_vocab(const FitVocabOptions& opt) {
  const auto data = harness::load_dataset(opt.dataset);
  embedding::FitOptions fit;
  fit.min_count = opt.min_count;
  fit.preserve = read_preserve_file(opt.preserve);
  fit.collect_declared_names = !opt.no_declared;
  const auto vocab = embedding::Vocabulary::fit(data.units(split_or_throw(opt.split)), fit);
  vocab.save(opt.out);
  print_json({{"vocab", opt.out}, {"size", vocab.size()}, {"preserved", vocab.preserve_list().size()}});
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainOptions {
  std::string dataset, config, out, ablate = "baseline", vocab;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::size_t threads = 0;
  bool quiet = false;
};

int run_train(const TrainOptions& opt) {
  const auto data = harness::load_dataset(opt.dataset);
  RunConfig run = load_run_config(opt.config);
  if (opt.seed) run.train.seed = *opt.seed;
  if (opt.epochs) run.train.epochs = *opt.epochs;
  run.train.validate();
  const model::AblationAxis axis = model::parse_ablation(opt.ablate);

  const embedding::Vocabulary vocab =
      opt.vocab.empty() ? embedding::Vocabulary::fit(data.train) : embedding::Vocabulary::load(opt.vocab);
  model::ModelConfig config = model::apply_ablation(run.model, axis);
  config.vocab_size = vocab.size();
  config.validate();

  const fs::path out(opt.out);
  fs::create_directories(out);
  const nlohmann::json echo = {{"ablation", model::ablation_name(axis)},
                               {"model", model::to_json(config)},
                               {"train", run.train.to_json()},
                               {"dataset", {{"path", opt.dataset}, {"name", data.name}, {"counts", data.counts_json()}}}};
  io::write_json(out / "resolved_config.json", echo);

  codegraph::TruncationCounter truncation;
  const auto train_split = harness::prepare_split(data.train, vocab, config.fusion, opt.threads, &truncation);
  const auto val_split = harness::prepare_split(data.validation, vocab, config.fusion, opt.threads, &truncation);

  model::ConformerModel net = model::ConformerModel::create(config, run.train.seed);
  const auto history = harness::train(net, train_split, val_split.size() ? &val_split : nullptr, run.train,
                                      [&](const harness::EpochRecord& r) {
                                        if (opt.quiet) return;
                                        nlohmann::json row = {{"epoch", r.epoch},
                                                              {"train_loss", r.train_loss},
                                                              {"train_accuracy", r.train_accuracy}};
                                        if (r.val_f1) row["val_f1"] = *r.val_f1;
                                        print_json(row);
                                      });

  model::CheckpointMeta meta;
  meta.ablation = std::string(model::ablation_name(axis));
  meta.trained_steps = history.total_steps;
  meta.epochs = history.epochs.size();
  meta.threshold = run.train.threshold;
  meta.extra = {{"dataset", data.name}, {"seed", run.train.seed}};
  save_checkpoint(out, net, &vocab, meta);
  io::write_json(out / "history.json", history.to_json());

  print_json({{"checkpoint", out.generic_string()},
              {"ablation", meta.ablation},
              {"block_type", config.conformer.conformer_blocks ? "conformer" : "ffn_stack"},
              {"parameters", net.parameter_count()},
              {"epochs", meta.epochs},
              {"steps", meta.trained_steps},
              {"parse_failures", train_split.parse_failures + val_split.parse_failures},
              {"truncated_graphs", truncation.total()}});
  return kExitOk;
}

// ---- eval / predict --------------------------------------------------------

model::Checkpoint load_with_vocab(const std::string& dir) {
  model::Checkpoint ckpt = model::load_checkpoint(dir);
  if (!ckpt.vocab) throw Error(ErrorKind::kIncompatibleCheckpoint, dir + ": checkpoint has no vocabulary");
  return ckpt;
}

struct EvalOptions {
  std::string ckpt, dataset, split = "test", out;
  std::optional<double> threshold;
};

int run_eval(const EvalOptions& opt) {
  model::Checkpoint ckpt = load_with_vocab(opt.ckpt);
  const auto data = harness::load_dataset(opt.dataset);
  const double threshold = opt.threshold.value_or(ckpt.meta.threshold);
  const auto split = harness::prepare_split(data.units(split_or_throw(opt.split)), *ckpt.vocab,
                                            ckpt.model.config().fusion);
  const harness::EvalReport report = harness::evaluate(ckpt.model, split, threshold);
  nlohmann::json j = report.to_json();
  j["split"] = opt.split;
  j["samples"] = split.size();
  j["parse_failures"] = split.parse_failures;
  if (!opt.out.empty()) io::write_json(opt.out, j);
  print_json(j);
  std::cout << "\n" << report.to_markdown();
  return kExitOk;
}

struct PredictOptions {
  std::string ckpt, file;
  std::optional<double> threshold;
};

int run_predict(const PredictOptions& opt) {
  model::Checkpoint ckpt = load_with_vocab(opt.ckpt);
  codegraph::SourceUnit unit;
  unit.id = fs::path(opt.file).filename().string();
  unit.code = io::read_text(opt.file);
  const auto features = model::extract_features(unit, *ckpt.vocab, ckpt.model.config().fusion);
  const double p = ckpt.model.predict_one(features);
  const double threshold = opt.threshold.value_or(ckpt.meta.threshold);
  print_json({{"file", opt.file},
              {"probability", p},
              {"threshold", threshold},
              {"verdict", p >= threshold ? "vulnerable" : "clean"},
              {"parsed", features.parsed}});
  return kExitOk;
}

// ---- ablate ----------------------------------------------------------------

struct AblateOptions {
  std::string dataset, config, out, axes = "all";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::size_t threads = 0;
};

std::vector<model::AblationAxis> parse_axes(const std::string& text) {
  if (text == "all") return model::all_ablation_axes();
  std::vector<model::AblationAxis> axes;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) axes.push_back(model::parse_ablation(item));
  if (axes.empty()) throw Error(ErrorKind::kInvalidConfig, "--axes selects nothing");
  return axes;
}

int run_ablate(const AblateOptions& opt) {
  const auto data = harness::load_dataset(opt.dataset);
  RunConfig run = load_run_config(opt.config);
  if (opt.seed) run.train.seed = *opt.seed;
  if (opt.epochs) run.train.epochs = *opt.epochs;
  run.train.validate();

  harness::AblationOptions options;
  options.base = run.model;
  options.train = run.train;
  options.axes = parse_axes(opt.axes);
  options.init_seed = run.train.seed;
  options.threads = opt.threads;
  const auto vocab = embedding::Vocabulary::fit(data.train);
  const auto runs = harness::run_ablation(data, vocab, options, [](model::AblationAxis axis, const harness::EpochRecord& r) {
    print_json({{"axis", model::ablation_name(axis)}, {"epoch", r.epoch}, {"train_loss", r.train_loss}});
  });

  const std::string markdown = harness::ablation_markdown(runs);
  if (!opt.out.empty()) {
    const fs::path out(opt.out);
    fs::create_directories(out);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : runs) rows.push_back(r.to_json());
    io::write_json(out / "ablation.json", rows);
    io::write_text(out / "ablation.csv", harness::ablation_csv(runs));
    io::write_text(out / "ablation.md", markdown);
  }
  std::cout << markdown;
  return kExitOk;
}

}  // namespace

void register_fit_vocab(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<FitVocabOptions>();
  auto* cmd = app.add_subcommand("fit-vocab", "Fit a token vocabulary on one dataset split");
  cmd->add_option("--dataset", opt->dataset, "JSONL dataset")->required();
  cmd->add_option("--out", opt->out, "Output vocab.json")->required();
  cmd->add_option("--split", opt->split, "Split to fit on")->capture_default_str();
  cmd->add_option("--min-count", opt->min_count, "Drop tokens rarer than this")->capture_default_str();
  cmd->add_option("--preserve", opt->preserve, "File with one identifier per line kept unsplit");
  cmd->add_flag("--no-declared", opt->no_declared, "Do not preserve declared function/variable names");
  cmd->callback([opt, &exit_code] { exit_code = run_fit_vocab(*opt); });
}

void register_train(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<TrainOptions>();
  auto* cmd = app.add_subcommand("train", "Train a model and write a checkpoint directory");
  cmd->add_option("--dataset", opt->dataset, "JSONL dataset")->required();
  cmd->add_option("--config", opt->config, "JSON with optional \"model\" and \"train\" sections");
  cmd->add_option("--out", opt->out, "Checkpoint directory")->required();
  cmd->add_option("--seed", opt->seed, "Overrides train.seed (also seeds initialization)");
  cmd->add_option("--epochs", opt->epochs, "Overrides train.epochs");
  cmd->add_option("--ablate", opt->ablate, "baseline, w/o-ast, w/o-dfg, w/o-cfg, w/o-conformer, "
                                           "w/o-attention-modified or w/o-llm")
      ->capture_default_str();
  cmd->add_option("--vocab", opt->vocab, "Existing vocab.json (default: fit on the train split)");
  cmd->add_option("--threads", opt->threads, "Feature extraction threads (0 = hardware concurrency)");
  cmd->add_flag("--quiet", opt->quiet, "No per-epoch lines");
  cmd->callback([opt, &exit_code] { exit_code = run_train(*opt); });
}

void register_eval(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<EvalOptions>();
  auto* cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  cmd->add_option("--ckpt", opt->ckpt, "Checkpoint directory")->required();
  cmd->add_option("--dataset", opt->dataset, "JSONL dataset")->required();
  cmd->add_option("--split", opt->split, "train, validation or test")->capture_default_str();
  cmd->add_option("--threshold", opt->threshold, "Decision threshold (default: the checkpoint's)");
  cmd->add_option("--out", opt->out, "Also write the JSON report here");
  cmd->callback([opt, &exit_code] { exit_code = run_eval(*opt); });
}

void register_predict(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<PredictOptions>();
  auto* cmd = app.add_subcommand("predict", "Score one C file");
  cmd->add_option("--ckpt", opt->ckpt, "Checkpoint directory")->required();
  cmd->add_option("--file", opt->file, "C source file")->required();
  cmd->add_option("--threshold", opt->threshold, "Decision threshold (default: the checkpoint's)");
  cmd->callback([opt, &exit_code] { exit_code = run_predict(*opt); });
}

void register_ablate(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<AblateOptions>();
  auto* cmd = app.add_subcommand("ablate", "Train and test one model per ablation axis");
  cmd->add_option("--dataset", opt->dataset, "JSONL dataset")->required();
  cmd->add_option("--config", opt->config, "Base run config JSON");
  cmd->add_option("--axes", opt->axes, "Comma-separated axes or \"all\"")->capture_default_str();
  cmd->add_option("--out", opt->out, "Directory for ablation.{json,csv,md}");
  cmd->add_option("--seed", opt->seed, "Overrides train.seed");
  cmd->add_option("--epochs", opt->epochs, "Overrides train.epochs");
  cmd->add_option("--threads", opt->threads, "Feature extraction threads");
  cmd->callback([opt, &exit_code] { exit_code = run_ablate(*opt); });
}

}  // namespace vulnformer::cli
