#pragma once

#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vulnformer/harness/trainer.hpp"
#include "vulnformer/model/config.hpp"

namespace vulnformer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

// Each register_* adds one subcommand whose callback stores its exit code.
void register_extract(CLI::App& app, int& exit_code);
void register_fit_vocab(CLI::App& app, int& exit_code);
void register_train(CLI::App& app, int& exit_code);
void register_eval(CLI::App& app, int& exit_code);
void register_predict(CLI::App& app, int& exit_code);
void register_ablate(CLI::App& app, int& exit_code);
void register_case_study(CLI::App& app, int& exit_code);
void register_export_alpaca(CLI::App& app, int& exit_code);
void register_synth(CLI::App& app, int& exit_code);

// {"model": {...}, "train": {...}}; either section may be missing.
struct RunConfig {
  model::ModelConfig model;
  harness::TrainConfig train;
};
RunConfig load_run_config(const std::filesystem::path& path);

void print_json(const nlohmann::json& value);
void warn_json(const nlohmann::json& value);

}  // namespace vulnformer::cli
