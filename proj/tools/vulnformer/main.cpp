#include <exception>
#include <iostream>

#include "commands.hpp"
#include "vulnformer/error.hpp"
#include "vulnformer/io/files.hpp"

namespace vulnformer::cli {

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig config;
  if (path.empty()) return config;
  const nlohmann::json j = io::read_json(path);
  if (!j.is_object()) throw Error(ErrorKind::kInvalidConfig, path.string() + ": expected a JSON object");
  if (j.contains("model")) config.model = model::model_config_from_json(j.at("model"));
  if (j.contains("train")) config.train = harness::TrainConfig::from_json(j.at("train"));
  return config;
}

void print_json(const nlohmann::json& value) { std::cout << value.dump() << "\n" << std::flush; }
void warn_json(const nlohmann::json& value) { std::cerr << value.dump() << "\n" << std::flush; }

}  // namespace vulnformer::cli

namespace {

int fail(std::string_view kind, const std::string& message) {
  vulnformer::cli::warn_json({{"error", kind}, {"message", message}});
  return vulnformer::cli::kExitFatal;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace vulnformer::cli;
  CLI::App app{"vulnformer: code graphs, Conformer training and evaluation for C vulnerability detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vulnformer 0.1.0");

  int exit_code = kExitOk;
  register_extract(app, exit_code);
  register_fit_vocab(app, exit_code);
  register_train(app, exit_code);
  register_eval(app, exit_code);
  register_predict(app, exit_code);
  register_ablate(app, exit_code);
  register_case_study(app, exit_code);
  register_export_alpaca(app, exit_code);
  register_synth(app, exit_code);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  } catch (const vulnformer::Error& e) {
    return fail(vulnformer::error_kind_name(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail("FormatError", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return exit_code;
}
