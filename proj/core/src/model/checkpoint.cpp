#include "vulnformer/model/checkpoint.hpp"

#include <algorithm>

#include "vulnformer/io/container.hpp"
#include "vulnformer/io/files.hpp"

namespace vulnformer::model {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void incompatible(const std::string& message) {
  throw Error(ErrorKind::kIncompatibleCheckpoint, message);
}

void restore(const io::MatrixContainer& archive, const std::string& prefix,
             const std::vector<ParameterStore::Entry>& entries) {
  for (const auto& e : entries) {
    const io::ContainerEntry* stored = archive.find(prefix + e.name);
    if (stored == nullptr) incompatible("checkpoint lacks tensor '" + e.name + "'");
    if (stored->shape != e.tensor.shape() || stored->dtype() != io::DType::kF32) {
      incompatible("tensor '" + e.name + "' is " + numerics::shape_string(stored->shape) + ", config expects " +
                   numerics::shape_string(e.tensor.shape()));
    }
    const auto& values = std::get<std::vector<float>>(stored->data);
    Tensor t = e.tensor;
    std::copy(values.begin(), values.end(), t.mutable_values().begin());
  }
}

}  // namespace

void save_checkpoint(const fs::path& dir, const ConformerModel& model, const embedding::Vocabulary* vocab,
                     const CheckpointMeta& meta) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());

  io::MatrixContainer archive;
  for (const auto& e : model.store().parameters()) archive.add("param/" + e.name, e.tensor);
  for (const auto& e : model.store().buffers()) archive.add("buffer/" + e.name, e.tensor);
  archive.save(dir / "model.dhmx");

  nlohmann::json config = {
      {"format", "vulnformer-checkpoint"},
      {"version", kCheckpointVersion},
      {"model", to_json(model.config())},
      {"ablation", meta.ablation},
      {"trained_steps", meta.trained_steps},
      {"epochs", meta.epochs},
      {"threshold", meta.threshold},
      {"parameter_count", model.parameter_count()},
      {"extra", meta.extra},
  };
  io::write_json(dir / "config.json", config);
  if (vocab != nullptr) {
    vocab->save(dir / "vocab.json");
  } else {
    fs::remove(dir / "vocab.json", ec);
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, "checkpoint directory not found: " + dir.string());
  nlohmann::json config = io::read_json(dir / "config.json");
  if (!config.is_object() || config.value("format", "") != "vulnformer-checkpoint") {
    incompatible(dir.string() + " is not a checkpoint");
  }
  if (config.value("version", -1) != kCheckpointVersion) {
    incompatible("checkpoint version " + config.value("version", nlohmann::json(nullptr)).dump() + " is not supported");
  }
  ModelConfig model_config;
  try {
    model_config = model_config_from_json(config.at("model"));
  } catch (const Error& e) {
    incompatible(std::string("checkpoint config rejected: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    incompatible(std::string("checkpoint config rejected: ") + e.what());
  }

  std::optional<embedding::Vocabulary> vocab;
  if (fs::exists(dir / "vocab.json")) vocab = embedding::Vocabulary::load(dir / "vocab.json");
  const auto& fusion = model_config.fusion;
  if (fusion.use_cse && fusion.embedder != embedding::EmbedderKind::kIngested) {
    if (!vocab) incompatible("checkpoint needs vocab.json for its token embedder");
    if (vocab->size() != model_config.vocab_size) {
      incompatible("vocabulary has " + std::to_string(vocab->size()) + " tokens, model expects " +
                   std::to_string(model_config.vocab_size));
    }
  }

  Checkpoint out{ConformerModel(model_config), std::move(vocab), {}};
  io::MatrixContainer archive = io::MatrixContainer::load(dir / "model.dhmx");
  restore(archive, "param/", out.model.store().parameters());
  restore(archive, "buffer/", out.model.store().buffers());
  if (archive.size() != out.model.store().parameters().size() + out.model.store().buffers().size()) {
    incompatible("checkpoint holds tensors the config does not describe");
  }
  out.meta.ablation = config.value("ablation", "baseline");
  out.meta.trained_steps = config.value("trained_steps", std::size_t{0});
  out.meta.epochs = config.value("epochs", std::size_t{0});
  out.meta.threshold = config.value("threshold", 0.5);
  out.meta.extra = config.value("extra", nlohmann::json::object());
  return out;
}

}  // namespace vulnformer::model
