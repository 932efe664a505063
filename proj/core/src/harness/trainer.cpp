#include "vulnformer/harness/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "vulnformer/numerics/ops.hpp"

namespace vulnformer::harness {

namespace nx = numerics;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kInvalidConfig, "learning rate must be positive");
  if (batch_size < 1) throw Error(ErrorKind::kInvalidConfig, "batch size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "Adam betas must lie in [0, 1)");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorKind::kInvalidConfig, "threshold must lie in (0, 1)");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"optimizer", "adam"},   {"learning_rate", learning_rate},
          {"beta1", beta1},        {"beta2", beta2},
          {"epsilon", epsilon},    {"batch_size", batch_size},
          {"epochs", epochs},      {"seed", seed},
          {"patience", patience},  {"threshold", threshold},
          {"keep_best", keep_best}, {"loss", "binary_cross_entropy"}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& value) {
  TrainConfig c;
  try {
    c.learning_rate = value.value("learning_rate", c.learning_rate);
    c.beta1 = value.value("beta1", c.beta1);
    c.beta2 = value.value("beta2", c.beta2);
    c.epsilon = value.value("epsilon", c.epsilon);
    c.batch_size = value.value("batch_size", c.batch_size);
    c.epochs = value.value("epochs", c.epochs);
    c.seed = value.value("seed", c.seed);
    c.patience = value.value("patience", c.patience);
    c.threshold = value.value("threshold", c.threshold);
    c.keep_best = value.value("keep_best", c.keep_best);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

Adam::Adam(std::vector<model::Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0f);
    v_.emplace_back(p.size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    model::Tensor& p = params_[i];
    if (!p.has_grad()) continue;  // zero gradient: moments stay 0, no movement
    auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0f - b1) * g[k];
      v[k] = b2 * v[k] + (1.0f - b2) * g[k] * g[k];
      double mhat = m[k] / c1, vhat = v[k] / c2;
      w[k] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

PreparedSplit prepare_split(const std::vector<codegraph::SourceUnit>& units, const embedding::Vocabulary& vocab,
                            const model::FusionConfig& fusion, std::size_t threads,
                            codegraph::TruncationCounter* counter) {
  PreparedSplit out;
  out.features.resize(units.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(units.size(), 1));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](std::size_t worker) {
    try {
      for (std::size_t i = worker; i < units.size(); i += threads)
        out.features[i] = model::extract_features(units[i], vocab, fusion, counter);
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t i = 0; i < units.size(); ++i) {
    out.ids.push_back(units[i].id);
    out.labels.push_back(units[i].label == codegraph::Label::kVulnerable ? 1.0f : 0.0f);
    if (!out.features[i].parsed) ++out.parse_failures;
  }
  return out;
}

nlohmann::json TrainHistory::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json row = {{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_accuracy", e.train_accuracy},
                          {"steps", e.steps}};
    row["val_accuracy"] = e.val_accuracy ? nlohmann::json(*e.val_accuracy) : nlohmann::json(nullptr);
    row["val_f1"] = e.val_f1 ? nlohmann::json(*e.val_f1) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  return {{"epochs", std::move(rows)},
          {"best_epoch", best_epoch ? nlohmann::json(*best_epoch) : nlohmann::json(nullptr)},
          {"best_val_f1", best_val_f1},
          {"total_steps", total_steps},
          {"early_stopped", early_stopped}};
}

namespace {

std::vector<const model::SampleFeatures*> gather(const PreparedSplit& split, std::span<const std::size_t> idx) {
  std::vector<const model::SampleFeatures*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&split.features[i]);
  return out;
}

}  // namespace

TrainHistory train(model::ConformerModel& model, const PreparedSplit& train_split, const PreparedSplit* validation,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_split.size() == 0) throw Error(ErrorKind::kEmptyInput, "training split is empty");
  const bool validate = validation != nullptr && validation->size() > 0;

  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  nx::ForwardContext ctx{true, model.config().conformer.dropout, &dropout_rng};
  Adam adam(model.store().trainable(), config.learning_rate, config.beta1, config.beta2, config.epsilon);

  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), 0);
  TrainHistory history;
  std::optional<model::ConformerModel> best;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::span<const std::size_t> idx(order.data() + start, std::min(config.batch_size, order.size() - start));
      auto batch = gather(train_split, idx);
      std::vector<float> targets;
      for (std::size_t i : idx) targets.push_back(train_split.labels[i]);

      model::Tensor logits = model.forward_logits(batch, ctx);
      model::Tensor loss = nx::bce_with_logits(logits, std::span<const float>(targets));
      const float value = loss.item();
      if (!std::isfinite(value)) {
        throw Error(ErrorKind::kDivergence, "non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                                std::to_string(adam.steps() + 1));
      }
      model.store().zero_grad();
      nx::backward(loss);
      adam.step();

      loss_sum += static_cast<double>(value) * static_cast<double>(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) {
        double p = 1.0 / (1.0 + std::exp(-static_cast<double>(logits.values()[b])));
        if ((p >= config.threshold) == (targets[b] > 0.5f)) ++correct;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    record.steps = adam.steps();
    if (validate) {
      EvalReport report = evaluate(model, *validation, config.threshold);
      record.val_accuracy = report.accuracy;
      record.val_f1 = report.f1;
      if (!history.best_epoch || report.f1 > history.best_val_f1) {
        history.best_epoch = epoch;
        history.best_val_f1 = report.f1;
        if (config.keep_best) {
          if (best) best->copy_values_from(model);
          else best.emplace(model.clone());
        }
      }
    }
    history.epochs.push_back(record);
    history.total_steps = adam.steps();
    if (on_epoch) on_epoch(record);
    if (validate && config.patience > 0 && epoch - *history.best_epoch >= config.patience) {
      history.early_stopped = epoch < config.epochs;
      break;
    }
  }
  if (best) model.copy_values_from(*best);
  return history;
}

std::vector<double> predict_probabilities(model::ConformerModel& model, const PreparedSplit& split,
                                          std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(split.size());
  std::vector<std::size_t> idx(split.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    std::span<const std::size_t> chunk(idx.data() + start, std::min(batch_size, idx.size() - start));
    auto probs = model.predict(gather(split, chunk));
    out.insert(out.end(), probs.begin(), probs.end());
  }
  return out;
}

EvalReport evaluate(model::ConformerModel& model, const PreparedSplit& split, double threshold,
                    std::size_t batch_size) {
  std::vector<double> probs = predict_probabilities(model, split, batch_size);
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < probs.size(); ++i) preds.push_back({probs[i], split.labels[i] > 0.5f ? 1 : 0});
  return compute_metrics(preds, threshold);
}

}  // namespace vulnformer::harness
