#include "vulnformer/harness/ablation.hpp"

#include <cstdio>

namespace vulnformer::harness {

nlohmann::json AblationRun::to_json() const {
  return {{"axis", model::ablation_name(axis)},
          {"config", model::to_json(config)},
          {"parameter_count", parameter_count},
          {"report", report.to_json()},
          {"history", history.to_json()}};
}

std::vector<AblationRun> run_ablation(const DatasetSplit& data, const embedding::Vocabulary& vocab,
                                      const AblationOptions& options, const AblationProgress& progress) {
  if (data.test.empty()) throw Error(ErrorKind::kEmptyPredictions, "ablation needs a non-empty test split");
  std::vector<AblationRun> runs;
  for (model::AblationAxis axis : options.axes) {
    model::ModelConfig config = model::apply_ablation(options.base, axis);
    config.vocab_size = vocab.size();
    model::ConformerModel net = model::ConformerModel::create(config, options.init_seed);

    PreparedSplit train_split = prepare_split(data.train, vocab, config.fusion, options.threads);
    PreparedSplit val_split = prepare_split(data.validation, vocab, config.fusion, options.threads);
    PreparedSplit test_split = prepare_split(data.test, vocab, config.fusion, options.threads);

    AblationRun run;
    run.axis = axis;
    run.config = config;
    run.parameter_count = net.parameter_count();
    run.history = train(net, train_split, &val_split, options.train, [&](const EpochRecord& r) {
      if (progress) progress(axis, r);
    });
    run.report = evaluate(net, test_split, options.train.threshold);
    runs.push_back(std::move(run));
  }
  return runs;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string ablation_markdown(const std::vector<AblationRun>& runs) {
  std::string out = "| Model | ACC | Precision | Recall | F1 | Params |\n|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : runs) {
    out += "| " + std::string(model::ablation_name(r.axis)) + " | " + fixed4(r.report.accuracy) + " | " +
           fixed4(r.report.precision) + " | " + fixed4(r.report.recall) + " | " + fixed4(r.report.f1) + " | " +
           std::to_string(r.parameter_count) + " |\n";
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRun>& runs) {
  std::string out = "axis,tp,fp,tn,fn,accuracy,precision,recall,f1,parameters,epochs\n";
  for (const auto& r : runs) {
    const auto& m = r.report;
    out += std::string(model::ablation_name(r.axis)) + "," + std::to_string(m.tp) + "," + std::to_string(m.fp) + "," +
           std::to_string(m.tn) + "," + std::to_string(m.fn) + "," + fixed4(m.accuracy) + "," + fixed4(m.precision) +
           "," + fixed4(m.recall) + "," + fixed4(m.f1) + "," + std::to_string(r.parameter_count) + "," +
           std::to_string(r.history.epochs.size()) + "\n";
  }
  return out;
}

}  // namespace vulnformer::harness
