#include "vulnformer/harness/metrics.hpp"

#include <cstdio>

#include "vulnformer/error.hpp"

namespace vulnformer::harness {

namespace {

double ratio(std::size_t num, std::size_t den, const char* what, std::vector<std::string>& warnings) {
  if (den == 0) {
    warnings.push_back(std::string(what) + " has a zero denominator; reported as 0");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

EvalReport compute_metrics(std::span<const Prediction> predictions, double threshold) {
  if (predictions.empty()) throw Error(ErrorKind::kEmptyPredictions, "no predictions to score");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
  EvalReport r;
  r.threshold = threshold;
  for (const Prediction& p : predictions) {
    bool predicted = p.probability >= threshold;
    bool actual = p.label == 1;
    if (predicted && actual) ++r.tp;
    else if (predicted) ++r.fp;
    else if (actual) ++r.fn;
    else ++r.tn;
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total());
  r.precision = ratio(r.tp, r.tp + r.fp, "precision", r.warnings);
  r.recall = ratio(r.tp, r.tp + r.fn, "recall", r.warnings);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.warnings.push_back("f1 has a zero denominator; reported as 0");
  }
  return r;
}

nlohmann::json EvalReport::to_json() const {
  return {{"tp", tp},          {"fp", fp},
          {"tn", tn},          {"fn", fn},
          {"total", total()},  {"accuracy", accuracy},
          {"precision", precision}, {"recall", recall},
          {"f1", f1},          {"threshold", threshold},
          {"warnings", warnings}};
}

std::string EvalReport::to_markdown() const {
  std::string out = "| TP | FP | TN | FN | ACC | Precision | Recall | F1 |\n";
  out += "|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  out += "| " + std::to_string(tp) + " | " + std::to_string(fp) + " | " + std::to_string(tn) + " | " +
         std::to_string(fn) + " | " + fixed4(accuracy) + " | " + fixed4(precision) + " | " + fixed4(recall) +
         " | " + fixed4(f1) + " |\n";
  return out;
}

}  // namespace vulnformer::harness
