#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "vulnformer/codegraph/dfg.hpp"
#include "vulnformer/harness/metrics.hpp"
#include "vulnformer/model/config.hpp"
#include "vulnformer/numerics/tensor.hpp"

namespace vftest {

using vulnformer::numerics::Shape;
using vulnformer::numerics::Tensor64;

std::filesystem::path data_dir();
// Empty directory under the build tree, recreated on every call.
std::filesystem::path scratch_dir(const std::string& name);

// ---- finite differences ----

struct GradReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "<leaf>[<index>] analytic=.. numeric=.."
  bool ok(double tol) const { return checked > 0 && max_rel_error <= tol; }
};

// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero entries from
// turning rounding noise into large ratios.
double relative_error(double analytic, double numeric, double floor = 1e-4);

// Central differences of `loss` w.r.t. every element of every leaf,
// compared with one reverse-mode pass.
GradReport gradcheck(std::vector<std::pair<std::string, Tensor64>> leaves, const std::function<Tensor64()>& loss,
                     double eps = 1e-4);

Tensor64 random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0, bool requires_grad = true);
// sum(y * w): a scalar whose gradient w.r.t. y is w.
Tensor64 probe_loss(const Tensor64& y, const Tensor64& w);

// ---- reaching definitions by path enumeration ----

// (definition site, use site) pairs such that some CFG path leads from the
// definition to the use with no other definition of the same name between.
// Enumerates simple node paths explicitly; exponential but fine for
// functions of a dozen statements.
std::set<std::pair<int, int>> enumerate_def_use(const vulnformer::codegraph::DataFlow& flow);

// ---- metrics ----

struct Recount {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};
Recount recount(const std::vector<vulnformer::harness::Prediction>& preds, double threshold);

// ---- hand-annotated CFG corpus ----

using KeyedEdge = std::tuple<std::string, std::string, std::string>;

struct CorpusFunction {
  std::string name;
  std::string code;
  std::set<KeyedEdge> edges;
  std::size_t diagnostics = 0;
};
std::vector<CorpusFunction> load_cfg_corpus();

// Node keys as described in cfg_corpus.json.
std::vector<std::string> node_keys(const vulnformer::codegraph::CodeGraph& cfg, const std::string& code);
std::set<KeyedEdge> keyed_edges(const vulnformer::codegraph::CodeGraph& cfg, const std::string& code);

// ---- parameter accounting ----

std::size_t closed_form_parameter_count(const vulnformer::model::ModelConfig& config);

}  // namespace vftest
