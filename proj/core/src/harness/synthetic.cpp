#include "vulnformer/harness/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace vulnformer::harness {

namespace {

constexpr const char* kVerbs[] = {"handle", "process", "update", "parse", "load", "copy", "read", "emit"};
constexpr const char* kNouns[] = {"packet", "frame", "header", "block", "record", "chunk", "entry", "buffer"};

// Uses raw engine output with `%` so that generation does not depend on the
// standard library's distribution algorithms.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  std::mt19937_64& engine() { return rng_; }

  std::string function_name() {
    return std::string(kVerbs[below(8)]) + "_" + kNouns[below(8)] + "_" + std::to_string(below(100));
  }

  std::string filler() {
    switch (below(6)) {
      case 0: return "  total = total + " + std::to_string(1 + below(9)) + ";\n";
      case 1: return "  if (count > " + std::to_string(below(10)) + ") {\n    total = total - count;\n  }\n";
      case 2: return "  for (idx = 0; idx < " + std::to_string(2 + below(6)) + "; idx++) {\n    total += idx;\n  }\n";
      case 3: return "  log_value(total);\n";
      case 4: return "  while (tmp > 0) {\n    tmp = tmp - 1;\n  }\n";
      default: return "  count = count * 2;\n";
    }
  }

  // Body with `planted` inserted at a random position among 1-3 fillers.
  std::string function(const std::string& planted) {
    std::vector<std::string> stmts;
    std::size_t n = 1 + below(3);
    for (std::size_t i = 0; i < n; ++i) stmts.push_back(filler());
    if (!planted.empty()) stmts.insert(stmts.begin() + static_cast<std::ptrdiff_t>(below(n + 1)), planted);
    std::string code = "int " + function_name() + "(char *src, int n, int count) {\n";
    code += "  char buf[16];\n  int size = 16;\n  int total = 0;\n  int idx = 0;\n  int tmp = n;\n";
    for (const auto& s : stmts) code += s;
    code += "  return total;\n}\n";
    return code;
  }

 private:
  std::mt19937_64 rng_;
};

template <typename Make>
DatasetSplit build(const SyntheticOptions& options, const std::string& prefix, const std::string& name,
                   const std::string& cwe, Make make) {
  if (options.train_fraction < 0 || options.validation_fraction < 0 ||
      options.train_fraction + options.validation_fraction > 1.0) {
    throw Error(ErrorKind::kInvalidConfig, "split fractions must be non-negative and sum to at most 1");
  }
  Generator gen(options.seed);
  std::vector<SourceUnit> units;
  const std::size_t width = std::to_string(options.count).size();
  for (std::size_t i = 0; i < options.count; ++i) {
    bool vulnerable = i % 2 == 1;
    std::string index = std::to_string(i);
    SourceUnit u;
    u.id = prefix + "-" + std::string(width - index.size(), '0') + index;
    u.code = make(gen, vulnerable);
    u.label = vulnerable ? codegraph::Label::kVulnerable : codegraph::Label::kClean;
    if (vulnerable) u.vulnerability_type = cwe;
    units.push_back(std::move(u));
  }
  std::vector<std::size_t> order(units.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[gen.below(i)]);

  DatasetSplit data;
  data.name = name;
  const auto n_train = static_cast<std::size_t>(options.train_fraction * static_cast<double>(units.size()));
  const auto n_val = static_cast<std::size_t>(options.validation_fraction * static_cast<double>(units.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    Split s = k < n_train ? Split::kTrain : k < n_train + n_val ? Split::kValidation : Split::kTest;
    data.units(s).push_back(std::move(units[order[k]]));
  }
  return data;
}

}  // namespace

DatasetSplit marker_dataset(const SyntheticOptions& options) {
  return build(options, "marker", "synthetic-marker", "CWE-242", [](Generator& gen, bool vulnerable) {
    if (vulnerable) return gen.function("  " + std::string(kMarkerCall) + "(buf);\n");
    return gen.function(gen.below(2) == 0 ? "  buf[0] = 0;\n" : "");
  });
}

DatasetSplit separability_dataset(const SyntheticOptions& options) {
  return build(options, "sep", "synthetic-separability", "CWE-787", [](Generator& gen, bool vulnerable) {
    if (vulnerable) return gen.function("  memcpy(buf, src, n);\n");
    if (gen.below(2) == 0) return gen.function("  if (n < size) {\n    memcpy(buf, src, n);\n  }\n");
    return gen.function(gen.below(2) == 0 ? "  buf[0] = 0;\n" : "");
  });
}

std::vector<CasePair> builtin_case_pairs() {
  auto pair = [](std::string name, std::string vuln, std::string fixed, std::string cwe) {
    CasePair p;
    p.name = name;
    p.vulnerable = {name + ".vuln", std::move(vuln)};
    p.vulnerable.label = codegraph::Label::kVulnerable;
    p.vulnerable.vulnerability_type = std::move(cwe);
    p.patched = {name + ".fixed", std::move(fixed)};
    p.patched.label = codegraph::Label::kClean;
    return p;
  };
  const std::string prologue =
      "int copy_packet(char *src, int n, int count) {\n"
      "  char buf[16];\n  int size = 16;\n  int total = 0;\n  int idx = 0;\n  int tmp = n;\n"
      "  total = total + 3;\n";
  const std::string epilogue = "  log_value(total);\n  return total;\n}\n";

  std::vector<CasePair> pairs;
  pairs.push_back(pair("buffer_overflow", prologue + "  memcpy(buf, src, n);\n" + epilogue,
                       prologue + "  if (n < size) {\n    memcpy(buf, src, n);\n  }\n" + epilogue, "CWE-787"));
  pairs.push_back(pair("buffer_size_arithmetic",
                       "char *dup_name(const char *name) {\n"
                       "  int len = strlen(name);\n"
                       "  char *copy = malloc(len);\n"
                       "  if (copy == NULL)\n    return NULL;\n"
                       "  strcpy(copy, name);\n"
                       "  return copy;\n}\n",
                       "char *dup_name(const char *name) {\n"
                       "  int len = strlen(name);\n"
                       "  char *copy = malloc(len + 1);\n"
                       "  if (copy == NULL)\n    return NULL;\n"
                       "  strcpy(copy, name);\n"
                       "  return copy;\n}\n",
                       "CWE-131"));
  pairs.push_back(pair("missing_null_check",
                       "int packet_length(struct packet *pkt) {\n"
                       "  int len = pkt->len;\n"
                       "  return len + 4;\n}\n",
                       "int packet_length(struct packet *pkt) {\n"
                       "  if (pkt == NULL)\n    return -1;\n"
                       "  int len = pkt->len;\n"
                       "  return len + 4;\n}\n",
                       "CWE-476"));
  pairs.push_back(pair("missing_context_check",
                       "void reset_state(struct ctx *c, int size) {\n"
                       "  memset(c->buf, 0, size);\n"
                       "  c->used = 0;\n}\n",
                       "void reset_state(struct ctx *c, int size) {\n"
                       "  if (!c || !c->buf)\n    return;\n"
                       "  memset(c->buf, 0, size);\n"
                       "  c->used = 0;\n}\n",
                       "CWE-476"));
  return pairs;
}

}  // namespace vulnformer::harness
