#include <algorithm>
#include <atomic>
#include <cctype>
#include <memory>
#include <thread>
#include <vector>

#include "commands.hpp"
#include "vulnformer/codegraph/dfg.hpp"
#include "vulnformer/codegraph/dot.hpp"
#include "vulnformer/io/container.hpp"
#include "vulnformer/io/files.hpp"

namespace vulnformer::cli {

namespace fs = std::filesystem;
using codegraph::GraphKind;

namespace {

struct ExtractOptions {
  std::string input;
  std::string graphs = "ast,cfg,dfg";
  std::string out;
  std::size_t max_nodes = codegraph::kDefaultMaxNodes;
  bool dot = false;
  std::size_t threads = 0;
};

struct FileResult {
  std::string file;
  std::string stem;
  bool parsed = false;
  std::string error;
  nlohmann::json nodes = nlohmann::json::object();
  nlohmann::json truncated = nlohmann::json::object();
  std::size_t syntax_errors = 0;
  std::size_t diagnostics = 0;
};

bool is_c_source(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".c" || ext == ".h";
}

std::vector<fs::path> collect_inputs(const fs::path& input) {
  if (!fs::exists(input)) throw Error(ErrorKind::kIo, "input not found: " + input.string());
  std::vector<fs::path> files;
  if (fs::is_regular_file(input)) {
    files.push_back(input);
    return files;
  }
  for (const auto& entry : fs::recursive_directory_iterator(input))
    if (entry.is_regular_file() && is_c_source(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Output stem: path relative to the input root, separators flattened.
std::string output_stem(const fs::path& file, const fs::path& root) {
  fs::path rel = fs::is_regular_file(root) ? file.filename() : fs::relative(file, root);
  rel.replace_extension();
  std::string s = rel.generic_string();
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

std::vector<GraphKind> parse_graph_list(const std::string& text) {
  std::vector<GraphKind> kinds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    if (!item.empty()) {
      auto kind = codegraph::parse_graph_kind(item);
      if (!kind) throw Error(ErrorKind::kInvalidConfig, "unknown graph kind '" + item + "'");
      if (std::find(kinds.begin(), kinds.end(), *kind) == kinds.end()) kinds.push_back(*kind);
    }
    pos = comma + 1;
  }
  if (kinds.empty()) throw Error(ErrorKind::kInvalidConfig, "--graphs selects no graph");
  return kinds;
}

FileResult extract_one(const fs::path& file, const std::string& stem, const ExtractOptions& opt,
                       const std::vector<GraphKind>& kinds, const fs::path& out,
                       codegraph::TruncationCounter& counter) {
  FileResult r;
  r.file = file.generic_string();
  r.stem = stem;
  try {
    codegraph::SyntaxTree tree = codegraph::parse(io::read_text(file));
    r.syntax_errors = tree.error_count();
    codegraph::DataFlow flow = codegraph::analyze_dataflow(tree);
    r.diagnostics = flow.cfg.graph.diagnostics.size();

    io::MatrixContainer archive;
    for (GraphKind kind : kinds) {
      codegraph::CodeGraph g = kind == GraphKind::kAst   ? tree.graph()
                               : kind == GraphKind::kCfg ? flow.cfg.graph
                                                         : flow.graph;
      const auto adj = codegraph::to_adjacency(g, opt.max_nodes, &counter);
      std::string name(codegraph::graph_kind_name(kind));
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
      r.nodes[name] = g.node_count();
      r.truncated[name] = adj.truncated;
      std::vector<float> values(adj.data.begin(), adj.data.end());
      archive.add(name, numerics::Tensor::from_values({adj.size, adj.size}, std::move(values)));
      if (opt.dot) io::write_text(out / (stem + "." + name + ".dot"), codegraph::to_dot(g));
    }
    archive.save(out / (stem + ".dhmx"));
    r.parsed = true;
  } catch (const Error& e) {
    r.error = std::string(error_kind_name(e.kind())) + ": " + e.what();
  } catch (const std::exception& e) {
    r.error = std::string("io: ") + e.what();
  }
  return r;
}

int run_extract(const ExtractOptions& opt) {
  const auto kinds = parse_graph_list(opt.graphs);
  if (opt.max_nodes == 0) throw Error(ErrorKind::kInvalidConfig, "--max-nodes must be positive");
  const fs::path root(opt.input);
  const auto files = collect_inputs(root);
  const fs::path out(opt.out);
  fs::create_directories(out);

  std::vector<FileResult> results(files.size());
  codegraph::TruncationCounter counter;
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(files.size(), opt.threads ? opt.threads : std::thread::hardware_concurrency()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < files.size(); i = next++)
          results[i] = extract_one(files[i], output_stem(files[i], root), opt, kinds, out, counter);
      });
    }
  }

  std::string stats;
  std::size_t failed = 0;
  for (const auto& r : results) {
    nlohmann::json row = {{"file", r.file},     {"stem", r.stem},
                          {"parsed", r.parsed}, {"syntax_errors", r.syntax_errors},
                          {"diagnostics", r.diagnostics}, {"nodes", r.nodes},
                          {"truncated", r.truncated}};
    if (!r.parsed) {
      row["error"] = r.error;
      ++failed;
      warn_json({{"warning", "extract-failed"}, {"file", r.file}, {"message", r.error}});
    }
    stats += row.dump() + "\n";
  }
  io::write_text(out / "stats.jsonl", stats);

  nlohmann::json graphs = nlohmann::json::array();
  for (GraphKind k : kinds) {
    std::string name(codegraph::graph_kind_name(k));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    graphs.push_back(name);
  }
  const nlohmann::json summary = {
      {"files", files.size()},
      {"parsed", files.size() - failed},
      {"failed", failed},
      {"graphs", graphs},
      {"max_nodes", opt.max_nodes},
      {"truncation", {{"ast", counter.ast.load()}, {"cfg", counter.cfg.load()}, {"dfg", counter.dfg.load()},
                      {"total", counter.total()}}}};
  io::write_json(out / "summary.json", summary);
  print_json(summary);
  return failed == 0 ? kExitOk : kExitPartial;
}

}  // namespace

void register_extract(CLI::App& app, int& exit_code) {
  auto opt = std::make_shared<ExtractOptions>();
  auto* cmd = app.add_subcommand("extract", "Build AST/CFG/DFG adjacency archives (and DOT) for C sources");
  cmd->add_option("--input", opt->input, "C file or directory (searched recursively for .c/.h)")->required();
  cmd->add_option("--graphs", opt->graphs, "Comma-separated subset of ast,cfg,dfg")->capture_default_str();
  cmd->add_option("--out", opt->out, "Output directory")->required();
  cmd->add_option("--max-nodes", opt->max_nodes, "Adjacency size; larger graphs are truncated")
      ->capture_default_str();
  cmd->add_flag("--dot", opt->dot, "Also write <stem>.<graph>.dot");
  cmd->add_option("--threads", opt->threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
  cmd->callback([opt, &exit_code] { exit_code = run_extract(*opt); });
}

}  // namespace vulnformer::cli
