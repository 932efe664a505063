#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "vulnformer/io/container.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;

  json first_json() const { return json::parse(out.substr(0, out.find('\n'))); }
  json error() const { return json::parse(err.substr(0, err.find('\n'))); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Result run(const std::string& args) {
  static int counter = 0;
  const fs::path io_dir = fs::path(VF_TEST_SCRATCH_DIR) / "cli_io";
  fs::create_directories(io_dir);
  const auto out = io_dir / ("out" + std::to_string(counter) + ".txt");
  const auto err = io_dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = quote(VF_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kSmallConfig = R"({
  "model": {"conformer": {"num_blocks": 1, "num_heads": 2, "model_dim": 16, "ffn_dim": 32, "conv_kernel": 3},
            "fusion": {"max_nodes": 32, "node_dim": 4, "cse_dim": 16, "max_length": 64}},
  "train": {"epochs": 2, "batch_size": 8, "patience": 0}
})";

// Small dataset and config shared by the pipeline cases.
struct Workspace {
  fs::path dir, data, config;
  Workspace() {
    dir = vftest::scratch_dir("cli_pipeline");
    data = dir / "marker.jsonl";
    config = dir / "config.json";
    write(config, kSmallConfig);
    Result r = run("synth --kind marker --count 40 --seed 3 --out " + quote(data.string()));
    REQUIRE(r.code == 0);
  }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

fs::path trained_checkpoint() {
  static fs::path ckpt = [] {
    auto& w = workspace();
    auto out = w.dir / "ckpt";
    Result r = run("train --quiet --dataset " + quote(w.data.string()) + " --config " + quote(w.config.string()) +
                   " --seed 5 --out " + quote(out.string()));
    REQUIRE(r.code == 0);
    return out;
  }();
  return ckpt;
}

const char* kTenStatements =
    "int ten(int a) {\n  a = a + 1;\n  a = a + 2;\n  a = a + 3;\n  a = a + 4;\n  a = a + 5;\n"
    "  a = a + 6;\n  a = a + 7;\n  a = a + 8;\n  a = a + 9;\n  return a;\n}\n";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help for the tool and every command") {
    Result top = run("--help");
    CHECK(top.code == 0);
    for (const char* cmd : {"extract", "fit-vocab", "train", "eval", "predict", "ablate", "case-study",
                            "export-alpaca", "synth"}) {
      CAPTURE(cmd);
      CHECK(top.out.find(cmd) != std::string::npos);
      Result r = run(std::string(cmd) + " --help");
      CHECK(r.code == 0);
      CHECK(r.out.find("--") != std::string::npos);
    }
  }

  TEST_CASE("usage errors are one JSON line on stderr") {
    Result r = run("train --no-such-flag");
    CHECK(r.code == 1);
    CHECK(r.error()["error"] == "usage");
    CHECK(r.out.empty());
    Result none = run("");
    CHECK(none.code == 1);
  }

  TEST_CASE("extract: one graph kind gives one container entry") {
    auto dir = vftest::scratch_dir("cli_extract");
    write(dir / "f.c", "int f(int x) { if (x) return 1; return 0; }\n");
    Result r = run("extract --input " + quote((dir / "f.c").string()) + " --graphs cfg --dot --out " +
                   quote((dir / "out").string()));
    REQUIRE(r.code == 0);
    auto c = vulnformer::io::MatrixContainer::load(dir / "out" / "f.dhmx");
    REQUIRE(c.size() == 1);
    CHECK(c.entries()[0].name == "cfg");
    CHECK(c.entries()[0].shape == vulnformer::numerics::Shape{256, 256});
    CHECK(fs::exists(dir / "out" / "f.cfg.dot"));
    CHECK_FALSE(fs::exists(dir / "out" / "f.ast.dot"));
    CHECK(r.first_json()["graphs"] == json::array({"cfg"}));
  }

  TEST_CASE("extract: an unparseable file is a partial failure") {
    auto dir = vftest::scratch_dir("cli_extract_bad");
    write(dir / "good.c", "int g(void) { return 1; }\n");
    write(dir / "bad.c", "@@@ ### $$$\n");
    Result r = run("extract --input " + quote(dir.string()) + " --out " + quote((dir / "out").string()));
    CHECK(r.code == 2);
    json s = json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(s["files"] == 2);
    CHECK(s["failed"] == 1);
    CHECK(s["parsed"] == 1);
    CHECK(fs::exists(dir / "out" / "good.dhmx"));
    CHECK(r.err.find("bad.c") != std::string::npos);
  }

  TEST_CASE("extract: truncation is counted") {
    auto dir = vftest::scratch_dir("cli_extract_trunc");
    write(dir / "ten.c", kTenStatements);
    Result r = run("extract --input " + quote((dir / "ten.c").string()) + " --graphs cfg --max-nodes 4 --out " +
                   quote((dir / "out").string()));
    REQUIRE(r.code == 0);
    json s = json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(s["truncation"]["cfg"] == 1);
    CHECK(s["truncation"]["total"] == 1);
  }

  TEST_CASE("train: missing dataset is an io error") {
    auto dir = vftest::scratch_dir("cli_missing");
    Result r = run("train --dataset " + quote((dir / "nope.jsonl").string()) + " --out " + quote((dir / "c").string()));
    CHECK(r.code == 1);
    CHECK(r.error()["error"] == "io");
    CHECK(r.error().contains("message"));
  }

  TEST_CASE("train: the ablation is echoed into the resolved config") {
    auto& w = workspace();
    auto out = w.dir / "ablated";
    Result r = run("train --quiet --ablate w/o-conformer --epochs 1 --dataset " + quote(w.data.string()) +
                   " --config " + quote(w.config.string()) + " --out " + quote(out.string()));
    REQUIRE(r.code == 0);
    json resolved = json::parse(slurp(out / "resolved_config.json"));
    CHECK(resolved["ablation"] == "w/o-conformer");
    CHECK(resolved["model"]["conformer"]["block_type"] == "ffn_stack");
    CHECK(r.first_json()["block_type"] == "ffn_stack");
  }

  TEST_CASE("train: same seed, same bytes") {
    auto& w = workspace();
    auto a = trained_checkpoint();
    auto b = w.dir / "again";
    Result r = run("train --quiet --dataset " + quote(w.data.string()) + " --config " + quote(w.config.string()) +
                   " --seed 5 --out " + quote(b.string()));
    REQUIRE(r.code == 0);
    for (const char* f : {"model.dhmx", "config.json", "vocab.json", "history.json"}) {
      CAPTURE(f);
      CHECK(slurp(a / f) == slurp(b / f));
    }
  }

  TEST_CASE("eval: counts sum to the split size") {
    auto& w = workspace();
    Result r = run("eval --ckpt " + quote(trained_checkpoint().string()) + " --dataset " + quote(w.data.string()));
    REQUIRE(r.code == 0);
    json rep = r.first_json();
    std::size_t test = 0;
    std::istringstream in(slurp(w.data));
    for (std::string line; std::getline(in, line);)
      if (!line.empty() && json::parse(line)["split"] == "test") ++test;
    CHECK(rep["tp"].get<std::size_t>() + rep["fp"].get<std::size_t>() + rep["tn"].get<std::size_t>() +
              rep["fn"].get<std::size_t>() ==
          test);
    CHECK(r.out.find("| ACC") != std::string::npos);
  }

  TEST_CASE("eval: an empty split is fatal") {
    auto& w = workspace();
    auto only_train = w.dir / "train_only.jsonl";
    write(only_train, R"({"id": "a", "code": "int f(void) { return 0; }", "label": 0, "split": "train"})"
                      "\n");
    Result r = run("eval --ckpt " + quote(trained_checkpoint().string()) + " --dataset " + quote(only_train.string()));
    CHECK(r.code == 1);
    CHECK(r.error()["error"] == "EmptyPredictions");
  }

  TEST_CASE("eval: a non-checkpoint directory is rejected") {
    auto dir = vftest::scratch_dir("cli_not_ckpt");
    write(dir / "config.json", "{}");
    Result r = run("eval --ckpt " + quote(dir.string()) + " --dataset " + quote(workspace().data.string()));
    CHECK(r.code == 1);
    CHECK(r.error()["error"] == "incompatible-checkpoint");
  }

  TEST_CASE("predict is deterministic") {
    auto dir = vftest::scratch_dir("cli_predict");
    write(dir / "f.c", "void f(char *s) { gets(s); }\n");
    const std::string args = "predict --ckpt " + quote(trained_checkpoint().string()) + " --file " +
                             quote((dir / "f.c").string());
    Result a = run(args), b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    double p = a.first_json()["probability"];
    CHECK((p > 0.0 && p < 1.0));
  }

  TEST_CASE("export-alpaca writes one record per unit, idempotently") {
    auto& w = workspace();
    auto a = w.dir / "a.jsonl", b = w.dir / "b.jsonl";
    REQUIRE(run("export-alpaca --dataset " + quote(w.data.string()) + " --out " + quote(a.string())).code == 0);
    REQUIRE(run("export-alpaca --dataset " + quote(w.data.string()) + " --out " + quote(b.string())).code == 0);
    CHECK(slurp(a) == slurp(b));
    auto text = slurp(a);
    CHECK(std::count(text.begin(), text.end(), '\n') == 40);
  }

  TEST_CASE("case-study on an empty directory and on the builtin pairs") {
    auto dir = vftest::scratch_dir("cli_case");
    Result empty = run("case-study --ckpt " + quote(trained_checkpoint().string()) + " --pairs " + quote(dir.string()));
    CHECK(empty.code == 0);
    Result builtin = run("case-study --builtin --ckpt " + quote(trained_checkpoint().string()));
    CHECK(builtin.code == 0);
    for (const char* name : {"buffer_overflow", "buffer_size_arithmetic", "missing_null_check", "missing_context_check"})
      CHECK(builtin.out.find(name) != std::string::npos);
  }
}
