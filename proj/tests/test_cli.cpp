// End-to-end checks of the dtlearn binary: pipeline behaviour, exit codes
// and file-level determinism. The binary path comes in via DTLEARN_BIN.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "dtl/io.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(DTLEARN_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof(buffer), pipe))
    result.out.append(buffer, n);
  const int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dtl_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_rank_accuracy(const std::string& out, int k) {
  const std::string needle = "rank-" + std::to_string(k) + " accuracy: ";
  const auto pos = out.find(needle);
  REQUIRE(pos != std::string::npos);
  return std::stod(out.substr(pos + needle.size()));
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("").code == 1);
  CHECK(run("no-such-command").code == 1);
  CHECK(run("train --no-such-flag").code == 1);
  CHECK(run("gen-synth").code == 1);  // missing required --out
  CHECK(run("--help").code == 0);
  CHECK(run("train --help").code == 0);
}

TEST_CASE("data errors exit with code 2") {
  TempDir dir;
  CHECK(run("train --data " + (dir / "absent.manifest")).code == 2);
  CHECK(run("inspect --model " + (dir / "absent.dtm")).code == 2);
  std::ofstream(dir / "junk.dtm") << "not a model";
  CHECK(run("inspect --model " + (dir / "junk.dtm")).code == 2);
  CHECK(run("gen-synth --out " + (dir / "g") + " --cond-bound 0.5").code == 2);
}

TEST_CASE("inspect --defaults prints a parsable configuration") {
  const auto r = run("inspect --defaults");
  CHECK(r.code == 0);
  const auto config = dtl::parse_train_config(r.out);
  CHECK(config.depth == 2);
}

TEST_CASE("full pipeline on planted data") {
  TempDir dir;
  const std::string data = dir / "data";
  auto gen = run("gen-synth --dim 16 --subjects 30 --samples 3 --noise 0"
                 " --cond-bound 10 --seed 7 --out " + data);
  REQUIRE(gen.code == 0);

  std::ofstream(dir / "train.cfg")
      << "kind = semi\ndepth = 2\nlambda = 0.01\nmu = 1\niters = 40\ntol = 1e-10\n"
      << "[layer 2]\nlambda = 1e-6\niters = 120\ntol = 1e-12\n";

  const std::string model = dir / "model.dtm";
  const std::string trace = dir / "trace.csv";
  auto train = run("train --data " + data + "/train.manifest --config " +
                   (dir / "train.cfg") + " --model " + model + " --trace " + trace);
  REQUIRE(train.code == 0);
  CHECK(train.out.find("trained semi model") != std::string::npos);

  // Trace CSV totals are non-increasing within each (layer, stage) block.
  {
    std::ifstream in(trace);
    std::string line;
    std::getline(in, line);
    REQUIRE(line ==
            "layer,stage,iteration,residual,frob_penalty,logdet_penalty,coupling,total");
    std::string prev_block;
    double prev_total = 0;
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++rows;
      const auto c1 = line.find(','), c2 = line.find(',', line.find(',') + 1);
      const std::string block = line.substr(0, c2);
      const double total = std::stod(line.substr(line.rfind(',') + 1));
      if (block == prev_block)
        CHECK(total <= prev_total + 1e-9 * std::abs(prev_total));
      prev_block = block;
      prev_total = total;
    }
    CHECK(rows > 0);
  }

  auto inspect = run("inspect --model " + model);
  CHECK(inspect.code == 0);
  CHECK(inspect.out.find("kind: semi") != std::string::npos);
  CHECK(inspect.out.find("depth: 2") != std::string::npos);
  CHECK(inspect.out.find("dim: 16") != std::string::npos);

  // encode + map round: mapping a semi model backwards is a data error.
  const std::string codes = dir / "codes.csv";
  CHECK(run("encode --model " + model + " --input " + data + "/x1.csv"
            " --domain 1 --output " + codes).code == 0);
  CHECK(run("map --model " + model + " --input " + codes +
            " --direction 21 --output " + (dir / "back.csv")).code == 2);
  CHECK(run("map --model " + model + " --input " + codes +
            " --direction 12 --output " + (dir / "mapped.csv")).code == 0);

  const std::string rankings = dir / "rankings.csv";
  auto match = run("match --model " + model + " --gallery " + data +
                   "/gallery.manifest --probe " + data + "/probe.manifest"
                   " --output " + rankings);
  REQUIRE(match.code == 0);

  auto cmc = run("eval-cmc --rankings " + rankings + " --output " + (dir / "cmc.csv"));
  REQUIRE(cmc.code == 0);
  CHECK(parse_rank_accuracy(cmc.out, 1) >= 0.95);
  CHECK(parse_rank_accuracy(cmc.out, 10) == doctest::Approx(1.0));

  // CMC CSV exists with the documented header.
  CHECK(slurp(dir / "cmc.csv").rfind("rank,accuracy\n", 0) == 0);

  // Determinism: a second identical run produces a bitwise-identical model.
  const std::string model2 = dir / "model2.dtm";
  REQUIRE(run("train --data " + data + "/train.manifest --config " +
              (dir / "train.cfg") + " --model " + model2 + " --trace " +
              (dir / "trace2.csv")).code == 0);
  CHECK(slurp(model) == slurp(model2));
  CHECK(slurp(trace) == slurp(dir / "trace2.csv"));

  // Same seed regenerates identical data files.
  const std::string data2 = dir / "data2";
  REQUIRE(run("gen-synth --dim 16 --subjects 30 --samples 3 --noise 0"
              " --cond-bound 10 --seed 7 --out " + data2).code == 0);
  CHECK(slurp(data + "/x1.csv") == slurp(data2 + "/x1.csv"));
  CHECK(slurp(data + "/x2.csv") == slurp(data2 + "/x2.csv"));
}

TEST_CASE("manifest misuse is a data error") {
  TempDir dir;
  const std::string data = dir / "data";
  REQUIRE(run("gen-synth --dim 8 --subjects 6 --samples 2 --out " + data).code == 0);
  std::ofstream(dir / "cfg") << "depth = 1\niters = 5\n";
  // probe manifest where a train manifest is expected
  CHECK(run("train --data " + data + "/probe.manifest --config " + (dir / "cfg"))
            .code == 2);
}

TEST_CASE("binary matrix format flows through the pipeline") {
  TempDir dir;
  const std::string data = dir / "data";
  REQUIRE(run("gen-synth --dim 8 --subjects 10 --samples 2 --seed 3"
              " --format binary --out " + data).code == 0);
  CHECK(fs::exists(data + "/x1.dmx"));
  std::ofstream(dir / "cfg") << "depth = 1\niters = 20\nlambda = 1e-4\n";
  CHECK(run("train --data " + data + "/train.manifest --config " + (dir / "cfg") +
            " --model " + (dir / "m.dtm") + " --trace " + (dir / "t.csv")).code == 0);
  CHECK(run("match --model " + (dir / "m.dtm") + " --gallery " + data +
            "/gallery.manifest --probe " + data + "/probe.manifest --output " +
            (dir / "r.csv")).code == 0);
  CHECK(run("eval-cmc --rankings " + (dir / "r.csv") + " --output " +
            (dir / "c.csv")).code == 0);
}
