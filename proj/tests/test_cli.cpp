// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the command-line tool: determinism of the CSV
// output, row self-consistency, and configuration error reporting.
// Paths to the binary and the config directory come from the build system.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string(MIMOSE_CLI_PATH) + " " + args +
                          " 2>" + std::string(MIMOSE_TEST_DIR) + "/cli_err.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.size() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

const std::string kDesk = std::string(MIMOSE_CONFIG_DIR) + "/desk_terms.json";
const std::string kOut = std::string(MIMOSE_TEST_DIR);

}  // namespace

TEST_CASE("theory runs are byte-identical across reruns") {
  const std::string out1 = kOut + "/theory1.csv";
  const std::string out2 = kOut + "/theory2.csv";
  const std::string args = "theory --config " + kDesk +
                           " --nr-grid 25,50 --nq-grid 24 --seed 7 --out ";
  CHECK(run(args + out1) == 0);
  CHECK(run(args + out2) == 0);
  CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("simulate runs are byte-identical and self-consistent") {
  const std::string out1 = kOut + "/sim1.csv";
  const std::string out2 = kOut + "/sim2.csv";
  const std::string args =
      "simulate --config " + kDesk +
      " --nr-grid 20 --nq-grid 16 --kinds el-lmmse-type --trials 50 "
      "--seed 99 --out ";
  CHECK(run(args + out1) == 0);
  CHECK(run(args + out2) == 0);
  const std::string text = slurp(out1);
  CHECK(text == slurp(out2));

  // Every UL row satisfies se_theory = prelog * log2(1 + gamma).
  const auto rows = parse_csv(text);
  REQUIRE(rows.size() >= 2);
  const auto& header = rows[0];
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    REQUIRE(false);
    return std::size_t{0};
  };
  const std::size_t c_link = col("link"), c_prelog = col("prelog"),
                    c_gamma = col("gamma"), c_se = col("se_theory");
  bool saw_ul = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][c_link] != "ul" || rows[i][c_gamma].empty()) continue;
    saw_ul = true;
    const double pre = std::stod(rows[i][c_prelog]);
    const double gamma = std::stod(rows[i][c_gamma]);
    const double se = std::stod(rows[i][c_se]);
    CHECK(se == doctest::Approx(pre * std::log2(1.0 + gamma)).epsilon(1e-12));
  }
  CHECK(saw_ul);
}

TEST_CASE("threshold subcommand emits coefficient rows") {
  const std::string out = kOut + "/thr.csv";
  CHECK(run("threshold --config " + kDesk + " --nq-grid 24,32 --out " + out) ==
        0);
  const auto rows = parse_csv(slurp(out));
  REQUIRE(rows.size() == 5);  // header + 2 links x 2 N_Q
  CHECK(rows[0][0] == "link");
  CHECK(rows[1].back() == "ok");
}

TEST_CASE("configuration errors exit with code 2 and name the key") {
  const std::string out = kOut + "/bad.csv";
  CHECK(run("theory --config " + kDesk + " --set budget.P=1 --out " + out) ==
        2);
  const std::string err = slurp(kOut + "/cli_err.txt");
  CHECK(err.find("P >= K") != std::string::npos);

  CHECK(run("theory --config " + kDesk + " --set scenario.bogus=1 --out " +
            out) == 2);
  CHECK(run("theory --config /nonexistent.json --out " + out) == 2);
  CHECK(run("nonsense-subcommand --out " + out) == 2);
}
