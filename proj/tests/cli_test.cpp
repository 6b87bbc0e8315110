#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "pdrtune/util.hpp"

namespace fs = std::filesystem;
using pdrtune::util::read_file;
using pdrtune::util::write_file;

namespace {

const std::string cli = PDRTUNE_CLI_PATH;

int run_cli(const std::string& args) {
  int status = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture(const std::string& args) {
  std::string cmd = cli + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0)
    out.append(buf, n);
  pclose(pipe);
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("space reports the 114 valid configurations") {
  CHECK(capture("space --count-only") == "114\n");
  std::string csv = capture("space");
  CHECK(csv.find("bits,flags") == 0);
  CHECK(csv.find("grncyfitk=000000000,pdr\n") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("predict") == 2);  // missing required options
}

TEST_CASE("runtime errors exit with code 1") {
  CHECK(run_cli("features /nonexistent/file.aag") == 1);
}

TEST_CASE("features, coi and graph on a sample circuit") {
  TempDir dir("pdrtune_cli_basic");
  std::string aag = (dir.path / "mini.aag").string();
  write_file(aag, "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n");

  std::string feat = capture("features " + aag);
  CHECK(feat.find("circuit,num_pi") == 0);
  CHECK(feat.find("mini,2,1,0,1,") != std::string::npos);

  std::string report = capture("coi " + aag);
  CHECK(report.find("mini,1,1,0,0,0.0000,") != std::string::npos);

  std::string out = capture("graph " + aag + " --edgelist " +
                            (dir.path / "edges.txt").string());
  CHECK(out.find("4 nodes, 3 edges") != std::string::npos);
  CHECK(read_file((dir.path / "edges.txt").string()).find(" ") != std::string::npos);
}

TEST_CASE("pipeline determinism: synth, train, predict twice") {
  TempDir dir("pdrtune_cli_pipeline");
  std::string corpus = (dir.path / "corpus").string();
  REQUIRE(run_cli("synth --out " + corpus + " --n 12 --seed 3") == 0);
  REQUIRE(fs::exists(corpus + "/runtimes.csv"));
  REQUIRE(fs::exists(corpus + "/synth_011.aag"));

  std::string ckpt = (dir.path / "model.ckpt").string();
  std::string metrics = (dir.path / "metrics.csv").string();
  REQUIRE(run_cli("train --data " + corpus + "/runtimes.csv --circuits " + corpus +
                  " --out " + ckpt + " --metrics " + metrics +
                  " --epochs 3 --seed 1") == 0);
  REQUIRE(fs::exists(ckpt));
  std::string metrics_text = read_file(metrics);
  CHECK(metrics_text.find("epoch,train_loss,val_tau,val_rho") == 0);

  std::string target = corpus + "/synth_000.aag";
  std::string pred1 = capture("predict --model " + ckpt + " --aig " + target + " --top 5");
  std::string pred2 = capture("predict --model " + ckpt + " --aig " + target + " --top 5");
  CHECK(pred1 == pred2);
  CHECK(pred1.find("rank,flags,predicted_log_runtime") == 0);

  std::string imp = capture("importance --model " + ckpt + " --data " + corpus +
                            "/runtimes.csv --circuits " + corpus +
                            " --fold all --repeats 2 --seed 1");
  CHECK(imp.find("feature,delta_tau") == 0);
  CHECK(imp.find("flop_fanout_std") != std::string::npos);
}

TEST_CASE("run and evaluate against a stub engine") {
  TempDir dir("pdrtune_cli_run");
  std::string aag = (dir.path / "case.aag").string();
  write_file(aag, "aag 0 0 0 1 0\n0\n");
  std::string stub = (dir.path / "engine.sh").string();
  write_file(stub, "#!/bin/sh\necho 'Property proved.'\n");
  fs::permissions(stub, fs::perms::owner_all);

  std::string results = (dir.path / "results.csv").string();
  REQUIRE(run_cli("run --engine '" + stub + " {aig} {flags}' --aig " + aag +
                  " --flags 'pdr -i' --wall-limit 5 --log-dir " +
                  (dir.path / "logs").string() + " -o " + results) == 0);
  std::string body = read_file(results);
  CHECK(body.find("case,pdr -i,SAFE,") != std::string::npos);

  std::string table = capture("evaluate --baseline " + results + " --method " + results);
  CHECK(table.find("baseline") != std::string::npos);
  CHECK(table.find("+0 (0.0%)") != std::string::npos);
}
