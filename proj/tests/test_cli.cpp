#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "nap/graph_io.hpp"
#include "nap/metrics.hpp"
#include "nap/text.hpp"
#include "nap/trainer.hpp"
#include "test_util.hpp"

using namespace nap;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
};

// Runs the installed binary through the shell; captures stdout by default,
// stderr alone when only_stderr is set.
CliResult run_cli(const std::string& args, bool only_stderr = false) {
  std::string cmd = std::string(NAPGCL_BIN) + " " + args;
  cmd += only_stderr ? " 2>&1 1>/dev/null" : " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult res;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  const int rc = ::pclose(pipe);
  REQUIRE(WIFEXITED(rc));
  res.status = WEXITSTATUS(rc);
  return res;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  for (std::string& l : split(text, '\n'))
    if (!l.empty()) out.push_back(std::move(l));
  return out;
}

std::string value_after(const std::vector<std::string>& lines, const std::string& key) {
  for (const std::string& l : lines)
    if (l.rfind(key + ",", 0) == 0) return l.substr(key.size() + 1);
  FAIL("no line starts with \"" << key << ",\"");
  return {};
}

const std::string kGenFlags =
    "--num-domains 4 --num-classes 3 --nodes-per-domain 10 --num-features 6 --seed 1";
const std::string kNetFlags = "--hidden-dim 12 --embed-dim 6 --probe-steps 80";
const std::string kSplitFlags = "--split-counts 2,1,1 --split-seed 0";

std::string make_graph(testutil::TempDir& tmp) {
  const std::string path = tmp.file("g.json");
  const CliResult res = run_cli("generate " + kGenFlags + " --out " + path);
  REQUIRE(res.status == 0);
  return path;
}

}  // namespace

TEST_CASE("help lists every subcommand") {
  const CliResult res = run_cli("--help");
  CHECK(res.status == 0);
  for (const char* sub : {"generate", "train", "eval", "pdd", "ablate-cdp", "report-cdp-sim"})
    CHECK(res.out.find(sub) != std::string::npos);
  // flag help advertises defaults
  const CliResult train_help = run_cli("train --help");
  CHECK(train_help.status == 0);
  CHECK(train_help.out.find("--nap-ratio") != std::string::npos);
  CHECK(train_help.out.find("--warmup-epochs") != std::string::npos);
  CHECK(train_help.out.find("--mask-refresh") != std::string::npos);
}

TEST_CASE("generate writes a loadable graph file") {
  testutil::TempDir tmp("cligen");
  const std::string path = make_graph(tmp);
  const Graph g = load_graph(path);
  CHECK(g.num_nodes == 40);
  CHECK(g.num_domains == 4);
  CHECK(g.num_classes == 3);
  CHECK(validate_graph(g).empty());

  CHECK(run_cli("generate " + kGenFlags).status == 1);  // --out is required
}

TEST_CASE("train produces the documented outputs") {
  testutil::TempDir tmp("clitrain");
  const std::string graph = make_graph(tmp);
  const std::string out = tmp.file("run");
  const CliResult res =
      run_cli("train --graph " + graph + " --out " + out +
              " --epochs 6 --warmup-epochs 3 --eval-every 2 --nap-ratio 0.05 --seed 7 " +
              kNetFlags + " " + kSplitFlags + " --mask-dump");
  REQUIRE(res.status == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  CHECK(!value_after(lines, "best_epoch").empty());
  const double best_acc = parse_double(value_after(lines, "best_val_acc"));
  CHECK(best_acc >= 0.0);
  CHECK(best_acc <= 1.0);
  CHECK(parse_double(value_after(lines, "final_pdd")) > 0.0);
  // ceil(0.05 * 200) ordered cross-domain positions over two 10-node domains
  CHECK(value_after(lines, "final_mask_size") == "10");

  const std::vector<MetricsRecord> recs = read_metrics_csv(out + "/metrics.csv");
  REQUIRE(recs.size() == 3);  // epochs 1, 3, 5
  CHECK(recs[0].epoch == 1);
  CHECK(recs[0].stage == "warmup");
  CHECK(recs[0].mask_size == 0);
  CHECK(recs[1].epoch == 3);
  CHECK(recs[1].stage == "nap");
  CHECK(recs[1].mask_size == 10);
  CHECK(recs[2].epoch == 5);

  CHECK(!read_mask_dump(out + "/mask.csv").empty());
  const std::string ini = testutil::read_file(out + "/config.ini");
  CHECK(ini.find("epochs=6") != std::string::npos);
  CHECK(ini.find("nap-ratio=0.05") != std::string::npos);
  CHECK(testutil::read_file(out + "/final.ckpt").substr(0, 4) == "NAPG");
  CHECK(testutil::read_file(out + "/best.ckpt").substr(0, 4) == "NAPG");
}

TEST_CASE("identical train invocations are byte-identical") {
  testutil::TempDir tmp("clidet");
  const std::string graph = make_graph(tmp);
  const std::string flags = "--epochs 4 --warmup-epochs 2 --eval-every 2 --nap-ratio 0.1 "
                            "--seed 9 " +
                            kNetFlags + " " + kSplitFlags + " --mask-dump";
  const CliResult a =
      run_cli("train --graph " + graph + " --out " + tmp.file("a") + " " + flags);
  const CliResult b =
      run_cli("train --graph " + graph + " --out " + tmp.file("b") + " " + flags);
  REQUIRE(a.status == 0);
  REQUIRE(b.status == 0);
  CHECK(a.out == b.out);
  for (const char* name : {"/metrics.csv", "/mask.csv", "/final.ckpt", "/best.ckpt"})
    CHECK(testutil::read_file(tmp.file("a") + name) == testutil::read_file(tmp.file("b") + name));
}

TEST_CASE("configuration mistakes exit with code 1 and a diagnostic") {
  testutil::TempDir tmp("clibad");
  const std::string graph = make_graph(tmp);
  const CliResult res = run_cli("train --graph " + graph + " --out " + tmp.file("x") +
                                    " --epochs 4 --warmup-epochs 10 " + kSplitFlags,
                                true);
  CHECK(res.status == 1);
  CHECK(!res.out.empty());

  // an explicit split needs both source and validation lists
  const CliResult half = run_cli("train --graph " + graph + " --out " + tmp.file("y") +
                                     " --epochs 2 --warmup-epochs 1 --source-domains 0,1",
                                 true);
  CHECK(half.status == 1);
  CHECK(!half.out.empty());

  const CliResult refresh = run_cli("train --graph " + graph + " --out " + tmp.file("z") +
                                        " --epochs 2 --warmup-epochs 1 --mask-refresh sometimes " +
                                        kSplitFlags,
                                    true);
  CHECK(refresh.status == 1);
  CHECK(refresh.out.find("sometimes") != std::string::npos);
}

TEST_CASE("a missing graph file exits with code 2") {
  testutil::TempDir tmp("climiss");
  const CliResult res =
      run_cli("train --graph " + tmp.file("nope.json") + " --out " + tmp.file("r"), true);
  CHECK(res.status == 2);
  CHECK(!res.out.empty());
}

TEST_CASE("eval scores a checkpoint and exports embeddings") {
  testutil::TempDir tmp("clieval");
  const std::string graph = make_graph(tmp);
  const std::string out = tmp.file("run");
  REQUIRE(run_cli("train --graph " + graph + " --out " + out +
                  " --epochs 4 --warmup-epochs 2 --eval-every 2 --seed 3 " + kNetFlags + " " +
                  kSplitFlags)
              .status == 0);

  const std::string emb_path = tmp.file("emb.csv");
  const CliResult res = run_cli("eval --graph " + graph + " --checkpoint " + out +
                                "/final.ckpt --hidden-dim 12 --embed-dim 6 --probe-steps 80 " +
                                kSplitFlags + " --export-embeddings " + emb_path);
  REQUIRE(res.status == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "split,accuracy");
  for (const char* role : {"source", "validation", "target"}) {
    const double acc = parse_double(value_after(lines, role));
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }

  const EmbeddingTable table = load_embeddings(emb_path);
  CHECK(table.h.rows == 40);
  CHECK(table.h.cols == 6);

  // a checkpoint read under the wrong width is refused
  const CliResult wrong = run_cli("eval --graph " + graph + " --checkpoint " + out +
                                      "/final.ckpt --hidden-dim 12 --embed-dim 9 " + kSplitFlags,
                                  true);
  CHECK(wrong.status == 1);
  CHECK(!wrong.out.empty());
}

TEST_CASE("pdd reports on an embedding export") {
  testutil::TempDir tmp("clipdd");
  const std::string graph = make_graph(tmp);
  const std::string out = tmp.file("run");
  REQUIRE(run_cli("train --graph " + graph + " --out " + out +
                  " --epochs 2 --warmup-epochs 2 --eval-every 2 --seed 3 " + kNetFlags + " " +
                  kSplitFlags)
              .status == 0);
  const std::string emb_path = tmp.file("emb.csv");
  REQUIRE(run_cli("eval --graph " + graph + " --checkpoint " + out +
                  "/final.ckpt --hidden-dim 12 --embed-dim 6 " + kSplitFlags +
                  " --export-embeddings " + emb_path)
              .status == 0);

  const CliResult res = run_cli("pdd --embeddings " + emb_path);
  REQUIRE(res.status == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 8);  // header, C(4,2) pair rows, summary
  CHECK(lines[0] == "p,q,distance");
  CHECK(lines.back().rfind("pdd,", 0) == 0);

  const EmbeddingTable table = load_embeddings(emb_path);
  const double expect = pdd(table.h, table.domains).value;
  CHECK(lines.back() == "pdd," + fmt_double(expect));
}

TEST_CASE("ablate-cdp prints one row per removal ratio") {
  testutil::TempDir tmp("cliabl");
  const std::string graph = make_graph(tmp);
  const std::string out = tmp.file("abl");
  const CliResult res = run_cli("ablate-cdp --graph " + graph + " --out " + out +
                                " --epochs 2 --q-values 0,1 --seeds 1 --probe-steps 40 "
                                "--hidden-dim 12 --embed-dim 6 " +
                                kSplitFlags);
  REQUIRE(res.status == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "q,mean_final_pdd");
  CHECK(lines[1].rfind("0,", 0) == 0);
  CHECK(lines[2].rfind("1,", 0) == 0);
  const std::string summary = testutil::read_file(out + "/ablation.csv");
  CHECK(summary == lines[0] + "\n" + lines[1] + "\n" + lines[2] + "\n");
}

TEST_CASE("report-cdp-sim summarizes the final promotion mask") {
  testutil::TempDir tmp("clirep");
  const std::string graph = make_graph(tmp);
  const std::string out = tmp.file("run");
  REQUIRE(run_cli("train --graph " + graph + " --out " + out +
                  " --epochs 6 --warmup-epochs 3 --eval-every 2 --nap-ratio 0.05 --seed 7 " +
                  kNetFlags + " " + kSplitFlags + " --mask-dump")
              .status == 0);

  const CliResult res = run_cli("report-cdp-sim --graph " + graph + " --checkpoint " + out +
                                "/final.ckpt --mask " + out +
                                "/mask.csv --hidden-dim 12 --embed-dim 6 " + kSplitFlags);
  REQUIRE(res.status == 0);
  const std::vector<std::string> lines = lines_of(res.out);
  REQUIRE(lines.size() == 7);  // header + 3 sets in 2 spaces
  CHECK(lines[0] == "space,set,count,mean_cosine");
  auto has_prefix = [&](const std::string& prefix) {
    for (const std::string& l : lines)
      if (l.rfind(prefix, 0) == 0) return true;
    return false;
  };
  for (const char* space : {"features", "embeddings"}) {
    CHECK(has_prefix(std::string(space) + ",all,200,"));
    CHECK(has_prefix(std::string(space) + ",transformed,10,"));
    CHECK(has_prefix(std::string(space) + ",remaining,190,"));
  }
}
