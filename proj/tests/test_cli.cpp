#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "cxbench/dataset.hpp"
#include "cxbench/protocol.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cxbench;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" CXBENCH_CLI_PATH "\" " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("cxbench_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf = "") const { return (leaf.empty() ? path : path / leaf).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("gen writes readable datasets") {
    TempDir t("gen");
    auto r = run("gen rf --condition psk_only --seed 4 --out " + t.str("rf.cxd"));
    REQUIRE_MESSAGE(r.code == 0, r.out);
    auto ds = read_dataset(t.path / "rf.cxd");
    CHECK(ds.classes == 3);
    CHECK(ds.length == 128);
    CHECK(ds.channels == 1);
    CHECK(!ds.train.empty());

    r = run("gen quantum --condition momentum --seed 4 --out " + t.str("q.cxd"));
    REQUIRE_MESSAGE(r.code == 0, r.out);
    ds = read_dataset(t.path / "q.cxd");
    CHECK(ds.length == 96);
    CHECK(ds.classes == 4);

    r = run("gen eeg --condition pac --seed 4 --out " + t.str("e.cxd"));
    REQUIRE_MESSAGE(r.code == 0, r.out);
    ds = read_dataset(t.path / "e.cxd");
    CHECK(ds.channels == 4);
    CHECK(ds.length == 64);

    const auto m = nlohmann::json::parse(slurp(t.path / "manifest.json"));
    CHECK(m["command"] == "gen");
    CHECK(m["config_hash"].get<std::string>().size() == 16);
    CHECK(m.contains("tool_version"));
    CHECK(m["artifacts"].size() == 1);

    // same seed, same bytes
    REQUIRE(run("gen rf --condition psk_only --seed 4 --out " + t.str("rf2.cxd")).code == 0);
    CHECK(slurp(t.path / "rf.cxd") == slurp(t.path / "rf2.cxd"));
  }

  TEST_CASE("seed from the environment") {
    TempDir t("env");
    REQUIRE(run("gen rf --condition psk_only --out " + t.str("a.cxd"), "CXBENCH_SEED=9").code == 0);
    REQUIRE(run("gen rf --condition psk_only --seed 9 --out " + t.str("b.cxd")).code == 0);
    REQUIRE(run("gen rf --condition psk_only --seed 10 --out " + t.str("c.cxd"), "CXBENCH_SEED=9").code == 0);
    CHECK(slurp(t.path / "a.cxd") == slurp(t.path / "b.cxd"));
    CHECK(slurp(t.path / "a.cxd") != slurp(t.path / "c.cxd"));
    CHECK(run("gen rf --condition psk_only --out " + t.str("d.cxd"), "CXBENCH_SEED=abc").code == 2);
  }

  TEST_CASE("usage errors exit 2") {
    TempDir t("usage");
    CHECK(run("gen rf --condition no_such_task --out " + t.str("x.cxd")).code == 2);
    CHECK(run("gen rf --out " + t.str("x.cxd")).code == 2);
    CHECK(run("report " + t.str()).code == 2);
    CHECK(run("select " + t.str()).code == 2);
    CHECK(run("suite no_such_suite --out " + t.str("s")).code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("--version").code == 0);
  }

  TEST_CASE("train writes telemetry and result") {
    TempDir t("train");
    const auto r = run("train --domain rf --condition psk_only --family complex --activation modrelu --width 8 "
                       "--steps 5 --batch-size 12 --seed 2 --out " + t.str());
    REQUIRE_MESSAGE(r.code == 0, r.out);
    CHECK(fs::exists(t.path / "telemetry.csv"));
    const auto j = nlohmann::json::parse(slurp(t.path / "result.json"));
    CHECK(j["config"]["train"]["steps"] == 5);
    CHECK(j["result"].contains("test_accuracy"));
    CHECK(nlohmann::json::parse(slurp(t.path / "manifest.json"))["command"] == "train");
    CHECK(run("train --domain rf --condition psk_only --family nope --out " + t.str()).code == 2);
    CHECK(run("train --domain rf --condition psk_only --lr -1 --out " + t.str()).code == 2);
  }

  TEST_CASE("smoke suite, select and report") {
    TempDir t("suite");
    auto r = run("suite rf_stress --preset smoke --seed 3 --no-run-dirs --out " + t.str("sw"));
    REQUIRE_MESSAGE(r.code == 0, r.out);
    const auto recs = read_records_csv(t.path / "sw" / "records.csv");
    CHECK(!recs.empty());
    const auto m = nlohmann::json::parse(slurp(t.path / "sw" / "manifest.json"));
    CHECK(m["command"] == "suite");
    CHECK(m["config"]["seed"] == 3);

    r = run("report " + t.str("sw") + " --format md");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    CHECK(fs::exists(t.path / "sw" / "report.md"));
    CHECK(r.out.find("| ---") != std::string::npos);
  }

  TEST_CASE("trilemma command") {
    TempDir t("tri");
    const auto r = run("trilemma --resolution 21 --init-seeds 2 --out " + t.str());
    REQUIRE_MESSAGE(r.code == 0, r.out);
    const auto csv = slurp(t.path / "trilemma.csv");
    for (const char* a : {"crelu", "zrelu", "modrelu", "cardioid", "siglog", "ctanh"})
      CHECK(csv.find(a) != std::string::npos);
    CHECK(fs::exists(t.path / "manifest.json"));
    CHECK(run("trilemma --resolution 1 --out " + t.str()).code == 2);
  }
}
