#include <json.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// scratch dir shared by the suite, removed at exit
const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("tpsurf_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string at(const std::string& name) { return (scratch() / name).string(); }

Run tpsurf(const std::string& args) {
  const std::string cmd = std::string(TPSURF_CLI_PATH) + " " + args + " 2>" + at("stderr.txt");
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json report(const std::string& path) { return json::parse(slurp(path)); }

class Cli : public ::testing::Test {
 protected:
  static void TearDownTestSuite() { fs::remove_all(scratch()); }
};

}  // namespace

TEST_F(Cli, ExitCodes) {
  ASSERT_EQ(tpsurf("generate sphere " + at("s2.obj") + " --level 2").code, 0);
  EXPECT_EQ(tpsurf("energy " + at("s2.obj") + " --q 0").code, 3);
  EXPECT_NE(slurp(at("stderr.txt")).find("q"), std::string::npos);
  EXPECT_EQ(tpsurf("energy " + at("missing.obj")).code, 2);
  {
    std::ofstream bad(at("bad.ndmesh"));
    bad << "ndmesh 1 3\nv 0 0 0\nv 1 0 zero\ns 0 1\n";
  }
  EXPECT_EQ(tpsurf("energy " + at("bad.ndmesh")).code, 2);
  EXPECT_EQ(tpsurf("energy").code, 2);
  EXPECT_EQ(tpsurf("frobnicate").code, 2);
  EXPECT_EQ(tpsurf("energy " + at("s2.obj") + " --q 6").code, 0);
}

TEST_F(Cli, ReportSchemaAndConstants) {
  ASSERT_EQ(tpsurf("generate sphere " + at("s2.obj") + " --level 2").code, 0);
  ASSERT_EQ(tpsurf("energy " + at("s2.obj") + " --q 6 --deterministic --out " + at("e.json")).code, 0);
  const std::string text = slurp(at("e.json"));
  const json j = json::parse(text);
  EXPECT_EQ(j["schema"], "tpsurf.report/1");
  EXPECT_EQ(j["command"], "energy");
  const auto& k = j["config"]["constants"];
  for (const char* key : {"eps1", "c1", "c2", "c3", "c4", "c5", "kappa", "mu", "delta", "eta"})
    EXPECT_TRUE(k.contains(key)) << key;
  EXPECT_DOUBLE_EQ(k["kappa"].get<double>(), 1.0 / 7.0);  // (q - 2m)/(q + 2) for m = 2, q = 6
  EXPECT_EQ(j["provenance"]["input_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);
  EXPECT_FALSE(j["config"].contains("threads"));
  EXPECT_EQ(j["input"]["m"], 2);
  EXPECT_EQ(j["input"]["n"], 3);
  // lossless: parse and re-emit gives the same bytes
  EXPECT_EQ(json::parse(text).dump(2) + "\n", text);
}

TEST_F(Cli, SphereEnergyNearRoundValue) {
  ASSERT_EQ(tpsurf("generate sphere " + at("s4.obj") + " --level 4").code, 0);
  const auto r = tpsurf("energy " + at("s4.obj") + " --q 6 --out " + at("s4.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("total_energy: "), std::string::npos);
  const double e = report(at("s4.json"))["energy"]["total_energy"].get<double>();
  const double goal = 16 * std::numbers::pi * std::numbers::pi;  // unit radius, any q
  EXPECT_LT(std::fabs(e / goal - 1), 0.01);
}

TEST_F(Cli, BvhReportsErrorBound) {
  ASSERT_EQ(tpsurf("generate sphere " + at("s3.obj") + " --level 3").code, 0);
  ASSERT_EQ(tpsurf("energy " + at("s3.obj") + " --q 6 --mode exact --deterministic --out " + at("ex.json")).code, 0);
  const auto r = tpsurf("energy " + at("s3.obj") + " --q 6 --mode bvh --theta 0.5 --deterministic --out " + at("bvh.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("acceleration_error_bound: "), std::string::npos);
  const auto b = report(at("bvh.json"))["energy"];
  const auto x = report(at("ex.json"))["energy"];
  EXPECT_EQ(b["mode"], "bvh");
  EXPECT_GT(b["far_cluster_pairs"].get<long>(), 0);
  const double bound = b["acceleration_error_bound"].get<double>();
  EXPECT_GT(bound, 0);
  EXPECT_LE(std::fabs(b["total_energy"].get<double>() - x["total_energy"].get<double>()), bound);
}

TEST_F(Cli, LinkingParity) {
  ASSERT_EQ(tpsurf("generate hopf " + at("hopf.ndmesh") + " --k 64").code, 0);
  auto r = tpsurf("linking " + at("hopf_a.ndmesh") + " " + at("hopf_b.ndmesh"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("parity: 1"), std::string::npos) << r.out;
  ASSERT_EQ(tpsurf("generate distant-circles " + at("far.ndmesh") + " --k 64").code, 0);
  r = tpsurf("linking " + at("far_a.ndmesh") + " " + at("far_b.ndmesh"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("parity: 0"), std::string::npos) << r.out;
}

TEST_F(Cli, SphereAndZeroSphere) {
  ASSERT_EQ(tpsurf("generate sphere " + at("s2.obj") + " --level 2").code, 0);
  {
    // one endpoint at the center, one far outside
    std::ofstream f(at("seg.ndmesh"));
    f << "ndmesh 1 3\nv 0 0 0\nv 3 0 0\ns 0 1\n";
  }
  auto r = tpsurf("linking " + at("s2.obj") + " " + at("seg.ndmesh") + " --out " + at("l.json"));
  ASSERT_EQ(r.code, 0) << slurp(at("stderr.txt"));
  EXPECT_NE(r.out.find("parity: 1"), std::string::npos);
  EXPECT_EQ(report(at("l.json"))["linking"]["crossings"], 1);
}

TEST_F(Cli, BetaCsv) {
  ASSERT_EQ(tpsurf("generate sphere " + at("s3.obj") + " --level 3").code, 0);
  ASSERT_EQ(tpsurf("beta " + at("s3.obj") + " --center-index 0 --radii 0.2:1:log10:4 --csv " + at("b.csv") + " --out " +
                   at("b.json"))
                .code,
            0);
  std::istringstream in(slurp(at("b.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "d,beta,beta_lower");
  int rows = 0;
  double prev = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream row(line);
    std::string d, beta, lower;
    std::getline(row, d, ',');
    std::getline(row, beta, ',');
    std::getline(row, lower, ',');
    EXPECT_LE(std::stod(lower), std::stod(beta) + 1e-12);
    EXPECT_GE(std::stod(beta), prev);  // a round sphere gets less flat with scale
    prev = std::stod(beta);
  }
  EXPECT_EQ(rows, 4);
}

TEST_F(Cli, StoppingOnDiskPair) {
  const double h = 0.2;
  ASSERT_EQ(tpsurf("generate disk-pair " + at("dp.ndmesh") + " --level 2 --gap 0.2").code, 0);
  const auto r = tpsurf("stopping " + at("dp.ndmesh") + " --q 6 --x-index 0 --out " + at("st.json"));
  ASSERT_EQ(r.code, 0) << slurp(at("stderr.txt"));
  const double ds = report(at("st.json"))["stopping"]["d_s"].get<double>();
  EXPECT_GE(ds, h / 2);
  EXPECT_LE(ds, 2 * h);
}

TEST_F(Cli, VerifyFlatDiskPasses) {
  ASSERT_EQ(tpsurf("generate disk " + at("d.ndmesh") + " --level 3").code, 0);
  const auto r = tpsurf("verify " + at("d.ndmesh") + " --q 6 --out " + at("v.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
  for (const auto& c : report(at("v.json"))["criteria"]) EXPECT_TRUE(c["pass"].get<bool>()) << c["criterion"];
}

TEST_F(Cli, VerifyThinFingerIsExpectedFailure) {
  ASSERT_EQ(tpsurf("generate thin-finger " + at("tf.ndmesh") + " --level 1").code, 0);
  const auto r = tpsurf("verify " + at("tf.ndmesh") + " --q 6 --out " + at("tf.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("XFAIL ahlfors-lower-bound"), std::string::npos) << r.out;
  for (const auto& c : report(at("tf.json"))["criteria"]) {
    if (c["criterion"] == "ahlfors-lower-bound") {
      EXPECT_TRUE(c["expected_fail"].get<bool>());
      EXPECT_EQ(c["measured"]["witnesses_within_R1"], 0);
    }
  }
}

TEST_F(Cli, VerifyCriterionFailureExitCode) {
  // two sheets: beta grows like gap / d once the ball spans the gap
  ASSERT_EQ(tpsurf("generate disk-pair " + at("dpv.ndmesh") + " --level 3 --gap 0.2").code, 0);
  const auto r = tpsurf("verify " + at("dpv.ndmesh") + " --q 6 --out " + at("dpv.json"));
  EXPECT_EQ(r.code, 4) << r.out;
  EXPECT_NE(r.out.find("FAIL beta-decay"), std::string::npos) << r.out;
  for (const auto& c : report(at("dpv.json"))["criteria"])
    if (c["criterion"] == "beta-decay") EXPECT_LT(c["measured"]["slope"].get<double>(), 0);
}

TEST_F(Cli, DeterministicAcrossThreads) {
  ASSERT_EQ(tpsurf("generate sphere " + at("s3.obj") + " --level 3").code, 0);
  ASSERT_EQ(tpsurf("energy " + at("s3.obj") + " --q 6 --deterministic --threads 1 --out " + at("t1.json")).code, 0);
  ASSERT_EQ(tpsurf("energy " + at("s3.obj") + " --q 6 --deterministic --threads 4 --out " + at("t4.json")).code, 0);
  EXPECT_EQ(slurp(at("t1.json")), slurp(at("t4.json")));
}

TEST_F(Cli, FlowSeries) {
  ASSERT_EQ(tpsurf("generate circle " + at("c.ndmesh") + " --k 64 --noise 0.05 --seed 7").code, 0);
  const auto r = tpsurf("flow " + at("c.ndmesh") + " --q 4 --steps 5 --csv " + at("f.csv") + " --out " + at("f.json"));
  ASSERT_EQ(r.code, 0) << slurp(at("stderr.txt"));
  EXPECT_EQ(slurp(at("f.csv")).rfind("step,energy,measure,max_inv_rtp,min_sep,step_size\n", 0), 0u);
  const auto f = report(at("f.json"))["flow"];
  EXPECT_LT(f["final_energy"].get<double>(), f["initial_energy"].get<double>());
  EXPECT_NEAR(f["final_measure"].get<double>(), f["measure_target"].get<double>(), 1e-10);
  const auto c = tpsurf("flow " + at("c.ndmesh") + " --q 2 --steps 1 --csv " + at("fc.csv"));
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(slurp(at("fc.csv")).rfind("# warning: critical", 0), 0u);
}

TEST_F(Cli, GenerateRoundTrip) {
  ASSERT_EQ(tpsurf("generate torus " + at("t.ndmesh") + " --level 0").code, 0);
  const auto r = tpsurf("energy " + at("t.ndmesh") + " --q 6 --deterministic --out " + at("t.json"));
  ASSERT_EQ(r.code, 0);
  const auto j = report(at("t.json"));
  EXPECT_EQ(j["input"]["simplices"], 2 * 8 * 4);
  EXPECT_GT(j["energy"]["total_energy"].get<double>(), 0);
}
