#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ehglue/report.hpp"
#include "ehglue/suites.hpp"

using namespace ehglue;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("ehglue_report_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CanonicalJson, SortedKeysAndSeventeenDigits) {
  Json j;
  j["zeta"] = 0.1;
  j["alpha"] = 3;
  j["mid"] = Json{{"b", 1.0}, {"a", -2.5e-300}};
  const std::string s = canonical_json(j, 0);
  EXPECT_EQ(s, "{\"alpha\":3,\"mid\":{\"a\":-2.5e-300,\"b\":1.0},\"zeta\":0.10000000000000001}\n");
}

TEST(CanonicalJson, RoundTripsDoublesExactly) {
  for (double v : {1.0 / 3.0, 7.7035776123, -1e-17, 6.02e23, 0.5}) {
    const Json back = Json::parse(canonical_json(Json{{"v", v}}));
    EXPECT_EQ(back["v"].get<double>(), v);
  }
}

TEST(CanonicalJson, NonFiniteBecomesNull) {
  const Json j{{"x", std::nan("")}, {"y", INFINITY}};
  EXPECT_EQ(canonical_json(j, 0), "{\"x\":null,\"y\":null}\n");
}

TEST(CanonicalJson, IndentedLayoutIsStable) {
  Json j{{"rows", Json::array({1.5, 2.5})}, {"name", "x"}, {"nested", Json::array({Json{{"k", 1}}})}};
  const std::string s = canonical_json(j);
  EXPECT_EQ(s, "{\n  \"name\": \"x\",\n  \"nested\": [\n    {\n      \"k\": 1\n    }\n  ],\n  \"rows\": [1.5, 2.5]\n}\n");
  EXPECT_EQ(Json::parse(s), j);
}

TEST(Config, ParsesKeyValueWithComments) {
  const ConfigEntries e = parse_config("# header\ncutoff = 40   # inline\n\n  epsilon=0.1\nname = a b\n");
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0], (std::pair<std::string, std::string>{"cutoff", "40"}));
  EXPECT_EQ(e[1], (std::pair<std::string, std::string>{"epsilon", "0.1"}));
  EXPECT_EQ(e[2].second, "a b");
}

TEST(Config, ErrorsNameTheKey) {
  try {
    parse_config("cutoff=1\ncutoff=2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "cutoff");
  }
  try {
    parse_config("delta=\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "delta");
  }
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("bad key=1\n"), ConfigError);
  EXPECT_THROW(read_config_file(scratch("missing.cfg")), ConfigError);
}

TEST(Files, AtomicWriteReplacesWithoutLeftovers) {
  const fs::path p = scratch("sub/out.json");
  atomic_write(p, "first\n");
  atomic_write(p, "second\n");
  EXPECT_EQ(slurp(p), "second\n");
  fs::path tmp = p;
  tmp += ".tmp";
  EXPECT_FALSE(fs::exists(tmp));
}

TEST(Files, CsvSchema) {
  const std::string s = csv_text(flow_csv_header(), {{-1e4, 0.025, 1.0 / 3.0, 2.0}});
  EXPECT_EQ(s, "t,epsilon,pred_sup_rm,ric_proxy\n-10000.0,0.025000000000000001,0.33333333333333331,2.0\n");
  EXPECT_THROW(csv_text({"a", "b"}, {{1.0}}), std::invalid_argument);
}

TEST(ReportChecks, PassFlagsArePureFunctions) {
  EXPECT_TRUE(check_passes(CheckKind::Abs, 7.72, 7.70, 0.05));
  EXPECT_FALSE(check_passes(CheckKind::Abs, 7.76, 7.70, 0.05));
  EXPECT_TRUE(check_passes(CheckKind::Rel, 101.0, 100.0, 0.02));
  EXPECT_FALSE(check_passes(CheckKind::Rel, -101.0, 100.0, 0.02));
  EXPECT_TRUE(check_passes(CheckKind::AtMost, 1.0, 1.0));
  EXPECT_FALSE(check_passes(CheckKind::AtLeast, 0.5, 1.0));
  EXPECT_FALSE(check_passes(CheckKind::AtMost, std::nan(""), 1.0));
}

TEST(ReportChecks, FailingListAndJsonLayout) {
  Report r("demo");
  r.config("cutoff", 4);
  r.result("x", 1.25, 1e-3);
  r.exact("y", 2.0);
  EXPECT_TRUE(r.check("good", 1.0, CheckKind::AtMost, 2.0));
  EXPECT_FALSE(r.check("bad", 3.0, CheckKind::AtMost, 2.0));
  EXPECT_FALSE(r.all_pass());
  EXPECT_EQ(r.failing(), std::vector<std::string>{"bad"});
  const Json j = r.to_json();
  EXPECT_EQ(j["task"], "demo");
  EXPECT_EQ(j["results"]["x"]["error"], 1e-3);
  EXPECT_EQ(j["results"]["y"]["exact"], true);
  EXPECT_EQ(j["pass"], false);
  EXPECT_FALSE(j.contains("wall_clock_seconds"));
  r.attach_wall_clock(1.5);
  EXPECT_EQ(r.to_json()["wall_clock_seconds"], 1.5);
}

TEST(ReportChecks, Combine) {
  Report a("a"), b("b");
  a.check("ok", 0.0, CheckKind::AtMost, 1.0);
  b.check("no", 2.0, CheckKind::AtMost, 1.0);
  const Json j = combine({a, b});
  EXPECT_EQ(j["pass"], false);
  EXPECT_EQ(j["suites"]["a"]["pass"], true);
}

TEST(Suites, OmegaReport) {
  const Report r = suites::run_omega({40});
  EXPECT_TRUE(r.all_pass());
  EXPECT_NEAR(r.results()["omega"]["value"].get<double>(), 7.70, 0.05);
  EXPECT_EQ(r.results()["shells"].size(), 40u);
}

TEST(Suites, ValidationHappensBeforeWork) {
  try {
    suites::run_omega({-3});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "cutoff");
  }
  suites::FluxParams f;
  f.epsilon = 0.2;
  EXPECT_THROW(suites::run_flux(f), ConfigError);
  suites::HeatParams h;
  h.t_min = 0.1;
  EXPECT_THROW(suites::run_heat(h), ConfigError);
  suites::FlowParams w;
  w.proxy_times = {-10.0, -1e5};
  EXPECT_THROW(suites::run_flow(w), ConfigError);
}

TEST(Suites, HeatAndDistributionalPass) {
  EXPECT_TRUE(suites::run_heat({}).all_pass());
  const Report d = suites::run_dist_laplace({});
  EXPECT_TRUE(d.all_pass()) << d.canonical();
}

TEST(Suites, VerifyEhFastPasses) {
  suites::VerifyEhParams p;
  p.fast = true;
  p.points = 40;
  const Report r = suites::run_verify_eh(p);
  EXPECT_TRUE(r.all_pass()) << r.canonical();
}

TEST(Suites, ByteIdenticalAcrossThreadCounts) {
  const int saved = worker_threads();
  suites::HeatParams h;
  h.t_max = 0.6;
  suites::VerifyEhParams v;
  v.points = 30;
  v.fast = true;
  set_worker_threads(1);
  const std::string a = suites::run_heat(h).canonical() + suites::run_verify_eh(v).canonical();
  set_worker_threads(3);
  const std::string b = suites::run_heat(h).canonical() + suites::run_verify_eh(v).canonical();
  set_worker_threads(saved);
  EXPECT_EQ(a, b);
}
