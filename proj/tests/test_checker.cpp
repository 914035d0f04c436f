#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "confcheck/checker.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace confcheck;
using namespace testing_support;

namespace {

std::string corpus(const std::string& name) { return std::string(CONFCHECK_METRICS_DIR) + "/" + name; }

int errorLine(const std::string& text) {
  try {
    parseMetric(text);
  } catch (const MetricFileError& e) {
    return e.line();
  }
  return -1;
}

const char* kPpWave = R"(# pp-wave
dimension = 4
coordinates = u, v, x1, x2
g[1,1] = x1^2 - x2^2
g[1,2] = -1
g[3,3] = 1
g[4,4] = 1
domain u = [-1, 1]
domain v = [-1, 1]
domain x1 = [-1, 1]
domain x2 = [-1, 1]
)";

RunConfig config(int points = 24, double tol = 1e-7) {
  RunConfig c;
  c.points = points;
  c.tolerance = tol;
  return c;
}

}  // namespace

TEST(LoadMetric, MinkowskiFile) {
  const MetricSpec s = loadMetric(corpus("minkowski4.metric"));
  EXPECT_EQ(s.dimension, 4);
  EXPECT_EQ(s.coordinates, (std::vector<std::string>{"t", "x", "y", "z"}));
  const auto g = evaluate(s.metric, s.point(std::vector<double>{0.1, 0.2, 0.3, 0.4}));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_EQ(g(a, b), a != b ? 0.0 : (a == 0 ? -1.0 : 1.0));
}

TEST(LoadMetric, PpWaveSymmetricFill) {
  const MetricSpec s = parseMetric(kPpWave);
  const auto g = evaluate(s.metric, s.point(std::vector<double>{0.0, 0.0, 0.5, 0.25}));
  EXPECT_DOUBLE_EQ(g(0, 0), 0.25 - 0.0625);
  EXPECT_EQ(g(0, 1), -1.0);
  EXPECT_EQ(g(1, 0), -1.0);
  EXPECT_EQ(g(1, 1), 0.0);
  EXPECT_EQ(g(2, 3), 0.0);
}

TEST(LoadMetric, ParametersAndComments) {
  const std::string text = R"(
dimension = 3   # trailing comment
coordinates = a, b, c
param k = 1/2
param w = 0.25
g[1,1] = k + a^2
g[2,2] = w
g[3,3] = 1
g[2,1] = a*k
g[1,2] = k*a
domain a = [-1/2, 1/2]
domain b = [0, 1]
domain c = [0, 1]
)";
  const MetricSpec s = parseMetric(text);
  EXPECT_EQ(s.parameters.at("k"), Rational(1, 2));
  EXPECT_EQ(s.parameters.at("w"), Rational(1, 4));
  EXPECT_DOUBLE_EQ(s.domain[0].lo, -0.5);
  const auto g = evaluate(s.metric, s.point(std::vector<double>{0.2, 0.5, 0.5}));
  EXPECT_DOUBLE_EQ(g(0, 0), 0.54);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(g(1, 0), 0.1);
}

TEST(LoadMetric, AsymmetricEntriesRejected) {
  std::string text = kPpWave;
  text += "g[2,1] = -2\n";
  EXPECT_EQ(errorLine(text), 12);
}

TEST(LoadMetric, ErrorsCarryLineNumbers) {
  const std::string head = "dimension = 4\ncoordinates = u, v, x1, x2\n";
  const std::string box = "domain u = [0,1]\ndomain v = [0,1]\ndomain x1 = [0,1]\ndomain x2 = [0,1]\n";
  const std::string diag = "g[1,1] = 1\ng[2,2] = 1\ng[3,3] = 1\ng[4,4] = 1\n";
  EXPECT_EQ(errorLine(head + "g[1,1] = 1 +\n" + box), 3);
  EXPECT_EQ(errorLine(head + "g[5,1] = 1\n" + box), 3);
  EXPECT_EQ(errorLine(head + diag + "g[1,1] = 2\n" + box), 7);
  EXPECT_EQ(errorLine(head + diag + "metric = 3\n" + box), 7);
  EXPECT_EQ(errorLine(head + diag + "g[1,1] = q\n" + box), 7);
  EXPECT_EQ(errorLine(head + diag + box + "domain y = [0, 1]\n"), 11);
  EXPECT_EQ(errorLine(head + diag + box + "domain u = [0, 1]\n"), 11);
  EXPECT_EQ(errorLine(head + diag + "domain u = [1, 0]\ndomain v = [0,1]\ndomain x1 = [0,1]\ndomain x2 = [0,1]\n"), 7);
  EXPECT_EQ(errorLine("dimension = 4\ncoordinates = u, v, x1\n" + diag + box), 2);
  EXPECT_EQ(errorLine("dimension = 2\n"), 1);
  EXPECT_EQ(errorLine("dimension = 4\ncoordinates = u, v, u, x\n"), 2);
  EXPECT_EQ(errorLine("just text\n"), 1);
}

TEST(LoadMetric, MissingPiecesAreFileErrors) {
  const std::string diag = "g[1,1] = 1\ng[2,2] = 1\ng[3,3] = 1\n";
  EXPECT_EQ(errorLine("coordinates = a, b, c\n" + diag), 0);
  EXPECT_EQ(errorLine("dimension = 3\n" + diag), 0);
  // missing domain for c
  EXPECT_EQ(errorLine("dimension = 3\ncoordinates = a, b, c\n" + diag + "domain a = [0, 1]\ndomain b = [0, 1]\n"), 0);
  try {
    parseMetric("dimension = 3\ncoordinates = a, b, c\n" + diag + "domain a = [0, 1]\ndomain b = [0, 1]\n");
  } catch (const MetricFileError& e) {
    EXPECT_NE(std::string(e.what()).find("'c'"), std::string::npos);
  }
}

TEST(LoadMetric, DegenerateProbeRejected) {
  const std::string text =
      "dimension = 3\ncoordinates = a, b, c\ng[1,1] = a\ng[2,2] = 1\ng[3,3] = 1\n"
      "domain a = [-1, 1]\ndomain b = [0, 1]\ndomain c = [0, 1]\n";
  try {
    parseMetric(text);
    FAIL() << "expected an error";
  } catch (const MetricFileError& e) {
    EXPECT_NE(e.message().find("degenerate"), std::string::npos);
  }
  // Same metric with the probe away from a = 0 is fine.
  std::string shifted = text;
  shifted.replace(shifted.find("[-1, 1]"), 7, "[1, 2]");
  EXPECT_NO_THROW(parseMetric(shifted));
}

TEST(LoadMetric, MissingFile) { EXPECT_THROW(loadMetric(corpus("no_such.metric")), MetricFileError); }

TEST(LoadMetric, WholeCorpusLoads) {
  for (const char* name : {"minkowski4", "schwarzschild", "schwarzschild_horizon", "conformal_schwarzschild", "ppwave",
                           "ppwave_cubic", "ppwave_quartic", "ppwave_mixed", "conformal_ppwave", "robinson_trautman",
                           "robinson_trautman_generic", "flrw", "sphere_plane", "sphere_line", "sphere3"}) {
    EXPECT_NO_THROW(loadMetric(corpus(std::string(name) + ".metric"))) << name;
  }
}

TEST(LoadXi, MirrorAndAntisymmetrize) {
  const MetricSpec s = parseMetric(kPpWave);
  const TensorField xi = parseXi("xi[1,2,3] = x1\nxi[2,1,4] = 3\nxi[2,4,1] = 1\n", s);
  const auto v = evaluate(xi, s.point(std::vector<double>{0, 0, 0.5, 0}));
  EXPECT_DOUBLE_EQ(v(0, 1, 2), 0.5);
  EXPECT_DOUBLE_EQ(v(0, 2, 1), -0.5);
  EXPECT_DOUBLE_EQ(v(1, 0, 3), 1.0);
  EXPECT_DOUBLE_EQ(v(1, 3, 0), -1.0);
  for (int p = 0; p < 4; ++p)
    for (int m = 0; m < 4; ++m) EXPECT_EQ(v(p, m, m), 0.0);
}

TEST(LoadXi, Errors) {
  const MetricSpec s = parseMetric(kPpWave);
  auto line = [&](const std::string& text) {
    try {
      parseXi(text, s);
    } catch (const MetricFileError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line("# header\nxi[1,2,2] = 1\n"), 2);
  EXPECT_EQ(line("xi[1,2,5] = 1\n"), 1);
  EXPECT_EQ(line("xi[1,2,3] = 1\nxi[1,2,3] = 2\n"), 2);
  EXPECT_EQ(line("g[1,1] = 1\n"), 1);
  EXPECT_EQ(line("xi[1,2,3] = z\n"), 1);
  EXPECT_NO_THROW(parseXi("xi[1,2,2] = 0\n", s));
}

TEST(RunConfig, Invariants) {
  RunConfig c;
  EXPECT_EQ(c.points, 24);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.tolerance, 1e-7);
  EXPECT_NO_THROW(c.validate());
  c.points = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.points = 3;
  for (double t : {0.0, -1e-7, 1e-2, 0.5}) {
    c.tolerance = t;
    EXPECT_THROW(c.validate(), std::invalid_argument) << t;
  }
  c.tolerance = 9.9e-3;
  EXPECT_NO_THROW(c.validate());
}

TEST(SamplePoints, DeterministicAndInsideDomain) {
  const MetricSpec s = schwarzschild();
  const SampleSet a = samplePoints(s, 40, 7), b = samplePoints(s, 40, 7), c = samplePoints(s, 40, 8);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, c.points);
  ASSERT_EQ(a.points.size(), 40u);
  for (const auto& x : a.points)
    for (int k = 0; k < 4; ++k) {
      EXPECT_GE(x[k], s.domain[k].lo);
      EXPECT_LE(x[k], s.domain[k].hi);
    }
  EXPECT_EQ(a.rejected, 0);
  EXPECT_EQ(a.candidates, 40);
}

TEST(SamplePoints, LowDiscrepancy) {
  // Every cell of a 4x4 grid in the first two coordinates receives points.
  const MetricSpec s = minkowski4();
  const SampleSet a = samplePoints(s, 64, 3);
  std::vector<int> cells(16, 0);
  for (const auto& x : a.points) {
    const int i = std::min(3, static_cast<int>((x[0] + 1) * 2)), j = std::min(3, static_cast<int>((x[1] + 1) * 2));
    ++cells[i * 4 + j];
  }
  for (int n : cells) EXPECT_GE(n, 1);
}

TEST(SamplePoints, HorizonAdjacentRejections) {
  // For Schwarzschild det g = -r^4 sin²θ and max |g_ab| is the largest of
  // |1-2/r|, 1/|1-2/r|, r²; points qualify when |det| ≥ 1e-8 max^4.
  const MetricSpec s = loadMetric(corpus("schwarzschild_horizon.metric"));
  const SampleSet a = samplePoints(s, 3000, 0);
  EXPECT_GT(a.rejected, 0);
  EXPECT_EQ(a.candidates, 3000 + a.rejected);
  for (const auto& x : a.points) {
    const double r = x[1], f = std::abs(1 - 2 / r), sn = std::sin(x[2]);
    const double mx = std::max({f, 1 / f, r * r});
    EXPECT_GE(std::pow(r, 4) * sn * sn, 1e-8 * std::pow(mx, 4));
  }
}

TEST(SamplePoints, TooFewValidPoints) {
  const MetricSpec narrow = metricFrom({"a", "b", "c"}, {}, {{1, 1, "exp(-10000000*a^2)"}, {2, 2, "1"}, {3, 3, "1"}},
                                       {{-1, 1}, {0, 1}, {0, 1}});
  EXPECT_THROW(samplePoints(narrow, 24, 0), SamplingError);
  const MetricSpec wider = metricFrom({"a", "b", "c"}, {}, {{1, 1, "exp(-1000*a^2)"}, {2, 2, "1"}, {3, 3, "1"}},
                                      {{-1, 1}, {0, 1}, {0, 1}});
  const SampleSet ok = samplePoints(wider, 24, 0);
  EXPECT_GT(ok.rejected, 0);
  for (const auto& x : ok.points) EXPECT_LT(std::abs(x[0]), std::sqrt(std::log(1e8) / 1000) + 1e-12);
}

TEST(Judge, ThreePointCorroboration) {
  const double tol = 1e-7;
  EXPECT_EQ(judge(std::vector<double>{0, 1e-8, 1e-7}, tol), Verdict::ConformalEinstein);
  EXPECT_EQ(judge(std::vector<double>{0, 2e-6, 2e-6}, tol), Verdict::Inconclusive);
  EXPECT_EQ(judge(std::vector<double>{2e-6, 2e-6, 2e-6}, tol), Verdict::NotConformalEinstein);
  EXPECT_EQ(judge(std::vector<double>(20, 9e-7), tol), Verdict::Inconclusive);
  EXPECT_EQ(judge(std::vector<double>{1.01e-6, 1.01e-6, 1e-6, 1e-6}, tol), Verdict::Inconclusive);
}

TEST(Classify, Corpus) {
  struct Case {
    const char* file;
    Verdict verdict;
    Branch branch;
  };
  const Case cases[] = {
      {"minkowski4", Verdict::Einstein, Branch::None},
      {"schwarzschild", Verdict::Einstein, Branch::None},
      {"ppwave", Verdict::Einstein, Branch::None},
      {"ppwave_cubic", Verdict::Einstein, Branch::None},
      {"sphere3", Verdict::Einstein, Branch::None},
      {"robinson_trautman", Verdict::ConformalEinstein, Branch::Invertible},
      {"conformal_schwarzschild", Verdict::ConformalEinstein, Branch::Invertible},
      {"robinson_trautman_generic", Verdict::NotConformalEinstein, Branch::Invertible},
      {"sphere_plane", Verdict::NotConformalEinstein, Branch::Invertible},
      {"flrw", Verdict::ConformallyFlat, Branch::WeylZero},
      {"ppwave_mixed", Verdict::Inconclusive, Branch::Degenerate},
      {"ppwave_quartic", Verdict::Inconclusive, Branch::Degenerate},
      {"conformal_ppwave", Verdict::Inconclusive, Branch::Degenerate},
      {"sphere_line", Verdict::Inconclusive, Branch::WeylZero},
  };
  for (const Case& c : cases) {
    const Report r = classify(loadMetric(corpus(std::string(c.file) + ".metric")), config());
    EXPECT_EQ(r.verdict, c.verdict) << c.file;
    EXPECT_EQ(r.branch, c.branch) << c.file;
    EXPECT_EQ(r.points.size(), 24u);
    EXPECT_EQ(r.rankProfile.size(), 24u);
    if (r.verdict == Verdict::Einstein) {
      EXPECT_TRUE(r.einstein && r.conformalEinstein);
    }
    if (r.verdict == Verdict::ConformallyFlat || r.verdict == Verdict::ConformalEinstein) {
      EXPECT_TRUE(r.conformalEinstein);
      EXPECT_FALSE(r.einstein);
    }
  }
}

TEST(Classify, ExitCodes) {
  EXPECT_EQ(exitCode(Verdict::Einstein), 0);
  EXPECT_EQ(exitCode(Verdict::ConformalEinstein), 0);
  EXPECT_EQ(exitCode(Verdict::ConformallyFlat), 0);
  EXPECT_EQ(exitCode(Verdict::NotConformalEinstein), 1);
  EXPECT_EQ(exitCode(Verdict::Inconclusive), 2);
}

TEST(Classify, UserXiCandidate) {
  const MetricSpec s = loadMetric(corpus("conformal_ppwave.metric"));
  RunConfig c = config();
  c.xi = loadXi(corpus("conformal_ppwave.xi"), s);
  const Report r = classify(s, c);
  EXPECT_EQ(r.verdict, Verdict::ConformalEinstein);
  EXPECT_EQ(r.xiCandidate, "user");
  EXPECT_LT(std::max({r.residuals.antisymRicci, r.residuals.tracefree, r.residuals.closedness}), 1e-10);
  // A wrong candidate leaves the question open.
  c.xi = parseXi("xi[4,3,4] = 1/5\n", s);
  EXPECT_EQ(classify(s, c).verdict, Verdict::Inconclusive);
}

TEST(Classify, XiCandidateIgnoredOnInvertibleBranch) {
  const MetricSpec s = loadMetric(corpus("robinson_trautman_generic.metric"));
  RunConfig c = config();
  c.xi = parseXi("xi[1,2,3] = 7\n", s);
  EXPECT_EQ(classify(s, c).verdict, Verdict::NotConformalEinstein);
}

TEST(Classify, DimensionThreeNote) {
  const Report r = classify(loadMetric(corpus("sphere_line.metric")), config());
  ASSERT_FALSE(r.notes.empty());
  EXPECT_EQ(r.notes.back(), "Cotton-tensor criterion out of scope");
}

TEST(Classify, MixedRankProfile) {
  const Report r = classify(loadMetric(corpus("ppwave_mixed.metric")), config());
  EXPECT_NE(std::count(r.rankProfile.begin(), r.rankProfile.end(), 0), 0);
  EXPECT_NE(std::count(r.rankProfile.begin(), r.rankProfile.end(), 2), 0);
  EXPECT_EQ(exitCode(r.verdict), 2);
}

TEST(Classify, RankProfileFollowsWeylSize) {
  // The Weyl block is 1600 exp(40 x1 - 40) against an O(1) Schouten tensor.
  const Report r = classify(loadMetric(corpus("ppwave_mixed.metric")), config());
  for (std::size_t k = 0; k < r.points.size(); ++k) {
    const double x1 = r.points[k][2];
    if (x1 < 0.2) EXPECT_EQ(r.rankProfile[k], 0) << x1;
    if (x1 > 0.6) EXPECT_EQ(r.rankProfile[k], 2) << x1;
  }
}

TEST(Classify, RejectsInvalidConfig) {
  EXPECT_THROW(classify(minkowski4(), config(2)), std::invalid_argument);
  EXPECT_THROW(classify(minkowski4(), config(24, 0.1)), std::invalid_argument);
}

TEST(Classify, Deterministic) {
  const MetricSpec s = loadMetric(corpus("robinson_trautman.metric"));
  RunConfig c = config();
  c.seed = 11;
  const std::string a = reportJson(classify(s, c)), b = reportJson(classify(s, c));
  EXPECT_EQ(a, b);
  c.seed = 12;
  EXPECT_NE(a, reportJson(classify(s, c)));
}

TEST(Classify, ToleranceMonotonicity) {
  for (const char* name : {"robinson_trautman", "conformal_schwarzschild", "robinson_trautman_generic",
                           "ppwave_quartic", "conformal_ppwave", "sphere_plane", "flrw"}) {
    const MetricSpec s = loadMetric(corpus(std::string(name) + ".metric"));
    bool sawConformal = false;
    for (double tol : {1e-12, 1e-10, 1e-7, 1e-5, 1e-3, 9e-3}) {
      const Report r = classify(s, config(12, tol));
      if (sawConformal) EXPECT_NE(r.verdict, Verdict::NotConformalEinstein) << name << " tol " << tol;
      sawConformal = sawConformal || r.conformalEinstein;
    }
  }
}

TEST(Classify, ConformalClassConsistency) {
  std::mt19937_64 rng(31);
  for (const char* name : {"robinson_trautman", "robinson_trautman_generic", "conformal_schwarzschild",
                           "sphere_plane"}) {
    const MetricSpec s = loadMetric(corpus(std::string(name) + ".metric"));
    const Report base = classify(s, config(12));
    ASSERT_EQ(base.branch, Branch::Invertible) << name;
    for (int k = 0; k < 3; ++k) {
      const Expr omega = randomOmega(s, rng);
      const Report r = classify(conformalRescale(s, omega * omega), config(12));
      EXPECT_EQ(r.verdict, base.verdict) << name;
      EXPECT_EQ(r.branch, Branch::Invertible) << name;
    }
  }
  // An Einstein metric is reached at step (i); its conformal images are
  // conformally Einstein without being Einstein.
  const MetricSpec schw = schwarzschild();
  const Report r = classify(conformalRescale(schw, exp(P("r/10 - t/4", schw.coordinates))), config(12));
  EXPECT_EQ(r.verdict, Verdict::ConformalEinstein);
  EXPECT_TRUE(r.conformalEinstein);
}

TEST(Classify, ConformallyFlatEndomorphismIsZero) {
  const Report r = classify(loadMetric(corpus("flrw.metric")), config());
  EXPECT_EQ(r.verdict, Verdict::ConformallyFlat);
  const MetricSpec s = loadMetric(corpus("flrw.metric"));
  const Geometry geo(s);
  const CompiledGeometry cg(geo);
  for (const auto& x : r.points) EXPECT_LE(cg.evaluate(s.point(x)).endo.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Report, CanonicalJson) {
  const Report r = classify(loadMetric(corpus("robinson_trautman.metric")), config(3));
  const std::string text = reportJson(r);
  const auto j = nlohmann::json::parse(text);
  for (const char* key : {"verdict", "branch", "rank_profile", "residuals", "tolerance", "points", "seed", "version"})
    EXPECT_TRUE(j.contains(key)) << key;
  for (const char* key : {"antisym_ricci", "tracefree", "closedness", "compatibility"})
    EXPECT_TRUE(j["residuals"].contains(key)) << key;
  EXPECT_EQ(j["verdict"], "CONFORMAL_EINSTEIN");
  EXPECT_EQ(j["branch"], "invertible");
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_EQ(j["points"].size(), 3u);
  EXPECT_FALSE(j.contains("wall_time"));

  // Keys appear in sorted order at the top level.
  std::vector<std::size_t> pos;
  for (auto it = j.begin(); it != j.end(); ++it) pos.push_back(text.find("\n  \"" + it.key() + "\""));
  for (std::size_t i = 1; i < pos.size(); ++i) EXPECT_LT(pos[i - 1], pos[i]);

  // Every float uses the %.12e form.
  const std::regex number(R"((?:[:\[,]\s*)(-?[0-9][0-9.eE+-]*))");
  const std::regex sci(R"(-?[0-9]\.[0-9]{12}e[+-][0-9]{2})");
  int floats = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
    const std::string v = (*it)[1];
    if (v.find_first_of(".eE") == std::string::npos) continue;  // integers
    EXPECT_TRUE(std::regex_match(v, sci)) << v;
    ++floats;
  }
  EXPECT_GT(floats, 10);
}

TEST(Report, EmitWritesCanonicalText) {
  const Report r = classify(minkowski4(), config(3));
  const std::string path = ::testing::TempDir() + "confcheck_report.json";
  emitReport(r, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), reportJson(r));
  std::remove(path.c_str());
  EXPECT_THROW(emitReport(r, "/nonexistent-dir/x.json"), std::runtime_error);
}

TEST(Concomitants, MinkowskiAllZero) {
  std::ostringstream out;
  printConcomitants(minkowski4(), std::vector<double>{0.1, 0.2, 0.3, 0.4}, out);
  const std::string s = out.str();
  std::size_t zeros = 0;
  for (std::size_t p = s.find("(all zero)"); p != std::string::npos; p = s.find("(all zero)", p + 1)) ++zeros;
  EXPECT_EQ(zeros, 8u);
}

TEST(Concomitants, PpWaveBlock) {
  std::ostringstream out;
  printConcomitants(loadMetric(corpus("ppwave_cubic.metric")), std::vector<double>{0.3, -0.2, 0.7, 0.4}, out);
  const std::string s = out.str();
  // H11 - H22 = 12 x1 = 8.4, H12 = -6 x2 = -2.4
  EXPECT_NE(s.find("C_2^4 = 4.200000000000e+00"), std::string::npos) << s;
  EXPECT_NE(s.find("C_2^5 = -2.400000000000e+00"), std::string::npos);
  EXPECT_NE(s.find("C_3^4 = -2.400000000000e+00"), std::string::npos);
  EXPECT_NE(s.find("C_3^5 = -4.200000000000e+00"), std::string::npos);
  EXPECT_NE(s.find("rank 2"), std::string::npos);
}

TEST(Concomitants, DegeneratePointRejected) {
  const MetricSpec s = metricFrom({"a", "b", "c"}, {}, {{1, 1, "a"}, {2, 2, "1"}, {3, 3, "1"}}, {{1, 2}, {0, 1}, {0, 1}});
  std::ostringstream out;
  EXPECT_THROW(printConcomitants(s, std::vector<double>{0, 0.5, 0.5}, out), std::runtime_error);
  EXPECT_THROW(printConcomitants(s, std::vector<double>{1, 0.5}, out), MetricError);
}

TEST(Covariance, SuitePassesOnSchwarzschild) {
  const MetricSpec s = schwarzschild();
  const Expr omega = P("exp(t/5 + r/10 - th^2/7)", s.coordinates);
  for (long w : {-2L, 0L, 1L, 3L}) {
    const CovarianceReport r = covarianceSuite(s, omega, Rational(w), 4, 0);
    EXPECT_TRUE(r.passed()) << w;
    EXPECT_FALSE(r.lambdaTransported);
    EXPECT_EQ(r.checks.size(), 7u);
  }
}

TEST(Covariance, DegenerateMetricTransportsLambda) {
  const MetricSpec s = loadMetric(corpus("ppwave_quartic.metric"));
  const CovarianceReport r = covarianceSuite(s, P("exp(x1/3 + u*x2/5)", s.coordinates), Rational(1, 2), 4, 0);
  EXPECT_TRUE(r.lambdaTransported);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.checks.size(), 6u);
}
