#include "confcheck/checker.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <ostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace confcheck {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

struct Line {
  int number;
  std::string lhs, rhs;
};

// Non-empty, comment-stripped `lhs = rhs` lines.
std::vector<Line> splitLines(std::string_view text, const std::string& source) {
  std::vector<Line> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw MetricFileError(source, n, "expected 'key = value'");
    out.push_back({n, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))});
  }
  return out;
}

bool isIdentifier(const std::string& s) {
  static const std::regex id("[A-Za-z_][A-Za-z0-9_]*");
  return std::regex_match(s, id);
}

bool isReserved(const std::string& s) {
  static const std::set<std::string> names = {"exp", "log", "sin", "cos", "sqrt"};
  return names.count(s) > 0;
}

double rationalValue(const std::string& text, const std::string& source, int line) {
  try {
    return parseRational(text).get_d();
  } catch (const ParseError& e) {
    throw MetricFileError(source, line, "invalid number '" + text + "': " + e.what());
  }
}

Eigen::MatrixXd toMatrix(const PointTensor<double>& g) {
  const int n = g.dim();
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m(a, b) = g(a, b);
  return m;
}

bool nearSingular(const PointTensor<double>& g) {
  for (double v : g.data())
    if (!std::isfinite(v)) return true;
  const double scale = maxAbs(g);
  if (scale == 0) return true;
  return std::abs(toMatrix(g).determinant()) < 1e-8 * std::pow(scale, g.dim());
}

std::string formatPoint(std::span<const double> x) {
  std::ostringstream s;
  s << '(';
  for (std::size_t i = 0; i < x.size(); ++i) s << (i ? ", " : "") << x[i];
  s << ')';
  return s.str();
}

}  // namespace

MetricFileError::MetricFileError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line),
      message_(message) {}

// ---------------------------------------------------------------------------
// Metric files

MetricSpec parseMetric(std::string_view text, const std::string& source) {
  const std::vector<Line> lines = splitLines(text, source);
  static const std::regex gEntry(R"(g\s*\[\s*(\d+)\s*,\s*(\d+)\s*\])");
  static const std::regex param(R"(param\s+([A-Za-z_][A-Za-z0-9_]*))");
  static const std::regex domain(R"(domain\s+([A-Za-z_][A-Za-z0-9_]*))");
  static const std::regex interval(R"(\[\s*([^,\]]+?)\s*,\s*([^,\]]+?)\s*\])");

  int dimension = 0, dimensionLine = 0, coordinatesLine = 0;
  std::vector<std::string> coords;
  std::map<std::string, Rational> params;

  // Declarations first so that entries may precede them.
  for (const Line& l : lines) {
    std::smatch m;
    if (l.lhs == "dimension") {
      if (dimensionLine) throw MetricFileError(source, l.number, "dimension declared twice");
      dimensionLine = l.number;
      if (!std::regex_match(l.rhs, std::regex(R"(\d+)")))
        throw MetricFileError(source, l.number, "dimension must be a positive integer");
      dimension = std::stoi(l.rhs);
      if (dimension < 3 || dimension > kMaxDim)
        throw MetricFileError(source, l.number,
                              "dimension must lie between 3 and " + std::to_string(kMaxDim));
    } else if (l.lhs == "coordinates") {
      if (coordinatesLine) throw MetricFileError(source, l.number, "coordinates declared twice");
      coordinatesLine = l.number;
      std::stringstream ss(l.rhs);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const std::string name = trim(item);
        if (!isIdentifier(name) || isReserved(name))
          throw MetricFileError(source, l.number, "invalid coordinate name '" + name + "'");
        if (std::find(coords.begin(), coords.end(), name) != coords.end())
          throw MetricFileError(source, l.number, "duplicate coordinate '" + name + "'");
        coords.push_back(name);
      }
    } else if (std::regex_match(l.lhs, m, param)) {
      const std::string name = m[1];
      if (isReserved(name)) throw MetricFileError(source, l.number, "invalid parameter name '" + name + "'");
      if (params.count(name)) throw MetricFileError(source, l.number, "parameter '" + name + "' declared twice");
      try {
        params[name] = parseRational(l.rhs);
      } catch (const ParseError& e) {
        throw MetricFileError(source, l.number, "parameter value must be a rational constant: " + std::string(e.what()));
      }
    }
  }
  if (!dimensionLine) throw MetricFileError(source, 0, "missing 'dimension' declaration");
  if (!coordinatesLine) throw MetricFileError(source, 0, "missing 'coordinates' declaration");
  if (static_cast<int>(coords.size()) != dimension)
    throw MetricFileError(source, coordinatesLine,
                          "dimension is " + std::to_string(dimension) + " but " + std::to_string(coords.size()) +
                              " coordinates are declared");
  for (const auto& [name, v] : params)
    if (std::find(coords.begin(), coords.end(), name) != coords.end())
      throw MetricFileError(source, 0, "'" + name + "' is both a coordinate and a parameter");

  std::vector<std::string> paramNames;
  for (const auto& [name, v] : params) paramNames.push_back(name);

  std::map<std::pair<int, int>, std::pair<Expr, int>> given;  // (i, j) -> expression, line
  std::vector<std::optional<Interval>> boxes(coords.size());
  for (const Line& l : lines) {
    std::smatch m;
    if (l.lhs == "dimension" || l.lhs == "coordinates" || std::regex_match(l.lhs, param)) continue;
    if (std::regex_match(l.lhs, m, gEntry)) {
      const int i = std::stoi(m[1]) - 1, j = std::stoi(m[2]) - 1;
      if (i < 0 || j < 0 || i >= dimension || j >= dimension)
        throw MetricFileError(source, l.number, "metric index out of range 1.." + std::to_string(dimension));
      if (given.count({i, j})) throw MetricFileError(source, l.number, "metric component given twice");
      Expr e;
      try {
        e = simplify(parse(l.rhs, coords, paramNames));
      } catch (const ParseError& err) {
        throw MetricFileError(source, l.number, err.what());
      }
      if (auto other = given.find({j, i}); other != given.end() && other->second.first != e)
        throw MetricFileError(source, l.number,
                              "g[" + std::string(m[1]) + "," + std::string(m[2]) + "] differs from g[" +
                                  std::string(m[2]) + "," + std::string(m[1]) + "] on line " +
                                  std::to_string(other->second.second));
      given[{i, j}] = {e, l.number};
    } else if (std::regex_match(l.lhs, m, domain)) {
      const std::string name = m[1];
      const auto it = std::find(coords.begin(), coords.end(), name);
      if (it == coords.end()) throw MetricFileError(source, l.number, "domain for unknown coordinate '" + name + "'");
      const std::size_t k = static_cast<std::size_t>(it - coords.begin());
      if (boxes[k]) throw MetricFileError(source, l.number, "domain for '" + name + "' given twice");
      std::smatch b;
      if (!std::regex_match(l.rhs, b, interval))
        throw MetricFileError(source, l.number, "domain must have the form [lo, hi]");
      Interval iv{rationalValue(b[1], source, l.number), rationalValue(b[2], source, l.number)};
      if (!(iv.lo <= iv.hi)) throw MetricFileError(source, l.number, "domain lower bound exceeds upper bound");
      boxes[k] = iv;
    } else {
      throw MetricFileError(source, l.number, "unknown directive '" + l.lhs + "'");
    }
  }

  std::vector<Interval> box;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (!boxes[k]) throw MetricFileError(source, 0, "missing domain for coordinate '" + coords[k] + "'");
    box.push_back(*boxes[k]);
  }
  std::map<std::pair<int, int>, Expr> comps;
  for (const auto& [ij, e] : given) comps[{std::min(ij.first, ij.second), std::max(ij.first, ij.second)}] = e.first;

  MetricSpec spec;
  try {
    spec = makeMetric(coords, params, comps, box);
  } catch (const MetricError& e) {
    throw MetricFileError(source, 0, e.what());
  }

  std::vector<double> probe;
  for (const Interval& iv : box) probe.push_back(0.5 * (iv.lo + iv.hi));
  bool degenerate = false;
  try {
    degenerate = nearSingular(evaluate(spec.metric, spec.point(probe)));
  } catch (const DomainError&) {
    degenerate = true;
  }
  if (degenerate) throw MetricFileError(source, 0, "degenerate metric at probe point " + formatPoint(probe));
  return spec;
}

MetricSpec loadMetric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MetricFileError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseMetric(ss.str(), path);
}

TensorField parseXi(std::string_view text, const MetricSpec& spec, const std::string& source) {
  static const std::regex entry(R"(xi\s*\[\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\])");
  const int n = spec.dimension;
  const std::vector<std::string> params = spec.parameterNames();
  std::map<std::array<int, 3>, Expr> given;
  for (const Line& l : splitLines(text, source)) {
    std::smatch m;
    if (!std::regex_match(l.lhs, m, entry)) throw MetricFileError(source, l.number, "expected 'xi[p,m,n] = expr'");
    const std::array<int, 3> idx{std::stoi(m[1]) - 1, std::stoi(m[2]) - 1, std::stoi(m[3]) - 1};
    for (int i : idx)
      if (i < 0 || i >= n) throw MetricFileError(source, l.number, "xi index out of range 1.." + std::to_string(n));
    if (given.count(idx)) throw MetricFileError(source, l.number, "xi component given twice");
    Expr e;
    try {
      e = simplify(parse(l.rhs, spec.coordinates, params));
    } catch (const ParseError& err) {
      throw MetricFileError(source, l.number, err.what());
    }
    if (idx[1] == idx[2] && !e.isZero())
      throw MetricFileError(source, l.number, "xi is antisymmetric in its last two indices");
    given[idx] = e;
  }
  TensorField xi(n, {Slot::Up, Slot::Down, Slot::Down});
  for (const auto& [idx, e] : given) {
    const auto [p, a, b] = idx;
    if (a == b) continue;
    const auto mirror = given.find({p, b, a});
    const Expr v = mirror == given.end() ? e : simplify((e - mirror->second) * number(Rational(1, 2)));
    xi(p, a, b) = v;
    xi(p, b, a) = simplify(-v);
  }
  return xi;
}

TensorField loadXi(const std::string& path, const MetricSpec& spec) {
  std::ifstream in(path);
  if (!in) throw MetricFileError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseXi(ss.str(), spec, path);
}

void RunConfig::validate() const {
  if (points < 3) throw std::invalid_argument("sample count must be at least 3");
  if (!(tolerance > 0 && tolerance < 1e-2)) throw std::invalid_argument("tolerance must lie in (0, 1e-2)");
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

constexpr int kPrimes[kMaxDim] = {2, 3, 5, 7, 11, 13, 17, 19};

double radicalInverse(unsigned long long i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<unsigned long long>(base));
    i /= static_cast<unsigned long long>(base);
  }
  return r;
}

}  // namespace

SampleSet samplePoints(const MetricSpec& spec, int count, unsigned long long seed) {
  if (count < 1) throw std::invalid_argument("sample count must be positive");
  const int n = spec.dimension;
  std::mt19937_64 rng(seed);
  std::vector<double> shift(static_cast<std::size_t>(n));
  for (double& s : shift) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;

  const CompiledField metric(spec.metric, spec.coordinateSymbols(), false);
  SampleSet out;
  const long long limit = 100LL * count;
  for (long long i = 1; i <= limit && static_cast<int>(out.points.size()) < count; ++i) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      double u = radicalInverse(static_cast<unsigned long long>(i), kPrimes[k]) + shift[static_cast<std::size_t>(k)];
      u -= std::floor(u);
      const Interval& iv = spec.domain[static_cast<std::size_t>(k)];
      x[static_cast<std::size_t>(k)] = iv.lo + u * (iv.hi - iv.lo);
    }
    ++out.candidates;
    bool ok = false;
    try {
      ok = !nearSingular(metric.value(spec.point(x)));
    } catch (const DomainError&) {
    }
    if (ok)
      out.points.push_back(std::move(x));
    else
      ++out.rejected;
  }
  if (static_cast<int>(out.points.size()) < count)
    throw SamplingError("only " + std::to_string(out.points.size()) + " of " + std::to_string(count) +
                        " sample points are nondegenerate after " + std::to_string(out.candidates) + " candidates");
  return out;
}

SampleSet samplePoints(const MetricSpec& spec, const RunConfig& cfg) {
  cfg.validate();
  return samplePoints(spec, cfg.points, cfg.seed);
}

// ---------------------------------------------------------------------------
// Classification

std::string toString(Verdict v) {
  switch (v) {
    case Verdict::Einstein: return "EINSTEIN";
    case Verdict::ConformalEinstein: return "CONFORMAL_EINSTEIN";
    case Verdict::NotConformalEinstein: return "NOT_CONFORMAL_EINSTEIN";
    case Verdict::ConformallyFlat: return "CONFORMALLY_FLAT";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

std::string toString(Branch b) {
  switch (b) {
    case Branch::None: return "none";
    case Branch::Invertible: return "invertible";
    case Branch::Degenerate: return "degenerate";
    case Branch::WeylZero: return "weyl-zero";
  }
  return "none";
}

int exitCode(Verdict v) {
  switch (v) {
    case Verdict::Einstein:
    case Verdict::ConformalEinstein:
    case Verdict::ConformallyFlat: return 0;
    case Verdict::NotConformalEinstein: return 1;
    case Verdict::Inconclusive: return 2;
  }
  return 2;
}

namespace {

using Pt = CompiledGeometry::Point;

std::vector<Pt> evaluateAll(const CompiledGeometry& cg, const MetricSpec& spec,
                            const std::vector<std::vector<double>>& xs) {
  std::vector<Pt> out(xs.size());
  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), xs.size());
  auto run = [&](std::size_t first) {
    for (std::size_t i = first; i < xs.size(); i += workers) out[i] = cg.evaluate(spec.point(xs[i]));
  };
  if (workers <= 1) {
    run(0);
    return out;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, run, w));
  for (auto& j : jobs) j.get();
  return out;
}

struct Candidate {
  ConditionResiduals residuals;
  std::vector<double> worst;  // per point
  bool passed = false;
};

// Normalizes raw residuals by max(1, max |𝒭|, max |R|).
Candidate assess(const std::vector<PointResiduals>& raw, double ricciScale, double tol) {
  Candidate c;
  double scale = std::max(1.0, ricciScale);
  for (const PointResiduals& r : raw) scale = std::max(scale, r.ricciScale);
  c.residuals.scale = scale;
  for (const PointResiduals& r : raw) {
    c.worst.push_back(std::max({r.antisymRicci, r.tracefree, r.closedness}) / scale);
    c.residuals.antisymRicci = std::max(c.residuals.antisymRicci, r.antisymRicci / scale);
    c.residuals.tracefree = std::max(c.residuals.tracefree, r.tracefree / scale);
    c.residuals.closedness = std::max(c.residuals.closedness, r.closedness / scale);
    c.residuals.compatibility = std::max(c.residuals.compatibility, r.compatibility / scale);
  }
  c.passed = judge(c.worst, tol) == Verdict::ConformalEinstein;
  return c;
}

std::pair<int, int> exceedances(std::span<const double> residuals, double tol) {
  int above = 0, aboveTen = 0;
  for (double v : residuals) {
    if (v > tol) ++above;
    if (v > 10 * tol) ++aboveTen;
  }
  return {above, aboveTen};
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

Verdict judge(std::span<const double> residuals, double tol) {
  const auto [above, aboveTen] = exceedances(residuals, tol);
  if (above == 0) return Verdict::ConformalEinstein;
  return aboveTen >= 3 ? Verdict::NotConformalEinstein : Verdict::Inconclusive;
}

Report classify(const MetricSpec& spec, const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  spec.validate();
  const double tol = cfg.tolerance;
  const int n = spec.dimension;

  Report r;
  r.seed = cfg.seed;
  r.tolerance = tol;
  const SampleSet samples = samplePoints(spec, cfg);
  r.points = samples.points;
  r.rejected = samples.rejected;
  if (samples.rejected > 0)
    r.notes.push_back("rejected " + std::to_string(samples.rejected) + " of " + std::to_string(samples.candidates) +
                      " candidate points as near-singular or outside the real domain");

  const Geometry geo(spec);
  const CompiledGeometry cg(geo);
  const std::vector<Pt> pts = evaluateAll(cg, spec, samples.points);

  auto finish = [&](Report& rep) -> Report {
    rep.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };

  double ricciScale = 1.0;
  for (const Pt& p : pts) ricciScale = std::max(ricciScale, maxAbs(p.ricci));
  for (const Pt& p : pts) r.ordinaryTracefree = std::max(r.ordinaryTracefree, ordinaryTracefreeRicci(p) / ricciScale);
  const int full = cg.basis().size();
  for (const Pt& p : pts) r.rankProfile.push_back(endoRank(p));

  // (i) Einstein
  if (r.ordinaryTracefree <= tol) {
    r.verdict = Verdict::Einstein;
    r.einstein = r.conformalEinstein = true;
    r.residuals.tracefree = r.ordinaryTracefree;
    r.residuals.scale = ricciScale;
    return finish(r);
  }
  if (n == 3) {
    r.verdict = Verdict::Inconclusive;
    r.branch = Branch::WeylZero;
    r.notes.push_back("Cotton-tensor criterion out of scope");
    return finish(r);
  }

  const auto [minRank, maxRank] = std::minmax_element(r.rankProfile.begin(), r.rankProfile.end());
  if (*minRank != *maxRank) {
    r.verdict = Verdict::Inconclusive;
    r.branch = Branch::Degenerate;
    r.notes.push_back("Weyl endomorphism rank varies across samples (" + std::to_string(*minRank) + " to " +
                      std::to_string(*maxRank) + ")");
    return finish(r);
  }
  const int rnk = *minRank;

  // (ii) conformally flat
  if (rnk == 0) {
    r.verdict = Verdict::ConformallyFlat;
    r.conformalEinstein = true;
    r.branch = Branch::WeylZero;
    double endo = 0;
    for (const Pt& p : pts) endo = std::max(endo, p.endo.cwiseAbs().maxCoeff());
    r.notes.push_back("max |C_A^B| = " + sci(endo));
    return finish(r);
  }

  auto conclude = [&](const Candidate& c, const std::string& what) {
    r.residuals = c.residuals;
    r.verdict = judge(c.worst, tol);
    r.conformalEinstein = r.verdict == Verdict::ConformalEinstein;
    const auto [above, aboveTen] = exceedances(c.worst, tol);
    if (r.verdict == Verdict::NotConformalEinstein)
      r.notes.push_back(what + " violated above 10x tolerance at " + std::to_string(aboveTen) + " sample points");
    else if (r.verdict == Verdict::Inconclusive)
      r.notes.push_back(what + " exceed tolerance at " + std::to_string(above) + " sample point(s), " +
                        std::to_string(aboveTen) + " above 10x tolerance");
  };

  // (iii) invertible branch
  if (rnk == full) {
    r.branch = Branch::Invertible;
    std::vector<PointResiduals> raw;
    for (const Pt& p : pts) raw.push_back(einsteinConditions(lambdaInvertible(p, weylInverse(p, cg.basis())), p));
    conclude(assess(raw, ricciScale, tol), "Einstein conditions");
    return finish(r);
  }

  // (iv) constant intermediate rank
  r.branch = Branch::Degenerate;
  std::vector<EndoInverse> wplus;
  std::vector<PointTensor<double>> compat;
  for (const Pt& p : pts) {
    wplus.push_back(weylPseudoinverse(p, cg.basis()));
    compat.push_back(compatibilityResidual(p, wplus.back()));
  }
  auto candidate = [&](const std::optional<TensorField>& xi) {
    std::optional<CompiledField> xiField;
    if (xi) xiField.emplace(*xi, geo.coords(), true);
    std::vector<PointResiduals> raw;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      std::optional<PointTensor<Jet>> x;
      if (xiField) x = xiField->jet(pts[k].at);
      raw.push_back(einsteinConditions(lambdaXi(pts[k], wplus[k], x), pts[k], &compat[k]));
    }
    return assess(raw, ricciScale, tol);
  };

  const Candidate zero = candidate(std::nullopt);
  {
    // The compatibility condition does not involve ξ; judge it on its own.
    std::vector<double> cv;
    for (const auto& c : compat) cv.push_back(maxAbs(c) / zero.residuals.scale);
    const Verdict v = judge(cv, tol);
    if (v != Verdict::ConformalEinstein) {
      const auto [above, aboveTen] = exceedances(cv, tol);
      r.residuals = zero.residuals;
      r.verdict = v;
      if (v == Verdict::NotConformalEinstein)
        r.notes.push_back("compatibility condition violated above 10x tolerance at " + std::to_string(aboveTen) +
                          " sample points");
      else
        r.notes.push_back("compatibility residual exceeds tolerance at " + std::to_string(above) +
                          " sample point(s), " + std::to_string(aboveTen) + " above 10x tolerance");
      return finish(r);
    }
  }
  r.xiCandidate = "zero";
  if (zero.passed) {
    conclude(zero, "");
    return finish(r);
  }
  r.notes.push_back("xi = 0 candidate fails the Einstein conditions (max normalized residual " +
                    sci(std::max({zero.residuals.antisymRicci, zero.residuals.tracefree, zero.residuals.closedness})) +
                    ")");
  Candidate last = zero;
  if (cfg.xi) {
    r.xiCandidate = "user";
    last = candidate(cfg.xi);
    if (!last.passed)
      r.notes.push_back("user xi candidate fails the Einstein conditions (max normalized residual " +
                        sci(std::max({last.residuals.antisymRicci, last.residuals.tracefree,
                                      last.residuals.closedness})) +
                        ")");
  }
  r.residuals = last.residuals;
  if (last.passed) {
    r.verdict = Verdict::ConformalEinstein;
    r.conformalEinstein = true;
  } else {
    // Failure for particular ξ does not exclude other choices.
    r.verdict = Verdict::Inconclusive;
  }
  return finish(r);
}

// ---------------------------------------------------------------------------
// Reports

namespace {

void writeJson(const nlohmann::json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' '), close(static_cast<std::size_t>(indent), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + nlohmann::json(it.key()).dump() + ": ";
      writeJson(it.value(), out, indent + 2);
    }
    out += "\n" + close + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    const bool scalars = std::all_of(j.begin(), j.end(), [](const auto& e) { return e.is_primitive(); });
    if (scalars) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        writeJson(j[i], out, indent);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      writeJson(j[i], out, indent + 2);
    }
    out += "\n" + close + "]";
  } else if (j.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", j.get<double>());
    out += buf;
  } else {
    out += j.dump();
  }
}

}  // namespace

std::string reportJson(const Report& r) {
  nlohmann::json j;
  j["verdict"] = toString(r.verdict);
  j["einstein"] = r.einstein;
  j["conformal_einstein"] = r.conformalEinstein;
  j["branch"] = toString(r.branch);
  j["rank_profile"] = r.rankProfile;
  j["residuals"] = {{"antisym_ricci", r.residuals.antisymRicci},
                    {"tracefree", r.residuals.tracefree},
                    {"closedness", r.residuals.closedness},
                    {"compatibility", r.residuals.compatibility}};
  j["normalization"] = r.residuals.scale;
  j["ordinary_tracefree"] = r.ordinaryTracefree;
  j["xi"] = r.xiCandidate.empty() ? "none" : r.xiCandidate;
  j["points"] = r.points;
  j["rejected"] = r.rejected;
  j["seed"] = r.seed;
  j["tolerance"] = r.tolerance;
  j["notes"] = r.notes;
  j["version"] = kVersion;
  std::string out;
  writeJson(j, out, 0);
  out += "\n";
  return out;
}

void emitReport(const Report& r, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report to " + path);
  f << reportJson(r);
  if (!f) throw std::runtime_error("error writing report to " + path);
}

// ---------------------------------------------------------------------------
// Concomitant table

namespace {

void table(std::ostream& out, const std::string& title, const PointTensor<double>& t,
           const std::function<std::string(const std::vector<int>&)>& label) {
  out << title << '\n';
  const double cut = 1e-12 * std::max(1.0, maxAbs(t));
  bool any = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i]) <= cut) continue;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", t[i]);
    out << "  " << label(t.index(i)) << " = " << buf << '\n';
    any = true;
  }
  if (!any) out << "  (all zero)\n";
}

std::string digits(std::span<const int> idx) {
  std::string s;
  for (int i : idx) s += std::to_string(i + 1);
  return s;
}

}  // namespace

void printConcomitants(const MetricSpec& spec, std::span<const double> coords, std::ostream& out) {
  const ChartPoint at = spec.point(coords);
  if (nearSingular(evaluate(spec.metric, at)))
    throw std::runtime_error("metric is degenerate at " + formatPoint(coords));
  const Geometry geo(spec);
  const CompiledGeometry cg(geo);
  const Pt pt = cg.evaluate(at);
  const int n = spec.dimension;

  out << "point " << formatPoint(coords) << " in (";
  for (int i = 0; i < n; ++i) out << (i ? ", " : "") << spec.coordinates[static_cast<std::size_t>(i)];
  out << ")\n";
  table(out, "Christoffel Γ^c_ab", pt.gamma,
        [](const std::vector<int>& i) { return "Γ^" + digits({&i[0], 1}) + "_" + digits({&i[1], 2}); });
  table(out, "Riemann R_abc^d", evaluate(geo.riemann(), at),
        [](const std::vector<int>& i) { return "R_" + digits({&i[0], 3}) + "^" + digits({&i[3], 1}); });
  table(out, "Ricci R_ab", pt.ricci, [](const std::vector<int>& i) { return "R_" + digits(i); });
  PointTensor<double> scalar(n, {}, pt.scalar);
  table(out, "Ricci scalar R", scalar, [](const std::vector<int>&) { return std::string("R"); });
  table(out, "Schouten L_ab", evaluate(geo.schouten(), at), [](const std::vector<int>& i) { return "L_" + digits(i); });
  table(out, "Weyl C_abc^d", values(pt.weyl),
        [](const std::vector<int>& i) { return "C_" + digits({&i[0], 3}) + "^" + digits({&i[3], 1}); });

  const SolderingBasis& basis = cg.basis();
  out << "Weyl endomorphism C_A^B, pairs";
  for (int A = 0; A < basis.size(); ++A)
    out << ' ' << A + 1 << "=(" << basis.pair(A).first + 1 << basis.pair(A).second + 1 << ')';
  out << '\n';
  PointTensor<double> endo(basis.size(), {Slot::Down, Slot::Up});
  for (int A = 0; A < basis.size(); ++A)
    for (int B = 0; B < basis.size(); ++B) endo(A, B) = pt.endo(A, B);
  table(out, "  rank " + std::to_string(endoRank(pt)), endo,
        [](const std::vector<int>& i) { return "C_" + std::to_string(i[0] + 1) + "^" + std::to_string(i[1] + 1); });

  const bool invertible = endoRank(pt) == basis.size();
  const LambdaForm l = invertible ? lambdaInvertible(pt, weylInverse(pt, basis))
                                  : lambdaXi(pt, weylPseudoinverse(pt, basis), std::nullopt);
  table(out, invertible ? "Lambda Λ_a" : "Lambda Λ^ξ_a (ξ = 0)", values(l.lambda),
        [](const std::vector<int>& i) { return "Λ_" + digits(i); });
}

// ---------------------------------------------------------------------------
// Covariance suite

bool CovarianceReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CovarianceCheck& c) { return c.passed(); });
}

namespace {

double relDiff(const PointTensor<double>& a, const PointTensor<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m / std::max({1.0, maxAbs(a), maxAbs(b)});
}

PointTensor<double> scaled(PointTensor<double> t, double k) {
  for (double& v : t.data()) v *= k;
  return t;
}

}  // namespace

CovarianceReport covarianceSuite(const MetricSpec& spec, const Expr& omega, const Rational& weight, int points,
                                 unsigned long long seed) {
  spec.validate();
  const int n = spec.dimension;
  const double s = weight.get_d();
  const MetricSpec rescaled = conformalRescale(spec, pow(omega, Expr(-2L)));
  const Geometry geo(spec), geoT(rescaled);
  const CompiledGeometry cg(geo), cgT(geoT);
  const SampleSet samples = samplePoints(spec, points, seed);

  // Test scalar u and its weight-s image Ω^s u.
  std::vector<Expr> terms{Expr(2L)};
  Expr sum;
  for (int i = 0; i < n; ++i) {
    const Expr x = geo.coords()[static_cast<std::size_t>(i)];
    terms.push_back(number(Rational(1, i + 2)) * x);
    sum += x;
  }
  terms.push_back(number(Rational(1, 10)) * sum * sum);
  const Expr u = add(terms);
  TensorField uField(n, {}), utField(n, {}), omegaS(n, {});
  uField[0] = u;
  utField[0] = pow(omega, number(weight)) * u;
  omegaS[0] = pow(omega, number(weight));
  const CompiledField uc(uField, geo.coords(), true), utc(utField, geo.coords(), true),
      omc(omegaS, geo.coords(), false);
  const CompiledField upsc(upsilon(omega, geo), geo.coords(), true);

  CovarianceReport rep;
  std::ostringstream name;
  name << "scalar D^s, s = " << weight.get_str();
  CovarianceCheck scalarCheck{name.str(), 0, 1e-7}, weylCheck{"Weyl D^0", 0, 1e-7},
      metricCheck{"metric weights g (-2), g^-1 (+2)", 0, 1e-7}, lemmaCheck{"Lambda[g] - Lambda[g~] = Upsilon", 0, 1e-6},
      connCheck{"C-connection transition", 0, 1e-7}, ricciCheck{"C-Ricci tensor", 0, 1e-7},
      leibnizCheck{"Leibniz, 50 pairs", 0, 1e-9};

  std::vector<PointTensor<double>> lambdas;
  bool transported = false;
  for (const auto& x : samples.points) {
    const ChartPoint p = spec.point(x);
    Pt a, b;
    try {
      a = cg.evaluate(p);
      b = cgT.evaluate(p);
    } catch (const DomainError& e) {
      throw std::runtime_error("conformal factor fails at " + formatPoint(x) + ": " + e.what());
    }
    const int full = cg.basis().size();
    const PointTensor<Jet> ups = upsc.jet(p);
    LambdaForm la, lb;
    if (endoRank(a) == full && endoRank(b) == full) {
      la = lambdaInvertible(a, weylInverse(a, cg.basis()));
      lb = lambdaInvertible(b, weylInverse(b, cgT.basis()));
      PointTensor<double> expect = values(la.lambda);
      for (int i = 0; i < n; ++i) expect(i) -= ups(i).v;
      lemmaCheck.residual = std::max(lemmaCheck.residual, relDiff(values(lb.lambda), expect));
    } else {
      transported = true;
      la = lambdaXi(a, weylPseudoinverse(a, cg.basis()), std::nullopt);
      lb = la;
      for (int i = 0; i < n; ++i) lb.lambda(i) = la.lambda(i) - ups(i);
    }
    const PointTensor<double> lva = values(la.lambda), lvb = values(lb.lambda);
    lambdas.push_back(lva);

    const double om = omc.value(p)[0];
    const Jet uj = uc.jet(p)[0], utj = utc.jet(p)[0];
    PointTensor<double> gu(n, {Slot::Down}), gut(n, {Slot::Down});
    for (int i = 0; i < n; ++i) {
      gu(i) = uj.d[static_cast<std::size_t>(i)];
      gut(i) = utj.d[static_cast<std::size_t>(i)];
    }
    scalarCheck.residual = std::max(scalarCheck.residual, relDiff(dOperatorScalar(utj.v, gut, s, lvb),
                                                                  scaled(dOperatorScalar(uj.v, gu, s, lva), om)));

    const PointTensor<double> ga = values(a.g), gia = values(a.ginv), gb = values(b.g), gib = values(b.ginv);
    weylCheck.residual =
        std::max(weylCheck.residual, relDiff(dOperatorTensor(values(b.weyl), covariantDerivativeAt(b.weyl, b.gamma),
                                                             0, lvb, gb, gib),
                                             dOperatorTensor(values(a.weyl), covariantDerivativeAt(a.weyl, a.gamma),
                                                             0, lva, ga, gia)));

    for (const auto& [pt, lv, gv, giv] : {std::tie(a, lva, ga, gia), std::tie(b, lvb, gb, gib)}) {
      const PointTensor<double> dg = covariantDerivativeAt(pt.g, pt.gamma);
      const PointTensor<double> dgi = covariantDerivativeAt(pt.ginv, pt.gamma);
      const double sg = std::max({1.0, maxAbs(gv) * maxAbs(lv)}), sgi = std::max({1.0, maxAbs(giv) * maxAbs(lv)});
      metricCheck.residual = std::max(metricCheck.residual, maxAbs(dOperatorTensor(gv, dg, -2, lv, gv, giv)) / sg);
      metricCheck.residual = std::max(metricCheck.residual, maxAbs(dOperatorTensor(giv, dgi, 2, lv, gv, giv)) / sgi);
    }

    // Γ + Γ[C,∇] and 𝒭_ab are the same for g and g̃.
    const CConnection ca = cConnection(la, a), cb = cConnection(lb, b);
    PointTensor<double> fullA(n, {Slot::Up, Slot::Down, Slot::Down}), fullB = fullA;
    for (std::size_t i = 0; i < fullA.size(); ++i) {
      fullA[i] = a.gamma[i] + ca.transition[i].v;
      fullB[i] = b.gamma[i] + cb.transition[i].v;
    }
    connCheck.residual = std::max(connCheck.residual, relDiff(fullA, fullB));
    ricciCheck.residual = std::max(ricciCheck.residual, relDiff(cRicci(la, a).tensor, cRicci(lb, b).tensor));
  }

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 50; ++trial) {
    const PointTensor<double>& l = lambdas[static_cast<std::size_t>(trial) % lambdas.size()];
    const double uu = gauss(rng), vv = gauss(rng), s1 = 4 * gauss(rng), s2 = 4 * gauss(rng);
    PointTensor<double> gu(n, {Slot::Down}), gv(n, {Slot::Down}), guv(n, {Slot::Down});
    for (int i = 0; i < n; ++i) {
      gu(i) = gauss(rng);
      gv(i) = gauss(rng);
      guv(i) = uu * gv(i) + vv * gu(i);
    }
    const PointTensor<double> lhs = dOperatorScalar(uu * vv, guv, s1 + s2, l);
    const PointTensor<double> du = dOperatorScalar(uu, gu, s1, l), dv = dOperatorScalar(vv, gv, s2, l);
    PointTensor<double> rhs(n, {Slot::Down});
    for (int i = 0; i < n; ++i) rhs(i) = uu * dv(i) + vv * du(i);
    leibnizCheck.residual = std::max(leibnizCheck.residual, relDiff(lhs, rhs));
  }

  rep.lambdaTransported = transported;
  rep.checks = {scalarCheck, weylCheck, metricCheck};
  if (!transported) rep.checks.push_back(lemmaCheck);
  rep.checks.push_back(connCheck);
  rep.checks.push_back(ricciCheck);
  rep.checks.push_back(leibnizCheck);
  return rep;
}

void printCovariance(const CovarianceReport& r, std::ostream& out) {
  if (r.lambdaTransported)
    out << "note: Weyl endomorphism not invertible at every sample; Lambda of the rescaled metric transported\n";
  for (const CovarianceCheck& c : r.checks) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s %-40s residual %.3e (threshold %.0e)", c.passed() ? "PASS" : "FAIL",
                  c.name.c_str(), c.residual, c.threshold);
    out << buf << '\n';
  }
}

}  // namespace confcheck
