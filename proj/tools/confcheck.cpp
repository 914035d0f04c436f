#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "confcheck/checker.hpp"

using namespace confcheck;

namespace {

std::vector<double> parseCoordinates(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parseRational(item).get_d());
  return out;
}

void summary(const Report& r, std::ostream& out) {
  char buf[200];
  out << "verdict  " << toString(r.verdict) << '\n';
  out << "branch   " << toString(r.branch) << '\n';
  out << "points   " << r.points.size() << " (seed " << r.seed << ", " << r.rejected << " rejected)\n";
  std::snprintf(buf, sizeof buf,
                "residuals antisym_ricci %.3e  tracefree %.3e  closedness %.3e  compatibility %.3e  (scale %.3e)\n",
                r.residuals.antisymRicci, r.residuals.tracefree, r.residuals.closedness, r.residuals.compatibility,
                r.residuals.scale);
  out << buf;
  std::snprintf(buf, sizeof buf, "ordinary trace-free Ricci %.3e, tolerance %.1e, %.2f s\n", r.ordinaryTracefree,
                r.tolerance, r.wallSeconds);
  out << buf;
  for (const auto& n : r.notes) out << "note     " << n << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decide whether a metric is conformal to an Einstein metric"};
  app.require_subcommand(1);

  std::string file, xiFile, jsonOut, at, omegaText, weightText;
  RunConfig cfg;

  auto* check = app.add_subcommand("check", "classify a metric file");
  check->add_option("file", file, "metric file")->required();
  check->add_option("--points", cfg.points, "number of sample points")->capture_default_str();
  check->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();
  check->add_option("--tol", cfg.tolerance, "residual tolerance")->capture_default_str();
  check->add_option("--xi", xiFile, "xi candidate file");
  check->add_option("--json", jsonOut, "write the JSON report here ('-' for stdout)");

  auto* conc = app.add_subcommand("concomitants", "print curvature concomitants at a point");
  conc->add_option("file", file, "metric file")->required();
  conc->add_option("--at", at, "comma-separated coordinates")->required();

  int covPoints = 6;
  auto* cov = app.add_subcommand("covtest", "check conformal covariance against a factor Omega");
  cov->add_option("file", file, "metric file")->required();
  cov->add_option("--omega", omegaText, "conformal factor expression")->required();
  cov->add_option("--weight", weightText, "conformal weight s of the test scalar")->required();
  cov->add_option("--points", covPoints, "number of sample points")->capture_default_str();
  cov->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    const MetricSpec spec = loadMetric(file);
    if (check->parsed()) {
      if (!xiFile.empty()) cfg.xi = loadXi(xiFile, spec);
      cfg.output = jsonOut;
      const Report r = classify(spec, cfg);
      if (jsonOut == "-") {
        std::cout << reportJson(r);
      } else {
        summary(r, std::cout);
        if (!jsonOut.empty()) emitReport(r, jsonOut);
      }
      return exitCode(r.verdict);
    }
    if (conc->parsed()) {
      printConcomitants(spec, parseCoordinates(at), std::cout);
      return 0;
    }
    const Expr omega = parse(omegaText, spec.coordinates, spec.parameterNames());
    const CovarianceReport r = covarianceSuite(spec, omega, parseRational(weightText), covPoints, cfg.seed);
    printCovariance(r, std::cout);
    return r.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "confcheck: " << e.what() << '\n';
    return 3;
  }
}
