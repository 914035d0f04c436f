#pragma once

// End-to-end pipeline: metric files, seeded sampling, the conformal-Einstein
// decision procedure, canonical JSON reports and the debugging surfaces used
// by the command-line tool.

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "confcheck/confop.hpp"
#include "confcheck/tensor.hpp"

namespace confcheck {

inline constexpr const char* kVersion = "0.1.0";

/// Error in a metric or ξ file. line() is 1-based; 0 refers to the file as a whole.
class MetricFileError : public std::runtime_error {
 public:
  MetricFileError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

MetricSpec parseMetric(std::string_view text, const std::string& source = "<input>");
MetricSpec loadMetric(const std::string& path);

/// ξ^p_mn from lines `xi[p,m,n] = expr`, antisymmetric in (m, n). A single
/// entry is mirrored with the opposite sign; when both orders are given the
/// result is their antisymmetric part.
TensorField parseXi(std::string_view text, const MetricSpec& spec, const std::string& source = "<input>");
TensorField loadXi(const std::string& path, const MetricSpec& spec);

struct RunConfig {
  int points = 24;
  unsigned long long seed = 0;
  double tolerance = 1e-7;
  std::optional<TensorField> xi;
  std::string output;

  /// Throws std::invalid_argument unless points >= 3 and 0 < tolerance < 1e-2.
  void validate() const;
};

struct SampleSet {
  std::vector<std::vector<double>> points;
  int candidates = 0;  // candidate points examined
  int rejected = 0;    // near-singular or outside the real domain
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scrambled Halton points in the domain box. Candidates with
/// |det g| < 1e-8 (max |g_ab|)^D or a failed evaluation are skipped; at most
/// 100 * count candidates are tried.
SampleSet samplePoints(const MetricSpec& spec, int count, unsigned long long seed);
SampleSet samplePoints(const MetricSpec& spec, const RunConfig& cfg);

enum class Verdict { Einstein, ConformalEinstein, NotConformalEinstein, ConformallyFlat, Inconclusive };
enum class Branch { None, Invertible, Degenerate, WeylZero };

std::string toString(Verdict v);
std::string toString(Branch b);
int exitCode(Verdict v);

struct ConditionResiduals {
  double antisymRicci = 0;
  double tracefree = 0;
  double closedness = 0;
  double compatibility = 0;
  double scale = 1;  // normalization max(1, max |𝒭_ab|, max |R_ab|)
};

struct Report {
  Verdict verdict = Verdict::Inconclusive;
  bool einstein = false;
  bool conformalEinstein = false;
  Branch branch = Branch::None;
  std::vector<int> rankProfile;  // endomorphism rank at each sample
  ConditionResiduals residuals;  // normalized
  double ordinaryTracefree = 0;  // normalized max |R_ab − R g_ab / D|
  std::string xiCandidate;       // "", "zero" or "user"
  std::vector<std::vector<double>> points;
  int rejected = 0;
  unsigned long long seed = 0;
  double tolerance = 0;
  std::vector<std::string> notes;
  double wallSeconds = 0;  // not serialized
};

/// Verdict implied by per-point normalized residuals of conditions that are
/// necessary and sufficient: CONFORMAL_EINSTEIN when all are <= tol,
/// NOT_CONFORMAL_EINSTEIN when at least 3 exceed 10 * tol, else INCONCLUSIVE.
Verdict judge(std::span<const double> residuals, double tol);

Report classify(const MetricSpec& spec, const RunConfig& cfg);

/// Canonical JSON: sorted keys, two-space indentation, floats as %.12e.
std::string reportJson(const Report& r);
void emitReport(const Report& r, const std::string& path);

/// Prints the nonzero components of Γ, R_abc^d, R_ab, R, L_ab, C_abc^d,
/// C_A^B and Λ at one point. Indices are 1-based.
void printConcomitants(const MetricSpec& spec, std::span<const double> coords, std::ostream& out);

struct CovarianceCheck {
  std::string name;
  double residual = 0;
  double threshold = 0;
  bool passed() const { return residual <= threshold; }
};

struct CovarianceReport {
  std::vector<CovarianceCheck> checks;
  bool lambdaTransported = false;  // Λ of the rescaled metric was set to Λ − Υ
  bool passed() const;
};

/// Compares g with g̃ = Ω⁻² g at sample points: D^s on a weight-s scalar, D^0
/// on the Weyl tensor, the weights of g and g⁻¹, Λ̃ = Λ − Υ, the C-connection
/// and 𝒭_ab, and the Leibniz rule on random pairs. On metrics whose Weyl
/// endomorphism is not invertible at every sample, Λ̃ is transported from
/// Λ^ξ (ξ = 0) instead of being recomputed.
CovarianceReport covarianceSuite(const MetricSpec& spec, const Expr& omega, const Rational& weight, int points = 6,
                                 unsigned long long seed = 0);

void printCovariance(const CovarianceReport& r, std::ostream& out);

}  // namespace confcheck
