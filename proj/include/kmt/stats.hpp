#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kmt/laws.hpp"

namespace kmt {

// ------------------------------------------------------------ W_{k,d}

template <typename Scalar>
struct WkdDecomposition {
  std::vector<Scalar> parts;  // W_{k,d}, aligned with the difference set
  Scalar w{};                 // W_k = S_k - (k/n) S_n
};

/// W_{k,d} = (1/n) sum_{i <= k < j} (eps_i - eps_j) 1(|eps_i - eps_j| = d).
/// Every |eps_i - eps_j| must appear in `dplus`.
template <typename Scalar>
WkdDecomposition<Scalar> decompose_wkd(std::span<const Scalar> eps, int k, std::span<const Scalar> dplus) {
  const int n = static_cast<int>(eps.size());
  if (k < 1 || k > n) throw std::invalid_argument("decompose_wkd: k must lie in [1, n]");
  WkdDecomposition<Scalar> out;
  out.parts.assign(dplus.size(), Scalar(0));
  for (int i = 0; i < k; ++i) {
    for (int j = k; j < n; ++j) {
      const Scalar diff = eps[i] - eps[j];
      const Scalar mag = diff < Scalar(0) ? Scalar(-diff) : diff;
      std::size_t d = 0;
      while (d < dplus.size() && !(dplus[d] == mag)) ++d;
      if (d == dplus.size()) throw std::invalid_argument("decompose_wkd: difference missing from the difference set");
      out.parts[d] += diff;
    }
  }
  for (auto& p : out.parts) p /= Scalar(n);
  Scalar sk(0), sn(0);
  for (int i = 0; i < n; ++i) {
    if (i < k) sk += eps[i];
    sn += eps[i];
  }
  out.w = sk - Scalar(k) * sn / Scalar(n);
  return out;
}

// ------------------------------------------------------ reference laws

// 1 - exp(-2 x^2) for x > 0: the law of the maximum of a standard bridge.
double smirnov_cdf(double x);

// Sup distance between the empirical CDF of `samples` and `cdf`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

// Pearson chi-square p-value of observed counts against cell probabilities.
// Cells with expected count below `min_expected` are pooled.
double chi_square_pvalue(std::span<const double> observed, std::span<const double> probs, double min_expected = 5.0);

// Sample mean of exp(theta * x) and its standard error.
struct MgfEstimate {
  double mean = 0.0;
  double se = 0.0;
};
MgfEstimate mgf_estimate(std::span<const double> values, double theta);

// ----------------------------------------------------------- covariance

enum class CovTarget { bridge, walk };

// Cov(Z_i, Z_j), i, j = 1..n: (i^j)(n-(ivj))/n or i^j.
Eigen::MatrixXd covariance_target(int n, CovTarget target);

// Rows are samples of (Z_1..Z_n). Max |empirical cov - target|.
double covariance_check(const Eigen::MatrixXd& samples, int n, CovTarget target);

// ------------------------------------------------------------ tail fits

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// `points` thresholds from the `from_quantile` quantile of devs up to the
// largest value still exceeded by `min_hits` samples.
std::vector<double> tail_grid(std::span<const double> devs, double from_quantile = 0.5, int points = 20,
                              std::size_t min_hits = 50);

// Least-squares line through (x, ln P(dev >= x)) over grid points with at
// least `min_hits` exceedances.
LinearFit tail_fit(std::span<const double> devs, std::span<const double> grid, std::size_t min_hits = 50);

double median(std::vector<double> v);

// ------------------------------------------------------- scaling studies

struct ScalingRow {
  int n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double max_dev = 0.0;
  double terminal_dev = 0.0;
  double s_n = 0.0;
  double gamma2 = 0.0;
};

struct ScalingSummary {
  std::vector<int> n;
  std::vector<double> median_max_dev;
  std::vector<double> median_terminal_dev;
  LinearFit fit;  // median max_dev against ln n
  double ratio = 0.0;  // median at largest n over median at smallest n
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;  // ordered by (n, replicate)
  ScalingSummary summary;
};

// Replicate r at size n draws from the stream derive_seed(seed, {n, r}).
ScalingStudy scaling_study(const AtomicLaw& law, std::span<const int> n_list, int replicas, std::uint64_t seed,
                           int workers, const DpLimits& limits = {});

ScalingSummary summarize(std::span<const ScalingRow> rows);

void write_scaling_csv(std::ostream& os, std::span<const ScalingRow> rows);
std::string summary_to_text(const ScalingSummary& s);

// ------------------------------------------------------------ constants

struct LinearRelation {
  std::string lhs;
  double coefficient = 0.0;
  std::string symbol;
};

struct TheoryConstants {
  std::string c_expression;
  double c_value = 0.0;
  LinearRelation k1;
  LinearRelation k2;
  std::vector<std::string> lambda0_terms;  // lambda0 is their minimum
  std::vector<std::string> unevaluated;    // existence-only symbols

  std::string to_text() const;
};

TheoryConstants theory_constants();

}  // namespace kmt
