#include "kmt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "kmt/embed.hpp"
#include "kmt/parallel.hpp"
#include "kmt/random.hpp"

namespace kmt {

double smirnov_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-2.0 * x * x); }

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    // Only the last of a run of ties carries the upper step.
    const double f = cdf(samples[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    if (i + 1 == samples.size() || samples[i + 1] != samples[i]) d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

double chi_square_pvalue(std::span<const double> observed, std::span<const double> probs, double min_expected) {
  if (observed.size() != probs.size() || observed.empty())
    throw std::invalid_argument("chi_square_pvalue: size mismatch");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  double stat = 0.0;
  int cells = 0;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  auto add = [&](double o, double e) {
    stat += (o - e) * (o - e) / e;
    ++cells;
  };
  for (std::size_t i = 0; i < observed.size(); ++i) {
    pooled_obs += observed[i];
    pooled_exp += probs[i] * total;
    if (pooled_exp >= min_expected) {
      add(pooled_obs, pooled_exp);
      pooled_obs = pooled_exp = 0.0;
    }
  }
  if (pooled_exp > 0.0) {
    if (cells == 0) {
      add(pooled_obs, pooled_exp);
    } else {
      // fold the remainder into the last cell
      stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    }
  }
  if (cells < 2) return 1.0;
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

MgfEstimate mgf_estimate(std::span<const double> values, double theta) {
  if (values.size() < 2) throw std::invalid_argument("mgf_estimate: need at least two values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0, sq = 0.0;
  for (double v : values) {
    const double e = std::exp(theta * v);
    mean += e;
    sq += e * e;
  }
  mean /= n;
  const double var = std::max(0.0, (sq / n - mean * mean) * n / (n - 1));
  return {mean, std::sqrt(var / n)};
}

Eigen::MatrixXd covariance_target(int n, CovTarget target) {
  if (n < 1) throw std::invalid_argument("covariance_target: n must be positive");
  Eigen::MatrixXd out(n, n);
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) {
      const double lo = std::min(i, j), hi = std::max(i, j);
      out(i - 1, j - 1) = target == CovTarget::walk ? lo : lo * (n - hi) / n;
    }
  }
  return out;
}

double covariance_check(const Eigen::MatrixXd& samples, int n, CovTarget target) {
  if (samples.rows() < 1000) throw std::invalid_argument("covariance_check: need at least 1000 samples");
  if (samples.cols() != n) throw std::invalid_argument("covariance_check: expected n columns");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  return (cov - covariance_target(n, target)).cwiseAbs().maxCoeff();
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  fit.points = x.size();
  return fit;
}

namespace {

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

void require_tail_input(const std::vector<double>& sorted) {
  if (sorted.size() < 1000) throw std::invalid_argument("tail fit: need at least 1000 samples");
  if (sorted.front() == sorted.back()) throw std::invalid_argument("tail fit: constant input");
}

}  // namespace

std::vector<double> tail_grid(std::span<const double> devs, double from_quantile, int points, std::size_t min_hits) {
  const auto sorted = sorted_copy(devs);
  require_tail_input(sorted);
  if (points < 2) throw std::invalid_argument("tail_grid: need two or more points");
  const std::size_t n = sorted.size();
  const double lo = sorted[static_cast<std::size_t>(from_quantile * static_cast<double>(n - 1))];
  const double hi = sorted[n - std::min(min_hits, n)];
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
  return grid;
}

LinearFit tail_fit(std::span<const double> devs, std::span<const double> grid, std::size_t min_hits) {
  const auto sorted = sorted_copy(devs);
  require_tail_input(sorted);
  const double n = static_cast<double>(sorted.size());
  std::vector<double> xs, ys;
  for (double x : grid) {
    const auto hits = static_cast<std::size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x));
    if (hits < min_hits) continue;
    xs.push_back(x);
    ys.push_back(std::log(static_cast<double>(hits) / n));
  }
  if (xs.size() < 2) throw std::invalid_argument("tail_fit: fewer than two usable grid points");
  return linear_fit(xs, ys);
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + mid));
}

ScalingSummary summarize(std::span<const ScalingRow> rows) {
  ScalingSummary s;
  for (const auto& row : rows)
    if (std::find(s.n.begin(), s.n.end(), row.n) == s.n.end()) s.n.push_back(row.n);
  std::sort(s.n.begin(), s.n.end());
  std::vector<double> log_n;
  for (int n : s.n) {
    std::vector<double> max_dev, terminal;
    for (const auto& row : rows) {
      if (row.n != n) continue;
      max_dev.push_back(row.max_dev);
      terminal.push_back(row.terminal_dev);
    }
    s.median_max_dev.push_back(median(max_dev));
    s.median_terminal_dev.push_back(median(terminal));
    log_n.push_back(std::log(static_cast<double>(n)));
  }
  if (s.n.size() >= 2) s.fit = linear_fit(log_n, s.median_max_dev);
  if (!s.n.empty() && s.median_max_dev.front() > 0.0) s.ratio = s.median_max_dev.back() / s.median_max_dev.front();
  return s;
}

ScalingStudy scaling_study(const AtomicLaw& law, std::span<const int> n_list, int replicas, std::uint64_t seed,
                           int workers, const DpLimits& limits) {
  if (n_list.empty()) throw std::invalid_argument("scaling_study: empty n list");
  if (replicas < 1) throw std::invalid_argument("scaling_study: replicas must be positive");
  ScalingStudy study;
  study.rows.resize(n_list.size() * static_cast<std::size_t>(replicas));
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const int n = n_list[i];
    const StrongEmbedder embed(law, n, limits);
    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
      const std::uint64_t stream = derive_seed(seed, {static_cast<std::uint64_t>(n), r});
      Rng rng(stream);
      const EmbedOutput out = embed(rng);
      auto& row = study.rows[i * static_cast<std::size_t>(replicas) + r];
      row.n = n;
      row.replicate = static_cast<int>(r);
      row.seed = stream;
      row.max_dev = out.max_dev;
      row.terminal_dev = out.terminal_dev;
      row.s_n = to_double(out.s.value(n));
      row.gamma2 = out.gamma2;
    });
  }
  std::stable_sort(study.rows.begin(), study.rows.end(), [](const ScalingRow& a, const ScalingRow& b) {
    return a.n != b.n ? a.n < b.n : a.replicate < b.replicate;
  });
  study.summary = summarize(study.rows);
  return study;
}

namespace {

std::string fmt_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_scaling_csv(std::ostream& os, std::span<const ScalingRow> rows) {
  os << "n,replicate,seed,max_dev,terminal_dev,s_n,gamma2\n";
  for (const auto& r : rows) {
    os << r.n << ',' << r.replicate << ',' << r.seed << ',' << fmt_real(r.max_dev) << ','
       << fmt_real(r.terminal_dev) << ',' << fmt_real(r.s_n) << ',' << fmt_real(r.gamma2) << '\n';
  }
}

std::string summary_to_text(const ScalingSummary& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    os << "median_max_dev[" << s.n[i] << "] = " << fmt_real(s.median_max_dev[i]) << '\n';
    os << "median_terminal_dev[" << s.n[i] << "] = " << fmt_real(s.median_terminal_dev[i]) << '\n';
  }
  os << "fit_slope = " << fmt_real(s.fit.slope) << '\n';
  os << "fit_intercept = " << fmt_real(s.fit.intercept) << '\n';
  os << "fit_r2 = " << fmt_real(s.fit.r2) << '\n';
  os << "ratio = " << fmt_real(s.ratio) << '\n';
  return os.str();
}

TheoryConstants theory_constants() {
  TheoryConstants c;
  c.c_expression = "(2 + ln 4) / ln(3/2)";
  c.c_value = (2.0 + std::log(4.0)) / std::log(1.5);
  c.k1 = {"K1", 8.0, "c1"};
  c.k2 = {"K2", 18.0, "c2"};
  c.lambda0_terms = {"sqrt(alpha1 / (32 c1))", "theta2 / 2", "theta5 / sqrt(72 c2)"};
  c.unevaluated = {"alpha0", "alpha1", "theta1", "theta2", "theta5", "vartheta_l", "c1", "c2"};
  return c;
}

std::string TheoryConstants::to_text() const {
  std::ostringstream os;
  os << "C = " << c_expression << '\n';
  os << "C_value = " << fmt_real(c_value) << '\n';
  os << k1.lhs << " = " << k1.coefficient << " " << k1.symbol << '\n';
  os << k2.lhs << " = " << k2.coefficient << " " << k2.symbol << '\n';
  os << "lambda0 = min(";
  for (std::size_t i = 0; i < lambda0_terms.size(); ++i) os << (i ? ", " : "") << lambda0_terms[i];
  os << ")\n";
  os << "unevaluated =";
  for (const auto& sym : unevaluated) os << ' ' << sym;
  os << '\n';
  return os.str();
}

}  // namespace kmt
