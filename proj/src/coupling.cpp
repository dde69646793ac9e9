#include "kmt/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kmt/errors.hpp"
#include "kmt/normal.hpp"

namespace kmt {

namespace detail {

std::vector<double> quantile_thresholds(std::span<const double> probs, double sigma) {
  const std::size_t m = probs.size();
  std::vector<double> t;
  if (m < 2) return t;
  t.resize(m - 1);
  std::vector<double> upper(m, 0.0);  // P(X > x_i)
  for (std::size_t i = m - 1; i-- > 0;) upper[i] = upper[i + 1] + probs[i + 1];
  double lower = 0.0;  // P(X <= x_i)
  for (std::size_t i = 0; i + 1 < m; ++i) {
    lower += probs[i];
    t[i] = lower <= 0.5 ? sigma * normal_quantile(lower) : -sigma * normal_quantile(upper[i]);
    if (i > 0 && t[i] < t[i - 1]) t[i] = t[i - 1];
  }
  return t;
}

std::size_t quantile_index(std::span<const double> thresholds, double z) {
  return static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), z) - thresholds.begin());
}

}  // namespace detail

CouplingMap::CouplingMap(LatticeLaw law, double sigma2) : law_(std::move(law)), sigma2_(sigma2) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("coupling variance must be nonnegative");
  if (sigma2 == 0.0) {
    if (law_.size() != 1) throw InfeasibleError("zero Gaussian variance can only couple a point mass");
    return;
  }
  thresholds_ = detail::quantile_thresholds(law_.probs(), std::sqrt(sigma2));
}

CouplingMap quantile_couple(const LatticeLaw& law, double sigma2) { return CouplingMap(law, sigma2); }

SumCoupler::SumCoupler(const AtomicLaw& law, int n, const DpLimits& limits)
    : n_(n), map_([&] {
        if (n < 1) throw std::invalid_argument("couple_sum: n must be positive");
        require_hypotheses(validate_law(law), {"mean_zero", "unit_variance", "zero_skew"});
        return CouplingMap(iid_sum_law(law, n, limits), double(n));
      }()) {}

CoupledDraw SumCoupler::at(double z) const {
  const std::size_t i = map_.index(z);
  return {map_.law().value_double(i), z, map_.law().tick(i)};
}

CoupledDraw couple_sum(const AtomicLaw& law, int n, Rng& rng) { return SumCoupler(law, n)(rng); }

CoupledDraw couple_midpoint(const IncrementBag& bag, int k, double eta, Rng& rng) {
  const int n = bag.n();
  if (std::abs(2 * k - n) > 1 || k < 0 || k > n)
    throw std::invalid_argument("couple_midpoint: need |2k - n| <= 1, got k = " + std::to_string(k) + ", n = " + std::to_string(n));
  if (k == 0) return {0.0, 0.0, 0};
  if (k == n) return {to_double(bag.total()), 0.0, bag.total_ticks()};
  if (!(eta > 0.0)) throw std::invalid_argument("couple_midpoint: eta must be positive");
  const double var = double(k) * double(n - k) / double(n);
  const LatticeLaw sk = wr_sum_law(bag, k);
  const LatticeLaw centred = sk.shifted(-bag.total() * k / n);
  const CouplingMap map(centred, eta * eta * var);
  const double z = std::sqrt(var) * rng.gaussian();
  const std::size_t i = map.index(eta * z);
  return {sk.value_double(i), z, sk.tick(i)};
}

ExpMomentEstimate exp_moment(std::span<const double> devs, double lambda, int bootstrap_rounds, Rng& rng) {
  if (devs.empty()) throw std::invalid_argument("exp_moment: no deviations");
  if (!(lambda >= 0.0)) throw std::invalid_argument("exp_moment: lambda must be nonnegative");
  const std::size_t n = devs.size();
  std::vector<double> e(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += e[i] = std::exp(lambda * devs[i]);
  ExpMomentEstimate r{lambda, sum / double(n), 0.0, 0.0, n};
  r.ci_low = r.ci_high = r.estimate;
  if (bootstrap_rounds > 0) {
    std::vector<double> means(static_cast<std::size_t>(bootstrap_rounds));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& m : means) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += e[pick(rng)];
      m = s / double(n);
    }
    std::sort(means.begin(), means.end());
    auto q = [&](double p) { return means[static_cast<std::size_t>(std::floor(p * double(means.size() - 1)))]; };
    r.ci_low = std::min(q(0.025), r.estimate);
    r.ci_high = std::max(q(0.975), r.estimate);
  }
  return r;
}

}  // namespace kmt
