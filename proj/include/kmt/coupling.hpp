#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kmt/laws.hpp"
#include "kmt/random.hpp"

namespace kmt {

namespace detail {
// Finite thresholds t_1 <= ... <= t_{m-1} with t_i = sigma * Phi^-1(P(X <= x_i)),
// evaluated from whichever tail keeps precision.
std::vector<double> quantile_thresholds(std::span<const double> probs, double sigma);
// Atom index for a Gaussian draw: the i with z in (t_{i-1}, t_i].
std::size_t quantile_index(std::span<const double> thresholds, double z);
}  // namespace detail

/// Monotone map from a N(0, sigma2) draw to the atoms of a lattice law whose
/// pushforward is exactly that law.
class CouplingMap {
 public:
  CouplingMap(LatticeLaw law, double sigma2);

  std::size_t index(double z) const { return detail::quantile_index(thresholds_, z); }
  Rational value(double z) const { return law_.value(index(z)); }
  double value_double(double z) const { return law_.value_double(index(z)); }
  std::int64_t tick(double z) const { return law_.tick(index(z)); }

  std::span<const double> thresholds() const { return thresholds_; }
  const LatticeLaw& law() const { return law_; }
  double sigma2() const { return sigma2_; }

 private:
  LatticeLaw law_;
  double sigma2_;
  std::vector<double> thresholds_;
};

// sigma2 = 0 is allowed only for a point mass.
CouplingMap quantile_couple(const LatticeLaw& law, double sigma2);

struct CoupledDraw {
  double s = 0.0;
  double z = 0.0;
  std::int64_t tick = 0;  // s in lattice ticks of the source law or bag
};

/// Coupling of S_n (i.i.d. sum) with Z_n ~ N(0, n). Build once, draw many.
class SumCoupler {
 public:
  // Requires mean_zero, unit_variance and zero_skew; throws ValidationError.
  SumCoupler(const AtomicLaw& law, int n, const DpLimits& limits = {});

  CoupledDraw operator()(Rng& rng) const { return at(std::sqrt(double(n_)) * rng.gaussian()); }
  CoupledDraw at(double z) const;

  int n() const { return n_; }
  const CouplingMap& map() const { return map_; }

 private:
  int n_;
  CouplingMap map_;
};

CoupledDraw couple_sum(const AtomicLaw& law, int n, Rng& rng);

// (S_k, Z) with S_k the without-replacement partial sum and Z ~ N(0, k(n-k)/n),
// coupled through the centred law of S_k - k a / n against eta Z.
CoupledDraw couple_midpoint(const IncrementBag& bag, int k, double eta, Rng& rng);

struct ExpMomentEstimate {
  double lambda = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_samples = 0;
};

// Sample mean of exp(lambda * dev) with a 95% percentile-bootstrap interval.
ExpMomentEstimate exp_moment(std::span<const double> devs, double lambda, int bootstrap_rounds, Rng& rng);

}  // namespace kmt
