#pragma once

#include <Eigen/Dense>

#include "kmt/coupling.hpp"
#include "kmt/detail/count_dp.hpp"
#include "kmt/laws.hpp"
#include "kmt/random.hpp"

namespace kmt {

struct EmbedOutput {
  Path s;             // i.i.d.-increment walk s_1..s_n
  Eigen::VectorXd z;  // z_0..z_n, mean zero, Cov(Z_i, Z_j) = i ^ j
  double gamma2 = 0.0;
  double max_dev = 0.0;
  double terminal_dev = 0.0;
};

// Increment multiset of n i.i.d. draws from `law`, conditioned on their sum
// being s.
IncrementBag sample_bag_given_sum(const AtomicLaw& law, int n, const Rational& s, Rng& rng, const DpLimits& limits = {});

/// Couples the partial sums of n i.i.d. increments with a Gaussian walk:
/// (S_n, Z_n) through the terminal quantile coupling, the increment bag given
/// S_n, then the dyadic bridge coupling at eta = gamma(bag), with
/// Z_i = Z~_i + (i/n) Z_n. Immutable after construction; draws may run
/// concurrently with separate streams.
class StrongEmbedder {
 public:
  // Requires mean_zero, unit_variance, zero_skew and zero_excluded.
  StrongEmbedder(const AtomicLaw& law, int n, const DpLimits& limits = {});

  EmbedOutput operator()(Rng& rng) const;

  int n() const { return n_; }
  const SumCoupler& terminal() const { return coupler_; }

 private:
  AtomicLaw law_;
  int n_;
  DpLimits limits_;
  SumCoupler coupler_;
  detail::CountDP bag_dp_;
};

EmbedOutput strong_embed(const AtomicLaw& law, int n, Rng& rng);

// max over k = 0..n of |s_k - z_k|
double max_deviation(const Path& s, const Eigen::VectorXd& z);
double max_deviation(const EmbedOutput& out);

}  // namespace kmt
