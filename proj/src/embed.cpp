#include "kmt/embed.hpp"

#include <cmath>
#include <stdexcept>

#include "kmt/bridge.hpp"
#include "kmt/errors.hpp"

namespace kmt {

namespace {

std::int64_t lattice_tick(const Rational& value, const Rational& unit) {
  Rational q = value / unit;
  if (boost::multiprecision::denominator(q) != 1) throw InfeasibleError("value " + to_string(value) + " is off the lattice");
  return to_int64(boost::multiprecision::numerator(q));
}

detail::CountDP multinomial_dp(const AtomicLaw& law, int n, const DpLimits& limits) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  const auto probs = law.probs();
  return detail::CountDP(detail::multinomial_factors(law.ticks(), probs, n, limits.window_log), n, limits);
}

const AtomicLaw& validated(const AtomicLaw& law) {
  require_hypotheses(validate_law(law), {"mean_zero", "unit_variance", "zero_skew", "zero_excluded"});
  return law;
}

}  // namespace

IncrementBag sample_bag_given_sum(const AtomicLaw& law, int n, const Rational& s, Rng& rng, const DpLimits& limits) {
  detail::CountDP dp = multinomial_dp(law, n, limits);
  std::vector<int> counts = dp.sample_counts(lattice_tick(s, law.unit()), rng);
  return IncrementBag(law.unit(), std::vector<std::int64_t>(law.ticks().begin(), law.ticks().end()), std::move(counts));
}

StrongEmbedder::StrongEmbedder(const AtomicLaw& law, int n, const DpLimits& limits)
    : law_(validated(law)), n_(n), limits_(limits), coupler_(law, n, limits), bag_dp_(multinomial_dp(law, n, limits)) {}

EmbedOutput StrongEmbedder::operator()(Rng& rng) const {
  const CoupledDraw top = coupler_(rng);
  const std::vector<int> counts = bag_dp_.sample_counts(top.tick, rng);

  std::vector<std::int64_t> ticks;
  std::vector<int> mult;
  double sq = 0.0;
  const double u = to_double(law_.unit());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) continue;
    ticks.push_back(law_.tick(j));
    mult.push_back(counts[j]);
    const double v = static_cast<double>(law_.tick(j)) * u;
    sq += counts[j] * v * v;
  }
  const double gamma2 = sq / n_;

  std::vector<std::int64_t> s(static_cast<std::size_t>(n_));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_ + 1);
  detail::build_bridge_ticks(ticks, mult, std::sqrt(gamma2), limits_, rng, s,
                             std::span<double>(z.data() + 1, static_cast<std::size_t>(n_)));
  z += top.z * Eigen::VectorXd::LinSpaced(n_ + 1, 0.0, 1.0);
  z[n_] = top.z;

  EmbedOutput out{Path(law_.unit(), std::move(s)), std::move(z), gamma2, 0.0, std::abs(top.s - top.z)};
  out.max_dev = max_deviation(out.s, out.z);
  return out;
}

EmbedOutput strong_embed(const AtomicLaw& law, int n, Rng& rng) { return StrongEmbedder(law, n)(rng); }

double max_deviation(const Path& s, const Eigen::VectorXd& z) {
  if (z.size() != s.n() + 1) throw std::invalid_argument("max_deviation: z must hold z_0..z_n");
  const double u = to_double(s.unit());
  double m = std::abs(z[0]);
  for (int k = 1; k <= s.n(); ++k) m = std::max(m, std::abs(static_cast<double>(s.tick(k)) * u - z[k]));
  return m;
}

double max_deviation(const EmbedOutput& out) { return max_deviation(out.s, out.z); }

}  // namespace kmt
