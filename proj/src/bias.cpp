#include "kmt/bias.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kmt/errors.hpp"

namespace kmt {

namespace {

double ipow(double x, int r) {
  double v = 1.0;
  for (int i = 0; i < r; ++i) v *= x;
  return v;
}

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

// integral of y^r over [a, b]
double power_integral(double a, double b, int r) { return (ipow(b, r + 1) - ipow(a, r + 1)) / (r + 1); }

void require_mean_zero(const AtomicLaw& law) {
  if (std::abs(law.mean()) > kExactTol)
    throw ValidationError("zero-bias transform needs a mean-zero law (mean " + std::to_string(law.mean()) + ")");
  if (!(law.moment(2) > 0.0)) throw ValidationError("law has zero second moment");
}

void require_degree(int degree) {
  if (degree < 1 || degree > 8) throw std::invalid_argument("test-function degree must lie in [1, 8]");
}

double atom_moment(const AtomicLaw& law, int r) {
  double m = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) m += law.prob(i) * ipow(law.value_double(i), r);
  return m;
}

}  // namespace

// ------------------------------------------------------ PiecewiseUniformLaw

PiecewiseUniformLaw::PiecewiseUniformLaw(std::vector<Rational> breaks, std::vector<double> densities)
    : breaks_(std::move(breaks)), densities_(std::move(densities)) {
  if (breaks_.size() < 2 || densities_.size() + 1 != breaks_.size())
    throw std::invalid_argument("PiecewiseUniformLaw: need m+1 breakpoints for m densities");
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    if (!(breaks_[i - 1] < breaks_[i])) throw std::invalid_argument("PiecewiseUniformLaw: breakpoints must increase");
  for (double d : densities_)
    if (!(d >= 0.0)) throw std::invalid_argument("PiecewiseUniformLaw: densities must be nonnegative");
  for (const auto& b : breaks_) bd_.push_back(to_double(b));
}

double PiecewiseUniformLaw::density(double t) const {
  if (t < bd_.front() || t >= bd_.back()) return 0.0;
  auto it = std::upper_bound(bd_.begin(), bd_.end(), t);
  return densities_[static_cast<std::size_t>(it - bd_.begin()) - 1];
}

double PiecewiseUniformLaw::cdf(double x) const {
  if (x <= bd_.front()) return 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < densities_.size(); ++i) {
    if (x >= bd_[i + 1]) {
      c += densities_[i] * (bd_[i + 1] - bd_[i]);
    } else {
      c += densities_[i] * (x - bd_[i]);
      break;
    }
  }
  return c;
}

double PiecewiseUniformLaw::moment(int r) const {
  double m = 0.0;
  for (std::size_t i = 0; i < densities_.size(); ++i) m += densities_[i] * power_integral(bd_[i], bd_[i + 1], r);
  return m;
}

// ------------------------------------------------------- SteinCoefficientFn

SteinCoefficientFn::SteinCoefficientFn(PiecewiseUniformLaw law) : law_(std::move(law)) {
  const std::size_t m = law_.pieces();
  tail_.assign(m, 0.0);
  double acc = 0.0;
  for (std::size_t i = m; i-- > 0;) {
    tail_[i] = acc;
    acc += law_.densities()[i] * power_integral(law_.break_double(i), law_.break_double(i + 1), 1);
  }
}

double SteinCoefficientFn::operator()(double t) const {
  if (t < law_.lo() || t >= law_.hi()) return 0.0;
  auto b = law_.breaks_double();
  std::size_t i = static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), t) - b.begin()) - 1;
  const double d = law_.densities()[i];
  if (d == 0.0) throw InfeasibleError("Stein coefficient undefined: zero density inside the support");
  const double hi = law_.break_double(i + 1);
  return (d * (hi * hi - t * t) / 2.0 + tail_[i]) / d;
}

double SteinCoefficientFn::weighted_moment(int r) const {
  // h(y) p(y) = d_i (b_i^2 - y^2)/2 + tail_i on piece i
  double m = 0.0;
  for (std::size_t i = 0; i < law_.pieces(); ++i) {
    const double a = law_.break_double(i), b = law_.break_double(i + 1), d = law_.densities()[i];
    m += (d * b * b / 2.0 + tail_[i]) * power_integral(a, b, r) - d / 2.0 * power_integral(a, b, r + 2);
  }
  return m;
}

// ------------------------------------------------------------- transforms

AtomicLaw square_bias(const AtomicLaw& law) {
  const double m2 = law.moment(2);
  if (!(m2 > 0.0)) throw ValidationError("square bias needs a positive second moment");
  std::vector<Atom> atoms;
  double total = 0.0;
  for (const Atom& a : law.atoms()) {
    if (a.value == 0) continue;
    const double v = to_double(a.value);
    atoms.push_back({a.value, v * v * a.prob / m2});
    total += atoms.back().prob;
  }
  for (Atom& a : atoms) a.prob /= total;
  return AtomicLaw(std::move(atoms));
}

PiecewiseUniformLaw zero_bias(const AtomicLaw& law) {
  require_mean_zero(law);
  const double var = law.moment(2);
  const std::size_t m = law.size();
  std::vector<Rational> breaks;
  for (const Atom& a : law.atoms()) breaks.push_back(a.value);
  // E[X 1(X > x)] on (v_i, v_{i+1}); equal to -E[X 1(X <= x)] by mean zero,
  // so take whichever partial sum is shorter.
  std::vector<double> dens(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    double upper = 0.0;
    if (m - 1 - i <= i + 1) {
      for (std::size_t j = i + 1; j < m; ++j) upper += law.value_double(j) * law.prob(j);
    } else {
      for (std::size_t j = 0; j <= i; ++j) upper -= law.value_double(j) * law.prob(j);
    }
    dens[i] = std::max(0.0, upper) / var;
  }
  return PiecewiseUniformLaw(std::move(breaks), std::move(dens));
}

double zero_bias_sample(const AtomicLaw& law, Rng& rng) {
  require_mean_zero(law);
  AtomicLaw sq = square_bias(law);
  double u = rng.uniform();
  std::size_t pick = sq.size() - 1;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (u < sq.prob(i)) {
      pick = i;
      break;
    }
    u -= sq.prob(i);
  }
  return rng.uniform() * sq.value_double(pick);
}

SteinValue stein_h(const PiecewiseUniformLaw& pw, double t) {
  if (t < pw.lo() || t > pw.hi()) return {0.0, false};
  if (t == pw.hi()) return {0.0, true};
  return {SteinCoefficientFn(pw)(t), true};
}

// ---------------------------------------------------------------- checkers

double check_zero_bias_identity(const AtomicLaw& law, int degree) {
  require_degree(degree);
  PiecewiseUniformLaw star = zero_bias(law);
  const double var = law.moment(2);
  const double lhs = var * degree * star.moment(degree - 1);
  const double rhs = atom_moment(law, degree + 1);
  return std::abs(lhs - rhs);
}

double check_smoothing_identity(const AtomicLaw& law, int degree) {
  require_degree(degree);
  PiecewiseUniformLaw star = zero_bias(law);
  std::vector<double> ym(static_cast<std::size_t>(degree) + 2);
  for (int r = 0; r <= degree + 1; ++r) ym[static_cast<std::size_t>(r)] = star.moment(r);
  const int d = degree;
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    const double x = law.value_double(i), p = law.prob(i);
    // E[X (X+Y)^d]
    for (int r = 0; r <= d; ++r) lhs += p * x * binom(d, r) * ipow(x, d - r) * ym[static_cast<std::size_t>(r)];
    // E[(X^2 - XY) d (X+Y)^(d-1)]
    for (int r = 0; r <= d - 1; ++r) {
      const double c = p * d * binom(d - 1, r) * ipow(x, d - 1 - r);
      rhs += c * (x * x * ym[static_cast<std::size_t>(r)] - x * ym[static_cast<std::size_t>(r) + 1]);
    }
  }
  return std::abs(lhs - rhs);
}

double sum_stein_coefficient(std::span<const double> eps, double y, const AtomicLaw& law) {
  for (double e : eps) {
    bool found = false;
    for (std::size_t i = 0; i < law.size() && !found; ++i) found = law.value_double(i) == e;
    if (!found) throw std::invalid_argument("increment " + std::to_string(e) + " is not an atom of the law");
  }
  PiecewiseUniformLaw star = zero_bias(law);
  SteinValue h = stein_h(star, y);
  if (!h.in_support) throw InfeasibleError("y lies outside the zero-bias support");
  double sq = 0.0, sum = 0.0;
  for (double e : eps) {
    sq += e * e;
    sum += e;
  }
  return sq - sum * y + h.value;
}

double check_sum_stein_identity(const AtomicLaw& law, int n, int degree) {
  require_degree(degree);
  if (n < 1) throw std::invalid_argument("check_sum_stein_identity: n must be positive");
  SteinCoefficientFn h(zero_bias(law));
  const PiecewiseUniformLaw& star = h.law();
  const int d = degree;
  std::vector<double> ym(static_cast<std::size_t>(d) + 2), hm(static_cast<std::size_t>(d) + 1);
  for (int r = 0; r <= d + 1; ++r) ym[static_cast<std::size_t>(r)] = star.moment(r);
  for (int r = 0; r <= d; ++r) hm[static_cast<std::size_t>(r)] = h.weighted_moment(r);
  auto ymom = [&](int r) { return ym[static_cast<std::size_t>(r)]; };

  const LatticeLaw sn = iid_sum_law(law, n, DpLimits::exact());
  const LatticeLaw rest = iid_sum_law(law, n - 1, DpLimits::exact());

  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < sn.size(); ++i) {
    const double s = sn.value_double(i), q = sn.prob(i);
    // E[(s+Y)^(d+1)]
    for (int r = 0; r <= d + 1; ++r) lhs += q * binom(d + 1, r) * ipow(s, d + 1 - r) * ymom(r);
    for (int r = 0; r <= d - 1; ++r) {
      const double c = q * d * binom(d - 1, r) * ipow(s, d - 1 - r);
      rhs -= c * s * ymom(r + 1);               // -S Y f'(S+Y)
      rhs += c * hm[static_cast<std::size_t>(r)];  // h_Y(Y) f'(S+Y)
    }
  }
  // sum_i eps_i^2 f'(S+Y) = n E[eps_1^2 f'(eps_1 + S_{n-1} + Y)]
  for (std::size_t a = 0; a < law.size(); ++a) {
    const double x = law.value_double(a), p = law.prob(a);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      const double s = x + rest.value_double(i), q = rest.prob(i);
      for (int r = 0; r <= d - 1; ++r) rhs += n * p * x * x * q * d * binom(d - 1, r) * ipow(s, d - 1 - r) * ymom(r);
    }
  }
  return std::abs(lhs - rhs);
}

}  // namespace kmt
