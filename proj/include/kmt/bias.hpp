#pragma once

#include <span>
#include <vector>

#include "kmt/laws.hpp"
#include "kmt/random.hpp"

namespace kmt {

// Density constant on each (b_{i-1}, b_i).
class PiecewiseUniformLaw {
 public:
  PiecewiseUniformLaw(std::vector<Rational> breaks, std::vector<double> densities);

  std::span<const Rational> breaks() const { return breaks_; }
  std::span<const double> densities() const { return densities_; }
  std::size_t pieces() const { return densities_.size(); }
  double lo() const { return bd_.front(); }
  double hi() const { return bd_.back(); }
  double break_double(std::size_t i) const { return bd_[i]; }
  std::span<const double> breaks_double() const { return bd_; }

  // Right-continuous density; zero outside [lo, hi).
  double density(double t) const;
  double cdf(double x) const;
  // Closed-form E[Y^r].
  double moment(int r) const;
  double mass() const { return moment(0); }

 private:
  std::vector<Rational> breaks_;
  std::vector<double> bd_;
  std::vector<double> densities_;
};

/// The Stein coefficient h(t) = E[Y 1(Y > t)] / p(t) of a piecewise-uniform
/// law, stored as a quadratic-over-constant per piece.
class SteinCoefficientFn {
 public:
  explicit SteinCoefficientFn(PiecewiseUniformLaw law);

  // Zero outside [lo, hi]; throws InfeasibleError where the density vanishes
  // inside the support.
  double operator()(double t) const;
  // E[h(Y) Y^r] in closed form.
  double weighted_moment(int r) const;
  const PiecewiseUniformLaw& law() const { return law_; }

 private:
  PiecewiseUniformLaw law_;
  std::vector<double> tail_;  // integral of y p(y) over pieces to the right
};

struct SteinValue {
  double value = 0.0;
  bool in_support = false;
};

AtomicLaw square_bias(const AtomicLaw& law);
PiecewiseUniformLaw zero_bias(const AtomicLaw& law);
// U * X^sq with U uniform on [0, 1].
double zero_bias_sample(const AtomicLaw& law, Rng& rng);

SteinValue stein_h(const PiecewiseUniformLaw& pw, double t);

// |sigma^2 E[f'(X*)] - E[X f(X)]| for f(x) = x^degree.
double check_zero_bias_identity(const AtomicLaw& law, int degree);
// |E[X f(X+Y)] - E[(X^2 - XY) f'(X+Y)]|, Y the independent zero-bias of X,
// f(x) = x^degree.
double check_smoothing_identity(const AtomicLaw& law, int degree);

// sum eps_i^2 - (sum eps_i) y + h_Y(y), Y the zero-bias law of `law`.
double sum_stein_coefficient(std::span<const double> eps, double y, const AtomicLaw& law);
// |E[S~ f(S~)] - E[T f'(S~)]| with S~ = S_n + Y and T the sum Stein
// coefficient, f(x) = x^degree; exact over the n-fold sum law.
double check_sum_stein_identity(const AtomicLaw& law, int n, int degree);

}  // namespace kmt
