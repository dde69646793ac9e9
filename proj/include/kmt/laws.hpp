#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kmt/detail/count_dp.hpp"
#include "kmt/rational.hpp"

namespace kmt {

struct Atom {
  Rational value;
  double prob = 0.0;
};

/// Finite-support probability law with exact atom values.
///
/// Atoms are kept sorted by value. Every atom value is an integer multiple
/// ("tick") of unit() = 1 / lcm(denominators), which lets sums of atoms live
/// on an exact integer lattice.
class AtomicLaw {
 public:
  // Throws ValidationError on an empty atom list, a nonpositive probability,
  // duplicate values, or probabilities not summing to one within 1e-12.
  explicit AtomicLaw(std::vector<Atom> atoms);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double prob(std::size_t i) const { return atoms_[i].prob; }
  const Rational& value(std::size_t i) const { return atoms_[i].value; }
  double value_double(std::size_t i) const { return values_[i]; }

  // Raw moments E[X^r], r = 1..4.
  double moment(int r) const;
  double mean() const { return moments_[0]; }
  double variance() const { return moments_[1] - moments_[0] * moments_[0]; }

  const Rational& unit() const { return unit_; }
  std::int64_t tick(std::size_t i) const { return ticks_[i]; }
  std::span<const std::int64_t> ticks() const { return ticks_; }
  std::vector<double> probs() const;

  Rational max_abs() const;  // B
  Rational min_abs() const;  // nu

 private:
  std::vector<Atom> atoms_;
  std::vector<double> values_;
  std::vector<std::int64_t> ticks_;
  Rational unit_;
  double moments_[4] = {0, 0, 0, 0};
};

AtomicLaw rademacher_law();
// {-2: 0.1, -1/2: 0.4, 1/2: 0.4, 2: 0.1}: mean 0, variance 1, zero skew.
AtomicLaw quad_law();
// "rademacher" or "quad"; throws std::invalid_argument otherwise.
AtomicLaw named_law(std::string_view name);

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;

  bool all_passed() const;
  bool passed(std::string_view name) const;
  const HypothesisCheck& check(std::string_view name) const;
  // key = value lines
  std::string to_text() const;
};

inline constexpr double kExactTol = 1e-12;
inline constexpr double kFloatTol = 1e-9;

// Checks mean_zero, unit_variance, zero_skew and zero_excluded.
ValidationReport validate_law(const AtomicLaw& law);

// Throws ValidationError naming the first failing hypothesis among `names`.
void require_hypotheses(const ValidationReport& report, std::initializer_list<std::string_view> names);

/// Multiset of increments with multiplicities, on an exact lattice.
class IncrementBag {
 public:
  // Duplicate values are merged; multiplicities must be positive.
  explicit IncrementBag(std::vector<std::pair<Rational, int>> entries);
  // Lattice form: value_j = ticks[j] * unit. Zero multiplicities are dropped.
  IncrementBag(Rational unit, std::vector<std::int64_t> ticks, std::vector<int> multiplicities);

  static IncrementBag from_values(std::span<const Rational> values);

  int n() const { return n_; }
  std::size_t types() const { return ticks_.size(); }
  Rational value(std::size_t j) const { return unit_ * ticks_[j]; }
  int multiplicity(std::size_t j) const { return mult_[j]; }
  std::int64_t tick(std::size_t j) const { return ticks_[j]; }
  std::span<const std::int64_t> ticks() const { return ticks_; }
  std::span<const int> multiplicities() const { return mult_; }
  const Rational& unit() const { return unit_; }

  Rational total() const;   // a = sum of increments
  Rational gamma2() const;  // (1/n) sum of squared increments
  std::int64_t total_ticks() const;

  // Every increment in ascending order.
  std::vector<Rational> values() const;

  friend bool operator==(const IncrementBag& a, const IncrementBag& b);

 private:
  void normalize();

  Rational unit_;
  std::vector<std::int64_t> ticks_;
  std::vector<int> mult_;
  int n_ = 0;
};

/// Exact-support probability mass function: value_i = ticks[i] * unit,
/// ticks ascending, probabilities positive.
class LatticeLaw {
 public:
  LatticeLaw(Rational unit, std::vector<std::int64_t> ticks, std::vector<double> probs);

  static LatticeLaw point_mass(const Rational& value);

  std::size_t size() const { return ticks_.size(); }
  const Rational& unit() const { return unit_; }
  std::int64_t tick(std::size_t i) const { return ticks_[i]; }
  std::span<const std::int64_t> ticks() const { return ticks_; }
  std::span<const double> probs() const { return probs_; }
  double prob(std::size_t i) const { return probs_[i]; }
  Rational value(std::size_t i) const { return unit_ * ticks_[i]; }
  double value_double(std::size_t i) const;

  // Zero for values outside the support.
  double prob_at(const Rational& value) const;
  double mean() const;
  double variance() const;

  // Law of X + delta, exact (the unit is refined when needed).
  LatticeLaw shifted(const Rational& delta) const;

 private:
  Rational unit_;
  double unit_double_;
  std::vector<std::int64_t> ticks_;
  std::vector<double> probs_;
};

// s_1..s_n on a lattice; s_0 = 0 is implicit.
class Path {
 public:
  Path(Rational unit, std::vector<std::int64_t> ticks);
  static Path from_values(std::span<const Rational> values);

  int n() const { return static_cast<int>(ticks_.size()); }
  const Rational& unit() const { return unit_; }
  // i = 0..n
  std::int64_t tick(int i) const { return i == 0 ? 0 : ticks_[static_cast<std::size_t>(i - 1)]; }
  Rational value(int i) const { return unit_ * tick(i); }
  std::span<const std::int64_t> ticks() const { return ticks_; }

  // s_0..s_n as doubles.
  Eigen::VectorXd to_vector() const;

  // The multiset {s_1, s_2 - s_1, ...}.
  IncrementBag increments() const;
  // Membership in the set of feasible paths of `bag`.
  bool feasible_for(const IncrementBag& bag) const;

  friend bool operator==(const Path& a, const Path& b);

 private:
  Rational unit_;
  std::vector<std::int64_t> ticks_;
};

LatticeLaw iid_sum_law(const AtomicLaw& law, int n, const DpLimits& limits = {});
LatticeLaw wr_sum_law(const IncrementBag& bag, int k, const DpLimits& limits = {});

// n! / prod m_j!; throws CapacityError past max_bits.
Integer path_count(const IncrementBag& bag, unsigned max_bits = 4096);

// Every distinct feasible path, lexicographic in the increment order.
std::vector<Path> enumerate_paths(const IncrementBag& bag, int max_n = 8);

// Nonnegative pairwise differences of atom values, ascending, with 0.
std::vector<Rational> diff_set(const AtomicLaw& law);

// Law files: JSON {"atoms": [{"value": "-1/2", "prob": 0.4}, ...]}.
AtomicLaw parse_law(std::string_view json_text);
AtomicLaw load_law_file(const std::filesystem::path& file);
std::string law_to_json(const AtomicLaw& law);

}  // namespace kmt
