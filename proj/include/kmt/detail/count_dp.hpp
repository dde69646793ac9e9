#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "kmt/random.hpp"

namespace kmt {

// Guards for the dynamic programs over type counts.
struct DpLimits {
  // Hard cap on stored DP entries per layer and on output support size.
  std::size_t support_cap = std::size_t{1} << 22;
  // Counts whose marginal log-probability falls more than this below the
  // marginal mode are dropped (mass < e^-window_log each). +infinity keeps
  // every count.
  double window_log = 40.0;

  static DpLimits exact() { return {std::size_t{1} << 22, std::numeric_limits<double>::infinity()}; }
};

namespace detail {

// One increment type: its value in lattice ticks and an unnormalized weight
// for each admissible count lo, lo+1, ..., lo+weight.size()-1.
struct CountFactor {
  std::int64_t tick = 0;
  int lo = 0;
  std::vector<double> weight;
  int hi() const { return lo + static_cast<int>(weight.size()) - 1; }
};

// Factor family for drawing `draw` items without replacement from a multiset
// with type multiplicities `mult` (multivariate hypergeometric).
std::vector<CountFactor> hypergeometric_factors(std::span<const std::int64_t> ticks, std::span<const int> mult,
                                                int draw, double window_log);

// Factor family for `draw` i.i.d. picks with type probabilities `probs`
// (multinomial).
std::vector<CountFactor> multinomial_factors(std::span<const std::int64_t> ticks, std::span<const double> probs,
                                             int draw, double window_log);

// Distribution of (count vector) restricted to sum(c) == total, weighted by
// prod_j factor_j(c_j), aggregated by the tick sum sum_j c_j * tick_j.
// Every layer is kept so count vectors can be sampled backward given a sum.
class CountDP {
 public:
  CountDP(std::vector<CountFactor> factors, int total, const DpLimits& limits);

  int total() const { return total_; }
  std::size_t types() const { return factors_.size(); }

  // Normalized law of the tick sum, ascending ticks, zero entries dropped.
  const std::vector<std::pair<std::int64_t, double>>& sum_law() const { return sum_law_; }

  // Conditional draw of the count vector given the tick sum.
  std::vector<int> sample_counts(std::int64_t sum, Rng& rng) const;

  // All count vectors compatible with the tick sum, with their conditional
  // probabilities (the law sample_counts draws from).
  std::vector<std::pair<std::vector<int>, double>> enumerate_counts(std::int64_t sum) const;

 private:
  struct Row {
    std::int64_t lo = 0;
    std::vector<double> w;
    double at(std::int64_t s) const {
      auto i = s - lo;
      return (i >= 0 && i < static_cast<std::int64_t>(w.size())) ? w[static_cast<std::size_t>(i)] : 0.0;
    }
  };
  struct Layer {
    int clo = 0;
    std::vector<Row> rows;
    const Row* row(int c) const {
      int i = c - clo;
      return (i >= 0 && i < static_cast<int>(rows.size())) ? &rows[static_cast<std::size_t>(i)] : nullptr;
    }
  };

  double layer_weight(std::size_t j, int c, std::int64_t s) const;
  // Candidates (count, weight) for type j given remaining count c and sum s.
  void candidates(std::size_t j, int c, std::int64_t s, std::vector<std::pair<int, double>>& out) const;

  std::vector<CountFactor> factors_;
  int total_;
  std::vector<Layer> layers_;
  std::vector<std::pair<std::int64_t, double>> sum_law_;
};

}  // namespace detail
}  // namespace kmt
