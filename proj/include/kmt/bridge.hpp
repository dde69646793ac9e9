#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "kmt/laws.hpp"
#include "kmt/random.hpp"

namespace kmt {

// z_0..z_n of a discrete Brownian bridge (z_0 = z_n = 0).
using BridgePath = Eigen::VectorXd;

/// Law of the first-half increment bag given the midpoint value s: count
/// vectors k_1..k_l with sum k_j = k and sum k_j a_j = s, weighted by
/// prod_j C(m_j, k_j).
struct SplitLaw {
  struct Split {
    std::vector<int> counts;  // per type of `bag`
    double prob = 0.0;
  };
  IncrementBag bag;
  int k = 0;
  Rational s;
  std::vector<Split> splits;
};

SplitLaw split_law(const IncrementBag& bag, int k, const Rational& s, const DpLimits& limits = {});
// (first-half bag, second-half bag); both halves must be nonempty.
std::pair<IncrementBag, IncrementBag> sample_split(const SplitLaw& law, Rng& rng);

struct CoupledBridgeSample {
  Path path;
  BridgePath bridge;
  double eta = 1.0;
  double gamma = 0.0;  // sqrt of the bag's mean squared increment
  Eigen::VectorXd w;   // W_k = S_k - (k/n) S_n, k = 0..n

  // max_k |W_k - eta Z_k|
  double max_deviation() const { return (w - eta * bridge).cwiseAbs().maxCoeff(); }
};

Eigen::VectorXd centered_walk(const Path& path);

// Gaussian vector with Cov(Z_i, Z_j) = (i^j)(n - (ivj))/n, as z_0..z_n.
BridgePath sample_gaussian_bridge(int n, Rng& rng);

CoupledBridgeSample build_bridge(const IncrementBag& bag, double eta, Rng& rng, const DpLimits& limits = {});

// Probability that build_bridge returns `path` (zero when infeasible).
double path_probability(const IncrementBag& bag, const Path& path, double eta, int max_n = 8);

struct FixedBagModel {
  IncrementBag bag;
};
struct IidModel {
  AtomicLaw law;
};
struct MixtureModel {
  std::vector<double> weights;
  std::vector<IncrementBag> bags;
};
using BridgeModel = std::variant<FixedBagModel, IidModel, MixtureModel>;

struct EtaMode {
  enum class Kind { fixed, gamma };
  Kind kind = Kind::gamma;
  double value = 1.0;

  static EtaMode fixed(double eta) { return {Kind::fixed, eta}; }
  static EtaMode gamma() { return {Kind::gamma, 0.0}; }
};

// Draw a bag from the model, then build the coupled bridge for it.
CoupledBridgeSample exchangeable_bridge(const BridgeModel& model, int n, EtaMode eta_mode, Rng& rng,
                                        const DpLimits& limits = {});

/// Blend two child bridges through the midpoint value z:
///   Z_i = Z1_i + (i/k) z            for 1 <= i <= k,
///   Z_i = Z2_{i-k} + ((n-i)/(n-k)) z for k < i <= n.
/// Children are given as entries 1..k and 1..n-k; the result as entries 1..n.
template <typename Derived1, typename Derived2>
Eigen::Matrix<typename Derived1::Scalar, Eigen::Dynamic, 1> assemble_bridge(
    typename Derived1::Scalar z, const Eigen::MatrixBase<Derived1>& z1, const Eigen::MatrixBase<Derived2>& z2, int k, int n) {
  using Scalar = typename Derived1::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (k < 1 || k >= n || z1.size() != k || z2.size() != n - k)
    throw std::invalid_argument("assemble_bridge: child lengths must be k and n - k with 1 <= k < n");
  if (z1(k - 1) != Scalar(0) || z2(n - k - 1) != Scalar(0))
    throw std::invalid_argument("assemble_bridge: child bridges must end at zero");
  Vec out(n);
  out.head(k) = z1 + z * Vec::LinSpaced(k, Scalar(1) / Scalar(k), Scalar(1));
  out.tail(n - k) = z2 + z * Vec::LinSpaced(n - k, Scalar(n - k - 1) / Scalar(n - k), Scalar(0));
  out(k - 1) = z;
  return out;
}

namespace detail {
// In-place recursion on lattice ticks. `ticks`/`mult` list the types with
// positive multiplicity; s receives S_1..S_n and z receives Z_1..Z_n.
void build_bridge_ticks(std::span<const std::int64_t> ticks, std::span<const int> mult, double eta,
                        const DpLimits& limits, Rng& rng, std::span<std::int64_t> s, std::span<double> z);
}  // namespace detail

}  // namespace kmt
