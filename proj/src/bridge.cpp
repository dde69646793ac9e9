#include "kmt/bridge.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "kmt/coupling.hpp"
#include "kmt/detail/count_dp.hpp"
#include "kmt/errors.hpp"

namespace kmt {

namespace detail {

namespace {

void fill_gaussian_bridge(Rng& rng, std::span<double> z) {
  const auto n = static_cast<std::ptrdiff_t>(z.size());
  double acc = 0.0;
  for (auto& v : z) v = acc += rng.gaussian();
  const double end = acc;
  for (std::ptrdiff_t i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] -= double(i + 1) / double(n) * end;
  z.back() = 0.0;
}

void compact(std::span<const std::int64_t> ticks, std::span<const int> counts, std::vector<std::int64_t>& t,
             std::vector<int>& m) {
  t.clear();
  m.clear();
  for (std::size_t j = 0; j < ticks.size(); ++j)
    if (counts[j] > 0) {
      t.push_back(ticks[j]);
      m.push_back(counts[j]);
    }
}

}  // namespace

void build_bridge_ticks(std::span<const std::int64_t> ticks, std::span<const int> mult, double eta,
                        const DpLimits& limits, Rng& rng, std::span<std::int64_t> s, std::span<double> z) {
  const int n = static_cast<int>(s.size());
  if (ticks.size() == 1) {
    // a single increment type pins W to zero; only the bridge is random
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = ticks[0] * (i + 1);
    fill_gaussian_bridge(rng, z);
    return;
  }
  const int k = n / 2;
  const double var = double(k) * double(n - k) / double(n);
  const double sd = std::sqrt(var);

  CountDP dp(hypergeometric_factors(ticks, mult, k, limits.window_log), k, limits);
  const auto& law = dp.sum_law();
  std::vector<double> probs(law.size());
  for (std::size_t i = 0; i < law.size(); ++i) probs[i] = law[i].second;
  const std::vector<double> thresholds = quantile_thresholds(probs, eta * sd);

  const double zk = sd * rng.gaussian();
  const std::int64_t sk = law[quantile_index(thresholds, eta * zk)].first;
  const std::vector<int> first = dp.sample_counts(sk, rng);

  std::vector<int> second(mult.begin(), mult.end());
  for (std::size_t j = 0; j < second.size(); ++j) second[j] -= first[j];

  std::vector<std::int64_t> t;
  std::vector<int> m;
  compact(ticks, first, t, m);
  build_bridge_ticks(t, m, eta, limits, rng, s.first(static_cast<std::size_t>(k)), z.first(static_cast<std::size_t>(k)));
  compact(ticks, second, t, m);
  build_bridge_ticks(t, m, eta, limits, rng, s.subspan(static_cast<std::size_t>(k)), z.subspan(static_cast<std::size_t>(k)));

  for (int i = k; i < n; ++i) s[static_cast<std::size_t>(i)] += sk;
  for (int i = 1; i <= k; ++i) z[static_cast<std::size_t>(i - 1)] += double(i) / double(k) * zk;
  for (int i = k + 1; i <= n; ++i) z[static_cast<std::size_t>(i - 1)] += double(n - i) / double(n - k) * zk;
  z[static_cast<std::size_t>(k - 1)] = zk;
}

}  // namespace detail

// ------------------------------------------------------------------ splits

SplitLaw split_law(const IncrementBag& bag, int k, const Rational& s, const DpLimits& limits) {
  if (k < 0 || k > bag.n()) throw std::invalid_argument("split_law: k must lie in [0, n]");
  SplitLaw out{bag, k, s, {}};
  Rational q = s / bag.unit();
  if (boost::multiprecision::denominator(q) != 1) throw InfeasibleError("split_law: s = " + to_string(s) + " is off the lattice");
  const std::int64_t tick = to_int64(boost::multiprecision::numerator(q));
  if (k == 0) {
    if (tick != 0) throw InfeasibleError("split_law: s = " + to_string(s) + " is infeasible for k = 0");
    out.splits.push_back({std::vector<int>(bag.types(), 0), 1.0});
    return out;
  }
  detail::CountDP dp(detail::hypergeometric_factors(bag.ticks(), bag.multiplicities(), k, limits.window_log), k, limits);
  for (auto& [counts, p] : dp.enumerate_counts(tick)) out.splits.push_back({std::move(counts), p});
  if (out.splits.empty()) throw InfeasibleError("split_law: s = " + to_string(s) + " is infeasible at k = " + std::to_string(k));
  return out;
}

std::pair<IncrementBag, IncrementBag> sample_split(const SplitLaw& law, Rng& rng) {
  if (law.k < 1 || law.k >= law.bag.n()) throw std::invalid_argument("sample_split: both halves must be nonempty");
  double u = rng.uniform();
  const SplitLaw::Split* pick = &law.splits.back();
  for (const auto& sp : law.splits) {
    if (u < sp.prob) {
      pick = &sp;
      break;
    }
    u -= sp.prob;
  }
  std::vector<std::int64_t> t(law.bag.ticks().begin(), law.bag.ticks().end());
  std::vector<int> rest(law.bag.multiplicities().begin(), law.bag.multiplicities().end());
  for (std::size_t j = 0; j < rest.size(); ++j) rest[j] -= pick->counts[j];
  return {IncrementBag(law.bag.unit(), t, pick->counts), IncrementBag(law.bag.unit(), t, rest)};
}

// ------------------------------------------------------------------ bridges

Eigen::VectorXd centered_walk(const Path& path) {
  const int n = path.n();
  Eigen::VectorXd w(n + 1);
  const double u = to_double(path.unit());
  const std::int64_t end = path.tick(n);
  for (int k = 0; k <= n; ++k) {
    // n S_k - k S_n is exact in ticks
    const double num = static_cast<double>(static_cast<__int128>(n) * path.tick(k) - static_cast<__int128>(k) * end);
    w[k] = num * u / double(n);
  }
  return w;
}

BridgePath sample_gaussian_bridge(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_gaussian_bridge: n must be positive");
  BridgePath z = BridgePath::Zero(n + 1);
  detail::fill_gaussian_bridge(rng, std::span<double>(z.data() + 1, static_cast<std::size_t>(n)));
  return z;
}

CoupledBridgeSample build_bridge(const IncrementBag& bag, double eta, Rng& rng, const DpLimits& limits) {
  if (!(eta > 0.0)) throw std::invalid_argument("build_bridge: eta must be positive");
  const int n = bag.n();
  std::vector<std::int64_t> s(static_cast<std::size_t>(n));
  BridgePath z = BridgePath::Zero(n + 1);
  detail::build_bridge_ticks(bag.ticks(), bag.multiplicities(), eta, limits, rng, s,
                             std::span<double>(z.data() + 1, static_cast<std::size_t>(n)));
  Path path(bag.unit(), std::move(s));
  Eigen::VectorXd w = centered_walk(path);
  return {std::move(path), std::move(z), eta, std::sqrt(to_double(bag.gamma2())), std::move(w)};
}

double path_probability(const IncrementBag& bag, const Path& path, double eta, int max_n) {
  if (bag.n() > max_n) throw CapacityError("path_probability capped at n = " + std::to_string(max_n));
  if (!(eta > 0.0)) throw std::invalid_argument("path_probability: eta must be positive");
  if (!path.feasible_for(bag)) return 0.0;
  const int n = bag.n();
  if (n == 1 || bag.types() == 1) return 1.0;
  const int k = n / 2;
  const Rational sk = path.value(k);
  const double g = wr_sum_law(bag, k).prob_at(sk);
  if (g == 0.0) return 0.0;

  std::vector<Rational> first, second;
  for (int i = 1; i <= n; ++i) (i <= k ? first : second).push_back(path.value(i) - (i <= k ? Rational(0) : sk));
  Path p1 = Path::from_values(first);
  Path p2 = Path::from_values(second);
  IncrementBag b1 = p1.increments();
  IncrementBag b2 = p2.increments();

  const SplitLaw sl = split_law(bag, k, sk);
  double split_prob = 0.0;
  for (const auto& sp : sl.splits) {
    std::vector<std::int64_t> t(bag.ticks().begin(), bag.ticks().end());
    if (IncrementBag(bag.unit(), t, sp.counts) == b1) split_prob += sp.prob;
  }
  if (split_prob == 0.0) return 0.0;
  return g * split_prob * path_probability(b1, p1, eta, max_n) * path_probability(b2, p2, eta, max_n);
}

CoupledBridgeSample exchangeable_bridge(const BridgeModel& model, int n, EtaMode eta_mode, Rng& rng,
                                        const DpLimits& limits) {
  if (n < 1) throw std::invalid_argument("exchangeable_bridge: n must be positive");
  auto categorical = [&](std::span<const double> w) {
    double tot = std::accumulate(w.begin(), w.end(), 0.0);
    double u = rng.uniform() * tot;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (u < w[i]) return i;
      u -= w[i];
    }
    return w.size() - 1;
  };
  IncrementBag bag = std::visit(
      [&](const auto& m) -> IncrementBag {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FixedBagModel>) {
          if (m.bag.n() != n) throw std::invalid_argument("exchangeable_bridge: bag size differs from n");
          return m.bag;
        } else if constexpr (std::is_same_v<M, IidModel>) {
          const auto probs = m.law.probs();
          std::vector<int> counts(m.law.size(), 0);
          for (int i = 0; i < n; ++i) ++counts[categorical(probs)];
          return IncrementBag(m.law.unit(), std::vector<std::int64_t>(m.law.ticks().begin(), m.law.ticks().end()), counts);
        } else {
          if (m.bags.empty() || m.bags.size() != m.weights.size())
            throw std::invalid_argument("exchangeable_bridge: mixture needs one weight per bag");
          for (const auto& b : m.bags)
            if (b.n() != n) throw std::invalid_argument("exchangeable_bridge: mixture bag size differs from n");
          return m.bags[categorical(m.weights)];
        }
      },
      model);
  double eta = eta_mode.value;
  if (eta_mode.kind == EtaMode::Kind::gamma) {
    eta = std::sqrt(to_double(bag.gamma2()));
    if (!(eta > 0.0)) throw InfeasibleError("eta = gamma is zero for an all-zero increment bag");
  }
  return build_bridge(bag, eta, rng, limits);
}

}  // namespace kmt
