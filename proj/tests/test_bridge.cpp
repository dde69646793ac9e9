#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "kmt/bridge.hpp"
#include "kmt/errors.hpp"
#include "kmt/stats.hpp"
#include "oracles.hpp"

using namespace kmt;

namespace {

IncrementBag pm_bag(int minus, int plus) {
  std::vector<std::pair<Rational, int>> e;
  if (minus) e.emplace_back(Rational(-1), minus);
  if (plus) e.emplace_back(Rational(1), plus);
  return IncrementBag(e);
}

IncrementBag quad_bag(int a, int b, int c, int d) {
  return IncrementBag({{Rational(-2), a}, {Rational(-1, 2), b}, {Rational(1, 2), c}, {Rational(2), d}});
}

// Law of the first-half count vector given its sum, by enumerating k-subsets.
std::map<std::vector<int>, double> brute_split(const IncrementBag& bag, int k, const Rational& s) {
  std::vector<int> type_of;
  for (std::size_t j = 0; j < bag.types(); ++j)
    for (int m = 0; m < bag.multiplicity(j); ++m) type_of.push_back(static_cast<int>(j));
  const int n = bag.n();
  std::vector<char> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + k, 1);
  std::map<std::vector<int>, double> out;
  double total = 0.0;
  do {
    Rational sum = 0;
    std::vector<int> counts(bag.types(), 0);
    for (int i = 0; i < n; ++i)
      if (pick[i]) {
        sum += bag.value(type_of[i]);
        ++counts[type_of[i]];
      }
    if (sum == s) {
      out[counts] += 1.0;
      total += 1.0;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  for (auto& [c, p] : out) p /= total;
  return out;
}

void check_sample_invariants(const IncrementBag& bag, const CoupledBridgeSample& b) {
  const int n = bag.n();
  CHECK(b.path.increments() == bag);
  CHECK(b.bridge.size() == n + 1);
  CHECK(b.w.size() == n + 1);
  CHECK(b.bridge(0) == 0.0);
  CHECK(b.bridge(n) == 0.0);
  CHECK(b.w(0) == 0.0);
  CHECK(b.w(n) == 0.0);
}

}  // namespace

TEST_CASE("split_law examples") {
  const auto bag = pm_bag(2, 2);
  const auto even = split_law(bag, 2, Rational(0));
  REQUIRE(even.splits.size() == 1);
  CHECK(even.splits[0].counts == std::vector<int>{1, 1});
  CHECK(even.splits[0].prob == doctest::Approx(1.0));

  const auto high = split_law(bag, 2, Rational(2));
  REQUIRE(high.splits.size() == 1);
  CHECK(high.splits[0].counts == std::vector<int>{0, 2});

  CHECK_THROWS_AS(split_law(bag, 2, Rational(1)), InfeasibleError);
  CHECK_THROWS_AS(split_law(bag, 2, Rational(1, 3)), InfeasibleError);
}

TEST_CASE("split_law agrees with subset enumeration") {
  for (const auto& atoms : oracle::corpus_atoms())
    for (int n = 2; n <= 8; ++n)
      oracle::for_each_bag(atoms, n, [&](const IncrementBag& bag) {
        const int k = n / 2;
        const auto mid = wr_sum_law(bag, k, DpLimits::exact());
        for (std::size_t i = 0; i < mid.size(); ++i) {
          const auto sl = split_law(bag, k, mid.value(i), DpLimits::exact());
          const auto ref = brute_split(bag, k, mid.value(i));
          REQUIRE(sl.splits.size() == ref.size());
          for (const auto& sp : sl.splits) CHECK(std::abs(sp.prob - ref.at(sp.counts)) < 1e-12);
        }
      });
}

TEST_CASE("sample_split draws from its law and conserves the multiset") {
  const auto bag = quad_bag(2, 3, 3, 2);
  const int k = 5;
  const auto mid = wr_sum_law(bag, k);
  std::size_t mode = 0;
  for (std::size_t i = 1; i < mid.size(); ++i)
    if (mid.prob(i) > mid.prob(mode)) mode = i;
  const auto sl = split_law(bag, k, mid.value(mode));
  REQUIRE(sl.splits.size() > 2);
  std::map<std::vector<int>, double> hits;
  Rng rng(17);
  const int N = 100000;
  for (int r = 0; r < N; ++r) {
    const auto [left, right] = sample_split(sl, rng);
    CHECK(left.n() == k);
    CHECK(left.total() == mid.value(mode));
    std::vector<Rational> all = left.values();
    for (const auto& v : right.values()) all.push_back(v);
    CHECK(IncrementBag::from_values(all) == bag);
    std::vector<int> counts(bag.types(), 0);
    for (std::size_t j = 0; j < left.types(); ++j)
      for (std::size_t t = 0; t < bag.types(); ++t)
        if (bag.value(t) == left.value(j)) counts[t] = left.multiplicity(j);
    hits[counts] += 1;
  }
  std::vector<double> obs, probs;
  for (const auto& sp : sl.splits) {
    obs.push_back(hits[sp.counts]);
    probs.push_back(sp.prob);
  }
  CHECK(chi_square_pvalue(obs, probs) > 0.01);

  const auto forced = split_law(pm_bag(2, 2), 2, Rational(2));
  const auto [l, r] = sample_split(forced, rng);
  CHECK(l == pm_bag(0, 2));
  CHECK(r == pm_bag(2, 0));
}

TEST_CASE("build_bridge base cases") {
  Rng rng(3);
  const auto one = build_bridge(IncrementBag({{Rational(1), 1}}), 1.0, rng);
  CHECK(one.path.value(1) == 1);
  CHECK(one.bridge(0) == 0.0);
  CHECK(one.bridge(1) == 0.0);

  std::vector<double> z1(40000);
  for (auto& z : z1) {
    const auto b = build_bridge(IncrementBag({{Rational(1), 2}}), 1.0, rng);
    CHECK(b.path.value(1) == 1);
    CHECK(b.path.value(2) == 2);
    CHECK(b.w.cwiseAbs().maxCoeff() == 0.0);
    z = b.bridge(1);
  }
  double var = 0.0;
  for (double z : z1) var += z * z;
  CHECK(var / z1.size() == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("path_probability is uniform over feasible paths") {
  for (const auto& atoms : oracle::corpus_atoms())
    for (int n = 1; n <= 6; ++n)
      oracle::for_each_bag(atoms, n, [&](const IncrementBag& bag) {
        const double target = 1.0 / to_double(Rational(path_count(bag)));
        const double gamma = std::sqrt(to_double(bag.gamma2()));
        for (double eta : {gamma, 0.5, 3.0})
          for (const auto& p : enumerate_paths(bag)) CHECK(std::abs(path_probability(bag, p, eta) - target) <= 1e-9);
      });
  const auto bag = pm_bag(2, 2);
  for (const auto& p : enumerate_paths(bag)) CHECK(path_probability(bag, p, 1.0) == doctest::Approx(1.0 / 6));
  CHECK(path_probability(bag, Path::from_values(std::vector<Rational>{1, 2, 3, 4}), 1.0) == 0.0);
  CHECK(path_probability(IncrementBag({{Rational(5), 1}}), Path::from_values(std::vector<Rational>{5}), 1.0) == 1.0);
  CHECK_THROWS_AS(path_probability(pm_bag(5, 5), enumerate_paths(pm_bag(1, 1))[0], 1.0), CapacityError);
}

TEST_CASE("build_bridge samples paths with the probabilities path_probability reports") {
  const auto bag = quad_bag(1, 2, 1, 1);
  const auto paths = enumerate_paths(bag);
  std::map<std::vector<std::int64_t>, double> hits;
  Rng rng(21);
  const int N = 60000;
  for (int r = 0; r < N; ++r) {
    const auto b = build_bridge(bag, 0.8, rng);
    check_sample_invariants(bag, b);
    std::vector<std::int64_t> key;
    for (int k = 1; k <= bag.n(); ++k) key.push_back(static_cast<std::int64_t>(to_double(b.path.value(k) * 2)));
    hits[key] += 1;
  }
  std::vector<double> obs, probs;
  for (const auto& p : paths) {
    std::vector<std::int64_t> key;
    for (int k = 1; k <= bag.n(); ++k) key.push_back(static_cast<std::int64_t>(to_double(p.value(k) * 2)));
    obs.push_back(hits[key]);
    probs.push_back(path_probability(bag, p, 0.8));
  }
  CHECK(hits.size() == paths.size());
  CHECK(chi_square_pvalue(obs, probs) > 0.01);
}

TEST_CASE("build_bridge invariants on larger bags") {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto bag = quad_bag(3 + rep % 7, 20 + rep, 17, 4);
    check_sample_invariants(bag, build_bridge(bag, std::sqrt(to_double(bag.gamma2())), rng));
  }
  CHECK_THROWS_AS(build_bridge(pm_bag(2, 2), 0.0, rng), std::invalid_argument);
}

TEST_CASE("midpoint value follows the without-replacement law") {
  const auto bag = quad_bag(2, 5, 4, 3);
  const int k = bag.n() / 2;
  const auto exact = wr_sum_law(bag, k);
  std::map<Rational, double> hits;
  Rng rng(44);
  const int N = 40000;
  for (int r = 0; r < N; ++r) hits[build_bridge(bag, 1.0, rng).path.value(k)] += 1;
  std::vector<double> obs, probs;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    obs.push_back(hits[exact.value(i)]);
    probs.push_back(exact.prob(i));
  }
  CHECK(chi_square_pvalue(obs, probs) > 0.01);
}

TEST_CASE("bridge covariance") {
  const int n = 16, N = 40000;
  Eigen::MatrixXd coupled(N, n), direct(N, n);
  Rng rng(12);
  const auto bag = quad_bag(1, 7, 7, 1);
  for (int r = 0; r < N; ++r) {
    coupled.row(r) = build_bridge(bag, 1.0, rng).bridge.segment(1, n).transpose();
    direct.row(r) = sample_gaussian_bridge(n, rng).segment(1, n).transpose();
  }
  CHECK(covariance_check(coupled, n, CovTarget::bridge) < 0.12);
  CHECK(covariance_check(direct, n, CovTarget::bridge) < 0.12);
}

TEST_CASE("exchangeable_bridge models") {
  SUBCASE("rademacher has gamma one") {
    Rng rng(1);
    for (int n : {1, 2, 7, 64}) {
      const auto b = exchangeable_bridge(IidModel{rademacher_law()}, n, EtaMode::gamma(), rng);
      CHECK(b.gamma == 1.0);
      CHECK(b.eta == 1.0);
    }
  }
  SUBCASE("fixed bag reproduces build_bridge") {
    const auto bag = quad_bag(2, 3, 4, 1);
    Rng a(9), b(9);
    const auto x = exchangeable_bridge(FixedBagModel{bag}, bag.n(), EtaMode::fixed(1.3), a);
    const auto y = build_bridge(bag, 1.3, b);
    CHECK(x.path == y.path);
    CHECK(x.bridge == y.bridge);
  }
  SUBCASE("mixture marginal at k is the mixture of without-replacement laws") {
    const auto b1 = pm_bag(1, 5), b2 = pm_bag(4, 2);
    const MixtureModel mix{{0.5, 0.5}, {b1, b2}};
    const int k = 3;
    std::map<Rational, double> ref;
    for (const auto* bag : {&b1, &b2}) {
      const auto law = wr_sum_law(*bag, k);
      for (std::size_t i = 0; i < law.size(); ++i) ref[law.value(i)] += 0.5 * law.prob(i);
    }
    std::map<Rational, double> hits;
    Rng rng(7);
    const int N = 40000;
    for (int r = 0; r < N; ++r) hits[exchangeable_bridge(mix, 6, EtaMode::gamma(), rng).path.value(k)] += 1;
    std::vector<double> obs, probs;
    for (const auto& [v, p] : ref) {
      obs.push_back(hits[v]);
      probs.push_back(p);
    }
    CHECK(chi_square_pvalue(obs, probs) > 0.01);
  }
  SUBCASE("gamma mode needs a nonzero bag") {
    Rng rng(2);
    CHECK_THROWS_AS(exchangeable_bridge(FixedBagModel{IncrementBag({{Rational(0), 3}})}, 3, EtaMode::gamma(), rng),
                    InfeasibleError);
  }
}

TEST_CASE("assemble_bridge") {
  Eigen::VectorXd z1(3), z2(2);
  z1 << 0.3, -0.2, 0.0;
  z2 << 0.5, 0.0;
  const auto flat = assemble_bridge(0.0, z1, z2, 3, 5);
  CHECK(flat.head(3) == z1);
  CHECK(flat.tail(2) == z2);

  Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
  const auto tiny = assemble_bridge(0.4, zero1, zero1, 1, 2);
  CHECK(tiny(0) == 0.4);
  CHECK(tiny(1) == 0.0);

  const auto once = assemble_bridge(0.7, z1, z2, 3, 5);
  const auto twice = assemble_bridge(1.4, z1, z2, 3, 5);
  CHECK(once(2) == 0.7);
  for (int i = 0; i < 3; ++i) CHECK(twice(i) - z1(i) == doctest::Approx(2 * (once(i) - z1(i))));
  CHECK(once(3) == doctest::Approx(z2(0) + 0.35));

  Eigen::VectorXf f1(1), f2(1);
  f1 << 0.0f;
  f2 << 0.0f;
  CHECK(assemble_bridge(2.0f, f1, f2, 1, 2)(0) == 2.0f);

  CHECK_THROWS_AS(assemble_bridge(0.1, z1, z2, 2, 5), std::invalid_argument);
  Eigen::VectorXd bad(2);
  bad << 0.1, 0.2;
  CHECK_THROWS_AS(assemble_bridge(0.1, z1, bad, 3, 5), std::invalid_argument);
}
