#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kmt/errors.hpp"
#include "kmt/laws.hpp"
#include "kmt/random.hpp"
#include "oracles.hpp"

using namespace kmt;
using oracle::Pmf;

namespace {

AtomicLaw law_of(std::initializer_list<std::pair<const char*, double>> atoms) {
  std::vector<Atom> v;
  for (auto [val, p] : atoms) v.push_back({parse_rational(val), p});
  return AtomicLaw(v);
}

IncrementBag bag_of(std::initializer_list<std::pair<const char*, int>> entries) {
  std::vector<std::pair<Rational, int>> v;
  for (auto [val, m] : entries) v.emplace_back(parse_rational(val), m);
  return IncrementBag(v);
}

}  // namespace

TEST_CASE("parse_rational reads fractions, integers and exact decimals") {
  CHECK(parse_rational("-1/2") == Rational(-1, 2));
  CHECK(parse_rational("3") == Rational(3));
  CHECK(parse_rational("0.4") == Rational(2, 5));
  CHECK(parse_rational("1.5e-3") == Rational(3, 2000));
  CHECK(parse_rational(" 6/4 ") == Rational(3, 2));
  CHECK(to_string(Rational(-3, 6)) == "-1/2");
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);
}

TEST_CASE("validate_law flags each hypothesis") {
  SUBCASE("rademacher passes everything") { CHECK(validate_law(rademacher_law()).all_passed()); }
  SUBCASE("quad passes everything") {
    const auto r = validate_law(quad_law());
    CHECK(r.all_passed());
    CHECK(r.check("unit_variance").measured == doctest::Approx(1.0));
  }
  SUBCASE("an atom at zero with nonzero mean") {
    const auto r = validate_law(law_of({{"-1", 0.5}, {"0", 0.25}, {"1", 0.25}}));
    CHECK_FALSE(r.passed("zero_excluded"));
    CHECK_FALSE(r.passed("mean_zero"));
    CHECK(r.check("mean_zero").measured == doctest::Approx(-0.25));
    CHECK_FALSE(r.all_passed());
  }
  SUBCASE("require_hypotheses names the failure") {
    const auto r = validate_law(law_of({{"-1", 0.5}, {"0", 0.25}, {"1", 0.25}}));
    CHECK_THROWS_AS(require_hypotheses(r, {"mean_zero"}), ValidationError);
    CHECK_THROWS_AS(require_hypotheses(r, {"zero_skew"}), ValidationError);
    CHECK_NOTHROW(require_hypotheses(validate_law(quad_law()), {"mean_zero", "unit_variance", "zero_skew", "zero_excluded"}));
  }
}

TEST_CASE("AtomicLaw rejects malformed atom lists") {
  CHECK_THROWS_AS(AtomicLaw({}), ValidationError);
  CHECK_THROWS_AS(law_of({{"1", 0.0}, {"-1", 1.0}}), ValidationError);
  CHECK_THROWS_AS(law_of({{"1", 0.5}, {"1", 0.5}}), ValidationError);
  CHECK_THROWS_AS(law_of({{"1", 0.5}, {"-1", 0.4}}), ValidationError);
}

TEST_CASE("AtomicLaw lattice and bounds") {
  const auto q = quad_law();
  CHECK(q.unit() == Rational(1, 2));
  CHECK(q.tick(0) == -4);
  CHECK(q.tick(3) == 4);
  CHECK(q.max_abs() == Rational(2));
  CHECK(q.min_abs() == Rational(1, 2));
}

TEST_CASE("iid_sum_law examples") {
  SUBCASE("rademacher n=2 is binomial") {
    const auto law = iid_sum_law(rademacher_law(), 2);
    CHECK(oracle::pmf_distance(oracle::to_pmf(law), {{-2, 0.25}, {0, 0.5}, {2, 0.25}}) < 1e-15);
  }
  SUBCASE("n=0 is the point mass at zero") {
    const auto law = iid_sum_law(quad_law(), 0);
    REQUIRE(law.size() == 1);
    CHECK(law.value(0) == 0);
    CHECK(law.prob(0) == 1.0);
  }
  SUBCASE("quad n=2 has nine support points") {
    const auto law = iid_sum_law(quad_law(), 2);
    CHECK(law.size() == 9);
    CHECK(law.prob_at(0) == doctest::Approx(0.34).epsilon(1e-14));
  }
}

TEST_CASE("iid_sum_law agrees with brute-force convolution") {
  for (const auto& law : {rademacher_law(), quad_law(), law_of({{"-1", 0.5}, {"1/3", 0.3}, {"2", 0.2}})}) {
    for (int n = 1; n <= 9; ++n) {
      CAPTURE(n);
      const auto dp = oracle::to_pmf(iid_sum_law(law, n, DpLimits::exact()));
      CHECK(oracle::pmf_distance(dp, oracle::iid_sum(law, n)) < 1e-14);
    }
  }
}

TEST_CASE("iid_sum_law moments scale with n") {
  const auto q = quad_law();
  for (int n : {1, 7, 50, 400}) {
    const auto law = iid_sum_law(q, n);
    CHECK(std::abs(law.mean() - n * q.mean()) < 1e-9);
    CHECK(std::abs(law.variance() - n * q.variance()) < 1e-9 * n);
  }
}

TEST_CASE("wr_sum_law examples") {
  const auto bag = bag_of({{"-1", 2}, {"1", 2}});
  CHECK(oracle::pmf_distance(oracle::to_pmf(wr_sum_law(bag, 2)), {{-2, 1.0 / 6}, {0, 4.0 / 6}, {2, 1.0 / 6}}) < 1e-15);
  const auto empty = wr_sum_law(bag, 0);
  CHECK(empty.size() == 1);
  CHECK(empty.value(0) == 0);
  const auto whole = wr_sum_law(bag_of({{"-2", 1}, {"1/2", 3}}), 4);
  REQUIRE(whole.size() == 1);
  CHECK(whole.value(0) == Rational(-1, 2));
  CHECK_THROWS_AS(wr_sum_law(bag, 5), std::invalid_argument);
}

TEST_CASE("wr_sum_law agrees with subset and path enumeration on the corpus") {
  for (const auto& atoms : oracle::corpus_atoms()) {
    for (int n = 1; n <= 7; ++n) {
      oracle::for_each_bag(atoms, n, [&](const IncrementBag& bag) {
        for (int k = 0; k <= n; ++k) {
          const auto dp = oracle::to_pmf(wr_sum_law(bag, k, DpLimits::exact()));
          CHECK(oracle::pmf_distance(dp, oracle::wr_sum(bag, k)) <= 1e-12);
          CHECK(oracle::pmf_distance(dp, oracle::path_coordinate(bag, k)) <= 1e-12);
        }
      });
    }
  }
}

TEST_CASE("path_count and enumerate_paths") {
  CHECK(path_count(bag_of({{"-1", 2}, {"1", 2}})) == 6);
  CHECK(path_count(bag_of({{"1", 3}})) == 1);
  CHECK(path_count(bag_of({{"-2", 1}, {"-1/2", 1}, {"1/2", 1}, {"2", 1}})) == 24);

  const auto forced = enumerate_paths(bag_of({{"1", 2}}));
  REQUIRE(forced.size() == 1);
  CHECK(forced[0].value(1) == 1);
  CHECK(forced[0].value(2) == 2);

  const auto two = enumerate_paths(bag_of({{"-1", 1}, {"1", 1}}));
  REQUIRE(two.size() == 2);
  CHECK(two[0].value(1) == -1);
  CHECK(two[1].value(1) == 1);
  CHECK(two[0].value(2) == 0);

  const auto six = enumerate_paths(bag_of({{"-1", 2}, {"1", 2}}));
  CHECK(six.size() == 6);
  for (const auto& p : six) CHECK(p.value(4) == 0);

  CHECK_THROWS_AS(enumerate_paths(bag_of({{"1", 5}, {"-1", 4}})), CapacityError);
  CHECK_THROWS_AS(path_count(bag_of({{"1", 300}, {"-1", 300}}), 64), CapacityError);
}

TEST_CASE("path_count matches enumeration on the corpus") {
  for (const auto& atoms : oracle::corpus_atoms())
    for (int n = 1; n <= 8; ++n)
      oracle::for_each_bag(atoms, n, [&](const IncrementBag& bag) {
        const auto paths = enumerate_paths(bag, 8);
        CHECK(path_count(bag) == paths.size());
        for (const auto& p : paths) {
          CHECK(p.feasible_for(bag));
          CHECK(p.increments() == bag);
        }
      });
}

TEST_CASE("diff_set") {
  auto as_strings = [](const std::vector<Rational>& v) {
    std::vector<std::string> out;
    for (const auto& r : v) out.push_back(to_string(r));
    return out;
  };
  CHECK(as_strings(diff_set(rademacher_law())) == std::vector<std::string>{"0", "2"});
  CHECK(as_strings(diff_set(law_of({{"-1", 0.25}, {"0", 0.5}, {"1", 0.25}}))) ==
        std::vector<std::string>{"0", "1", "2"});
  CHECK(as_strings(diff_set(quad_law())) == std::vector<std::string>{"0", "1", "3/2", "5/2", "4"});
}

TEST_CASE("IncrementBag merges, sums and squares exactly") {
  const auto bag = bag_of({{"1/2", 2}, {"-2", 1}, {"0.5", 1}});
  CHECK(bag.n() == 4);
  CHECK(bag.types() == 2);
  CHECK(bag.multiplicity(1) == 3);
  CHECK(bag.total() == Rational(-1, 2));
  CHECK(bag.gamma2() == Rational(19, 16));
  CHECK_THROWS(bag_of({{"1", 0}}));
}

TEST_CASE("LatticeLaw shift refines the unit") {
  const auto law = iid_sum_law(rademacher_law(), 3);
  const auto shifted = law.shifted(Rational(-1, 3));
  CHECK(shifted.size() == law.size());
  for (std::size_t i = 0; i < law.size(); ++i) {
    CHECK(shifted.value(i) == law.value(i) - Rational(1, 3));
    CHECK(shifted.prob(i) == law.prob(i));
  }
}

TEST_CASE("law files round-trip through JSON") {
  const auto q = quad_law();
  const auto back = parse_law(law_to_json(q));
  REQUIRE(back.size() == q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(back.value(i) == q.value(i));
    CHECK(back.prob(i) == q.prob(i));
  }
  const auto parsed = parse_law(R"({"atoms":[{"value":"-1","prob":0.5},{"value":1,"prob":"1/2"}]})");
  CHECK(validate_law(parsed).all_passed());

  const auto file = std::filesystem::temp_directory_path() / "kmt_law_test.json";
  std::ofstream(file) << law_to_json(q);
  CHECK(load_law_file(file).size() == 4);
  std::filesystem::remove(file);

  CHECK_THROWS_AS(parse_law("{"), ValidationError);
  CHECK_THROWS_AS(parse_law(R"({"atoms":[]})"), ValidationError);
  CHECK_THROWS_AS(parse_law(R"({"atoms":[{"value":"x","prob":1}]})"), ValidationError);
}

TEST_CASE("support cap is a hard error") {
  DpLimits tiny;
  tiny.support_cap = 8;
  CHECK_THROWS_AS(iid_sum_law(quad_law(), 40, tiny), CapacityError);
}
