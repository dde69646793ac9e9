#include "kmt/laws.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kmt/errors.hpp"

namespace kmt {

namespace {

Rational abs_r(const Rational& r) { return r < 0 ? Rational(-r) : r; }

Integer common_denominator(std::span<const Rational> values) {
  Integer l = 1;
  for (const Rational& v : values) l = lcm(l, boost::multiprecision::denominator(v));
  return l;
}

std::int64_t exact_tick(const Rational& value, const Rational& unit) {
  Rational q = value / unit;
  if (boost::multiprecision::denominator(q) != 1) throw std::logic_error("value is not on the lattice");
  return to_int64(boost::multiprecision::numerator(q));
}

// gcd of two positive rationals
Rational gcd_r(const Rational& a, const Rational& b) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  Integer g = boost::multiprecision::gcd(Integer(numerator(a) * denominator(b)), Integer(numerator(b) * denominator(a)));
  return Rational(g) / Rational(Integer(denominator(a) * denominator(b)));
}

// sums of up to n increments must stay well inside int64
void check_lattice_range(std::span<const std::int64_t> ticks, long n) {
  std::int64_t top = 0;
  for (auto t : ticks) top = std::max(top, t < 0 ? -t : t);
  if (top != 0 && n > 0 && static_cast<double>(top) * static_cast<double>(n) > 4.0e18)
    throw CapacityError("partial sums overflow the 64-bit lattice");
}

}  // namespace

// ---------------------------------------------------------------- AtomicLaw

AtomicLaw::AtomicLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ValidationError("law has no atoms");
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!(a.prob > 0.0) || !std::isfinite(a.prob))
      throw ValidationError("atom " + to_string(a.value) + " has nonpositive probability");
    total += a.prob;
  }
  if (std::abs(total - 1.0) > kExactTol)
    throw ValidationError("atom probabilities sum to " + std::to_string(total) + ", not 1");
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
  for (std::size_t i = 1; i < atoms_.size(); ++i)
    if (atoms_[i].value == atoms_[i - 1].value) throw ValidationError("duplicate atom value " + to_string(atoms_[i].value));

  std::vector<Rational> vals;
  for (const Atom& a : atoms_) vals.push_back(a.value);
  unit_ = Rational(1) / Rational(common_denominator(vals));
  for (const Atom& a : atoms_) {
    ticks_.push_back(exact_tick(a.value, unit_));
    values_.push_back(to_double(a.value));
  }
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    double x = values_[i], p = atoms_[i].prob;
    moments_[0] += p * x;
    moments_[1] += p * x * x;
    moments_[2] += p * x * x * x;
    moments_[3] += p * x * x * x * x;
  }
}

double AtomicLaw::moment(int r) const {
  if (r < 1 || r > 4) throw std::out_of_range("AtomicLaw::moment caches r = 1..4");
  return moments_[r - 1];
}

std::vector<double> AtomicLaw::probs() const {
  std::vector<double> p;
  for (const Atom& a : atoms_) p.push_back(a.prob);
  return p;
}

Rational AtomicLaw::max_abs() const {
  Rational b = 0;
  for (const Atom& a : atoms_) b = std::max(b, abs_r(a.value));
  return b;
}

Rational AtomicLaw::min_abs() const {
  Rational b = abs_r(atoms_.front().value);
  for (const Atom& a : atoms_) b = std::min(b, abs_r(a.value));
  return b;
}

AtomicLaw rademacher_law() { return AtomicLaw({{Rational(-1), 0.5}, {Rational(1), 0.5}}); }

AtomicLaw quad_law() {
  return AtomicLaw({{Rational(-2), 0.1}, {Rational(-1, 2), 0.4}, {Rational(1, 2), 0.4}, {Rational(2), 0.1}});
}

AtomicLaw named_law(std::string_view name) {
  if (name == "rademacher") return rademacher_law();
  if (name == "quad") return quad_law();
  throw std::invalid_argument("unknown law '" + std::string(name) + "' (expected rademacher or quad)");
}

// --------------------------------------------------------------- validation

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.passed; });
}

const HypothesisCheck& ValidationReport::check(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no hypothesis named " + std::string(name));
}

bool ValidationReport::passed(std::string_view name) const { return check(name).passed; }

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& c : checks)
    os << c.name << " = " << (c.passed ? "pass" : "fail") << "  # measured " << c.measured << "; " << c.detail << "\n";
  os << "all_passed = " << (all_passed() ? "true" : "false") << "\n";
  return os.str();
}

ValidationReport validate_law(const AtomicLaw& law) {
  ValidationReport r;
  const double m1 = law.mean();
  const double var = law.variance();
  const double m3 = law.moment(3);
  r.checks.push_back({"mean_zero", std::abs(m1) <= kExactTol, m1, "|E X| <= 1e-12"});
  r.checks.push_back({"unit_variance", std::abs(var - 1.0) <= kFloatTol, var, "|Var X - 1| <= 1e-9"});
  r.checks.push_back({"zero_skew", std::abs(m3) <= kFloatTol, m3, "|E X^3| <= 1e-9"});
  bool has_zero = false;
  for (const Atom& a : law.atoms()) has_zero |= a.value == 0;
  r.checks.push_back({"zero_excluded", !has_zero, to_double(law.min_abs()), "min |a| over atoms > 0"});
  return r;
}

void require_hypotheses(const ValidationReport& report, std::initializer_list<std::string_view> names) {
  for (auto name : names) {
    const auto& c = report.check(name);
    if (!c.passed) throw ValidationError("law fails hypothesis " + c.name + " (measured " + std::to_string(c.measured) + ")");
  }
}

// ------------------------------------------------------------- IncrementBag

IncrementBag::IncrementBag(std::vector<std::pair<Rational, int>> entries) {
  std::vector<Rational> vals;
  for (auto& e : entries) vals.push_back(e.first);
  unit_ = Rational(1) / Rational(common_denominator(vals));
  for (auto& [v, m] : entries) {
    if (m <= 0) throw std::invalid_argument("increment multiplicities must be positive");
    ticks_.push_back(exact_tick(v, unit_));
    mult_.push_back(m);
  }
  normalize();
}

IncrementBag::IncrementBag(Rational unit, std::vector<std::int64_t> ticks, std::vector<int> multiplicities)
    : unit_(std::move(unit)), ticks_(std::move(ticks)), mult_(std::move(multiplicities)) {
  if (ticks_.size() != mult_.size()) throw std::invalid_argument("IncrementBag: ticks and multiplicities differ in length");
  if (!(unit_ > 0)) throw std::invalid_argument("IncrementBag: unit must be positive");
  for (int m : mult_)
    if (m < 0) throw std::invalid_argument("increment multiplicities must be nonnegative");
  normalize();
}

IncrementBag IncrementBag::from_values(std::span<const Rational> values) {
  std::vector<std::pair<Rational, int>> e;
  for (const auto& v : values) e.emplace_back(v, 1);
  return IncrementBag(std::move(e));
}

void IncrementBag::normalize() {
  std::vector<std::pair<std::int64_t, int>> e;
  for (std::size_t j = 0; j < ticks_.size(); ++j)
    if (mult_[j] > 0) e.emplace_back(ticks_[j], mult_[j]);
  std::sort(e.begin(), e.end());
  ticks_.clear();
  mult_.clear();
  n_ = 0;
  for (auto& [t, m] : e) {
    if (!ticks_.empty() && ticks_.back() == t) {
      mult_.back() += m;
    } else {
      ticks_.push_back(t);
      mult_.push_back(m);
    }
    n_ += m;
  }
  if (n_ < 1) throw std::invalid_argument("increment bag must be nonempty");
  check_lattice_range(ticks_, n_);
}

std::int64_t IncrementBag::total_ticks() const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < ticks_.size(); ++j) s += ticks_[j] * mult_[j];
  return s;
}

Rational IncrementBag::total() const { return unit_ * total_ticks(); }

Rational IncrementBag::gamma2() const {
  Integer s = 0;
  for (std::size_t j = 0; j < ticks_.size(); ++j) s += Integer(ticks_[j]) * ticks_[j] * mult_[j];
  return unit_ * unit_ * Rational(s) / Rational(n_);
}

std::vector<Rational> IncrementBag::values() const {
  std::vector<Rational> v;
  for (std::size_t j = 0; j < ticks_.size(); ++j)
    for (int i = 0; i < mult_[j]; ++i) v.push_back(value(j));
  return v;
}

bool operator==(const IncrementBag& a, const IncrementBag& b) {
  if (a.types() != b.types() || a.n() != b.n()) return false;
  for (std::size_t j = 0; j < a.types(); ++j)
    if (a.mult_[j] != b.mult_[j] || a.value(j) != b.value(j)) return false;
  return true;
}

// --------------------------------------------------------------- LatticeLaw

LatticeLaw::LatticeLaw(Rational unit, std::vector<std::int64_t> ticks, std::vector<double> probs)
    : unit_(std::move(unit)), unit_double_(to_double(unit_)), ticks_(std::move(ticks)), probs_(std::move(probs)) {
  if (ticks_.size() != probs_.size()) throw std::invalid_argument("LatticeLaw: ticks and probabilities differ in length");
  if (ticks_.empty()) throw std::invalid_argument("LatticeLaw: empty support");
  if (!(unit_ > 0)) throw std::invalid_argument("LatticeLaw: unit must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < ticks_.size(); ++i) {
    if (i > 0 && ticks_[i] <= ticks_[i - 1]) throw std::invalid_argument("LatticeLaw: support must be strictly ascending");
    if (!(probs_[i] > 0.0)) throw std::invalid_argument("LatticeLaw: probabilities must be positive");
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > kFloatTol) throw std::invalid_argument("LatticeLaw: probabilities do not sum to 1");
}

LatticeLaw LatticeLaw::point_mass(const Rational& value) {
  if (value == 0) return LatticeLaw(Rational(1), {0}, {1.0});
  return LatticeLaw(abs_r(value), {value < 0 ? -1 : 1}, {1.0});
}

double LatticeLaw::value_double(std::size_t i) const { return static_cast<double>(ticks_[i]) * unit_double_; }

double LatticeLaw::prob_at(const Rational& value) const {
  Rational q = value / unit_;
  if (boost::multiprecision::denominator(q) != 1) return 0.0;
  Integer t = boost::multiprecision::numerator(q);
  if (t > ticks_.back() || t < ticks_.front()) return 0.0;
  auto it = std::lower_bound(ticks_.begin(), ticks_.end(), t.convert_to<std::int64_t>());
  if (it == ticks_.end() || *it != t) return 0.0;
  return probs_[static_cast<std::size_t>(it - ticks_.begin())];
}

double LatticeLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += probs_[i] * value_double(i);
  return m;
}

double LatticeLaw::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < size(); ++i) v += probs_[i] * (value_double(i) - m) * (value_double(i) - m);
  return v;
}

LatticeLaw LatticeLaw::shifted(const Rational& delta) const {
  if (delta == 0) return *this;
  Rational unit = gcd_r(unit_, abs_r(delta));
  std::int64_t scale = exact_tick(unit_, unit);
  std::int64_t offset = exact_tick(delta, unit);
  std::vector<std::int64_t> t(ticks_.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    Integer v = Integer(ticks_[i]) * scale + offset;
    t[i] = to_int64(v);
  }
  return LatticeLaw(unit, std::move(t), probs_);
}

// --------------------------------------------------------------------- Path

Path::Path(Rational unit, std::vector<std::int64_t> ticks) : unit_(std::move(unit)), ticks_(std::move(ticks)) {
  if (!(unit_ > 0)) throw std::invalid_argument("Path: unit must be positive");
}

Path Path::from_values(std::span<const Rational> values) {
  Rational unit = Rational(1) / Rational(common_denominator(values));
  std::vector<std::int64_t> t;
  for (const auto& v : values) t.push_back(exact_tick(v, unit));
  return Path(unit, std::move(t));
}

Eigen::VectorXd Path::to_vector() const {
  Eigen::VectorXd v(n() + 1);
  const double u = to_double(unit_);
  v[0] = 0.0;
  for (int i = 1; i <= n(); ++i) v[i] = static_cast<double>(tick(i)) * u;
  return v;
}

IncrementBag Path::increments() const {
  std::vector<std::int64_t> inc(ticks_.size());
  for (int i = 1; i <= n(); ++i) inc[static_cast<std::size_t>(i - 1)] = tick(i) - tick(i - 1);
  return IncrementBag(unit_, std::move(inc), std::vector<int>(ticks_.size(), 1));
}

bool Path::feasible_for(const IncrementBag& bag) const {
  if (n() != bag.n()) return false;
  return increments() == bag;
}

bool operator==(const Path& a, const Path& b) {
  if (a.n() != b.n()) return false;
  for (int i = 1; i <= a.n(); ++i)
    if (a.value(i) != b.value(i)) return false;
  return true;
}

// -------------------------------------------------------------- sum laws

LatticeLaw iid_sum_law(const AtomicLaw& law, int n, const DpLimits& limits) {
  if (n < 0) throw std::invalid_argument("iid_sum_law: n must be nonnegative");
  if (n == 0) return LatticeLaw(law.unit(), {0}, {1.0});
  check_lattice_range(law.ticks(), n);
  auto probs = law.probs();
  detail::CountDP dp(detail::multinomial_factors(law.ticks(), probs, n, limits.window_log), n, limits);
  std::vector<std::int64_t> t;
  std::vector<double> p;
  for (auto& [tick, prob] : dp.sum_law()) {
    t.push_back(tick);
    p.push_back(prob);
  }
  return LatticeLaw(law.unit(), std::move(t), std::move(p));
}

LatticeLaw wr_sum_law(const IncrementBag& bag, int k, const DpLimits& limits) {
  if (k < 0 || k > bag.n()) throw std::invalid_argument("wr_sum_law: k must lie in [0, n]");
  if (k == 0) return LatticeLaw(bag.unit(), {0}, {1.0});
  detail::CountDP dp(detail::hypergeometric_factors(bag.ticks(), bag.multiplicities(), k, limits.window_log), k, limits);
  std::vector<std::int64_t> t;
  std::vector<double> p;
  for (auto& [tick, prob] : dp.sum_law()) {
    t.push_back(tick);
    p.push_back(prob);
  }
  return LatticeLaw(bag.unit(), std::move(t), std::move(p));
}

// ------------------------------------------------------------ enumeration

Integer path_count(const IncrementBag& bag, unsigned max_bits) {
  Integer count = 1;
  int placed = 0;
  for (int m : bag.multiplicities()) {
    // multiply by C(placed + m, m)
    for (int i = 1; i <= m; ++i) {
      count *= placed + i;
      count /= i;
    }
    placed += m;
    if (count != 0 && boost::multiprecision::msb(count) + 1 > max_bits)
      throw CapacityError("path count exceeds " + std::to_string(max_bits) + " bits");
  }
  return count;
}

std::vector<Path> enumerate_paths(const IncrementBag& bag, int max_n) {
  if (bag.n() > max_n)
    throw CapacityError("enumeration capped at n = " + std::to_string(max_n) + ", bag has n = " + std::to_string(bag.n()));
  std::vector<std::int64_t> inc;
  for (std::size_t j = 0; j < bag.types(); ++j)
    for (int i = 0; i < bag.multiplicity(j); ++i) inc.push_back(bag.tick(j));
  std::vector<Path> out;
  do {
    std::vector<std::int64_t> s(inc.size());
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < inc.size(); ++i) s[i] = acc += inc[i];
    out.emplace_back(bag.unit(), std::move(s));
  } while (std::next_permutation(inc.begin(), inc.end()));
  return out;
}

std::vector<Rational> diff_set(const AtomicLaw& law) {
  std::vector<Rational> d;
  for (const Atom& a : law.atoms())
    for (const Atom& b : law.atoms()) d.push_back(abs_r(a.value - b.value));
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

// ---------------------------------------------------------------- law files

namespace {

double parse_prob(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return to_double(parse_rational(j.get<std::string>()));
  throw ValidationError("atom prob must be a number or a string");
}

Rational parse_value(const nlohmann::json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_number()) {
    // dump() gives the shortest round-trip decimal
    return parse_rational(j.dump());
  }
  throw ValidationError("atom value must be a string or a number");
}

}  // namespace

AtomicLaw parse_law(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("law file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("atoms") || !doc["atoms"].is_array())
    throw ValidationError("law file needs an \"atoms\" array");
  std::vector<Atom> atoms;
  for (const auto& a : doc["atoms"]) {
    if (!a.is_object() || !a.contains("value") || !a.contains("prob"))
      throw ValidationError("each atom needs \"value\" and \"prob\"");
    try {
      atoms.push_back({parse_value(a["value"]), parse_prob(a["prob"])});
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("bad atom: ") + e.what());
    }
  }
  return AtomicLaw(std::move(atoms));
}

AtomicLaw load_law_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open law file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_law(buf.str());
}

std::string law_to_json(const AtomicLaw& law) {
  nlohmann::json doc;
  doc["atoms"] = nlohmann::json::array();
  for (const Atom& a : law.atoms()) doc["atoms"].push_back({{"value", to_string(a.value)}, {"prob", a.prob}});
  return doc.dump(2);
}

}  // namespace kmt
