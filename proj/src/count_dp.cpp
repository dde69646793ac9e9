#include "kmt/detail/count_dp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "kmt/detail/log_factorial.hpp"
#include "kmt/errors.hpp"

namespace kmt::detail {

double log_factorial(long n) {
  constexpr long kTable = 1L << 18;
  static const std::vector<double> table = [] {
    std::vector<double> t(static_cast<std::size_t>(kTable) + 1);
    for (long i = 0; i <= kTable; ++i) t[static_cast<std::size_t>(i)] = boost::math::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (n < 0) throw std::domain_error("log_factorial of a negative number");
  if (n <= kTable) return table[static_cast<std::size_t>(n)];
  return boost::math::lgamma(static_cast<double>(n) + 1.0);
}

namespace {

// Contiguous window [lo, hi] of a log-concave marginal around its mode.
std::pair<int, int> marginal_window(int lo, int hi, int mode, double window_log, auto&& log_pmf) {
  mode = std::clamp(mode, lo, hi);
  // the closed-form mode can be off by one at the boundary
  while (mode < hi && log_pmf(mode + 1) > log_pmf(mode)) ++mode;
  while (mode > lo && log_pmf(mode - 1) > log_pmf(mode)) --mode;
  if (!std::isfinite(window_log)) return {lo, hi};
  const double floor = log_pmf(mode) - window_log;
  int a = mode, b = mode;
  while (a > lo && log_pmf(a - 1) >= floor) --a;
  while (b < hi && log_pmf(b + 1) >= floor) ++b;
  return {a, b};
}

CountFactor make_factor(std::int64_t tick, int lo, int hi, int mode, auto&& log_weight) {
  CountFactor f;
  f.tick = tick;
  f.lo = lo;
  f.weight.resize(static_cast<std::size_t>(hi - lo + 1));
  const double ref = log_weight(std::clamp(mode, lo, hi));
  for (int c = lo; c <= hi; ++c) f.weight[static_cast<std::size_t>(c - lo)] = std::exp(log_weight(c) - ref);
  return f;
}

}  // namespace

std::vector<CountFactor> hypergeometric_factors(std::span<const std::int64_t> ticks, std::span<const int> mult,
                                                int draw, double window_log) {
  if (ticks.size() != mult.size()) throw std::invalid_argument("hypergeometric_factors: size mismatch");
  long n = 0;
  for (int m : mult) n += m;
  if (draw < 0 || draw > n) throw std::invalid_argument("hypergeometric_factors: draw out of range");
  // Tilting every factor by x^c with x = draw/(n-draw) leaves the constrained
  // law unchanged and centres each factor on its marginal mode.
  const double log_tilt = (draw > 0 && draw < n) ? std::log(double(draw)) - std::log(double(n - draw)) : 0.0;
  std::vector<CountFactor> out;
  out.reserve(ticks.size());
  for (std::size_t j = 0; j < ticks.size(); ++j) {
    const int m = mult[j];
    const int lo = static_cast<int>(std::max<long>(0, draw - (n - m)));
    const int hi = std::min(m, draw);
    auto log_pmf = [&](int c) { return log_choose(m, c) + log_choose(n - m, draw - c); };
    const int mode = static_cast<int>((double(draw) + 1) * (double(m) + 1) / (double(n) + 2));
    auto [a, b] = marginal_window(lo, hi, mode, window_log, log_pmf);
    auto log_weight = [&](int c) { return log_choose(m, c) + c * log_tilt; };
    out.push_back(make_factor(ticks[j], a, b, mode, log_weight));
  }
  return out;
}

std::vector<CountFactor> multinomial_factors(std::span<const std::int64_t> ticks, std::span<const double> probs,
                                             int draw, double window_log) {
  if (ticks.size() != probs.size()) throw std::invalid_argument("multinomial_factors: size mismatch");
  if (draw < 0) throw std::invalid_argument("multinomial_factors: negative draw");
  std::vector<CountFactor> out;
  out.reserve(ticks.size());
  for (std::size_t j = 0; j < ticks.size(); ++j) {
    const double p = probs[j];
    if (!(p > 0.0)) throw std::invalid_argument("multinomial_factors: nonpositive probability");
    if (p >= 1.0) {
      out.push_back(CountFactor{ticks[j], draw, {1.0}});
      continue;
    }
    auto log_pmf = [&](int c) { return log_choose(draw, c) + c * std::log(p) + (draw - c) * std::log1p(-p); };
    const int mode = static_cast<int>((double(draw) + 1) * p);
    auto [a, b] = marginal_window(0, draw, mode, window_log, log_pmf);
    // (n p)^c / c!: the n^(sum c) tilt is constant under the count constraint.
    const double log_np = std::log(std::max(1, draw) * p);
    auto log_weight = [&](int c) { return c * log_np - log_factorial(c); };
    out.push_back(make_factor(ticks[j], a, b, mode, log_weight));
  }
  return out;
}

CountDP::CountDP(std::vector<CountFactor> factors, int total, const DpLimits& limits)
    : factors_(std::move(factors)), total_(total) {
  const std::size_t support_cap = limits.support_cap;
  const double trim_below = std::isfinite(limits.window_log) ? std::exp(-limits.window_log) : 0.0;
  const std::size_t L = factors_.size();
  if (L == 0) {
    if (total != 0) throw InfeasibleError("no increment types to reach a nonzero count");
    sum_law_ = {{0, 1.0}};
    return;
  }
  std::vector<long> pre_lo(L), pre_hi(L), rem_lo(L, 0), rem_hi(L, 0);
  long acc_lo = 0, acc_hi = 0;
  for (std::size_t j = 0; j < L; ++j) {
    acc_lo += factors_[j].lo;
    acc_hi += factors_[j].hi();
    pre_lo[j] = acc_lo;
    pre_hi[j] = acc_hi;
  }
  for (std::size_t j = L - 1; j-- > 0;) {
    rem_lo[j] = rem_lo[j + 1] + factors_[j + 1].lo;
    rem_hi[j] = rem_hi[j + 1] + factors_[j + 1].hi();
  }

  layers_.resize(L);
  for (std::size_t j = 0; j < L; ++j) {
    const long clo = std::max(pre_lo[j], long(total) - rem_hi[j]);
    const long chi = std::min(pre_hi[j], long(total) - rem_lo[j]);
    if (clo > chi) throw InfeasibleError("no count vector reaches total " + std::to_string(total));
    Layer& layer = layers_[j];
    layer.clo = static_cast<int>(clo);
    layer.rows.resize(static_cast<std::size_t>(chi - clo + 1));
    const CountFactor& f = factors_[j];
    std::size_t entries = 0;
    if (j == 0) {
      for (long c = clo; c <= chi; ++c) {
        Row& r = layer.rows[static_cast<std::size_t>(c - clo)];
        r.lo = c * f.tick;
        r.w.assign(1, f.weight[static_cast<std::size_t>(c - f.lo)]);
      }
      entries = layer.rows.size();
    } else {
      const Layer& prev = layers_[j - 1];
      const long pclo = prev.clo;
      const long pchi = prev.clo + static_cast<long>(prev.rows.size()) - 1;
      for (long c = clo; c <= chi; ++c) {
        const long cj_lo = std::max<long>(f.lo, c - pchi);
        const long cj_hi = std::min<long>(f.hi(), c - pclo);
        std::int64_t slo = 0, shi = -1;
        bool any = false;
        for (long cj = cj_lo; cj <= cj_hi; ++cj) {
          const Row& src = prev.rows[static_cast<std::size_t>(c - cj - pclo)];
          if (src.w.empty()) continue;
          const std::int64_t a = src.lo + cj * f.tick;
          const std::int64_t b = a + static_cast<std::int64_t>(src.w.size()) - 1;
          if (!any) {
            slo = a;
            shi = b;
            any = true;
          } else {
            slo = std::min(slo, a);
            shi = std::max(shi, b);
          }
        }
        Row& dst = layer.rows[static_cast<std::size_t>(c - clo)];
        if (!any) continue;
        const auto width = static_cast<std::size_t>(shi - slo + 1);
        if (entries + width > support_cap)
          throw CapacityError("DP layer exceeds the support cap of " + std::to_string(support_cap) + " entries");
        dst.lo = slo;
        dst.w.assign(width, 0.0);
        for (long cj = cj_lo; cj <= cj_hi; ++cj) {
          const double fw = f.weight[static_cast<std::size_t>(cj - f.lo)];
          if (fw == 0.0) continue;
          const Row& src = prev.rows[static_cast<std::size_t>(c - cj - pclo)];
          if (src.w.empty()) continue;
          double* out = dst.w.data() + (src.lo + cj * f.tick - slo);
          const double* in = src.w.data();
          const std::size_t len = src.w.size();
          for (std::size_t i = 0; i < len; ++i) out[i] += fw * in[i];
        }
        entries += width;
      }
    }
    // rescale so the layer maximum is one, then drop negligible row ends
    double top = 0.0;
    for (const Row& r : layer.rows)
      for (double v : r.w) top = std::max(top, v);
    if (!(top > 0.0)) throw InfeasibleError("count DP has no mass at total " + std::to_string(total));
    const double inv = 1.0 / top;
    for (Row& r : layer.rows) {
      for (double& v : r.w) v *= inv;
      if (trim_below > 0.0) {
        std::size_t a = 0, b = r.w.size();
        while (a < b && r.w[a] < trim_below) ++a;
        while (b > a && r.w[b - 1] < trim_below) --b;
        if (a == b) {
          r.w.clear();
        } else if (a > 0 || b < r.w.size()) {
          r.w = std::vector<double>(r.w.begin() + static_cast<long>(a), r.w.begin() + static_cast<long>(b));
          r.lo += static_cast<std::int64_t>(a);
        }
      }
    }
  }

  const Row& last = layers_.back().rows.front();
  double mass = 0.0;
  for (double v : last.w) mass += v;
  for (std::size_t i = 0; i < last.w.size(); ++i)
    if (last.w[i] > 0.0) sum_law_.emplace_back(last.lo + static_cast<std::int64_t>(i), last.w[i] / mass);
  if (sum_law_.size() > support_cap)
    throw CapacityError("sum law exceeds the support cap of " + std::to_string(support_cap) + " points");
}

double CountDP::layer_weight(std::size_t j, int c, std::int64_t s) const {
  const Row* r = layers_[j].row(c);
  return r ? r->at(s) : 0.0;
}

void CountDP::candidates(std::size_t j, int c, std::int64_t s, std::vector<std::pair<int, double>>& out) const {
  out.clear();
  const CountFactor& f = factors_[j];
  const Layer& prev = layers_[j - 1];
  const int pclo = prev.clo;
  const int pchi = prev.clo + static_cast<int>(prev.rows.size()) - 1;
  const int cj_lo = std::max(f.lo, c - pchi);
  const int cj_hi = std::min(f.hi(), c - pclo);
  for (int cj = cj_lo; cj <= cj_hi; ++cj) {
    const double w = f.weight[static_cast<std::size_t>(cj - f.lo)] * layer_weight(j - 1, c - cj, s - cj * f.tick);
    if (w > 0.0) out.emplace_back(cj, w);
  }
}

std::vector<int> CountDP::sample_counts(std::int64_t sum, Rng& rng) const {
  const std::size_t L = factors_.size();
  std::vector<int> counts(L, 0);
  if (L == 0) {
    if (sum != 0) throw InfeasibleError("sum not in the support of the count DP");
    return counts;
  }
  if (layer_weight(L - 1, total_, sum) <= 0.0) throw InfeasibleError("sum not in the support of the count DP");
  int c = total_;
  std::int64_t s = sum;
  std::vector<std::pair<int, double>> cand;
  for (std::size_t j = L - 1; j > 0; --j) {
    candidates(j, c, s, cand);
    double tot = 0.0;
    for (auto& [cj, w] : cand) tot += w;
    double u = rng.uniform() * tot;
    int pick = cand.back().first;
    for (auto& [cj, w] : cand) {
      if (u < w) {
        pick = cj;
        break;
      }
      u -= w;
    }
    counts[j] = pick;
    c -= pick;
    s -= pick * factors_[j].tick;
  }
  counts[0] = c;
  return counts;
}

std::vector<std::pair<std::vector<int>, double>> CountDP::enumerate_counts(std::int64_t sum) const {
  const std::size_t L = factors_.size();
  std::vector<std::pair<std::vector<int>, double>> out;
  if (L == 0) {
    if (sum == 0) out.emplace_back(std::vector<int>{}, 1.0);
    return out;
  }
  if (layer_weight(L - 1, total_, sum) <= 0.0) return out;
  std::vector<int> counts(L, 0);
  auto recurse = [&](auto&& self, std::size_t j, int c, std::int64_t s, double prob) -> void {
    if (j == 0) {
      counts[0] = c;
      out.emplace_back(counts, prob);
      return;
    }
    std::vector<std::pair<int, double>> cand;
    candidates(j, c, s, cand);
    double tot = 0.0;
    for (auto& [cj, w] : cand) tot += w;
    for (auto& [cj, w] : cand) {
      counts[j] = cj;
      self(self, j - 1, c - cj, s - cj * factors_[j].tick, prob * w / tot);
    }
  };
  recurse(recurse, L - 1, total_, sum, 1.0);
  return out;
}

}  // namespace kmt::detail
