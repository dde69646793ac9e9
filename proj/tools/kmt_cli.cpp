// kmt: command-line front end for the coupling library.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kmt/bridge.hpp"
#include "kmt/coupling.hpp"
#include "kmt/embed.hpp"
#include "kmt/errors.hpp"
#include "kmt/laws.hpp"
#include "kmt/parallel.hpp"
#include "kmt/stats.hpp"

namespace fs = std::filesystem;
using namespace kmt;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240917;

struct Options {
  std::string law = "rademacher";
  std::string law_file;
  std::vector<int> n;
  int replicas = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string eta = "gamma";
  std::string out;
  int workers = default_workers();
  std::string format = "text";
};

AtomicLaw load(const Options& o) { return o.law_file.empty() ? named_law(o.law) : load_law_file(o.law_file); }

int single_n(const Options& o) {
  if (o.n.size() != 1) throw std::invalid_argument("this command takes exactly one --n value");
  return o.n.front();
}

EtaMode parse_eta(const std::string& s) {
  if (s == "gamma") return EtaMode::gamma();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size() || !(v > 0.0)) throw std::invalid_argument("--eta must be 'gamma' or a positive number");
  return EtaMode::fixed(v);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Writes to stdout, or atomically to `path` through a sibling temp file.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << text;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

int cmd_validate(const Options& o) {
  const auto report = validate_law(load(o));
  emit(o.out, report.to_text());
  return report.all_passed() ? 0 : 2;
}

int cmd_couple_sum(const Options& o) {
  const AtomicLaw law = load(o);
  const int n = single_n(o);
  const SumCoupler coupler(law, n);
  std::vector<CoupledDraw> draws(o.replicas);
  parallel_for(draws.size(), o.workers, [&](std::size_t r) {
    Rng rng(derive_seed(o.seed, {static_cast<std::uint64_t>(n), r}));
    draws[r] = coupler(rng);
  });
  std::ostringstream os;
  if (o.format == "csv") {
    os << "replicate,s_n,z_n\n";
    for (std::size_t r = 0; r < draws.size(); ++r) os << r << ',' << fmt(draws[r].s) << ',' << fmt(draws[r].z) << '\n';
  } else {
    std::vector<double> gaps;
    for (const auto& d : draws) gaps.push_back(std::abs(d.s - d.z));
    os << "n = " << n << "\nreplicas = " << draws.size() << "\nmedian_abs_gap = " << fmt(median(gaps))
       << "\nmax_abs_gap = " << fmt(*std::max_element(gaps.begin(), gaps.end())) << '\n';
  }
  emit(o.out, os.str());
  return 0;
}

int cmd_bridge(const Options& o) {
  const AtomicLaw law = load(o);
  const int n = single_n(o);
  const EtaMode eta = parse_eta(o.eta);
  const BridgeModel model = IidModel{law};
  std::vector<std::optional<CoupledBridgeSample>> samples(o.replicas);
  parallel_for(samples.size(), o.workers, [&](std::size_t r) {
    Rng rng(derive_seed(o.seed, {static_cast<std::uint64_t>(n), r}));
    samples[r] = exchangeable_bridge(model, n, eta, rng);
  });
  std::ostringstream os;
  if (o.format == "csv") {
    os << "replicate,k,s_k,w_k,z_k\n";
    for (std::size_t r = 0; r < samples.size(); ++r) {
      const auto& b = *samples[r];
      for (int k = 0; k <= n; ++k)
        os << r << ',' << k << ',' << fmt(to_double(b.path.value(k))) << ',' << fmt(b.w(k)) << ','
           << fmt(b.bridge(k)) << '\n';
    }
  } else {
    std::vector<double> devs;
    for (const auto& b : samples) devs.push_back(b->max_deviation());
    os << "n = " << n << "\nreplicas = " << samples.size() << "\nmedian_max_dev = " << fmt(median(devs)) << '\n';
  }
  emit(o.out, os.str());
  return 0;
}

int cmd_embed(const Options& o) {
  const AtomicLaw law = load(o);
  const int n = single_n(o);
  const StrongEmbedder embed(law, n);
  std::vector<std::optional<EmbedOutput>> outs(o.replicas);
  parallel_for(outs.size(), o.workers, [&](std::size_t r) {
    Rng rng(derive_seed(o.seed, {static_cast<std::uint64_t>(n), r}));
    outs[r] = embed(rng);
  });
  std::ostringstream os;
  if (o.format == "csv") {
    os << "replicate,k,s_k,z_k\n";
    for (std::size_t r = 0; r < outs.size(); ++r)
      for (int k = 0; k <= n; ++k)
        os << r << ',' << k << ',' << fmt(to_double(outs[r]->s.value(k))) << ',' << fmt(outs[r]->z(k)) << '\n';
  } else {
    std::vector<double> devs;
    for (const auto& e : outs) devs.push_back(e->max_dev);
    os << "n = " << n << "\nreplicas = " << outs.size() << "\nmedian_max_dev = " << fmt(median(devs)) << '\n';
  }
  emit(o.out, os.str());
  return 0;
}

// Every bag of n increments drawn from the atoms: path probabilities under the
// bridge recursion must all equal 1 / (number of feasible paths).
int cmd_verify_small(const Options& o) {
  const AtomicLaw law = load(o);
  const int n = single_n(o);
  if (n < 1 || n > 8) throw std::invalid_argument("verify-small needs 1 <= n <= 8");
  const EtaMode eta = parse_eta(o.eta);
  const std::size_t types = law.size();
  std::vector<int> mult(types, 0);
  int bags = 0, paths = 0;
  double worst = 0.0;
  auto visit = [&] {
    std::vector<std::int64_t> ticks(law.ticks().begin(), law.ticks().end());
    const IncrementBag bag(law.unit(), ticks, mult);
    const double eta_value = eta.kind == EtaMode::Kind::gamma ? std::sqrt(to_double(bag.gamma2())) : eta.value;
    const double target = 1.0 / to_double(Rational(path_count(bag)));
    double total = 0.0;
    for (const Path& p : enumerate_paths(bag, 8)) {
      const double prob = path_probability(bag, p, eta_value > 0.0 ? eta_value : 1.0, 8);
      worst = std::max(worst, std::abs(prob - target));
      total += prob;
      ++paths;
    }
    worst = std::max(worst, std::abs(total - 1.0));
    ++bags;
  };
  // compositions of n into `types` parts
  auto rec = [&](auto&& self, std::size_t j, int left) -> void {
    if (j + 1 == types) {
      mult[j] = left;
      visit();
      return;
    }
    for (int c = left; c >= 0; --c) {
      mult[j] = c;
      self(self, j + 1, left - c);
    }
  };
  rec(rec, 0, n);
  const bool ok = worst <= 1e-9;
  std::ostringstream os;
  os << "n = " << n << "\nbags = " << bags << "\npaths = " << paths << "\nmax_abs_error = " << fmt(worst)
     << "\npassed = " << (ok ? "true" : "false") << '\n';
  emit(o.out, os.str());
  return ok ? 0 : 1;
}

int cmd_scaling(const Options& o) {
  const AtomicLaw law = load(o);
  if (o.n.empty()) throw std::invalid_argument("scaling needs --n");
  const auto study = scaling_study(law, o.n, o.replicas, o.seed, o.workers);
  if (o.format == "csv") {
    std::ostringstream os;
    write_scaling_csv(os, study.rows);
    emit(o.out, os.str());
    if (!o.out.empty() && o.out != "-") std::cout << summary_to_text(study.summary);
  } else {
    emit(o.out, summary_to_text(study.summary));
  }
  return 0;
}

int cmd_constants(const Options& o) {
  emit(o.out, theory_constants().to_text());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strong coupling of lattice random walks with Gaussian walks"};
  app.require_subcommand(1);
  Options o;

  auto add_law = [&](CLI::App* sub) {
    sub->add_option("--law", o.law, "Built-in law: rademacher or quad")
        ->check(CLI::IsMember({"rademacher", "quad"}));
    sub->add_option("--law-file", o.law_file, "JSON law file (overrides --law)")->check(CLI::ExistingFile);
  };
  auto add_common = [&](CLI::App* sub, bool with_format, std::string format_default) {
    add_law(sub);
    sub->add_option("--n", o.n, "Walk length, or a comma-separated list")->delimiter(',')->check(CLI::PositiveNumber);
    sub->add_option("--replicas", o.replicas, "Independent replicas")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Master seed (default " + std::to_string(kDefaultSeed) + ")");
    sub->add_option("--out", o.out, "Output file, written atomically (default stdout)");
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    if (with_format) {
      o.format = format_default;
      sub->add_option("--format", o.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
    }
  };

  auto* validate = app.add_subcommand("validate", "Check the law hypotheses");
  add_law(validate);
  validate->add_option("--out", o.out, "Output file");
  validate->add_option("--seed", o.seed, "Accepted for uniformity; unused");

  auto* couple = app.add_subcommand("couple-sum", "Quantile-couple S_n with N(0, n)");
  add_common(couple, true, "text");
  auto* bridge = app.add_subcommand("bridge", "Dyadic bridge coupling for i.i.d. bags");
  add_common(bridge, true, "text");
  bridge->add_option("--eta", o.eta, "Bridge scale: a positive number or 'gamma'");
  auto* embed = app.add_subcommand("embed", "Strong embedding of the full walk");
  add_common(embed, true, "text");
  auto* verify = app.add_subcommand("verify-small", "Exact path-uniformity check for every bag of size n");
  add_common(verify, false, "text");
  verify->add_option("--eta", o.eta, "Bridge scale: a positive number or 'gamma'");
  auto* scaling = app.add_subcommand("scaling", "Max-deviation scaling study");
  add_common(scaling, true, "csv");
  auto* constants = app.add_subcommand("constants", "Print the constants ledger");
  constants->add_option("--out", o.out, "Output file");
  constants->add_option("--seed", o.seed, "Accepted for uniformity; unused");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*couple) return cmd_couple_sum(o);
    if (*bridge) return cmd_bridge(o);
    if (*embed) return cmd_embed(o);
    if (*verify) return cmd_verify_small(o);
    if (*scaling) return cmd_scaling(o);
    if (*constants) return cmd_constants(o);
  } catch (const ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const CapacityError& e) {
    std::cerr << "capacity exceeded: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
