// Acceptance suite: one PASS/FAIL line per criterion. Run all criteria, or a
// single one with --criterion N.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "igbeat/backbone.hpp"
#include "igbeat/eval.hpp"
#include "igbeat/harness.hpp"
#include "igbeat/igdist.hpp"
#include "igbeat/ingest.hpp"
#include "igbeat/preprocess.hpp"
#include "igbeat/synth.hpp"
#include "gradcheck.hpp"
#include "nsr_tables.hpp"
#include "oracles.hpp"

namespace ig = igbeat::ig;
namespace model = igbeat::model;
namespace harness = igbeat::harness;
namespace fs = std::filesystem;
using igbeat::Rng;

namespace {

// Tolerances and budgets, one block per criterion.
constexpr double kC1MassTol = 1e-8;
constexpr double kC1CdfTol = 1e-6;
constexpr int kC1Pairs = 100;
constexpr int kC1Points = 50;
constexpr double kC1Seconds = 10.0;

constexpr double kC2Tol = 1e-12;  // absolute, scaled by |nll| once it exceeds 1
constexpr int kC2Triples = 10000;
constexpr double kC2Seconds = 1.0;

constexpr double kC3RelTol = 1e-4;
constexpr double kC3Floor = 1e-4;  // denominator floor for vanishing gradients
// Central difference. The loss is O(500) for the diagonal SSM at init, so
// h much below 1e-4 is dominated by roundoff; 3e-4 balances it against truncation.
constexpr double kC3Step = 3e-4;
constexpr std::size_t kC3Steps = 10;
constexpr double kC3Seconds = 120.0;

constexpr int kC4Replicates = 1000;
constexpr std::size_t kC4N = 600;
constexpr double kC4RateLo = 0.92;
constexpr double kC4RateHi = 0.98;
constexpr double kC4Seconds = 120.0;

constexpr int kC6Seeds = 5;
constexpr int kC6RequiredPasses = 4;  // >= 80% of 5
constexpr std::size_t kC6Subjects = 30;
constexpr std::size_t kC6Intervals = 3000;
constexpr std::size_t kC6SegmentLen = 600;
constexpr std::size_t kC6MaxEpochs = 60;  // desk-scale cap in place of 2000
constexpr double kC6FinalLr = 1e-5;        // cosine-annealed from the default 1e-3
// Subjects differ in mean level, modulation amplitude, period and phase and
// share one sigma (s).
constexpr double kC6Sigma = 0.03;
constexpr double kC6Threshold = 0.056;
constexpr double kC6Seconds = 1800.0;

constexpr std::size_t kC7T = 50;
constexpr int kC7Positions = 20;
constexpr double kC7Seconds = 30.0;

constexpr std::size_t kC8Evaluations = 100000;
constexpr std::size_t kC8T = 100;

constexpr double kC9Tolerance = 0.050;  // s
constexpr double kC9MinSensitivity = 0.99;
constexpr double kC9MaxFalsePositive = 0.01;
constexpr double kC9Fs = 128.0;
constexpr double kC9SnrDb = 20.0;
constexpr int kC9Records = 12;
constexpr int kC9PchipSets = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Density integrates to one and the CDF matches quadrature of the density.
Outcome distribution_correctness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::uniform_real_distribution<double> mu_d(0.3, 2.0), s_d(0.0111, 2.118);
  double worst_mass = 0.0, worst_cdf = 0.0;
  for (int k = 0; k < kC1Pairs; ++k) {
    const ig::IGParams p{mu_d(rng), s_d(rng)};
    const double lam = p.lambda();
    auto f = [&](double x) { return std::exp(ig::log_pdf(x, p)); };
    const double upper = igbeat::testing::density_upper_limit(p.mu, lam);
    worst_mass = std::max(worst_mass,
                          std::fabs(igbeat::testing::integrate_density(f, upper, p.mu, lam) - 1.0));
    // points spread over the bulk: log-spaced from the lower to the upper tail
    const double sd = p.sigma;
    const double lo = std::max(1e-3 * p.mu, p.mu - 4.0 * sd);
    const double hi = p.mu + 6.0 * sd;
    std::vector<double> xs(kC1Points);
    for (int j = 0; j < kC1Points; ++j) xs[j] = lo * std::pow(hi / lo, (j + 0.5) / kC1Points);
    const auto q = igbeat::testing::cumulative_density(f, xs, p.mu, lam);
    for (int j = 0; j < kC1Points; ++j) {
      worst_cdf = std::max(worst_cdf, std::fabs(ig::cdf(xs[j], p) - q[j]));
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_mass <= kC1MassTol && worst_cdf <= kC1CdfTol && secs < kC1Seconds;
  o.detail = "max |mass-1| " + fmt("%.2e", worst_mass) + ", max |cdf-quad| " +
             fmt("%.2e", worst_cdf) + " over " + std::to_string(kC1Pairs) + " pairs, " +
             fmt("%.2f", secs) + " s";
  return o;
}

// 2. Per-step NLL equals the negative log density.
Outcome nll_identity() {
  const auto t0 = Clock::now();
  Rng rng(202);
  std::uniform_real_distribution<double> mu_d(0.3, 2.0), s_d(0.0111, 2.118), x_d(0.1, 3.0);
  double worst = 0.0;
  for (int k = 0; k < kC2Triples; ++k) {
    const ig::IGParams p{mu_d(rng), s_d(rng)};
    const double x = x_d(rng);
    const double a = ig::nll_step(x, p);
    const double b = -ig::log_pdf(x, p);
    worst = std::max(worst, std::fabs(a - b) / std::max(1.0, std::fabs(a)));
  }
  const double secs = seconds_since(t0);
  return {worst <= kC2Tol && secs < kC2Seconds,
          "max scaled difference " + fmt("%.2e", worst) + " over " + std::to_string(kC2Triples) +
              " triples, " + fmt("%.3f", secs) + " s"};
}

// 3. Full-model gradient against central differences, every parameter.
Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool pass = true;
  for (model::Variant v : model::kAllVariants) {
    Rng rng(303);
    model::BackboneConfig cfg;
    cfg.variant = v;
    auto params = model::ModelParameters::initialize(cfg, rng);
    std::uniform_real_distribution<double> u(0.6, 1.2);
    std::vector<double> x(kC3Steps + 1);
    for (double& xi : x) xi = u(rng);
    params.clear_grads();
    model::loss_and_gradient(x, params, cfg);
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < params.count(); ++i) {
      auto& t = params.tensor(i);
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double orig = t[k];
        auto at = [&](double offset) {
          t[k] = orig + offset;
          return model::loss(x, params, cfg);
        };
        const double fd = (at(kC3Step) - at(-kC3Step)) / (2.0 * kC3Step);
        t[k] = orig;
        worst = std::max(worst, igbeat::testing::rel_error(t.grad()[k], fd, kC3Floor));
        ++checked;
      }
    }
    pass = pass && worst < kC3RelTol;
    detail << model::variant_name(v) << " " << fmt("%.1e", worst) << " (" << checked << ") ";
  }
  const double secs = seconds_since(t0);
  detail << fmt("%.1f", secs) << " s";
  return {pass && secs < kC3Seconds, detail.str()};
}

// 4. Rescaling samples with their own generating parameters gives the
// nominal 5% KS pass rate.
Outcome rescaling_oracle() {
  const auto t0 = Clock::now();
  Rng rng(404);
  std::uniform_real_distribution<double> mu_d(0.3, 2.0), s_d(0.0111, 2.118);
  int passes = 0;
  for (int r = 0; r < kC4Replicates; ++r) {
    ig::IGTrajectory traj;
    traj.params.reserve(kC4N);
    for (std::size_t i = 0; i < kC4N; ++i) {
      const ig::IGParams p{mu_d(rng), s_d(rng)};
      traj.params.push_back(p);
      traj.targets.push_back(ig::sample(p, rng));
    }
    passes += igbeat::eval::ks_distance(igbeat::eval::rescale(traj)).pass ? 1 : 0;
  }
  const double rate = static_cast<double>(passes) / kC4Replicates;
  const double secs = seconds_since(t0);
  return {rate >= kC4RateLo && rate <= kC4RateHi && secs < kC4Seconds,
          "pass rate " + fmt("%.3f", rate) + " over " + std::to_string(kC4Replicates) +
              " replicates at n=" + std::to_string(kC4N) + ", " + fmt("%.1f", secs) + " s"};
}

// 5. KS bounds at the two segment lengths.
Outcome ks_bounds() {
  const double b600 = igbeat::eval::ks_bound(600);
  const double b1800 = igbeat::eval::ks_bound(1800);
  const auto r3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
  return {r3(b600) == 0.056 && r3(b1800) == 0.032,
          "n=600 -> " + fmt("%.5f", b600) + ", n=1800 -> " + fmt("%.5f", b1800)};
}

// 6. GRU on a synthetic sinusoidal cohort, one held-out subject per seed.
Outcome synthetic_recovery() {
  const auto t0 = Clock::now();
  int passes = 0;
  std::ostringstream detail;
  const fs::path scratch = fs::temp_directory_path() / "igbeat_acceptance_c6";
  for (int s = 1; s <= kC6Seeds; ++s) {
    igbeat::synth::CohortOptions opt;
    opt.n_subjects = kC6Subjects;
    opt.n_beats = kC6Intervals + 1;
    opt.kind = igbeat::synth::ParamTrajectory::Kind::kSinusoidal;
    opt.sigma_lo = opt.sigma_hi = kC6Sigma;
    std::map<std::string, igbeat::RRSeries> subjects;
    for (auto& subj : igbeat::synth::generate_cohort(opt, static_cast<std::uint64_t>(s))) {
      subjects[subj.id] = std::move(subj.data.series);
    }
    harness::ExperimentConfig cfg;
    cfg.variant = model::Variant::kGru;
    cfg.train_len = kC6SegmentLen;
    cfg.test_len = kC6SegmentLen;
    cfg.max_epochs = kC6MaxEpochs;
    cfg.lr_schedule = "cosine";
    cfg.lr_final = kC6FinalLr;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.test_subject = subjects.begin()->first;
    cfg.out = (scratch / ("seed_" + std::to_string(s))).string();
    cfg.write_plots = false;
    const auto run = harness::run_experiment(subjects, cfg);
    const double m = run.folds.front().mean_ksd();
    const bool ok = m < kC6Threshold;
    passes += ok ? 1 : 0;
    detail << "seed " << s << " " << fmt("%.4f", m) << (ok ? "" : "*") << " ("
           << run.folds.front().epochs_trained << " ep); ";
    std::cout << "  criterion 6 seed " << s << ": mean KSD " << fmt("%.4f", m) << ", "
              << fmt("%.0f", seconds_since(t0)) << " s elapsed" << std::endl;
  }
  fs::remove_all(scratch);
  const double secs = seconds_since(t0);
  detail << passes << "/" << kC6Seeds << " below " << kC6Threshold << ", " << fmt("%.0f", secs)
         << " s";
  return {passes >= kC6RequiredPasses && secs < kC6Seconds, detail.str()};
}

// 7. Perturbing x_j leaves every earlier prediction bit-identical.
Outcome causality() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::size_t comparisons = 0;
  for (model::Variant v : model::kAllVariants) {
    Rng rng(707);
    model::BackboneConfig cfg;
    cfg.variant = v;
    auto params = model::ModelParameters::initialize(cfg, rng);
    std::uniform_real_distribution<double> u(0.6, 1.2);
    std::vector<double> x(kC7T + 1);
    for (double& xi : x) xi = u(rng);
    const auto base = model::forward(x, params, cfg);
    std::uniform_int_distribution<std::size_t> pos(0, kC7T - 1);
    for (int r = 0; r < kC7Positions; ++r) {
      const std::size_t j = pos(rng);
      auto y = x;
      y[j] += 0.05 + 0.1 * u(rng);
      const auto out = model::forward(y, params, cfg);
      for (std::size_t i = 0; i < j; ++i) {
        pass = pass && out.params[i].mu == base.params[i].mu &&
               out.params[i].sigma == base.params[i].sigma;
        ++comparisons;
      }
      // the perturbation must be visible from position j on
      pass = pass && (out.params[j].mu != base.params[j].mu ||
                      out.params[j].sigma != base.params[j].sigma);
    }
  }
  const double secs = seconds_since(t0);
  return {pass && secs < kC7Seconds, std::to_string(comparisons) +
                                         " earlier outputs compared across 4 variants, " +
                                         fmt("%.1f", secs) + " s"};
}

// 8. mu above the floor and clipped log-variance over many forward passes,
// with head weights inflated so both clip limits are exercised.
Outcome range_constraints() {
  Rng rng(808);
  std::uniform_real_distribution<double> u(0.3, 2.0), scale(1.0, 60.0);
  std::size_t evaluations = 0, at_lo = 0, at_hi = 0, bad = 0;
  double min_mu = 1e9, min_lv = 1e9, max_lv = -1e9;
  while (evaluations < kC8Evaluations) {
    for (model::Variant v : model::kAllVariants) {
      model::BackboneConfig cfg;
      cfg.variant = v;
      auto params = model::ModelParameters::initialize(cfg, rng);
      const double k = scale(rng);
      for (double& w : params.at("var.w2").values()) w *= k;
      for (double& w : params.at("mean.weight").values()) w *= k;
      std::vector<double> x(kC8T);
      for (double& xi : x) xi = u(rng);
      igbeat::ad::Tape tape;
      model::BoundParameters bound(tape, params, false);
      const auto out = model::run_model(bound, x, cfg, false);
      const auto mu = out.mu.values();
      const auto lv = out.logvar.values();
      for (std::size_t i = 0; i < mu.size(); ++i) {
        bad += !(mu[i] > cfg.mu_floor) || !(lv[i] >= -9.0 && lv[i] <= 1.5);
        at_lo += lv[i] == -9.0;
        at_hi += lv[i] == 1.5;
        min_mu = std::min(min_mu, mu[i]);
        min_lv = std::min(min_lv, lv[i]);
        max_lv = std::max(max_lv, lv[i]);
      }
      evaluations += mu.size();
    }
  }
  return {bad == 0, std::to_string(evaluations) + " evaluations, min mu " + fmt("%.17g", min_mu) +
                        ", log var in [" + fmt("%g", min_lv) + ", " + fmt("%g", max_lv) +
                        "], " + std::to_string(at_lo) + " at -9, " + std::to_string(at_hi) +
                        " at 1.5, " + std::to_string(bad) + " violations"};
}

// 9. Detection on synthetic ECG, then PCHIP property suites.
Outcome preprocessing() {
  Rng rng(909);
  std::size_t truth_total = 0, found_total = 0, matched = 0;
  for (int r = 0; r < kC9Records; ++r) {
    const double mu = 0.6 + 0.05 * r;
    const auto traj = r % 2 == 0
                          ? igbeat::synth::ParamTrajectory::constant(mu, 0.04)
                          : igbeat::synth::ParamTrajectory::sinusoidal(mu, 0.03, 0.1, 4.0 + r);
    const auto gen = igbeat::synth::generate_rr(traj, 400, rng);
    const auto ecg = igbeat::synth::generate_ecg(gen.series.peak_times, kC9Fs, kC9SnrDb, rng);
    const auto peaks = igbeat::preprocess::detect_rpeaks(ecg);
    truth_total += gen.series.peak_times.size();
    found_total += peaks.size();
    matched += igbeat::testing::match_events(gen.series.peak_times, peaks, kC9Tolerance);
  }
  const double sensitivity = static_cast<double>(matched) / truth_total;
  const double fp_rate = static_cast<double>(found_total - matched) / found_total;

  std::size_t knot_failures = 0, monotone_failures = 0;
  std::uniform_real_distribution<double> step(0.01, 2.0), rise(0.0, 3.0);
  std::uniform_int_distribution<int> count(2, 30);
  for (int set = 0; set < kC9PchipSets; ++set) {
    const int n = count(rng);
    const double sign = set % 2 == 0 ? 1.0 : -1.0;
    std::vector<double> xs{0.0}, ys{rise(rng)};
    for (int i = 1; i < n; ++i) {
      xs.push_back(xs.back() + step(rng));
      ys.push_back(ys.back() + (i % 4 == 0 ? 0.0 : sign * rise(rng)));
    }
    const igbeat::preprocess::Pchip f(xs, ys);
    for (int i = 0; i < n; ++i) knot_failures += std::fabs(f(xs[i]) - ys[i]) > 1e-12;
    double prev = f(xs.front());
    for (int k = 1; k <= 500; ++k) {
      const double v = f(xs.back() * k / 500.0);
      monotone_failures += sign * (v - prev) < -1e-12;
      prev = v;
    }
  }
  const bool pass = sensitivity >= kC9MinSensitivity && fp_rate <= kC9MaxFalsePositive &&
                    knot_failures == 0 && monotone_failures == 0;
  return {pass, "sensitivity " + fmt("%.4f", sensitivity) + ", false positives " +
                    fmt("%.4f", fp_rate) + " (" + std::to_string(truth_total) + " beats); PCHIP " +
                    std::to_string(knot_failures) + " knot / " +
                    std::to_string(monotone_failures) + " monotonicity failures over " +
                    std::to_string(kC9PchipSets) + " sets"};
}

// 10. Exhaustive 12-bit round trip through the 212 codec.
Outcome format212() {
  std::vector<int> all(4096);
  std::iota(all.begin(), all.end(), -2048);
  const auto bytes = igbeat::ingest::encode_format212(all);
  const auto back = igbeat::ingest::decode_format212(bytes, all.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < all.size(); ++i) mismatches += back[i] != all[i];
  return {mismatches == 0 && back.size() == all.size(),
          std::to_string(all.size()) + " values, " + std::to_string(bytes.size()) + " bytes, " +
              std::to_string(mismatches) + " mismatches"};
}

// 11. Report layout: fold CSVs carrying the reported per-subject statistics
// must come back as the published tables, Overall Mean row included.
Outcome table_layout() {
  const fs::path dir = fs::temp_directory_path() / "igbeat_acceptance_c11";
  fs::remove_all(dir);
  const char* variants[] = {"gru", "lstm", "ssm-diag", "ssm-selective"};
  std::vector<fs::path> files;
  auto emit = [&](const auto& table, std::size_t len) {
    const double bound = igbeat::eval::ks_bound(len - 1);
    for (const auto& row : table) {
      for (int v = 0; v < 4; ++v) {
        const fs::path sub = dir / std::to_string(len) / variants[v] / row.subject;
        fs::create_directories(sub);
        std::ofstream f(sub / "fold.csv");
        f.precision(17);
        f << "subject_id,variant,segment_index,ksd,bound,pass\n";
        const double half = row.cells[v].second / std::sqrt(2.0);
        for (int k = 0; k < 2; ++k) {
          const double ksd = row.cells[v].first + (k == 0 ? -half : half);
          f << row.subject << ',' << variants[v] << ',' << k << ',' << ksd << ',' << bound << ','
            << (ksd < bound ? 1 : 0) << '\n';
        }
        files.push_back(sub / "fold.csv");
      }
    }
  };
  emit(igbeat::testing::kNsr600, 600);
  emit(igbeat::testing::kNsr1800, 1800);
  harness::write_report(files, dir);

  auto read_lines = [](const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
  };
  auto cell = [](double m, double s) { return fmt("%.3f", m) + " [" + fmt("%.3f", s) + "]"; };

  bool pass = true;
  std::ostringstream detail;
  auto check = [&](const auto& table, const auto& printed, std::size_t len) {
    const auto lines = read_lines(dir / ("table_" + std::to_string(len) + ".csv"));
    bool ok = lines.size() == 20 && lines[0] == "Subject ID,GRU,LSTM,S4,Mamba";
    for (std::size_t r = 0; ok && r < table.size(); ++r) {
      std::string want = table[r].subject;
      for (const auto& c : table[r].cells) want += "," + cell(c.first, c.second);
      ok = lines[r + 1] == want;
    }
    std::vector<std::string> overall;
    if (ok) {
      std::istringstream last(lines.back());
      for (std::string f; std::getline(last, f, ',');) overall.push_back(f);
      ok = overall.size() == 5 && overall[0] == harness::kOverallMean;
    }
    pass = pass && ok;
    detail << "table_" << len << " layout " << (ok ? "ok" : "MISMATCH");
    if (!ok) return;
    detail << ", Overall Mean " << overall[1] << "/" << overall[2] << "/" << overall[3] << "/"
           << overall[4];
    for (int v = 0; v < 4; ++v) {
      if (overall[v + 1] != fmt("%.4f", printed[v])) {
        detail << " (" << variants[v] << " printed " << fmt("%.4f", printed[v])
               << ", column mean gives " << overall[v + 1] << ")";
      }
    }
    detail << "; ";
  };
  check(igbeat::testing::kNsr600, igbeat::testing::kNsr600Overall, 600);
  check(igbeat::testing::kNsr1800, igbeat::testing::kNsr1800Overall, 1800);
  pass = pass && fs::exists(dir / "summary.csv");
  detail << "expected magnitudes on real NSR data: overall mean KSD about 0.08-0.13 (data-gated)";
  fs::remove_all(dir);
  return {pass, detail.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "distribution correctness", distribution_correctness},
      {2, "nll equals -log pdf", nll_identity},
      {3, "gradient fidelity", gradient_fidelity},
      {4, "time-rescaling oracle", rescaling_oracle},
      {5, "KS bounds", ks_bounds},
      {6, "end-to-end synthetic recovery", synthetic_recovery},
      {7, "causality", causality},
      {8, "range constraints", range_constraints},
      {9, "preprocessing", preprocessing},
      {10, "format 212 codec", format212},
      {11, "summary table layout", table_layout},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: igbeat_acceptance [--criterion N]\n";
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "no criterion " << only << '\n';
    return 2;
  }
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << "CRITERION " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.name
              << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
