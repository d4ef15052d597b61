#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "igbeat/checkpoint.hpp"
#include "igbeat/errors.hpp"
#include "igbeat/eval.hpp"
#include "igbeat/harness.hpp"
#include "igbeat/ingest.hpp"
#include "igbeat/preprocess.hpp"
#include "igbeat/synth.hpp"

namespace fs = std::filesystem;

namespace igbeat::cli {
namespace {

// Flags shared by every subcommand. Empty/zero means "not given" so that a
// config file value survives unless overridden on the command line.
struct CommonFlags {
  std::string variant;
  std::size_t train_len = 0;
  std::size_t test_len = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--variant", f.variant, "Backbone: gru | lstm | ssm-diag | ssm-selective")
      ->check(CLI::IsMember({"gru", "lstm", "ssm-diag", "ssm-selective"}));
  app->add_option("--train-len", f.train_len, "Training segment length (intervals)");
  app->add_option("--test-len", f.test_len, "Test segment length (intervals)");
  app->add_option("--seed", f.seed, "Random seed")->each([&f](const std::string&) {
    f.seed_given = true;
  });
  app->add_option("--config", f.config, "key = value experiment config file")
      ->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "Output path");
}

harness::ExperimentConfig resolve(const CommonFlags& f) {
  harness::ExperimentConfig c;
  if (!f.config.empty()) c = harness::load_config(f.config);
  if (!f.variant.empty()) c.variant = model::parse_variant(f.variant);
  if (f.train_len) c.train_len = f.train_len;
  if (f.test_len) c.test_len = f.test_len;
  if (f.seed_given) c.seed = f.seed;
  if (!f.out.empty()) c.out = f.out;
  return c;
}

void echo_config(const fs::path& dir, const harness::ExperimentConfig& c) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.txt");
  if (!out) throw IoError("cannot write " + (dir / "config.txt").string());
  harness::write_config(out, c);
}

int do_preprocess(const std::string& input, double fs_hint, const CommonFlags& flags,
                  std::ostream& out) {
  const fs::path in(input);
  const std::string ext = in.extension().string();
  RRSeries series;
  std::size_t n_peaks = 0;
  if (ext == ".hea") {
    const EcgRecord ecg = ingest::read_wfdb(in);
    const auto peaks = preprocess::detect_rpeaks(ecg);
    n_peaks = peaks.size();
    series = preprocess::clean_intervals(peaks);
  } else {
    std::ifstream probe(in);
    if (!probe) throw IoError("cannot open " + in.string());
    std::string head;
    std::getline(probe, head);
    // An ECG CSV has a value column; a peak list has only times.
    const bool is_ecg = head.find("value") != std::string::npos || fs_hint > 0.0;
    std::vector<double> peaks;
    if (is_ecg) {
      peaks = preprocess::detect_rpeaks(ingest::read_ecg_csv(in, fs_hint));
    } else {
      peaks = ingest::read_rpeaks_csv(in);
    }
    n_peaks = peaks.size();
    series = preprocess::clean_intervals(peaks);
  }
  const fs::path dst = flags.out.empty() ? fs::path(in.stem().string() + "_rr.csv") : fs::path(flags.out);
  if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
  preprocess::write_rr_csv(dst, series);
  std::size_t replaced = 0;
  for (bool b : series.interpolated) replaced += b ? 1 : 0;
  out << n_peaks << " peaks, " << series.size() << " intervals (" << replaced
      << " interpolated) -> " << dst.string() << '\n';
  return 0;
}

int do_synth(synth::CohortOptions opts, const std::string& kind, double ecg_fs, double snr_db,
             const CommonFlags& flags, std::ostream& out) {
  if (kind == "constant") {
    opts.kind = synth::ParamTrajectory::Kind::kConstant;
  } else if (kind == "regime") {
    opts.kind = synth::ParamTrajectory::Kind::kRegimeSwitch;
  } else {
    opts.kind = synth::ParamTrajectory::Kind::kSinusoidal;
  }
  harness::ExperimentConfig cfg = resolve(flags);
  const fs::path dir = flags.out.empty() ? fs::path("synth") : fs::path(flags.out);
  fs::create_directories(dir);
  const auto cohort = synth::generate_cohort(opts, cfg.seed);

  std::vector<harness::ManifestEntry> manifest;
  for (std::size_t k = 0; k < cohort.size(); ++k) {
    const auto& s = cohort[k];
    const fs::path rr = s.id + ".csv";
    preprocess::write_rr_csv(dir / rr, s.data.series);
    manifest.push_back({s.id, rr});
    std::ofstream truth(dir / (s.id + "_truth.csv"));
    truth << "interval_index,mu_s,sigma_s,rr_s\n";
    truth.precision(17);
    for (std::size_t i = 0; i < s.data.truth.size(); ++i) {
      truth << i << ',' << s.data.truth.params[i].mu << ',' << s.data.truth.params[i].sigma << ','
            << s.data.truth.targets[i] << '\n';
    }
    if (ecg_fs > 0.0) {
      Rng noise(cfg.seed + 7919 * (k + 1));
      const EcgRecord ecg = synth::generate_ecg(s.data.series.peak_times, ecg_fs, snr_db, noise);
      std::ofstream e(dir / (s.id + "_ecg.csv"));
      ingest::write_ecg_csv(e, ecg);
    }
  }
  harness::write_manifest(dir / "manifest.csv", manifest);
  // Paths in the echoed config are relative to the dataset directory itself,
  // so the directory can be moved and two runs compare byte for byte.
  cfg.manifest = "manifest.csv";
  cfg.out = ".";
  echo_config(dir, cfg);
  {
    std::ofstream o(dir / "synth.txt");
    o << "subjects = " << opts.n_subjects << "\nbeats = " << opts.n_beats << "\nkind = " << kind
      << "\nseed = " << cfg.seed << '\n';
  }
  out << "wrote " << cohort.size() << " subjects x " << opts.n_beats << " beats to "
      << dir.string() << '\n';
  return 0;
}

int do_train(harness::ExperimentConfig cfg, const std::string& manifest, std::size_t max_epochs,
             std::size_t patience, std::size_t threads, const std::string& test_subject,
             bool quiet, std::ostream& out) {
  if (!manifest.empty()) cfg.manifest = manifest;
  if (max_epochs) cfg.max_epochs = max_epochs;
  if (patience) cfg.patience = patience;
  if (threads) cfg.threads = threads;
  if (!test_subject.empty()) cfg.test_subject = test_subject;
  cfg.validate();
  const auto res = harness::run_experiment(cfg, quiet ? nullptr : &out);
  for (const auto& r : res.summary) {
    if (r.subject_id == harness::kOverallMean) {
      out << "overall mean KSD " << r.mean_ksd << " over " << res.folds.size() << " fold(s)\n";
    }
  }
  return 0;
}

int do_evaluate(const std::string& checkpoint, const std::vector<std::string>& inputs,
                const std::string& subject, const CommonFlags& flags, std::ostream& out) {
  model::Checkpoint ck = model::load_checkpoint(checkpoint);
  harness::ExperimentConfig cfg = resolve(flags);
  cfg.variant = ck.config.variant;
  const fs::path dir = flags.out.empty() ? fs::path("evaluation") : fs::path(flags.out);
  echo_config(dir, cfg);
  std::vector<fs::path> fold_files;
  for (const auto& in : inputs) {
    const std::string id = subject.empty() || inputs.size() > 1 ? fs::path(in).stem().string() : subject;
    const RRSeries series = harness::load_series(in);
    const auto segs = harness::segment(series, cfg.test_len, &out, id);
    if (segs.empty()) continue;
    const auto res = harness::evaluate(ck.params, ck.config, segs, id, cfg.test_len);
    const fs::path sub = dir / id;
    fs::create_directories(sub / "ks");
    for (std::size_t k = 0; k < res.reports.size(); ++k) {
      eval::write_ks_plot(sub / "ks" / ("segment_" + std::to_string(k)), res.reports[k],
                          id + " segment " + std::to_string(k));
    }
    std::ofstream f(sub / "fold.csv");
    harness::write_fold_csv(f, res);
    fold_files.push_back(sub / "fold.csv");
    out << id << ": " << res.reports.size() << " segments, mean KSD " << res.mean_ksd()
        << " [" << res.sd_ksd() << "], pass fraction " << res.pass_fraction() << '\n';
  }
  if (fold_files.empty()) throw DomainError("no input long enough for one test segment");
  harness::write_report(fold_files, dir);
  return 0;
}

int do_report(std::vector<std::string> inputs, const CommonFlags& flags, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().filename() == "fold.csv") files.push_back(e.path());
      }
    } else {
      files.emplace_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DomainError("no fold CSVs found");
  const fs::path dir = flags.out.empty() ? fs::path("report") : fs::path(flags.out);
  const auto summary = harness::write_report(files, dir);
  echo_config(dir, resolve(flags));
  std::size_t subjects = 0;
  for (const auto& r : summary) subjects += r.subject_id != harness::kOverallMean ? 1 : 0;
  out << "summarized " << files.size() << " fold file(s), " << subjects << " subject row(s) -> "
      << (dir / "summary.csv").string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inverse Gaussian heartbeat models with neural backbones"};
  app.require_subcommand(1);

  CommonFlags pre_f, syn_f, tr_f, ev_f, rep_f;

  auto* pre = app.add_subcommand("preprocess", "ECG (WFDB or CSV) or R-peak list -> clean R-R CSV");
  add_common(pre, pre_f);
  std::string pre_input;
  double pre_fs = 0.0;
  pre->add_option("input", pre_input, ".hea header, ECG CSV or R-peak CSV")->required();
  pre->add_option("--fs", pre_fs, "Sample rate for single-column ECG CSVs");

  auto* syn = app.add_subcommand("synth", "Generate a synthetic cohort with ground truth");
  add_common(syn, syn_f);
  synth::CohortOptions syn_opts;
  syn_opts.n_subjects = 1;
  syn_opts.n_beats = 5000;
  std::string syn_kind = "sinusoidal";
  double syn_ecg_fs = 0.0, syn_snr = 20.0;
  syn->add_option("--beats", syn_opts.n_beats, "Beats per subject")->check(CLI::PositiveNumber);
  syn->add_option("--subjects", syn_opts.n_subjects, "Number of subjects")->check(CLI::PositiveNumber);
  syn->add_option("--kind", syn_kind, "constant | sinusoidal | regime")
      ->check(CLI::IsMember({"constant", "sinusoidal", "regime"}));
  syn->add_option("--ecg-fs", syn_ecg_fs, "Also write a synthetic ECG at this rate");
  syn->add_option("--snr", syn_snr, "ECG signal-to-noise ratio in dB");

  auto* tr = app.add_subcommand("train", "Train one fold or a full leave-one-subject-out sweep");
  add_common(tr, tr_f);
  std::string tr_manifest, tr_subject;
  std::size_t tr_epochs = 0, tr_patience = 0, tr_threads = 0;
  bool tr_quiet = false;
  tr->add_option("--manifest", tr_manifest, "CSV subject_id,path");
  tr->add_option("--max-epochs", tr_epochs, "Epoch cap");
  tr->add_option("--patience", tr_patience, "Early-stopping patience");
  tr->add_option("--threads", tr_threads, "Folds trained in parallel");
  tr->add_option("--test-subject", tr_subject, "Run only the fold testing this subject");
  tr->add_flag("--quiet", tr_quiet, "Suppress progress output");

  auto* ev = app.add_subcommand("evaluate", "Checkpoint + R-R series -> KS reports");
  add_common(ev, ev_f);
  std::string ev_ckpt, ev_subject;
  std::vector<std::string> ev_inputs;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--subject", ev_subject, "Subject id for a single input");
  ev->add_option("inputs", ev_inputs, "R-R CSV / R-peak CSV / .hea files")->required();

  auto* rep = app.add_subcommand("report", "Aggregate fold CSVs into summary tables");
  add_common(rep, rep_f);
  std::vector<std::string> rep_inputs;
  rep->add_option("inputs", rep_inputs, "fold.csv files or run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*pre) return do_preprocess(pre_input, pre_fs, pre_f, out);
    if (*syn) return do_synth(syn_opts, syn_kind, syn_ecg_fs, syn_snr, syn_f, out);
    if (*tr) {
      return do_train(resolve(tr_f), tr_manifest, tr_epochs, tr_patience, tr_threads, tr_subject,
                      tr_quiet, out);
    }
    if (*ev) return do_evaluate(ev_ckpt, ev_inputs, ev_subject, ev_f, out);
    if (*rep) return do_report(rep_inputs, rep_f, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace igbeat::cli
