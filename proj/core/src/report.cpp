#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "igbeat/checkpoint.hpp"
#include "igbeat/errors.hpp"
#include "igbeat/harness.hpp"
#include "text_util.hpp"

namespace igbeat::harness {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string variant_column(const std::string& name) {
  try {
    return std::string(model::variant_label(model::parse_variant(name)));
  } catch (const std::exception&) {
    return name;
  }
}

}  // namespace

std::vector<SummaryRow> summarize(std::span<const FoldRow> rows) {
  // (variant, len) -> subject -> ksd list / pass count
  std::map<std::pair<std::string, std::size_t>, std::map<std::string, std::vector<const FoldRow*>>>
      groups;
  for (const auto& r : rows) groups[{r.variant, r.segment_len}][r.subject_id].push_back(&r);

  std::vector<SummaryRow> out;
  for (const auto& [key, subjects] : groups) {
    std::vector<double> means, passes;
    for (const auto& [subject, list] : subjects) {
      std::vector<double> ksd;
      double pass = 0.0;
      for (const FoldRow* r : list) {
        ksd.push_back(r->ksd);
        pass += r->pass ? 1.0 : 0.0;
      }
      SummaryRow s{subject, key.first, key.second, mean(ksd), sample_sd(ksd),
                   pass / static_cast<double>(ksd.size())};
      means.push_back(s.mean_ksd);
      passes.push_back(s.pass_fraction);
      out.push_back(std::move(s));
    }
    out.push_back({kOverallMean, key.first, key.second, mean(means), sample_sd(means),
                   mean(passes)});
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "subject_id,variant,segment_len,mean_ksd,sd_ksd,pass_fraction\n";
  for (const auto& r : rows) {
    out << r.subject_id << ',' << r.variant << ',' << r.segment_len << ','
        << detail::format_double(r.mean_ksd) << ',' << detail::format_double(r.sd_ksd) << ','
        << detail::format_double(r.pass_fraction) << '\n';
  }
}

void write_table_csv(std::ostream& out, std::span<const SummaryRow> rows, std::size_t segment_len) {
  std::vector<std::string> columns;
  for (model::Variant v : model::kAllVariants) columns.emplace_back(model::variant_name(v));
  for (const auto& r : rows) {
    if (r.segment_len == segment_len &&
        std::find(columns.begin(), columns.end(), r.variant) == columns.end()) {
      columns.push_back(r.variant);
    }
  }
  std::set<std::string> subjects;
  std::map<std::pair<std::string, std::string>, const SummaryRow*> cell;
  for (const auto& r : rows) {
    if (r.segment_len != segment_len) continue;
    cell[{r.subject_id, r.variant}] = &r;
    if (r.subject_id != kOverallMean) subjects.insert(r.subject_id);
  }

  out << "Subject ID";
  for (const auto& c : columns) out << ',' << variant_column(c);
  out << '\n';
  for (const auto& s : subjects) {
    out << s;
    for (const auto& c : columns) {
      out << ',';
      if (auto it = cell.find({s, c}); it != cell.end()) {
        out << fixed(it->second->mean_ksd, 3) << " [" << fixed(it->second->sd_ksd, 3) << ']';
      }
    }
    out << '\n';
  }
  out << kOverallMean;
  for (const auto& c : columns) {
    out << ',';
    if (auto it = cell.find({kOverallMean, c}); it != cell.end()) out << fixed(it->second->mean_ksd, 4);
  }
  out << '\n';
}

std::vector<SummaryRow> write_report(std::span<const std::filesystem::path> fold_csvs,
                                     const std::filesystem::path& out) {
  std::vector<FoldRow> rows;
  for (const auto& p : fold_csvs) {
    auto part = read_fold_csv(p);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) throw DomainError("no fold rows to report");
  const auto summary = summarize(rows);
  std::filesystem::create_directories(out);
  {
    auto f = open_out(out / "summary.csv");
    write_summary_csv(f, summary);
  }
  std::set<std::size_t> lens;
  for (const auto& r : summary) lens.insert(r.segment_len);
  for (std::size_t len : lens) {
    auto f = open_out(out / ("table_" + std::to_string(len) + ".csv"));
    write_table_csv(f, summary, len);
  }
  return summary;
}

RunSummary run_experiment(const std::map<std::string, RRSeries>& subjects,
                          const ExperimentConfig& config, std::ostream* progress) {
  config.validate();
  std::vector<std::string> ids;
  for (const auto& [id, _] : subjects) ids.push_back(id);
  std::vector<Fold> folds = loso_folds(ids);
  std::vector<std::size_t> fold_index(folds.size());
  for (std::size_t i = 0; i < folds.size(); ++i) fold_index[i] = i;
  if (!config.test_subject.empty()) {
    auto it = std::find_if(folds.begin(), folds.end(),
                           [&](const Fold& f) { return f.test == config.test_subject; });
    if (it == folds.end()) throw DomainError("unknown test subject '" + config.test_subject + "'");
    fold_index = {static_cast<std::size_t>(it - folds.begin())};
  }

  std::mutex log_mutex;
  std::map<std::string, std::vector<Segment>> train_segs, test_segs;
  for (const auto& [id, series] : subjects) {
    train_segs[id] = segment(series, config.train_len, progress, id);
    test_segs[id] = segment(series, config.test_len, progress, id);
  }

  const std::filesystem::path out = config.out;
  std::filesystem::create_directories(out);
  {
    auto f = open_out(out / "config.txt");
    write_config(f, config);
  }

  const std::string variant(model::variant_name(config.variant));
  std::vector<FoldResult> results(fold_index.size());
  std::vector<std::exception_ptr> errors(fold_index.size());

  auto run_one = [&](std::size_t slot) {
    const std::size_t idx = fold_index[slot];
    const Fold& fold = folds[idx];
    std::vector<Segment> tr;
    for (const auto& s : fold.train) {
      tr.insert(tr.end(), train_segs[s].begin(), train_segs[s].end());
    }
    const auto& val = train_segs[fold.validation];
    const auto& test = test_segs[fold.test];
    if (test.empty()) throw DomainError("test subject " + fold.test + " has no test segments");

    const std::uint64_t fold_seed = config.seed ^ (0x9E3779B97F4A7C15ULL * (idx + 1));
    std::ostream* epoch_progress = config.threads == 1 ? progress : nullptr;
    TrainResult trained = train(tr, val, config, fold_seed, epoch_progress);
    trained.log.train_subjects = fold.train;
    trained.log.validation_subject = fold.validation;
    trained.log.test_subject = fold.test;

    const model::BackboneConfig bb = config.backbone();
    FoldResult res = evaluate(trained.params, bb, test, fold.test, config.test_len);
    res.best_val_nll = trained.log.best_val_nll;
    res.epochs_trained = trained.log.epochs.size();

    const auto dir = out / ("fold_" + fold.test);
    std::filesystem::create_directories(dir);
    {
      auto f = open_out(dir / "config.txt");
      write_config(f, config);
    }
    {
      auto f = open_out(dir / "train_log.csv");
      write_train_log(f, trained.log);
    }
    {
      auto f = open_out(dir / "fold.csv");
      write_fold_csv(f, res);
    }
    model::Checkpoint ck{bb, std::move(trained.params), {}};
    ck.meta["test_subject"] = fold.test;
    ck.meta["validation_subject"] = fold.validation;
    ck.meta["train_len"] = std::to_string(config.train_len);
    ck.meta["seed"] = std::to_string(fold_seed);
    ck.meta["best_epoch"] = std::to_string(trained.log.best_epoch);
    ck.meta["best_val_nll"] = detail::format_double(trained.log.best_val_nll);
    model::save_checkpoint(dir / "checkpoint.json", ck);
    if (config.write_plots) {
      std::filesystem::create_directories(dir / "ks");
      for (std::size_t k = 0; k < res.reports.size(); ++k) {
        eval::write_ks_plot(dir / "ks" / ("segment_" + std::to_string(k)), res.reports[k],
                            fold.test + " segment " + std::to_string(k));
      }
    }
    if (progress) {
      std::lock_guard lock(log_mutex);
      *progress << "fold " << fold.test << ": " << res.reports.size() << " segments, mean KSD "
                << fixed(res.mean_ksd(), 4) << ", epochs " << res.epochs_trained << '\n';
    }
    results[slot] = std::move(res);
  };

  const std::size_t workers = std::min(config.threads, fold_index.size());
  if (workers <= 1) {
    for (std::size_t s = 0; s < fold_index.size(); ++s) run_one(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s = next++; s < fold_index.size(); s = next++) {
          try {
            run_one(s);
          } catch (...) {
            errors[s] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  RunSummary summary;
  std::vector<FoldRow> rows;
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.reports.size(); ++k) {
      rows.push_back({r.subject_id, r.variant, k, r.segment_len, r.reports[k].ksd,
                      r.reports[k].bound, r.reports[k].pass});
    }
  }
  summary.summary = summarize(rows);
  summary.folds = std::move(results);
  {
    auto f = open_out(out / "summary.csv");
    write_summary_csv(f, summary.summary);
  }
  {
    auto f = open_out(out / ("table_" + std::to_string(config.test_len) + ".csv"));
    write_table_csv(f, summary.summary, config.test_len);
  }
  return summary;
}

RunSummary run_experiment(const ExperimentConfig& config, std::ostream* progress) {
  if (config.manifest.empty()) throw DomainError("no manifest configured");
  std::map<std::string, RRSeries> subjects;
  for (const auto& e : read_manifest(config.manifest)) {
    subjects.emplace(e.subject_id, load_series(e.path));
  }
  return run_experiment(subjects, config, progress);
}

}  // namespace igbeat::harness
