#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "igbeat/backbone.hpp"
#include "igbeat/eval.hpp"
#include "igbeat/series.hpp"

namespace igbeat::harness {

using Segment = std::vector<double>;

// Consecutive non-overlapping windows of exactly `len` intervals; the
// remainder is dropped. An empty result is reported on `warn` when given.
std::vector<Segment> segment(std::span<const double> intervals, std::size_t len,
                             std::ostream* warn = nullptr, const std::string& label = "");
std::vector<Segment> segment(const RRSeries& series, std::size_t len,
                             std::ostream* warn = nullptr, const std::string& label = "");

struct Fold {
  std::vector<std::string> train;
  std::string validation;
  std::string test;
};

// One fold per subject (sorted order); validation is the next subject,
// wrapping around.
std::vector<Fold> loso_folds(std::vector<std::string> subjects);

struct ExperimentConfig {
  model::Variant variant = model::Variant::kGru;
  std::size_t train_len = 600;
  std::size_t test_len = 600;
  std::size_t max_epochs = 2000;
  std::size_t patience = 50;
  double lr = 1e-3;
  // "constant" keeps lr; "cosine" anneals it per epoch to lr_final at max_epochs.
  std::string lr_schedule = "constant";
  double lr_final = 1e-5;
  std::uint64_t seed = 1;
  std::size_t model_dim = 64;
  std::size_t state_dim = 32;
  std::size_t threads = 1;
  std::string manifest;
  std::string out = "runs";
  std::string test_subject;  // run only this fold when set
  bool write_plots = true;

  model::BackboneConfig backbone() const;
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

// Flat "key = value" lines; '#' starts a comment.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

struct ManifestEntry {
  std::string subject_id;
  std::filesystem::path path;
};

// CSV "subject_id,path". Relative paths resolve against `data_dir`, which
// defaults to $IGBEAT_DATA_DIR and then to the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path,
                                         std::optional<std::filesystem::path> data_dir = {});
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// .hea -> WFDB + R-peak detection + cleaning; .csv -> R-R CSV, or a peak list
// that is cleaned.
RRSeries load_series(const std::filesystem::path& path);

class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);
  // Returns true when `value` is a new best.
  bool update(double value);
  bool should_stop() const { return since_best_ >= patience_; }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any update

 private:
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t epoch_ = 0;
  std::size_t since_best_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;  // per beat
  double val_nll = 0.0;    // per beat
};

struct TrainLog {
  std::vector<std::string> train_subjects;
  std::string validation_subject;
  std::string test_subject;
  std::vector<EpochRecord> epochs;
  double best_val_nll = 0.0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

void write_train_log(std::ostream& out, const TrainLog& log);

struct TrainResult {
  model::ModelParameters params;
  TrainLog log;
};

// Adam step per training segment, segments shuffled every epoch; keeps the
// parameters with the lowest mean per-beat validation NLL.
TrainResult train(std::span<const Segment> train_segments, std::span<const Segment> val_segments,
                  const ExperimentConfig& config, std::uint64_t seed,
                  std::ostream* progress = nullptr);

// Mean per-beat NLL over the one-step-ahead pairs of every segment.
double mean_nll_per_beat(std::span<const Segment> segments, model::ModelParameters& params,
                         const model::BackboneConfig& config);

struct FoldResult {
  std::string subject_id;
  std::string variant;
  std::size_t segment_len = 0;
  std::vector<eval::KSReport> reports;
  double best_val_nll = 0.0;
  std::size_t epochs_trained = 0;

  std::vector<double> ksd() const;
  double mean_ksd() const;
  double sd_ksd() const;  // sample SD, 0 for a single segment
  double pass_fraction() const;
};

FoldResult evaluate_trajectories(std::span<const ig::IGTrajectory> trajectories,
                                 const std::string& subject_id, const std::string& variant,
                                 std::size_t segment_len);
FoldResult evaluate(model::ModelParameters& params, const model::BackboneConfig& config,
                    std::span<const Segment> test_segments, const std::string& subject_id,
                    std::size_t segment_len);

struct FoldRow {
  std::string subject_id;
  std::string variant;
  std::size_t segment_index = 0;
  std::size_t segment_len = 0;
  double ksd = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// subject_id,variant,segment_index,ksd,bound,pass
void write_fold_csv(std::ostream& out, const FoldResult& result);
std::vector<FoldRow> read_fold_csv(std::istream& in, const std::string& source = "<fold>");
std::vector<FoldRow> read_fold_csv(const std::filesystem::path& path);

struct SummaryRow {
  std::string subject_id;
  std::string variant;
  std::size_t segment_len = 0;
  double mean_ksd = 0.0;
  double sd_ksd = 0.0;
  double pass_fraction = 0.0;
};

inline constexpr const char* kOverallMean = "Overall Mean";

// Per (variant, segment_len): one row per subject in sorted order, then an
// "Overall Mean" row holding the mean of the subject means (its sd is the SD
// of those means).
std::vector<SummaryRow> summarize(std::span<const FoldRow> rows);

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);
// Wide layout per segment length: Subject ID, then one "mean [sd]" column per
// variant (GRU, LSTM, S4, Mamba order), closed by the Overall Mean row.
void write_table_csv(std::ostream& out, std::span<const SummaryRow> rows, std::size_t segment_len);

double mean(std::span<const double> v);
double sample_sd(std::span<const double> v);

struct RunSummary {
  std::vector<FoldResult> folds;
  std::vector<SummaryRow> summary;
};

// Trains and evaluates the configured folds, writing every artifact under
// config.out. Subjects load through load_series.
RunSummary run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);
// Same over already-loaded series.
RunSummary run_experiment(const std::map<std::string, RRSeries>& subjects,
                          const ExperimentConfig& config, std::ostream* progress = nullptr);

// Reads every fold CSV and writes summary.csv plus table_<len>.csv into `out`.
std::vector<SummaryRow> write_report(std::span<const std::filesystem::path> fold_csvs,
                                     const std::filesystem::path& out);

}  // namespace igbeat::harness
