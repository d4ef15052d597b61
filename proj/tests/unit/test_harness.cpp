#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "igbeat/errors.hpp"
#include "igbeat/harness.hpp"
#include "igbeat/synth.hpp"
#include "nsr_tables.hpp"

namespace harness = igbeat::harness;
namespace fs = std::filesystem;
using igbeat::Rng;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Two segments per cell whose sample mean and SD reproduce the given pair.
std::vector<harness::FoldRow> rows_for(const std::string& subject, const std::string& variant,
                                       double m, double s, std::size_t len) {
  const double half = s / std::sqrt(2.0);
  const double bound = 1.36 / std::sqrt(static_cast<double>(len - 1));
  return {{subject, variant, 0, len, m - half, bound, m - half < bound},
          {subject, variant, 1, len, m + half, bound, m + half < bound}};
}

std::map<std::string, igbeat::RRSeries> tiny_cohort(std::size_t n, std::size_t beats) {
  igbeat::synth::CohortOptions opt;
  opt.n_subjects = n;
  opt.n_beats = beats;
  std::map<std::string, igbeat::RRSeries> m;
  for (auto& s : igbeat::synth::generate_cohort(opt, 3)) m[s.id] = s.data.series;
  return m;
}

harness::ExperimentConfig tiny_config(const fs::path& out) {
  harness::ExperimentConfig c;
  c.train_len = 60;
  c.test_len = 60;
  c.model_dim = 6;
  c.state_dim = 3;
  c.max_epochs = 3;
  c.patience = 2;
  c.out = out.string();
  c.write_plots = false;
  return c;
}

}  // namespace

TEST(Segment, ExactWindowsOverPrefix) {
  std::vector<double> x(1350);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 + 0.001 * static_cast<double>(i);
  const auto segs = harness::segment(x, 600);
  ASSERT_EQ(segs.size(), 2u);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    ASSERT_EQ(segs[k].size(), 600u);
    EXPECT_TRUE(std::equal(segs[k].begin(), segs[k].end(), x.begin() + k * 600));
  }
  EXPECT_EQ(harness::segment(std::vector<double>(1200, 0.8), 600).size(), 2u);
}

TEST(Segment, TooShortWarns) {
  std::ostringstream warn;
  EXPECT_TRUE(harness::segment(std::vector<double>(599, 0.8), 600, &warn, "s1").empty());
  EXPECT_NE(warn.str().find("s1"), std::string::npos);
  EXPECT_THROW(harness::segment(std::vector<double>(10, 0.8), 1), igbeat::DomainError);
}

TEST(Folds, EighteenSubjects) {
  std::vector<std::string> ids;
  for (const auto& r : igbeat::testing::kNsr600) ids.push_back(r.subject);
  std::reverse(ids.begin(), ids.end());
  const auto folds = harness::loso_folds(ids);
  ASSERT_EQ(folds.size(), 18u);
  std::vector<std::string> tests;
  for (const auto& f : folds) {
    EXPECT_EQ(f.train.size(), 16u);
    EXPECT_EQ(std::count(f.train.begin(), f.train.end(), f.test), 0);
    EXPECT_EQ(std::count(f.train.begin(), f.train.end(), f.validation), 0);
    EXPECT_NE(f.validation, f.test);
    tests.push_back(f.test);
  }
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(tests, ids);
  EXPECT_EQ(folds.back().validation, ids.front());
}

TEST(Folds, MinimumAndDuplicates) {
  const auto folds = harness::loso_folds({"c", "a", "b"});
  ASSERT_EQ(folds.size(), 3u);
  EXPECT_EQ(folds[0].test, "a");
  EXPECT_EQ(folds[0].validation, "b");
  EXPECT_EQ(folds[0].train, std::vector<std::string>{"c"});
  EXPECT_THROW(harness::loso_folds({"a", "b"}), igbeat::DomainError);
  EXPECT_THROW(harness::loso_folds({"a", "b", "a"}), igbeat::DomainError);
}

TEST(EarlyStopping, PatienceOneStopsAfterFirstNonImprovement) {
  harness::EarlyStopper s(1);
  EXPECT_TRUE(s.update(1.0));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.update(2.0));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 1u);
  EXPECT_EQ(s.best(), 1.0);
}

TEST(EarlyStopping, ImprovementResetsCounter) {
  harness::EarlyStopper s(3);
  for (double v : {5.0, 6.0, 6.0, 4.0, 7.0, 7.0}) s.update(v);
  EXPECT_FALSE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 4u);
  s.update(4.0);  // ties do not count as improvement
  EXPECT_TRUE(s.should_stop());
}

TEST(Config, ParseAndEcho) {
  std::istringstream in(
      "# experiment\n"
      "variant = lstm\n"
      "train_len=900\n"
      "lr = 5e-4   # comment\n"
      "write_plots = false\n");
  const auto c = harness::parse_config(in);
  EXPECT_EQ(c.variant, igbeat::model::Variant::kLstm);
  EXPECT_EQ(c.train_len, 900u);
  EXPECT_EQ(c.lr, 5e-4);
  EXPECT_FALSE(c.write_plots);
  EXPECT_EQ(c.patience, 50u);
  std::stringstream echo;
  harness::write_config(echo, c);
  const auto back = harness::parse_config(echo);
  EXPECT_EQ(back.variant, c.variant);
  EXPECT_EQ(back.train_len, c.train_len);
  EXPECT_EQ(back.lr, c.lr);
  EXPECT_EQ(back.lr_schedule, "constant");
}

TEST(Config, LearningRateSchedule) {
  std::istringstream in("lr_schedule = cosine\nlr_final = 2e-5\n");
  const auto c = harness::parse_config(in);
  EXPECT_EQ(c.lr_schedule, "cosine");
  EXPECT_EQ(c.lr_final, 2e-5);
  std::istringstream bad("lr_schedule = step\n");
  EXPECT_THROW(harness::parse_config(bad), igbeat::ParseError);
}

TEST(Config, ErrorsNameTheLine) {
  std::istringstream a("variant = gru\nbogus = 1\n");
  try {
    harness::parse_config(a);
    FAIL() << "expected ParseError";
  } catch (const igbeat::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream b("train_len = -4\n");
  EXPECT_THROW(harness::parse_config(b), igbeat::ParseError);
  std::istringstream c("no equals sign\n");
  EXPECT_THROW(harness::parse_config(c), igbeat::ParseError);
}

TEST(Manifest, ResolvesRelativePaths) {
  const fs::path dir = fs::temp_directory_path() / "igbeat_manifest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream m(dir / "m.csv");
    m << "subject_id,path\na,a.csv\nb,/abs/b.csv\n";
  }
  auto e = harness::read_manifest(dir / "m.csv");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].path, dir / "a.csv");
  EXPECT_EQ(e[1].path, fs::path("/abs/b.csv"));
  e = harness::read_manifest(dir / "m.csv", fs::path("/data"));
  EXPECT_EQ(e[0].path, fs::path("/data/a.csv"));
  {
    std::ofstream m(dir / "dup.csv");
    m << "subject_id,path\na,a.csv\na,b.csv\n";
  }
  EXPECT_THROW(harness::read_manifest(dir / "dup.csv"), igbeat::ParseError);
  fs::remove_all(dir);
}

TEST(FoldCsv, RoundTrip) {
  std::vector<igbeat::ig::IGTrajectory> trajs(3);
  Rng rng(2);
  for (auto& t : trajs) {
    for (int i = 0; i < 99; ++i) {
      t.params.push_back({0.8, 0.05});
      t.targets.push_back(igbeat::ig::sample({0.8, 0.05}, rng));
    }
  }
  const auto res = harness::evaluate_trajectories(trajs, "s7", "gru", 100);
  std::stringstream ss;
  harness::write_fold_csv(ss, res);
  EXPECT_EQ(lines_of(ss.str()).front(), "subject_id,variant,segment_index,ksd,bound,pass");
  const auto rows = harness::read_fold_csv(ss);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(rows[k].subject_id, "s7");
    EXPECT_EQ(rows[k].segment_index, k);
    EXPECT_EQ(rows[k].segment_len, 100u);
    EXPECT_EQ(rows[k].ksd, res.reports[k].ksd);
    EXPECT_EQ(rows[k].pass, res.reports[k].pass);
  }
  std::istringstream bad("subject_id,variant,segment_index,ksd,bound,pass\ns,gru,0,x,0.1,1\n");
  EXPECT_THROW(harness::read_fold_csv(bad), igbeat::ParseError);
}

TEST(Summary, SampleStatistics) {
  EXPECT_DOUBLE_EQ(harness::mean(std::vector<double>{1.0, 2.0, 3.0}), 2.0);
  EXPECT_DOUBLE_EQ(harness::sample_sd(std::vector<double>{1.0, 2.0, 3.0}), 1.0);
  EXPECT_EQ(harness::sample_sd(std::vector<double>{4.0}), 0.0);
}

TEST(Summary, ReportedSubjectMeansGiveOverallMean) {
  std::vector<harness::FoldRow> rows;
  const char* variants[] = {"gru", "lstm", "ssm-diag", "ssm-selective"};
  for (const auto& r : igbeat::testing::kNsr600)
    for (int v = 0; v < 4; ++v) {
      auto part = rows_for(r.subject, variants[v], r.cells[v].first, r.cells[v].second, 600);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  const auto summary = harness::summarize(rows);
  ASSERT_EQ(summary.size(), 4u * 19u);
  for (int v = 0; v < 4; ++v) {
    const auto it = std::find_if(summary.begin(), summary.end(), [&](const auto& s) {
      return s.variant == variants[v] && s.subject_id == harness::kOverallMean;
    });
    ASSERT_NE(it, summary.end());
    EXPECT_NEAR(it->mean_ksd, igbeat::testing::kNsr600Overall[v], 5e-5) << variants[v];
  }
  const auto gru = std::find_if(summary.begin(), summary.end(), [](const auto& s) {
    return s.variant == "gru" && s.subject_id == "16265";
  });
  EXPECT_NEAR(gru->mean_ksd, 0.114, 1e-12);
  EXPECT_NEAR(gru->sd_ksd, 0.056, 1e-12);
}

TEST(Summary, TableLayout) {
  std::vector<harness::FoldRow> rows;
  for (const auto& r : igbeat::testing::kNsr600) {
    auto part = rows_for(r.subject, "gru", r.cells[0].first, r.cells[0].second, 600);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  std::ostringstream out;
  harness::write_table_csv(out, harness::summarize(rows), 600);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 20u);
  EXPECT_EQ(lines[0], "Subject ID,GRU,LSTM,S4,Mamba");
  EXPECT_EQ(lines[1], "16265,0.114 [0.056],,,");
  EXPECT_EQ(lines[19], "Overall Mean,0.0925,,,");
}

TEST(Experiment, ArtifactsAndNoTestLeakage) {
  const fs::path out = fs::temp_directory_path() / "igbeat_exp";
  fs::remove_all(out);
  const auto subjects = tiny_cohort(4, 181);
  const auto run = harness::run_experiment(subjects, tiny_config(out));
  ASSERT_EQ(run.folds.size(), 4u);
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "table_60.csv"));
  for (const auto& [id, _] : subjects) {
    const fs::path dir = out / ("fold_" + id);
    for (const char* f : {"config.txt", "train_log.csv", "fold.csv", "checkpoint.json"})
      EXPECT_TRUE(fs::exists(dir / f)) << dir / f;
    const auto log = lines_of(slurp(dir / "train_log.csv"));
    ASSERT_GE(log.size(), 3u);
    EXPECT_EQ(log[0], "# test_subject=" + id);
    ASSERT_EQ(log[2].rfind("# train_subjects=", 0), 0u);
    const std::string train = log[2].substr(17);
    std::istringstream ts(train);
    std::size_t count = 0;
    for (std::string s; std::getline(ts, s, ';');) {
      EXPECT_NE(s, id) << "test subject leaked into training";
      ++count;
    }
    EXPECT_EQ(count, 2u);
  }
  fs::remove_all(out);
}

TEST(Experiment, DeterministicFoldCsv) {
  const fs::path a = fs::temp_directory_path() / "igbeat_det_a";
  const fs::path b = fs::temp_directory_path() / "igbeat_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto subjects = tiny_cohort(3, 181);
  auto ca = tiny_config(a);
  auto cb = tiny_config(b);
  cb.threads = 3;
  harness::run_experiment(subjects, ca);
  harness::run_experiment(subjects, cb);
  for (const auto& [id, _] : subjects) {
    const auto fa = slurp(a / ("fold_" + id) / "fold.csv");
    EXPECT_FALSE(fa.empty());
    EXPECT_EQ(fa, slurp(b / ("fold_" + id) / "fold.csv"));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}
