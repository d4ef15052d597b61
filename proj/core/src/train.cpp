#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "igbeat/adam.hpp"
#include "igbeat/errors.hpp"
#include "igbeat/harness.hpp"
#include "text_util.hpp"

namespace igbeat::harness {

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
  if (patience_ < 1) throw DomainError("patience must be >= 1");
}

bool EarlyStopper::update(double value) {
  ++epoch_;
  if (value < best_) {
    best_ = value;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

double mean_nll_per_beat(std::span<const Segment> segments, model::ModelParameters& params,
                         const model::BackboneConfig& config) {
  double total = 0.0;
  std::size_t beats = 0;
  for (const auto& s : segments) {
    total += model::loss(s, params, config, false);
    beats += s.size() - 1;
  }
  if (beats == 0) throw DomainError("no validation beats");
  return total / static_cast<double>(beats);
}

void write_train_log(std::ostream& out, const TrainLog& log) {
  out << "# test_subject=" << log.test_subject << '\n';
  out << "# validation_subject=" << log.validation_subject << '\n';
  out << "# train_subjects=";
  for (std::size_t i = 0; i < log.train_subjects.size(); ++i) {
    out << (i ? ";" : "") << log.train_subjects[i];
  }
  out << '\n';
  out << "# best_epoch=" << log.best_epoch << " best_val_nll=" << detail::format_double(log.best_val_nll)
      << " stopped_early=" << (log.stopped_early ? 1 : 0) << '\n';
  out << "epoch,train_nll_per_beat,val_nll_per_beat\n";
  for (const auto& e : log.epochs) {
    out << e.epoch << ',' << detail::format_double(e.train_nll) << ','
        << detail::format_double(e.val_nll) << '\n';
  }
}

TrainResult train(std::span<const Segment> train_segments, std::span<const Segment> val_segments,
                  const ExperimentConfig& config, std::uint64_t seed, std::ostream* progress) {
  config.validate();
  if (train_segments.empty()) throw DomainError("no training segments");
  if (val_segments.empty()) throw DomainError("no validation segments");
  const model::BackboneConfig bb = config.backbone();

  Rng rng(seed);
  TrainResult result;
  result.params = model::ModelParameters::initialize(bb, rng);
  model::ModelParameters best = result.params;
  const std::vector<ad::Tensor*> tensors = result.params.pointers();

  ad::AdamOptions opts;
  opts.lr = config.lr;
  ad::Adam adam(opts);
  EarlyStopper stopper(config.patience);

  std::vector<std::size_t> order(train_segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t train_beats = 0;
  for (const auto& s : train_segments) train_beats += s.size() - 1;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (config.lr_schedule == "cosine" && config.max_epochs > 1) {
      const double frac = static_cast<double>(epoch - 1) / static_cast<double>(config.max_epochs - 1);
      adam.set_lr(config.lr_final + 0.5 * (config.lr - config.lr_final) *
                                        (1.0 + std::cos(std::numbers::pi * frac)));
    }
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t k : order) {
      const double l = model::loss_and_gradient(train_segments[k], result.params, bb);
      if (!std::isfinite(l)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                              ", segment " + std::to_string(k));
      }
      epoch_loss += l;
      adam.step(tensors);
    }
    if (!result.params.all_finite()) {
      throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch));
    }
    const double val = mean_nll_per_beat(val_segments, result.params, bb);
    if (!std::isfinite(val)) {
      throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(train_beats), val};
    result.log.epochs.push_back(rec);
    if (stopper.update(val)) best = result.params;
    if (progress) {
      *progress << "epoch " << epoch << " train " << rec.train_nll << " val " << val
                << (stopper.best_epoch() == epoch ? " *" : "") << '\n';
    }
    if (stopper.should_stop()) {
      result.log.stopped_early = true;
      break;
    }
  }
  result.params = std::move(best);
  result.params.clear_grads();
  result.log.best_val_nll = stopper.best();
  result.log.best_epoch = stopper.best_epoch();
  return result;
}

}  // namespace igbeat::harness
