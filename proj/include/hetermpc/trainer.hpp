#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetermpc/model.hpp"
#include "hetermpc/optimizer.hpp"

namespace hetermpc {

struct TrainConfig {
  double lr = 6.25e-5;
  double clip_norm = 1.0;
  std::size_t batch_size = 16;
  std::size_t grad_accum_steps = 8;
  std::size_t max_epochs = 15;
  std::uint64_t seed = 0;
  /// Optimizer steps between validation events; 0 means once per epoch.
  std::size_t validate_every = 0;
  bool shuffle = true;

  std::size_t effective_batch() const { return batch_size * grad_accum_steps; }
  void validate() const;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogEntry {
  std::size_t step = 0;
  /// Mean training loss over the optimizer steps since the previous entry.
  double train_loss = 0;
  double valid_loss = 0;
  double lr = 0;
};

std::string to_jsonl(const std::vector<LogEntry>& log);

struct TrainResult {
  std::vector<LogEntry> log;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  double best_valid_loss = 0;
  /// Loss of the final optimizer step.
  double last_step_loss = 0;
};

/// Forward/backward over one optimizer step worth of samples: each sample's
/// gradient is weighted 1 / samples.size() and reduced into `params` in order.
/// Returns the mean loss.
double accumulate_step(ParameterSet<float>& params, const ModelConfig& model, std::size_t vocab_size,
                       const std::vector<const PreparedSample*>& samples, std::size_t micro_batch);

/// Mean per-sample loss without recording a tape.
double evaluate_loss(const ParameterSet<float>& params, const ModelConfig& model, std::size_t vocab_size,
                     const std::vector<PreparedSample>& samples);

/// Runs the whole schedule. `valid` may be empty, in which case the training
/// set doubles as the validation set. On return `params` holds the values
/// with the best validation loss seen.
TrainResult train(const std::vector<PreparedSample>& train_samples, const std::vector<PreparedSample>& valid,
                  const ModelConfig& model, const TrainConfig& config, ParameterSet<float>& params,
                  std::size_t vocab_size, const std::function<void(const LogEntry&)>& on_log = {});

}  // namespace hetermpc
