#include "hetermpc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hetermpc/parallel.hpp"

namespace hetermpc {

void TrainConfig::validate() const {
  if (!(lr > 0)) throw std::invalid_argument("train: lr must be positive");
  if (!(clip_norm > 0)) throw std::invalid_argument("train: clip_norm must be positive");
  if (batch_size == 0 || grad_accum_steps == 0 || max_epochs == 0) {
    throw std::invalid_argument("train: batch_size, grad_accum_steps and max_epochs must be positive");
  }
}

std::string to_jsonl(const std::vector<LogEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    nlohmann::json j{{"step", e.step}, {"train_loss", e.train_loss}, {"valid_loss", e.valid_loss}, {"lr", e.lr}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

double accumulate_step(ParameterSet<float>& params, const ModelConfig& model, std::size_t vocab_size,
                       const std::vector<const PreparedSample*>& samples, std::size_t micro_batch) {
  if (samples.empty()) throw std::invalid_argument("accumulate_step: no samples");
  const float weight = 1.0f / static_cast<float>(samples.size());
  double total = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += micro_batch) {
    const std::size_t end = std::min(samples.size(), begin + micro_batch);
    const auto n = static_cast<std::ptrdiff_t>(end - begin);
    std::vector<ParameterSet<float>> replicas;
    replicas.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) replicas.push_back(params.replica());
    std::vector<double> losses(end - begin, 0.0);
    std::vector<std::string> errors(end - begin);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        const HeterMPC<float> net(replicas[i], model, vocab_size);
        const auto loss = net.loss(*samples[begin + static_cast<std::size_t>(i)]);
        losses[i] = loss.item();
        if (std::isfinite(losses[i])) loss.backward();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (std::size_t i = 0; i < replicas.size(); ++i) {
      if (!errors[i].empty()) throw std::runtime_error(errors[i]);
      if (!std::isfinite(losses[i])) {
        throw TrainingError("non-finite loss " + std::to_string(losses[i]) + " on sample " +
                            std::to_string(begin + i) + " of the step");
      }
      params.accumulate_grads(replicas[i], weight);
      total += losses[i];
    }
  }
  return total / static_cast<double>(samples.size());
}

double evaluate_loss(const ParameterSet<float>& params, const ModelConfig& model, std::size_t vocab_size,
                     const std::vector<PreparedSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate_loss: no samples");
  std::vector<double> losses(samples.size(), 0.0);
  std::vector<std::string> errors(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      NoGradGuard no_grad;
      auto view = params.replica();
      const HeterMPC<float> net(view, model, vocab_size);
      losses[i] = net.loss(samples[i]).item();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(samples.size());
}

TrainResult train(const std::vector<PreparedSample>& train_samples, const std::vector<PreparedSample>& valid,
                  const ModelConfig& model, const TrainConfig& config, ParameterSet<float>& params,
                  std::size_t vocab_size, const std::function<void(const LogEntry&)>& on_log) {
  config.validate();
  model.validate();
  if (train_samples.empty()) throw std::invalid_argument("train: empty training corpus");
  const auto& valid_set = valid.empty() ? train_samples : valid;

  // Binds (and on first use creates) every tensor before the optimizer sees the set.
  { const HeterMPC<float> bind(params, model, vocab_size); }

  const std::size_t per_step = config.effective_batch();
  const std::size_t steps_per_epoch = (train_samples.size() + per_step - 1) / per_step;
  const std::size_t total_steps = steps_per_epoch * config.max_epochs;
  const std::size_t validate_every = config.validate_every == 0 ? steps_per_epoch : config.validate_every;
  const LinearDecay schedule(config.lr, total_steps);
  AdamW<float> optimizer;
  Rng rng(config.seed);

  TrainResult result;
  ParameterSet<float> best;
  bool have_best = false;
  double interval_loss = 0;
  std::size_t interval_steps = 0;
  std::vector<std::size_t> order(train_samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      std::vector<const PreparedSample*> batch;
      for (std::size_t i = s * per_step; i < std::min(order.size(), (s + 1) * per_step); ++i) {
        batch.push_back(&train_samples[order[i]]);
      }
      params.zero_grad();
      double loss = 0;
      try {
        loss = accumulate_step(params, model, vocab_size, batch, config.batch_size);
      } catch (const TrainingError& e) {
        throw TrainingError("step " + std::to_string(step) + " (epoch " + std::to_string(epoch) + "): " + e.what());
      }
      clip_gradients(params, config.clip_norm);
      const double lr = schedule.at(step);
      optimizer.step(params, static_cast<float>(lr));
      result.last_step_loss = loss;
      interval_loss += loss;
      ++interval_steps;

      const bool last = step + 1 == total_steps;
      if ((step + 1) % validate_every == 0 || last) {
        LogEntry entry{step + 1, interval_loss / static_cast<double>(interval_steps),
                       evaluate_loss(params, model, vocab_size, valid_set), lr};
        if (!std::isfinite(entry.valid_loss)) {
          throw TrainingError("non-finite validation loss at step " + std::to_string(step + 1));
        }
        if (!have_best || entry.valid_loss < result.best_valid_loss) {
          best = params.clone();
          have_best = true;
          result.best_valid_loss = entry.valid_loss;
          result.best_step = entry.step;
        }
        result.log.push_back(entry);
        if (on_log) on_log(entry);
        interval_loss = 0;
        interval_steps = 0;
      }
    }
  }
  result.steps = step;
  params.copy_values_from(best);
  params.zero_grad();
  return result;
}

}  // namespace hetermpc
