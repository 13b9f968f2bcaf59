#include "stnmt/optim.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "stnmt/checkpoint.hpp"

STNMT_BEGIN_NAMESPACE

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t target_tokens(const Batch& batch) {
  std::size_t n = 0;
  for (const auto* ex : batch.examples) n += ex->target.size();
  return n;
}

double example_gradient(const Model& model, const TrainingExample& ex, Real seed) {
  Tape tape;
  Tensor nll = sentence_nll(tape, ex, model);
  tape.backward(nll, seed);
  return nll.item();
}

double grad_norm(const ParameterSet& params) {
  double sq = 0;
  for (const auto& e : params.entries()) {
    for (Real g : e.tensor.grad()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

}  // namespace

AdadeltaState AdadeltaState::for_params(const ParameterSet& params, double rho, double epsilon) {
  AdadeltaState s;
  s.rho = rho;
  s.epsilon = epsilon;
  for (const auto& e : params.entries()) {
    s.mean_sq_grad.emplace_back(e.tensor.size(), Real(0));
    s.mean_sq_delta.emplace_back(e.tensor.size(), Real(0));
  }
  return s;
}

void adadelta_update(std::span<Real> param, std::span<const Real> grad, std::span<Real> mean_sq_grad,
                     std::span<Real> mean_sq_delta, double rho, double epsilon) {
  if (grad.size() != param.size() || mean_sq_grad.size() != param.size() ||
      mean_sq_delta.size() != param.size()) {
    throw ShapeError("adadelta_update: buffer sizes differ");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double eg = rho * mean_sq_grad[i] + (1 - rho) * g * g;
    const double delta = -std::sqrt(mean_sq_delta[i] + epsilon) / std::sqrt(eg + epsilon) * g;
    mean_sq_grad[i] = static_cast<Real>(eg);
    mean_sq_delta[i] = static_cast<Real>(rho * mean_sq_delta[i] + (1 - rho) * delta * delta);
    param[i] = static_cast<Real>(param[i] + delta);
  }
}

void adadelta_step(ParameterSet& params, AdadeltaState& state) {
  auto& entries = params.entries();
  if (state.mean_sq_grad.size() != entries.size()) {
    throw ContractError("adadelta_step: state does not match the parameter set");
  }
  for (const auto& e : entries) {
    for (Real g : e.tensor.grad()) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient in '" + e.name + "'");
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& t = entries[i].tensor;
    adadelta_update(t.values(), t.grad(), state.mean_sq_grad[i], state.mean_sq_delta[i], state.rho,
                    state.epsilon);
  }
}

double accumulate_batch_gradient(Model& model, const Batch& batch, std::size_t threads) {
  const std::size_t tokens = target_tokens(batch);
  if (tokens == 0) return 0;
  const Real seed = Real(1) / static_cast<Real>(tokens);
  threads = std::max<std::size_t>(1, std::min(threads, batch.size()));

  if (threads == 1) {
    double total = 0;
    for (const auto* ex : batch.examples) total += example_gradient(model, *ex, seed);
    return total;
  }

  // Contiguous shards on private clones, merged in shard order so the result
  // does not depend on scheduling.
  std::vector<Model> workers;
  std::vector<double> losses(threads, 0);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.push_back(model.clone());
    workers.back().params().zero_grad();
  }
  std::vector<std::thread> pool;
  const std::size_t n = batch.size();
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w * n / threads; i < (w + 1) * n / threads; ++i) {
        losses[w] += example_gradient(workers[w], *batch.examples[i], seed);
      }
    });
  }
  for (auto& t : pool) t.join();

  double total = 0;
  auto& dst = model.params().entries();
  for (std::size_t w = 0; w < threads; ++w) {
    total += losses[w];
    const auto& src = workers[w].params().entries();
    for (std::size_t p = 0; p < dst.size(); ++p) {
      auto g = dst[p].tensor.grad();
      auto s = src[p].tensor.grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += s[k];
    }
  }
  return total;
}

TrainResult train(Model& model, std::span<const TrainingExample> examples, const TrainConfig& config) {
  AdadeltaState state = AdadeltaState::for_params(model.params(), config.rho, config.epsilon);
  return train(model, examples, config, state);
}

TrainResult train(Model& model, std::span<const TrainingExample> examples, const TrainConfig& config,
                  AdadeltaState& state) {
  if (examples.empty()) throw ContractError("train: no training examples");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (model.config().uses_tree()) {
    for (const auto& ex : examples) {
      if (!ex.tree) throw ConfigError("tree encoder needs a parse tree for every training example");
    }
  }

  TrainResult result;
  std::string last_good = "none";
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double loss_sum = 0;
    std::size_t token_count = 0;
    for (const Batch& batch : make_batches(examples, config.batch_size, mix(config.seed + epoch))) {
      model.params().zero_grad();
      const double loss = accumulate_batch_gradient(model, batch, config.threads);
      if (!std::isfinite(loss)) {
        throw TrainingError("loss became non-finite in epoch " + std::to_string(epoch) +
                            "; last good checkpoint: " + last_good);
      }
      if (config.clip_norm > 0) {
        const double norm = grad_norm(model.params());
        if (norm > config.clip_norm) {
          const Real f = static_cast<Real>(config.clip_norm / norm);
          for (auto& e : model.params().entries()) {
            for (Real& g : e.tensor.grad()) g *= f;
          }
          ++result.clipped_batches;
        }
      }
      try {
        adadelta_step(model.params(), state);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + "; last good checkpoint: " + last_good);
      }
      loss_sum += loss;
      token_count += target_tokens(batch);
    }
    model.params().zero_grad();

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = token_count ? loss_sum / static_cast<double>(token_count) : 0;
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(log);

    if (!config.checkpoint.empty()) {
      save_checkpoint(config.checkpoint, model);
      last_good = config.checkpoint.string();
    }
    if (config.on_epoch && !config.on_epoch(log, model)) break;
  }
  return result;
}

std::uint64_t phase_two_seed(std::uint64_t seed) { return mix(seed); }

Model init_phase_two(const Model& phase_one, const ModelConfig& config, std::uint64_t seed) {
  Model model(config, seed);
  for (const auto& src : phase_one.params().entries()) {
    if (!is_bottom_up_parameter(src.name)) continue;
    if (!model.params().contains(src.name)) {
      throw ConfigError("phase-two model has no parameter '" + src.name + "'");
    }
    Tensor& dst = model.params().at(src.name);
    if (dst.shape() != src.tensor.shape()) {
      throw ConfigError("shape mismatch for '" + src.name + "': " + to_string(src.tensor.shape()) +
                        " vs " + to_string(dst.shape()));
    }
    std::copy(src.tensor.values().begin(), src.tensor.values().end(), dst.values().begin());
  }
  return model;
}

TwoPhaseResult train_two_phase(std::span<const TrainingExample> examples, const ModelConfig& config,
                               std::uint64_t seed, const TrainConfig& phase_one,
                               const TrainConfig& phase_two) {
  if (config.encoder != EncoderKind::Bidirectional) {
    throw ConfigError("two-phase training targets the bidirectional encoder");
  }
  ModelConfig first_config = config;
  first_config.encoder = EncoderKind::BottomUp;
  Model first(first_config, seed);
  TrainResult first_result = train(first, examples, phase_one);
  Model second = init_phase_two(first, config, phase_two_seed(seed));
  TrainResult second_result = train(second, examples, phase_two);
  return TwoPhaseResult{std::move(first), std::move(second), std::move(first_result),
                        std::move(second_result)};
}

STNMT_END_NAMESPACE
