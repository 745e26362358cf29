#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "neuronlab/activations.hpp"
#include "neuronlab/distributions.hpp"
#include "neuronlab/risk.hpp"

namespace neuronlab {

enum class Method { gd, sgd_online, glmtron, gd_population };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct OptimizerConfig {
  Method method = Method::gd;
  double eta = 0.0;
  long T = 1;
  /// empty means the origin
  Eigen::VectorXd w0;
  /// full weight vectors are kept every log_every steps and at t = T
  long log_every = 1;

  void validate() const;
};

struct TrajectoryRecord {
  long t = 0;
  /// present on snapshot steps only
  std::optional<Eigen::VectorXd> w;
  double F_hat = 0.0;
  std::optional<double> G_hat;
  std::optional<double> H_hat;
  std::optional<double> dist_to_v;
  /// ||w_t - v||² computed directly, used for exact decrement checks
  std::optional<double> dist_sq_to_v;
  double grad_norm = 0.0;
  std::optional<double> noise_grad_norm;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  OptimizerConfig config;
  std::string activation;
  /// set when the run stopped early on a non-finite iterate
  std::optional<std::string> diagnostic;
  long best_index = 0;

  long last_t() const { return records.empty() ? -1 : records.back().t; }
};

/// Full-batch w_{t+1} = w_t - η ∇F̂(w_t). Records t = 0..T.
/// `v` enables Ĝ, Ĥ and distance logging.
Trajectory gd_run(const Dataset& data, const ActivationSpec& act, const OptimizerConfig& cfg,
                  const std::optional<Eigen::VectorXd>& v = std::nullopt, bool noise_gradient = false);

/// w_{t+1} = w_t - η (1/n) Σ (σ(w_tᵀx_i) - y_i) x_i.
Trajectory glmtron_run(const Dataset& data, const ActivationSpec& act, const OptimizerConfig& cfg,
                       const std::optional<Eigen::VectorXd>& v = std::nullopt);

/// Online SGD on fresh draws x_t, y_t = σ(vᵀx_t). Record t carries the
/// stochastic losses of the sample used for the step t -> t+1
/// (F_hat = F_t(w_t), H_hat = H_t(w_t)); the final record has none and
/// repeats the previous values with grad_norm 0.
Trajectory sgd_run(const LabelModel& model, const InputDist& dist, const ActivationSpec& act,
                   const OptimizerConfig& cfg, const Rng& rng);

/// Gradient descent on a fixed n_mc-sample surrogate of the population risk.
/// The surrogate sample is returned through `surrogate` when requested.
Trajectory gd_population_run(const LabelModel& model, const InputDist& dist, const ActivationSpec& act,
                             const OptimizerConfig& cfg, Eigen::Index n_mc, const Rng& rng,
                             Dataset* surrogate = nullptr);

enum class Metric { F_hat, H_hat, stochastic_loss };

/// First index attaining the minimum of the metric. stochastic_loss reads F_hat
/// of an SGD trajectory.
std::pair<long, const TrajectoryRecord*> select_best(const Trajectory& traj, Metric metric);

/// Reconstructs w_t of a GD or GLMTron trajectory by replaying from the
/// nearest earlier snapshot.
Eigen::VectorXd iterate_at(const Trajectory& traj, long t, const Dataset& data, const ActivationSpec& act);

}  // namespace neuronlab
