#include "neuronlab/optimize.hpp"

#include <cmath>
#include <limits>

#include "neuronlab/error.hpp"

namespace neuronlab {

namespace {

Eigen::VectorXd initial_point(const OptimizerConfig& cfg, Eigen::Index d) {
  if (cfg.w0.size() == 0) return Eigen::VectorXd::Zero(d);
  if (cfg.w0.size() != d) throw Error(Errc::dimension_mismatch, "w0 length does not match the data dimension");
  return cfg.w0;
}

bool snapshot_step(const OptimizerConfig& cfg, long t) { return t % cfg.log_every == 0 || t == cfg.T; }

std::string non_finite_message(long t) {
  return std::string(to_string(Errc::non_finite_iterate)) + ": iterate " + std::to_string(t) +
         " has a non-finite coordinate; trajectory truncated";
}

Trajectory full_batch(const Dataset& data, const ActivationSpec& act, const OptimizerConfig& cfg,
                      const std::optional<Eigen::VectorXd>& v, GradientWeighting weighting, bool noise_gradient) {
  cfg.validate();
  RiskEvaluator eval(data, act, v);
  Trajectory traj;
  traj.config = cfg;
  traj.activation = act.name();
  traj.records.reserve(static_cast<std::size_t>(cfg.T + 1));
  Eigen::VectorXd w = initial_point(cfg, data.dim());
  for (long t = 0; t <= cfg.T; ++t) {
    if (!w.allFinite()) {
      traj.diagnostic = non_finite_message(t);
      break;
    }
    const RiskEval e = eval.evaluate(w, weighting, noise_gradient);
    TrajectoryRecord rec;
    rec.t = t;
    rec.F_hat = e.F_hat;
    rec.G_hat = e.G_hat;
    rec.H_hat = e.H_hat;
    rec.dist_to_v = e.dist_to_v;
    rec.dist_sq_to_v = e.dist_sq_to_v;
    rec.grad_norm = e.grad_norm;
    rec.noise_grad_norm = e.noise_grad_norm;
    if (snapshot_step(cfg, t)) rec.w = w;
    traj.records.push_back(std::move(rec));
    if (t < cfg.T) w -= cfg.eta * e.direction;
  }
  traj.best_index = select_best(traj, Metric::F_hat).first;
  return traj;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::gd: return "gd";
    case Method::sgd_online: return "sgd_online";
    case Method::glmtron: return "glmtron";
    case Method::gd_population: return "gd_population";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "gd") return Method::gd;
  if (name == "sgd_online" || name == "sgd") return Method::sgd_online;
  if (name == "glmtron") return Method::glmtron;
  if (name == "gd_population") return Method::gd_population;
  throw Error(Errc::invalid_argument, "unknown optimizer method: " + name);
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(Errc::invalid_argument, "eta must be positive");
  if (T < 1) throw Error(Errc::invalid_argument, "T must be >= 1");
  if (log_every < 1) throw Error(Errc::invalid_argument, "log_every must be >= 1");
}

Trajectory gd_run(const Dataset& data, const ActivationSpec& act, const OptimizerConfig& cfg,
                  const std::optional<Eigen::VectorXd>& v, bool noise_gradient) {
  return full_batch(data, act, cfg, v, GradientWeighting::derivative, noise_gradient);
}

Trajectory glmtron_run(const Dataset& data, const ActivationSpec& act, const OptimizerConfig& cfg,
                       const std::optional<Eigen::VectorXd>& v) {
  return full_batch(data, act, cfg, v, GradientWeighting::ones, false);
}

Trajectory sgd_run(const LabelModel& model, const InputDist& dist, const ActivationSpec& act,
                   const OptimizerConfig& cfg, const Rng& rng) {
  cfg.validate();
  model.validate();
  if (model.kind != LabelKind::realizable) {
    throw Error(Errc::invalid_argument, "online SGD is defined for the realizable label model only");
  }
  if (model.v.size() != dist.dim) throw Error(Errc::dimension_mismatch, "teacher length does not match input dimension");
  Rng stream = rng.split(Stream::sgd);
  Trajectory traj;
  traj.config = cfg;
  traj.activation = act.name();
  traj.records.reserve(static_cast<std::size_t>(cfg.T + 1));
  Eigen::VectorXd w = initial_point(cfg, dist.dim);
  const Eigen::VectorXd& v = model.v;
  for (long t = 0; t <= cfg.T; ++t) {
    if (!w.allFinite()) {
      traj.diagnostic = non_finite_message(t);
      break;
    }
    TrajectoryRecord rec;
    rec.t = t;
    rec.dist_sq_to_v = (w - v).squaredNorm();
    rec.dist_to_v = std::sqrt(*rec.dist_sq_to_v);
    if (snapshot_step(cfg, t)) rec.w = w;
    if (t < cfg.T) {
      const Eigen::VectorXd x = sample_input(dist, stream);
      const double z = w.dot(x);
      const double s = act.eval(z);
      const double ds = act.deriv(z);
      const double r = s - act.eval(v.dot(x));
      rec.F_hat = 0.5 * r * r;
      rec.G_hat = rec.F_hat;
      rec.H_hat = rec.F_hat * ds;
      const Eigen::VectorXd grad = (r * ds) * x;
      rec.grad_norm = grad.norm();
      w -= cfg.eta * grad;
    } else if (!traj.records.empty()) {
      rec.F_hat = traj.records.back().F_hat;
      rec.G_hat = traj.records.back().G_hat;
      rec.H_hat = traj.records.back().H_hat;
    }
    traj.records.push_back(std::move(rec));
  }
  traj.best_index = select_best(traj, Metric::stochastic_loss).first;
  return traj;
}

Trajectory gd_population_run(const LabelModel& model, const InputDist& dist, const ActivationSpec& act,
                             const OptimizerConfig& cfg, Eigen::Index n_mc, const Rng& rng, Dataset* surrogate) {
  if (model.kind == LabelKind::agnostic_flip) {
    throw Error(Errc::invalid_argument, "population GD needs a realizable or noisy-teacher model");
  }
  Dataset data = make_dataset(dist, model, act, n_mc, rng);
  Trajectory traj = full_batch(data, act, cfg, model.v, GradientWeighting::derivative, false);
  if (surrogate) *surrogate = std::move(data);
  return traj;
}

std::pair<long, const TrajectoryRecord*> select_best(const Trajectory& traj, Metric metric) {
  if (traj.records.empty()) throw Error(Errc::metric_missing, "empty trajectory");
  long best = -1;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const TrajectoryRecord& r = traj.records[i];
    double value = 0.0;
    switch (metric) {
      case Metric::F_hat:
      case Metric::stochastic_loss:
        value = r.F_hat;
        break;
      case Metric::H_hat:
        if (!r.H_hat) throw Error(Errc::metric_missing, "H_hat not logged at t=" + std::to_string(r.t));
        value = *r.H_hat;
        break;
    }
    if (best < 0 || value < best_value) {
      best = static_cast<long>(i);
      best_value = value;
    }
  }
  return {best, &traj.records[static_cast<std::size_t>(best)]};
}

Eigen::VectorXd iterate_at(const Trajectory& traj, long t, const Dataset& data, const ActivationSpec& act) {
  if (t < 0 || t > traj.last_t()) throw Error(Errc::invalid_argument, "iterate index out of range");
  if (traj.config.method != Method::gd && traj.config.method != Method::glmtron &&
      traj.config.method != Method::gd_population) {
    throw Error(Errc::insufficient_logging, "only full-batch trajectories can be replayed");
  }
  long start = t;
  while (start >= 0 && !traj.records[static_cast<std::size_t>(start)].w) --start;
  if (start < 0) throw Error(Errc::insufficient_logging, "no snapshot at or before t=" + std::to_string(t));
  Eigen::VectorXd w = *traj.records[static_cast<std::size_t>(start)].w;
  const RiskEvaluator eval(data, act);
  const GradientWeighting weighting =
      traj.config.method == Method::glmtron ? GradientWeighting::ones : GradientWeighting::derivative;
  for (long s = start; s < t; ++s) w -= traj.config.eta * eval.evaluate(w, weighting).direction;
  return w;
}

}  // namespace neuronlab
