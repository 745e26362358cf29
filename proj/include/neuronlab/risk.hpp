#pragma once

#include <optional>

#include <Eigen/Core>

#include "neuronlab/activations.hpp"
#include "neuronlab/distributions.hpp"
#include "neuronlab/stats.hpp"

namespace neuronlab {

/// Per-sample residual weights in the shared gradient kernel Xᵀ(r ∘ weights)/n.
/// `derivative` gives ∇F̂ (gradient descent); `ones` gives the GLMTron direction.
enum class GradientWeighting { derivative, ones };

double empirical_risk(const Eigen::VectorXd& w, const Dataset& data, const ActivationSpec& act);
Eigen::VectorXd empirical_gradient(const Eigen::VectorXd& w, const Dataset& data, const ActivationSpec& act);
double aux_G_hat(const Eigen::VectorXd& w, const Eigen::VectorXd& v, const Dataset& data, const ActivationSpec& act);
double aux_H_hat(const Eigen::VectorXd& w, const Eigen::VectorXd& v, const Dataset& data, const ActivationSpec& act);

struct RiskEval {
  double F_hat = 0.0;
  std::optional<double> G_hat;
  std::optional<double> H_hat;
  std::optional<double> dist_to_v;
  std::optional<double> dist_sq_to_v;
  /// update direction (∇F̂ or the GLMTron direction)
  Eigen::VectorXd direction;
  /// ||∇F̂(w)||, always the true gradient whatever the weighting
  double grad_norm = 0.0;
  /// ||(1/n) Σ ξ_i σ'(wᵀx_i) x_i|| with ξ = y - σ(Xv)
  std::optional<double> noise_grad_norm;
};

/// Evaluates F̂, Ĝ, Ĥ and gradients on a fixed dataset, caching σ(Xv).
/// Holds a reference to `data`, which must outlive the evaluator.
class RiskEvaluator {
 public:
  RiskEvaluator(const Dataset& data, const ActivationSpec& act, std::optional<Eigen::VectorXd> v = std::nullopt);

  RiskEval evaluate(const Eigen::VectorXd& w, GradientWeighting weighting = GradientWeighting::derivative,
                    bool noise_gradient = false) const;

  const Dataset& data() const { return data_; }
  const ActivationSpec& activation() const { return act_; }
  const std::optional<Eigen::VectorXd>& v() const { return v_; }
  /// F̂(v); requires v.
  double risk_at_v() const;

 private:
  const Dataset& data_;
  ActivationSpec act_;
  std::optional<Eigen::VectorXd> v_;
  Eigen::ArrayXd sigma_v_;
};

struct PopulationEstimate {
  MeanSe F;
  std::optional<MeanSe> G;
  std::optional<MeanSe> H;
  /// F(w) - F(v) on the same sample
  std::optional<MeanSe> excess;
  std::optional<MeanSe> F_v;
  long n_test = 0;
};

/// A fixed fresh sample used as a Monte-Carlo stand-in for the population.
class PopulationSample {
 public:
  PopulationSample(const InputDist& dist, const LabelModel& model, const ActivationSpec& act, Eigen::Index n_test,
                   const Rng& rng);

  PopulationEstimate estimate(const Eigen::VectorXd& w) const;
  const Dataset& data() const { return data_; }
  const Eigen::VectorXd& v() const { return v_; }

 private:
  Dataset data_;
  ActivationSpec act_;
  Eigen::VectorXd v_;
  Eigen::ArrayXd sigma_v_;
};

/// Fresh-sample estimates of F, G, H at w with standard errors sd / sqrt(n_test).
PopulationEstimate population_estimates(const Eigen::VectorXd& w, const LabelModel& model, const InputDist& dist,
                                        const ActivationSpec& act, Eigen::Index n_test, std::uint64_t seed);

}  // namespace neuronlab
