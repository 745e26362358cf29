#include "neuronlab/risk.hpp"

#include <cmath>
#include <vector>

#include "neuronlab/error.hpp"

namespace neuronlab {

namespace {

void check_dim(const Eigen::VectorXd& w, const Dataset& data, const char* what) {
  if (w.size() != data.dim()) {
    throw Error(Errc::dimension_mismatch, std::string(what) + " has length " + std::to_string(w.size()) +
                                              ", data has dimension " + std::to_string(data.dim()));
  }
}

MeanSe summarize(const Eigen::ArrayXd& xs) {
  return mean_se(std::span<const double>(xs.data(), static_cast<std::size_t>(xs.size())));
}

}  // namespace

double empirical_risk(const Eigen::VectorXd& w, const Dataset& data, const ActivationSpec& act) {
  check_dim(w, data, "w");
  const Eigen::ArrayXd r = act.eval((data.X * w).array()) - data.y.array();
  return 0.5 * r.square().sum() / static_cast<double>(data.n());
}

Eigen::VectorXd empirical_gradient(const Eigen::VectorXd& w, const Dataset& data, const ActivationSpec& act) {
  return RiskEvaluator(data, act).evaluate(w).direction;
}

double aux_G_hat(const Eigen::VectorXd& w, const Eigen::VectorXd& v, const Dataset& data, const ActivationSpec& act) {
  check_dim(w, data, "w");
  check_dim(v, data, "v");
  const Eigen::ArrayXd g = act.eval((data.X * w).array()) - act.eval((data.X * v).array());
  return 0.5 * g.square().sum() / static_cast<double>(data.n());
}

double aux_H_hat(const Eigen::VectorXd& w, const Eigen::VectorXd& v, const Dataset& data, const ActivationSpec& act) {
  check_dim(w, data, "w");
  check_dim(v, data, "v");
  const Eigen::ArrayXd zw = (data.X * w).array();
  const Eigen::ArrayXd g = act.eval(zw) - act.eval((data.X * v).array());
  return 0.5 * (g.square() * act.deriv(zw)).sum() / static_cast<double>(data.n());
}

RiskEvaluator::RiskEvaluator(const Dataset& data, const ActivationSpec& act, std::optional<Eigen::VectorXd> v)
    : data_(data), act_(act), v_(std::move(v)) {
  if (data_.y.size() != data_.n()) throw Error(Errc::dimension_mismatch, "label count does not match inputs");
  if (v_) {
    check_dim(*v_, data_, "v");
    sigma_v_ = act_.eval((data_.X * *v_).array());
  }
}

RiskEval RiskEvaluator::evaluate(const Eigen::VectorXd& w, GradientWeighting weighting, bool noise_gradient) const {
  check_dim(w, data_, "w");
  const double n = static_cast<double>(data_.n());
  const Eigen::ArrayXd z = (data_.X * w).array();
  const Eigen::ArrayXd s = act_.eval(z);
  const Eigen::ArrayXd ds = act_.deriv(z);
  const Eigen::ArrayXd r = s - data_.y.array();

  RiskEval out;
  out.F_hat = 0.5 * r.square().sum() / n;
  const Eigen::VectorXd grad = data_.X.transpose() * (r * ds).matrix() / n;
  out.grad_norm = grad.norm();
  out.direction = weighting == GradientWeighting::derivative ? grad : Eigen::VectorXd(data_.X.transpose() * r.matrix() / n);
  if (v_) {
    const Eigen::ArrayXd g2 = (s - sigma_v_).square();
    out.G_hat = 0.5 * g2.sum() / n;
    out.H_hat = 0.5 * (g2 * ds).sum() / n;
    out.dist_sq_to_v = (w - *v_).squaredNorm();
    out.dist_to_v = std::sqrt(*out.dist_sq_to_v);
    if (noise_gradient) {
      const Eigen::ArrayXd xi = data_.y.array() - sigma_v_;
      out.noise_grad_norm = (data_.X.transpose() * (xi * ds).matrix() / n).norm();
    }
  }
  return out;
}

double RiskEvaluator::risk_at_v() const {
  if (!v_) throw Error(Errc::missing_input, "F̂(v) needs the comparator v");
  return 0.5 * (sigma_v_ - data_.y.array()).square().sum() / static_cast<double>(data_.n());
}

PopulationSample::PopulationSample(const InputDist& dist, const LabelModel& model, const ActivationSpec& act,
                                   Eigen::Index n_test, const Rng& rng)
    : act_(act), v_(model.v) {
  if (n_test < 2) throw Error(Errc::invalid_argument, "population estimates need n_test >= 2");
  data_ = make_dataset(dist, model, act, n_test, rng, Stream::test_inputs, Stream::test_labels);
  sigma_v_ = act_.eval((data_.X * v_).array());
}

PopulationEstimate PopulationSample::estimate(const Eigen::VectorXd& w) const {
  check_dim(w, data_, "w");
  const Eigen::ArrayXd z = (data_.X * w).array();
  const Eigen::ArrayXd s = act_.eval(z);
  const Eigen::ArrayXd f = 0.5 * (s - data_.y.array()).square();
  const Eigen::ArrayXd fv = 0.5 * (sigma_v_ - data_.y.array()).square();
  const Eigen::ArrayXd g = 0.5 * (s - sigma_v_).square();
  PopulationEstimate est;
  est.n_test = static_cast<long>(data_.n());
  est.F = summarize(f);
  est.F_v = summarize(fv);
  est.excess = summarize(f - fv);
  est.G = summarize(g);
  est.H = summarize(g * act_.deriv(z));
  return est;
}

PopulationEstimate population_estimates(const Eigen::VectorXd& w, const LabelModel& model, const InputDist& dist,
                                        const ActivationSpec& act, Eigen::Index n_test, std::uint64_t seed) {
  return PopulationSample(dist, model, act, n_test, Rng(seed)).estimate(w);
}

}  // namespace neuronlab
