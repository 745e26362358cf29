#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace neuronlab {

enum class ActivationKind { relu, leaky_relu, sigmoid, tanh, softplus, identity };

/// A non-decreasing Lipschitz activation with its (sub)derivative.
///
/// Kinks use the right-hand derivative, so relu'(0) = 1 and
/// leaky_relu'(0) = 1. Lipschitz constants are the supremum of the
/// derivative (softplus: 1, attained only in the limit).
struct ActivationSpec {
  ActivationKind kind = ActivationKind::identity;
  double slope = 0.0;  ///< negative-branch slope, leaky_relu only

  static ActivationSpec relu() { return {ActivationKind::relu, 0.0}; }
  static ActivationSpec leaky_relu(double slope);
  static ActivationSpec sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
  static ActivationSpec tanh() { return {ActivationKind::tanh, 0.0}; }
  static ActivationSpec softplus() { return {ActivationKind::softplus, 0.0}; }
  static ActivationSpec identity() { return {ActivationKind::identity, 0.0}; }

  /// Parses "relu", "leaky_relu:0.1", "sigmoid", "tanh", "softplus", "identity".
  static ActivationSpec parse(std::string_view name);
  std::string name() const;

  double lipschitz() const;
  /// False only for relu, whose derivative vanishes on the negative axis.
  bool strictly_increasing() const { return kind != ActivationKind::relu; }

  double eval(double z) const;
  double deriv(double z) const;

  /// Elementwise σ and σ' over an Eigen array expression.
  template <typename Derived>
  Eigen::ArrayXd eval(const Eigen::ArrayBase<Derived>& z) const {
    return z.unaryExpr([this](double x) { return eval(x); });
  }
  template <typename Derived>
  Eigen::ArrayXd deriv(const Eigen::ArrayBase<Derived>& z) const {
    return z.unaryExpr([this](double x) { return deriv(x); });
  }

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

inline double eval(const ActivationSpec& act, double z) { return act.eval(z); }
inline double deriv(const ActivationSpec& act, double z) { return act.deriv(z); }

/// Derivative floor inf_{|z| <= rho} σ'(z). Closed forms for every supported
/// kind; throws Errc::not_strictly_increasing for relu.
double gamma_for_radius(const ActivationSpec& act, double rho);

/// Minimum of σ' over a uniform grid on [-rho, rho], scaled by 0.999 so the
/// result stays a valid lower bound between grid points.
double gamma_on_grid(const ActivationSpec& act, double rho, int grid_size = 100000);

struct Assumption1Report {
  double rho = 0.0;
  int grid_size = 0;
  /// min over consecutive grid pairs of σ(z_{i+1}) - σ(z_i)
  double monotone_slack = 0.0;
  /// min over consecutive grid pairs of L|Δz| - |Δσ|
  double lipschitz_slack = 0.0;
  /// min over grid points of min(σ'(z), L - σ'(z))
  double derivative_range_slack = 0.0;
  /// min over grid points of σ'(z)
  double derivative_floor = 0.0;

  bool monotone() const { return monotone_slack >= 0.0; }
  bool lipschitz() const { return lipschitz_slack >= 0.0; }
  bool derivative_in_range() const { return derivative_range_slack >= 0.0; }
  bool floor_positive() const { return derivative_floor > 0.0; }
  bool all_pass() const {
    return monotone() && lipschitz() && derivative_in_range() && floor_positive();
  }
};

/// Grid check of Assumption 1 over [-rho, rho]; violations are reported, not thrown.
Assumption1Report validate_assumption1(const ActivationSpec& act, double rho, int grid_size);

}  // namespace neuronlab
