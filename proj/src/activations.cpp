#include "neuronlab/activations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "neuronlab/error.hpp"

namespace neuronlab {

namespace {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

ActivationSpec ActivationSpec::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw Error(Errc::invalid_argument, "leaky_relu slope must lie in (0, 1)");
  }
  return {ActivationKind::leaky_relu, slope};
}

ActivationSpec ActivationSpec::parse(std::string_view name) {
  if (name == "relu") return relu();
  if (name == "sigmoid") return sigmoid();
  if (name == "tanh") return tanh();
  if (name == "softplus") return softplus();
  if (name == "identity") return identity();
  constexpr std::string_view leaky = "leaky_relu";
  if (name.starts_with(leaky)) {
    double slope = 0.01;
    if (name.size() > leaky.size()) {
      if (name[leaky.size()] != ':') throw Error(Errc::invalid_argument, "bad activation: " + std::string(name));
      const std::string tail(name.substr(leaky.size() + 1));
      std::size_t used = 0;
      try {
        slope = std::stod(tail, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != tail.size()) {
        throw Error(Errc::invalid_argument, "bad leaky_relu slope: " + tail);
      }
    }
    return leaky_relu(slope);
  }
  throw Error(Errc::invalid_argument, "unknown activation: " + std::string(name));
}

std::string ActivationSpec::name() const {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: {
      char buf[32];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, slope);
      (void)ec;
      return "leaky_relu:" + std::string(buf, end);
    }
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::identity: return "identity";
  }
  return "unknown";
}

double ActivationSpec::lipschitz() const {
  switch (kind) {
    case ActivationKind::sigmoid: return 0.25;
    default: return 1.0;
  }
}

double ActivationSpec::eval(double z) const {
  switch (kind) {
    case ActivationKind::relu: return z > 0.0 ? z : 0.0;
    case ActivationKind::leaky_relu: return z >= 0.0 ? z : slope * z;
    case ActivationKind::sigmoid: return logistic(z);
    case ActivationKind::tanh: return std::tanh(z);
    case ActivationKind::softplus: return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    case ActivationKind::identity: return z;
  }
  return z;
}

double ActivationSpec::deriv(double z) const {
  switch (kind) {
    case ActivationKind::relu: return z >= 0.0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu: return z >= 0.0 ? 1.0 : slope;
    case ActivationKind::sigmoid: {
      const double s = logistic(z);
      return s * (1.0 - s);
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case ActivationKind::softplus: return logistic(z);
    case ActivationKind::identity: return 1.0;
  }
  return 1.0;
}

double gamma_for_radius(const ActivationSpec& act, double rho) {
  if (!(rho > 0.0)) throw Error(Errc::invalid_argument, "gamma_for_radius requires rho > 0");
  switch (act.kind) {
    case ActivationKind::relu:
      throw Error(Errc::not_strictly_increasing,
                  "relu has no positive derivative floor; use the marginal-spread path");
    case ActivationKind::leaky_relu: return act.slope;
    case ActivationKind::identity: return 1.0;
    // σ' is even and decreasing in |z|: the floor sits at the endpoint.
    case ActivationKind::sigmoid:
    case ActivationKind::tanh: return act.deriv(rho);
    // σ' = logistic is increasing: the floor sits at -rho.
    case ActivationKind::softplus: return act.deriv(-rho);
  }
  return gamma_on_grid(act, rho);
}

double gamma_on_grid(const ActivationSpec& act, double rho, int grid_size) {
  if (!(rho > 0.0) || grid_size < 2) throw Error(Errc::invalid_argument, "gamma_on_grid: bad grid");
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) {
    const double z = -rho + 2.0 * rho * static_cast<double>(i) / (grid_size - 1);
    lo = std::min(lo, act.deriv(z));
  }
  return lo * 0.999;
}

Assumption1Report validate_assumption1(const ActivationSpec& act, double rho, int grid_size) {
  if (grid_size < 2) throw Error(Errc::invalid_argument, "validate_assumption1 requires grid_size >= 2");
  if (!(rho > 0.0)) throw Error(Errc::invalid_argument, "validate_assumption1 requires rho > 0");
  const double lip = act.lipschitz();
  Assumption1Report rep;
  rep.rho = rho;
  rep.grid_size = grid_size;
  rep.monotone_slack = std::numeric_limits<double>::infinity();
  rep.lipschitz_slack = std::numeric_limits<double>::infinity();
  rep.derivative_range_slack = std::numeric_limits<double>::infinity();
  rep.derivative_floor = std::numeric_limits<double>::infinity();

  auto grid = [&](int i) { return -rho + 2.0 * rho * static_cast<double>(i) / (grid_size - 1); };
  double z_prev = grid(0);
  double s_prev = act.eval(z_prev);
  for (int i = 0; i < grid_size; ++i) {
    const double z = grid(i);
    const double d = act.deriv(z);
    rep.derivative_floor = std::min(rep.derivative_floor, d);
    rep.derivative_range_slack = std::min(rep.derivative_range_slack, std::min(d, lip - d));
    if (i > 0) {
      const double s = act.eval(z);
      rep.monotone_slack = std::min(rep.monotone_slack, s - s_prev);
      rep.lipschitz_slack = std::min(rep.lipschitz_slack, lip * std::abs(z - z_prev) - std::abs(s - s_prev));
      z_prev = z;
      s_prev = s;
    }
  }
  return rep;
}

}  // namespace neuronlab
