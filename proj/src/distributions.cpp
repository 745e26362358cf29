#include "neuronlab/distributions.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "neuronlab/error.hpp"

namespace neuronlab {

namespace {

double unit_ball_volume(int k) {
  return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

void fill_gaussian(Eigen::Ref<Eigen::VectorXd> out, Rng& rng) {
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = rng.normal();
}

// P(chi^2_k <= x); k = 0 is a point mass at zero.
double chi2_cdf(int k, double x) {
  if (x <= 0.0) return 0.0;
  if (k == 0) return 1.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * x);
}

}  // namespace

InputDist InputDist::uniform_ball(int dim, double bound) {
  InputDist d;
  d.kind = InputKind::uniform_ball;
  d.dim = dim;
  d.bound = bound;
  d.validate();
  return d;
}

InputDist InputDist::uniform_sphere(int dim, double bound) {
  InputDist d;
  d.kind = InputKind::uniform_sphere;
  d.dim = dim;
  d.bound = bound;
  d.validate();
  return d;
}

InputDist InputDist::truncated_gaussian(int dim, double bound, double scale) {
  InputDist d;
  d.kind = InputKind::truncated_gaussian;
  d.dim = dim;
  d.bound = bound;
  d.scale = scale;
  d.validate();
  return d;
}

InputDist InputDist::two_point(Eigen::VectorXd a, Eigen::VectorXd b, double prob_a) {
  InputDist d;
  d.kind = InputKind::two_point_mixture;
  d.dim = static_cast<int>(a.size());
  d.bound = std::max(a.norm(), b.norm());
  d.point_a = std::move(a);
  d.point_b = std::move(b);
  d.prob_a = prob_a;
  d.validate();
  return d;
}

double InputDist::gaussian_scale() const {
  return scale > 0.0 ? scale : bound / std::sqrt(static_cast<double>(dim));
}

void InputDist::validate() const {
  if (dim < 1) throw Error(Errc::invalid_dimensions, "input dimension must be >= 1");
  if (!(bound > 0.0) || !std::isfinite(bound)) throw Error(Errc::invalid_argument, "input bound must be positive");
  if (kind == InputKind::truncated_gaussian && scale < 0.0) {
    throw Error(Errc::invalid_argument, "truncated_gaussian scale must be >= 0");
  }
  if (kind == InputKind::two_point_mixture) {
    if (point_a.size() != dim || point_b.size() != dim) {
      throw Error(Errc::dimension_mismatch, "two_point_mixture points must have length dim");
    }
    if (!(prob_a >= 0.0 && prob_a <= 1.0)) throw Error(Errc::invalid_argument, "prob_a must lie in [0, 1]");
    if (point_a.norm() > bound || point_b.norm() > bound) {
      throw Error(Errc::invalid_argument, "two_point_mixture points exceed the bound");
    }
  }
}

std::string to_string(InputKind kind) {
  switch (kind) {
    case InputKind::uniform_ball: return "uniform_ball";
    case InputKind::uniform_sphere: return "uniform_sphere";
    case InputKind::truncated_gaussian: return "truncated_gaussian";
    case InputKind::two_point_mixture: return "two_point_mixture";
  }
  return "unknown";
}

InputKind parse_input_kind(const std::string& name) {
  if (name == "uniform_ball") return InputKind::uniform_ball;
  if (name == "uniform_sphere") return InputKind::uniform_sphere;
  if (name == "truncated_gaussian") return InputKind::truncated_gaussian;
  if (name == "two_point_mixture" || name == "two_point") return InputKind::two_point_mixture;
  throw Error(Errc::invalid_argument, "unknown input kind: " + name);
}

Eigen::VectorXd sample_input(const InputDist& dist, Rng& rng) {
  Eigen::VectorXd x(dist.dim);
  switch (dist.kind) {
    case InputKind::uniform_ball: {
      fill_gaussian(x, rng);
      const double r = dist.bound * std::pow(rng.uniform(), 1.0 / dist.dim);
      x *= r / x.norm();
      break;
    }
    case InputKind::uniform_sphere:
      fill_gaussian(x, rng);
      x *= dist.bound / x.norm();
      break;
    case InputKind::truncated_gaussian: {
      const double tau = dist.gaussian_scale();
      do {
        fill_gaussian(x, rng);
        x *= tau;
      } while (x.norm() > dist.bound);
      break;
    }
    case InputKind::two_point_mixture:
      x = rng.uniform() < dist.prob_a ? dist.point_a : dist.point_b;
      break;
  }
  return x;
}

Eigen::MatrixXd sample_inputs(const InputDist& dist, Eigen::Index n, Rng& rng) {
  dist.validate();
  if (n < 1) throw Error(Errc::invalid_dimensions, "sample size must be >= 1");
  Eigen::MatrixXd X(n, dist.dim);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = sample_input(dist, rng).transpose();
  return X;
}

Eigen::MatrixXd sample_inputs(const InputDist& dist, Eigen::Index n, std::uint64_t seed) {
  Rng rng = Rng(seed).split(Stream::inputs);
  return sample_inputs(dist, n, rng);
}

double marginal_density(const InputDist& dist, double r) {
  const double B = dist.bound;
  const int d = dist.dim;
  if (r < 0.0) r = -r;
  switch (dist.kind) {
    case InputKind::uniform_ball: {
      if (d < 2) break;
      if (r >= B) return 0.0;
      // Volume of the (d-2)-ball fibre over a point at radius r.
      return unit_ball_volume(d - 2) * std::pow(B * B - r * r, 0.5 * (d - 2)) /
             (unit_ball_volume(d) * std::pow(B, d));
    }
    case InputKind::uniform_sphere: {
      if (d < 3) break;
      if (r >= B) return 0.0;
      return (d - 2) / (2.0 * std::numbers::pi * B * B) * std::pow(1.0 - r * r / (B * B), 0.5 * (d - 4));
    }
    case InputKind::truncated_gaussian: {
      if (d < 2) break;
      if (r >= B) return 0.0;
      const double tau = dist.gaussian_scale();
      const double t2 = tau * tau;
      const double phi = std::exp(-0.5 * r * r / t2) / (2.0 * std::numbers::pi * t2);
      return phi * chi2_cdf(d - 2, (B * B - r * r) / t2) / chi2_cdf(d, B * B / t2);
    }
    case InputKind::two_point_mixture:
      break;
  }
  throw Error(Errc::unsupported_distribution,
              to_string(dist.kind) + " with d=" + std::to_string(d) + " has no 2-D marginal density");
}

Spread marginal_spread_constants(const InputDist& dist) {
  dist.validate();
  const double alpha = 0.5 * dist.bound;
  double beta = 0.0;
  switch (dist.kind) {
    case InputKind::uniform_ball:
    case InputKind::truncated_gaussian:
      // Radial profile is decreasing: the floor on the disk sits on its rim.
      beta = marginal_density(dist, alpha);
      break;
    case InputKind::uniform_sphere:
      // Exponent (d-4)/2 is negative for d = 3, so the profile increases.
      beta = dist.dim == 3 ? marginal_density(dist, 0.0) : marginal_density(dist, alpha);
      break;
    case InputKind::two_point_mixture:
      throw Error(Errc::unsupported_distribution, "two_point_mixture has no density floor");
  }
  return {alpha, beta};
}

LabelModel LabelModel::realizable(Eigen::VectorXd v) {
  LabelModel m;
  m.kind = LabelKind::realizable;
  m.v = std::move(v);
  m.validate();
  return m;
}

LabelModel LabelModel::noisy_teacher(Eigen::VectorXd v, NoiseKind noise, double s) {
  LabelModel m;
  m.kind = LabelKind::noisy_teacher;
  m.v = std::move(v);
  m.noise = noise;
  m.s = s;
  m.validate();
  return m;
}

LabelModel LabelModel::agnostic_flip(Eigen::VectorXd v, double rate, double magnitude) {
  LabelModel m;
  m.kind = LabelKind::agnostic_flip;
  m.v = std::move(v);
  m.rate = rate;
  m.magnitude = magnitude;
  m.validate();
  return m;
}

void LabelModel::validate() const {
  if (v.size() < 1) throw Error(Errc::invalid_dimensions, "teacher vector is empty");
  if (v.norm() > 1.0 + 1e-12) throw Error(Errc::invalid_argument, "teacher vector must satisfy ||v|| <= 1");
  if (kind == LabelKind::noisy_teacher && !(s >= 0.0)) throw Error(Errc::invalid_argument, "noise scale s must be >= 0");
  if (kind == LabelKind::agnostic_flip) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw Error(Errc::invalid_argument, "corruption rate must lie in [0, 1]");
    if (!(magnitude >= 0.0)) throw Error(Errc::invalid_argument, "corruption magnitude must be >= 0");
  }
}

std::string LabelModel::descriptor() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind);
  if (kind == LabelKind::noisy_teacher) os << ":" << to_string(noise) << ":s=" << s;
  if (kind == LabelKind::agnostic_flip) os << ":rate=" << rate << ":magnitude=" << magnitude;
  return os.str();
}

std::optional<double> LabelModel::label_bound(const ActivationSpec& act, double bound_x) const {
  const double clean = std::max(std::abs(act.eval(bound_x)), std::abs(act.eval(-bound_x)));
  switch (kind) {
    case LabelKind::realizable: return clean;
    case LabelKind::agnostic_flip: return clean + magnitude;
    case LabelKind::noisy_teacher:
      if (noise == NoiseKind::bounded_uniform) return clean + s;
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> LabelModel::noise_risk() const {
  switch (kind) {
    case LabelKind::realizable: return 0.0;
    case LabelKind::agnostic_flip: return 0.5 * rate * magnitude * magnitude;
    case LabelKind::noisy_teacher:
      if (noise == NoiseKind::gaussian) return 0.5 * s * s;
      if (noise == NoiseKind::bounded_uniform) return s * s / 6.0;
      return std::nullopt;
  }
  return std::nullopt;
}

std::string to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::realizable: return "realizable";
    case LabelKind::noisy_teacher: return "noisy_teacher";
    case LabelKind::agnostic_flip: return "agnostic_flip";
  }
  return "unknown";
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::bounded_uniform: return "bounded_uniform";
    case NoiseKind::heteroscedastic: return "x_dependent_heteroscedastic";
  }
  return "unknown";
}

LabelKind parse_label_kind(const std::string& name) {
  if (name == "realizable") return LabelKind::realizable;
  if (name == "noisy_teacher") return LabelKind::noisy_teacher;
  if (name == "agnostic_flip") return LabelKind::agnostic_flip;
  throw Error(Errc::invalid_argument, "unknown label kind: " + name);
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "bounded_uniform") return NoiseKind::bounded_uniform;
  if (name == "x_dependent_heteroscedastic" || name == "heteroscedastic") return NoiseKind::heteroscedastic;
  throw Error(Errc::invalid_argument, "unknown noise kind: " + name);
}

Labels label(const LabelModel& model, const ActivationSpec& act, const Eigen::MatrixXd& inputs,
             double bound_x, Rng& rng) {
  model.validate();
  if (model.v.size() != inputs.cols()) {
    throw Error(Errc::dimension_mismatch, "teacher has length " + std::to_string(model.v.size()) +
                                              " but inputs have " + std::to_string(inputs.cols()) + " columns");
  }
  const Eigen::Index n = inputs.rows();
  const Eigen::VectorXd z = inputs * model.v;
  Labels out;
  out.y = act.eval(z.array()).matrix();
  out.xi = Eigen::VectorXd::Zero(n);
  switch (model.kind) {
    case LabelKind::realizable:
      break;
    case LabelKind::noisy_teacher:
      for (Eigen::Index i = 0; i < n; ++i) {
        switch (model.noise) {
          case NoiseKind::gaussian: out.xi[i] = model.s * rng.normal(); break;
          case NoiseKind::bounded_uniform: out.xi[i] = model.s * (2.0 * rng.uniform() - 1.0); break;
          case NoiseKind::heteroscedastic:
            out.xi[i] = model.s * (0.25 + 0.75 * inputs.row(i).norm() / bound_x) * rng.normal();
            break;
        }
      }
      break;
    case LabelKind::agnostic_flip:
      out.corrupted.assign(static_cast<std::size_t>(n), false);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (rng.uniform() < model.rate) {
          out.corrupted[static_cast<std::size_t>(i)] = true;
          out.xi[i] = -model.magnitude * (z[i] >= 0.0 ? 1.0 : -1.0);
        }
      }
      break;
  }
  out.y += out.xi;
  return out;
}

Labels label(const LabelModel& model, const ActivationSpec& act, const Eigen::MatrixXd& inputs,
             double bound_x, std::uint64_t seed) {
  Rng rng = Rng(seed).split(Stream::labels);
  return label(model, act, inputs, bound_x, rng);
}

Dataset make_dataset(const InputDist& dist, const LabelModel& model, const ActivationSpec& act,
                     Eigen::Index n, const Rng& rng, Stream input_stream, Stream label_stream) {
  Rng in = rng.split(input_stream);
  Rng lab = rng.split(label_stream);
  Dataset data;
  data.X = sample_inputs(dist, n, in);
  Labels l = label(model, act, data.X, dist.bound, lab);
  data.y = std::move(l.y);
  data.xi = std::move(l.xi);
  data.bound_x = dist.bound;
  data.bound_y = model.label_bound(act, dist.bound);
  data.seed = rng.seed();
  data.stream = rng.stream();
  data.descriptor = model.descriptor();
  return data;
}

}  // namespace neuronlab
