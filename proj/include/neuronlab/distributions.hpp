#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "neuronlab/activations.hpp"
#include "neuronlab/rng.hpp"

namespace neuronlab {

enum class InputKind { uniform_ball, uniform_sphere, truncated_gaussian, two_point_mixture };

struct Spread {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Bounded input law on R^d. Every sample satisfies ||x|| <= bound.
struct InputDist {
  InputKind kind = InputKind::uniform_ball;
  int dim = 1;
  double bound = 1.0;
  /// truncated_gaussian: per-coordinate standard deviation before truncation;
  /// zero selects bound / sqrt(dim).
  double scale = 0.0;
  /// two_point_mixture: x = point_a w.p. prob_a, else point_b.
  Eigen::VectorXd point_a;
  Eigen::VectorXd point_b;
  double prob_a = 0.5;

  static InputDist uniform_ball(int dim, double bound);
  static InputDist uniform_sphere(int dim, double bound);
  static InputDist truncated_gaussian(int dim, double bound, double scale = 0.0);
  static InputDist two_point(Eigen::VectorXd a, Eigen::VectorXd b, double prob_a);

  double gaussian_scale() const;
  void validate() const;
};

std::string to_string(InputKind kind);
InputKind parse_input_kind(const std::string& name);

/// n x d sample, one row per draw.
Eigen::MatrixXd sample_inputs(const InputDist& dist, Eigen::Index n, Rng& rng);
Eigen::MatrixXd sample_inputs(const InputDist& dist, Eigen::Index n, std::uint64_t seed);
Eigen::VectorXd sample_input(const InputDist& dist, Rng& rng);

/// (alpha, beta) with every 2-D marginal density >= beta on the radius-alpha
/// disk. alpha = bound / 2. Only rotation-invariant kinds are supported.
Spread marginal_spread_constants(const InputDist& dist);

/// Density of a 2-D marginal at radius r, for the rotation-invariant kinds.
double marginal_density(const InputDist& dist, double r);

enum class LabelKind { realizable, noisy_teacher, agnostic_flip };
enum class NoiseKind { gaussian, bounded_uniform, heteroscedastic };

std::string to_string(LabelKind kind);
std::string to_string(NoiseKind kind);
LabelKind parse_label_kind(const std::string& name);
NoiseKind parse_noise_kind(const std::string& name);

/// y given x.
///   realizable:    y = σ(vᵀx)
///   noisy_teacher: y = σ(vᵀx) + ξ, E[ξ | x] = 0
///       gaussian         ξ ~ N(0, s²)
///       bounded_uniform  ξ ~ U[-s, s]
///       heteroscedastic  ξ = s (1/4 + 3/4 ||x||/B) N(0, 1)
///   agnostic_flip: with probability `rate`, y = σ(vᵀx) - magnitude·sign(vᵀx);
///                  otherwise y = σ(vᵀx)
struct LabelModel {
  LabelKind kind = LabelKind::realizable;
  Eigen::VectorXd v;
  NoiseKind noise = NoiseKind::gaussian;
  double s = 0.0;
  double rate = 0.0;
  double magnitude = 0.0;

  static LabelModel realizable(Eigen::VectorXd v);
  static LabelModel noisy_teacher(Eigen::VectorXd v, NoiseKind noise, double s);
  static LabelModel agnostic_flip(Eigen::VectorXd v, double rate, double magnitude);

  void validate() const;
  std::string descriptor() const;

  /// a.s. bound on |y| for inputs with ||x|| <= bound_x; empty when the noise is unbounded.
  std::optional<double> label_bound(const ActivationSpec& act, double bound_x) const;
  /// F(v) when it has a closed form for every input law (gaussian, bounded_uniform),
  /// an upper bound for agnostic_flip, empty otherwise.
  std::optional<double> noise_risk() const;
};

struct Labels {
  Eigen::VectorXd y;
  /// y - σ(Xv)
  Eigen::VectorXd xi;
  /// agnostic_flip only; empty otherwise
  std::vector<bool> corrupted;
};

Labels label(const LabelModel& model, const ActivationSpec& act, const Eigen::MatrixXd& inputs,
             double bound_x, Rng& rng);
Labels label(const LabelModel& model, const ActivationSpec& act, const Eigen::MatrixXd& inputs,
             double bound_x, std::uint64_t seed);

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  /// label noise y - σ(Xv) when the generator knows it
  Eigen::VectorXd xi;
  double bound_x = 1.0;
  std::optional<double> bound_y;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string descriptor;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

/// Inputs and labels drawn from disjoint child streams of `rng`.
Dataset make_dataset(const InputDist& dist, const LabelModel& model, const ActivationSpec& act,
                     Eigen::Index n, const Rng& rng, Stream input_stream = Stream::inputs,
                     Stream label_stream = Stream::labels);

}  // namespace neuronlab
