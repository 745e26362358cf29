#pragma once

#include <vector>

#include <Eigen/Core>

#include "neuronlab/activations.hpp"
#include "neuronlab/distributions.hpp"
#include "neuronlab/io.hpp"

namespace neuronlab {

struct OracleResult {
  Eigen::VectorXd v_hat;
  double opt_estimate = 0.0;
  double opt_std_error = 0.0;
  double grid_resolution = 0.0;
  long n_mc = 0;
  long candidates = 0;
  /// incumbent risk after the grid pass and after each refinement round
  std::vector<double> round_risks;
};

json to_json(const OracleResult& r);

/// Brute-force argmin of the Monte-Carlo risk over the unit ball (d <= 3).
/// All candidates are scored on one shared sample of size n_mc; ties keep the
/// first candidate in lexicographic grid order. Three refinement rounds then
/// search the 3^d neighbourhood of the incumbent at resolution / 2^r.
OracleResult grid_opt(const LabelModel& model, const InputDist& dist, const ActivationSpec& act, long n_mc,
                      double resolution, std::uint64_t seed, int workers = 1);

/// Noisy-teacher model with planted v whose F(v) equals target_opt:
/// gaussian s = sqrt(2 target), bounded_uniform half-width c = sqrt(6 target).
/// F(v) is confirmed on an n_mc-sample to within 10% relative.
LabelModel opt_knob_design(double target_opt, const InputDist& dist, const ActivationSpec& act,
                           const Eigen::VectorXd& v, NoiseKind noise = NoiseKind::gaussian, long n_mc = 100000,
                           std::uint64_t seed = 0);

}  // namespace neuronlab
