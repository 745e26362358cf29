#include "neuronlab/oracle.hpp"

#include <cmath>
#include <limits>

#include "neuronlab/error.hpp"
#include "neuronlab/parallel.hpp"
#include "neuronlab/stats.hpp"

namespace neuronlab {

namespace {

struct Scorer {
  const Dataset& data;
  const ActivationSpec& act;

  double risk(const Eigen::VectorXd& w) const {
    const Eigen::ArrayXd r = act.eval((data.X * w).array()) - data.y.array();
    return 0.5 * r.square().sum() / static_cast<double>(data.n());
  }

  MeanSe risk_se(const Eigen::VectorXd& w) const {
    const Eigen::ArrayXd f = 0.5 * (act.eval((data.X * w).array()) - data.y.array()).square();
    return mean_se(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
  }
};

bool in_unit_ball(const Eigen::VectorXd& w) { return w.squaredNorm() <= 1.0 + 1e-12; }

// Grid coordinates in [-1, 1]. When 1/res is an integer m the coordinates are
// i/m, so decimal points such as 0.6 come out as the nearest double.
std::vector<double> axis(double res) {
  const double inv = 1.0 / res;
  const double m = std::round(inv);
  std::vector<double> out;
  if (std::abs(inv - m) < 1e-9) {
    const long k = static_cast<long>(m);
    for (long i = -k; i <= k; ++i) out.push_back(static_cast<double>(i) / m);
  } else {
    const long k = static_cast<long>(std::floor(inv + 1e-9));
    for (long i = -k; i <= k; ++i) out.push_back(static_cast<double>(i) * res);
  }
  return out;
}

}  // namespace

OracleResult grid_opt(const LabelModel& model, const InputDist& dist, const ActivationSpec& act, long n_mc,
                      double resolution, std::uint64_t seed, int workers) {
  const int d = dist.dim;
  if (d > 3) throw Error(Errc::dimension_too_large, "grid oracle supports d <= 3, got " + std::to_string(d));
  if (!(resolution > 0.0)) throw Error(Errc::invalid_argument, "resolution must be positive");
  if (n_mc < 2) throw Error(Errc::invalid_argument, "n_mc must be >= 2");

  const Dataset data = make_dataset(dist, model, act, n_mc, Rng(seed).split(Stream::oracle));
  const Scorer scorer{data, act};

  const std::vector<double> ax = axis(resolution);
  std::vector<Eigen::VectorXd> grid;
  const std::size_t m = ax.size();
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= m;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Eigen::VectorXd w(d);
    std::size_t rest = idx;
    for (int j = d - 1; j >= 0; --j) {
      w[j] = ax[rest % m];
      rest /= m;
    }
    if (in_unit_ball(w)) grid.push_back(std::move(w));
  }

  std::vector<double> scores(grid.size());
  parallel_for(static_cast<long>(grid.size()), workers,
               [&](long i) { scores[static_cast<std::size_t>(i)] = scorer.risk(grid[static_cast<std::size_t>(i)]); });

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  OracleResult res;
  res.grid_resolution = resolution;
  res.n_mc = n_mc;
  res.candidates = static_cast<long>(grid.size());
  Eigen::VectorXd incumbent = grid[best];
  double incumbent_risk = scores[best];
  res.round_risks.push_back(incumbent_risk);

  for (int round = 1; round <= 3; ++round) {
    const double step = resolution / std::pow(2.0, round);
    long count = 1;
    for (int j = 0; j < d; ++j) count *= 3;
    Eigen::VectorXd round_best = incumbent;
    double round_risk = incumbent_risk;
    for (long c = 0; c < count; ++c) {
      Eigen::VectorXd w = incumbent;
      long rest = c;
      for (int j = 0; j < d; ++j) {
        w[j] += step * static_cast<double>(rest % 3 - 1);
        rest /= 3;
      }
      if (!in_unit_ball(w)) continue;
      ++res.candidates;
      const double r = scorer.risk(w);
      if (r < round_risk) {
        round_risk = r;
        round_best = w;
      }
    }
    incumbent = round_best;
    incumbent_risk = round_risk;
    res.round_risks.push_back(incumbent_risk);
  }

  const MeanSe est = scorer.risk_se(incumbent);
  res.v_hat = incumbent;
  res.opt_estimate = est.mean;
  res.opt_std_error = est.se;
  return res;
}

json to_json(const OracleResult& r) {
  json j;
  j["v_hat"] = to_json(r.v_hat);
  j["opt_estimate"] = r.opt_estimate;
  j["opt_std_error"] = r.opt_std_error;
  j["grid_resolution"] = r.grid_resolution;
  j["n_mc"] = r.n_mc;
  j["candidates"] = r.candidates;
  j["round_risks"] = r.round_risks;
  return j;
}

LabelModel opt_knob_design(double target_opt, const InputDist& dist, const ActivationSpec& act,
                           const Eigen::VectorXd& v, NoiseKind noise, long n_mc, std::uint64_t seed) {
  if (!(target_opt > 0.0) || target_opt > 1.0) {
    throw Error(Errc::invalid_argument, "target OPT must lie in (0, 1]; use a realizable model for OPT = 0");
  }
  double s = 0.0;
  switch (noise) {
    case NoiseKind::gaussian: s = std::sqrt(2.0 * target_opt); break;
    case NoiseKind::bounded_uniform: s = std::sqrt(6.0 * target_opt); break;
    case NoiseKind::heteroscedastic:
      throw Error(Errc::unreachable_target, "heteroscedastic noise has no closed-form OPT knob");
  }
  const LabelModel model = LabelModel::noisy_teacher(v, noise, s);
  const Dataset data = make_dataset(dist, model, act, n_mc, Rng(seed).split(Stream::oracle));
  const double fv = 0.5 * data.xi.squaredNorm() / static_cast<double>(data.n());
  if (std::abs(fv - target_opt) > 0.1 * target_opt) {
    throw Error(Errc::unreachable_target, "Monte-Carlo F(v) = " + format_double(fv) + " misses target " +
                                              format_double(target_opt) + " by more than 10%");
  }
  return model;
}

}  // namespace neuronlab
