#include <algorithm>
#include <cmath>
#include <limits>

#include "neuronlab/error.hpp"
#include "neuronlab/harness.hpp"
#include "neuronlab/parallel.hpp"
#include "neuronlab/stats.hpp"

namespace neuronlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr long kFactTrials = 10000;
constexpr double kClaimSe = 5.0;
constexpr long kMaxCertSteps = 20000;

struct Suite {
  json checks = json::array();
  bool pass = true;

  void add(json c) {
    pass = pass && c.at("pass").get<bool>();
    checks.push_back(std::move(c));
  }
};

std::vector<ActivationSpec> all_activations() {
  return {ActivationSpec::relu(),    ActivationSpec::leaky_relu(0.1), ActivationSpec::sigmoid(),
          ActivationSpec::tanh(),    ActivationSpec::softplus(),      ActivationSpec::identity()};
}

Eigen::VectorXd random_unit(int d, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.normal();
  v /= v.norm();
  while (v.norm() > 1.0) v *= 1.0 - kEps;
  return v;
}

// Uniform point in the radius-r ball around c.
Eigen::VectorXd random_in_ball(const Eigen::VectorXd& c, double r, Rng& rng) {
  const int d = static_cast<int>(c.size());
  const Eigen::VectorXd u = random_unit(d, rng);
  return c + r * std::pow(rng.uniform(), 1.0 / d) * u;
}

// (σ(z1) - σ(z2))(z1 - z2) >= rhs, with rhs = γ(z1 - z2)² (fact 1) or
// L⁻¹(σ(z1) - σ(z2))² (fact 2). The allowance bounds the rounding error of
// both sides, dominated by cancellation in σ(z1) - σ(z2).
json fact_check(const ActivationSpec& act, bool first, double rho, Rng& rng) {
  const double gamma = first ? gamma_for_radius(act, rho) : 0.0;
  const double L = act.lipschitz();
  long violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (long i = 0; i < kFactTrials; ++i) {
    const double z1 = rho * (2.0 * rng.uniform() - 1.0);
    const double z2 = rho * (2.0 * rng.uniform() - 1.0);
    const double s1 = act.eval(z1);
    const double s2 = act.eval(z2);
    const double ds = s1 - s2;
    const double dz = z1 - z2;
    const double lhs = ds * dz;
    const double rhs = first ? gamma * dz * dz : ds * ds / L;
    const double tol = 16.0 * kEps *
                       ((std::abs(s1) + std::abs(s2)) * (std::abs(dz) + std::abs(ds) / L) +
                        (std::abs(z1) + std::abs(z2)) * (std::abs(ds) + gamma * std::abs(dz)));
    const double slack = lhs - rhs + tol;
    if (!(slack >= 0.0)) ++violations;
    worst = std::min(worst, lhs - rhs);
  }
  return {{"name", std::string(first ? "fact1" : "fact2") + "/" + act.name() + "/rho=" + format_double(rho)},
          {"trials", kFactTrials},
          {"gamma", gamma},
          {"violations", violations},
          {"worst_slack", worst},
          {"pass", violations == 0}};
}

Suite facts(std::uint64_t seed) {
  Suite s;
  Rng root = Rng(seed).split(0xfac7);
  std::uint64_t tag = 0;
  for (const auto& act : all_activations()) {
    for (double rho : {1.0, 2.0, 4.0}) {
      if (act.strictly_increasing()) {
        Rng rng = root.split(++tag);
        s.add(fact_check(act, true, rho, rng));
      }
      Rng rng = root.split(++tag);
      s.add(fact_check(act, false, 4.0 * rho, rng));
    }
  }
  return s;
}

Suite claims(std::uint64_t seed, int workers) {
  Suite s;
  const InputDist dist = InputDist::uniform_ball(3, 1.0);
  const long n = 20000;
  const int pairs = 10;
  const auto acts = all_activations();
  std::vector<json> results(acts.size() * 2);
  parallel_for(static_cast<long>(acts.size() * 2), workers, [&](long k) {
    const ActivationSpec& act = acts[static_cast<std::size_t>(k / 2)];
    const bool equality = k % 2 == 0;
    Rng rng = Rng(seed).split(0xc1a1).split(static_cast<std::uint64_t>(k));
    const Eigen::VectorXd v = random_unit(dist.dim, rng);
    // Equality needs E[ξ | x] = 0; the inequality holds for any labels.
    const LabelModel model = equality ? LabelModel::noisy_teacher(v, NoiseKind::gaussian, 0.3)
                                      : LabelModel::agnostic_flip(v, 0.2, 0.5);
    const PopulationSample pop(dist, model, act, n, rng.split(1));
    double worst = std::numeric_limits<double>::infinity();
    long violations = 0;
    for (int i = 0; i < pairs; ++i) {
      const Eigen::VectorXd w = random_in_ball(Eigen::VectorXd::Zero(dist.dim), 2.0, rng);
      const PopulationEstimate e = pop.estimate(w);
      const double se = std::sqrt(e.F.se * e.F.se + e.G->se * e.G->se + e.F_v->se * e.F_v->se);
      double slack;
      if (equality) {
        slack = kClaimSe * se - std::abs(e.F.mean - e.G->mean - e.F_v->mean);
      } else {
        slack = 2.0 * e.G->mean + 2.0 * e.F_v->mean + kClaimSe * se - e.F.mean;
      }
      if (!(slack >= 0.0)) ++violations;
      worst = std::min(worst, slack);
    }
    results[static_cast<std::size_t>(k)] = {
        {"name", std::string(equality ? "claim_equality/" : "claim_inequality/") + act.name()},
        {"pairs", pairs},
        {"n_mc", n},
        {"violations", violations},
        {"worst_slack", worst},
        {"pass", violations == 0}};
  });
  for (auto& r : results) s.add(std::move(r));
  return s;
}

json certificate_entry(const std::string& name, const CertificateReport& rep, long T) {
  json j = to_json(rep);
  j["name"] = name;
  j["T_run"] = T;
  return j;
}

// Runs GD for the certificate budget, found from a one-step probe (the
// budget only shrinks as K grows along the run), capped at kMaxCertSteps;
// a capped run still has to hit the threshold to pass.
CertificateReport certify_gd(Setting setting, const ActivationSpec& act, const Dataset& data,
                             const Eigen::VectorXd& v, double eta, const std::optional<Spread>& spread, long& T) {
  const bool noisy = setting == Setting::noisy_teacher_increasing || setting == Setting::noisy_teacher_relu;
  CertificateInputs ci;
  ci.setting = setting;
  ci.act = act;
  ci.bound_x = data.bound_x;
  ci.eta = eta;
  ci.F_v_hat = empirical_risk(v, data, act);
  ci.spread = spread;
  OptimizerConfig oc;
  oc.eta = eta;
  oc.T = 1;
  const CertificateReport probe = certify_trajectory(gd_run(data, act, oc, v, noisy), ci);
  T = std::min<long>(probe.budget, kMaxCertSteps);
  oc.T = T;
  oc.log_every = T;
  return certify_trajectory(gd_run(data, act, oc, v, noisy), ci);
}

Suite lemmas(std::uint64_t seed, int workers) {
  Suite s;

  // H upper-bounds G: increasing branch (per-sample, hence on every MC mean).
  {
    const InputDist dist = InputDist::uniform_ball(3, 1.0);
    const double W = 2.0;
    for (const auto& act : all_activations()) {
      if (!act.strictly_increasing()) continue;
      Rng rng = Rng(seed).split(0x1b01).split(static_cast<std::uint64_t>(act.kind));
      const double gamma = gamma_for_radius(act, W * dist.bound);
      long violations = 0;
      double worst = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd v = random_unit(3, rng);
        const Eigen::VectorXd w = random_in_ball(Eigen::VectorXd::Zero(3), W, rng);
        const long n = 5000;
        const PopulationSample pop(dist, LabelModel::realizable(v), act, n, rng.split(static_cast<std::uint64_t>(i)));
        const PopulationEstimate e = pop.estimate(w);
        // Holds per sample, so only summation rounding is allowed for.
        const double slack = e.H->mean / gamma - e.G->mean + static_cast<double>(n) * kEps * e.G->mean;
        if (!(slack >= 0.0)) ++violations;
        worst = std::min(worst, slack);
      }
      s.add({{"name", "h_surrogate_increasing/" + act.name()},
             {"gamma", gamma},
             {"violations", violations},
             {"worst_slack", worst},
             {"pass", violations == 0}});
    }
  }

  // ReLU branch: G <= 8√2/(α⁴β) H for ||w - v|| <= 1 under the certified spread.
  {
    const InputDist dist = InputDist::uniform_ball(2, 1.0);
    const ActivationSpec act = ActivationSpec::relu();
    const Spread sp = marginal_spread_constants(dist);
    const double C = 1.0 / nu_from_spread(sp);
    Rng rng = Rng(seed).split(0x1b02);
    long violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd v = random_unit(2, rng);
      const Eigen::VectorXd w = random_in_ball(v, 1.0, rng);
      const PopulationSample pop(dist, LabelModel::realizable(v), act, 20000, rng.split(static_cast<std::uint64_t>(i)));
      const PopulationEstimate e = pop.estimate(w);
      const double se = std::sqrt(e.G->se * e.G->se + C * C * e.H->se * e.H->se);
      const double slack = C * e.H->mean - e.G->mean + 3.0 * se;
      if (!(slack >= 0.0)) ++violations;
      worst = std::min(worst, slack);
    }
    s.add({{"name", "h_surrogate_relu"},
           {"alpha", sp.alpha},
           {"beta", sp.beta},
           {"constant", C},
           {"violations", violations},
           {"worst_slack", worst},
           {"pass", violations == 0}});
  }

  // Trajectory certificates for each GD setting.
  {
    struct Case {
      const char* name;
      Setting setting;
      ActivationSpec act;
      LabelModel model;
      long n;
    };
    const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
    const std::vector<Case> cases = {
        // noise small enough that the threshold lies below H_hat(0)
        {"agnostic_increasing/leaky_relu", Setting::agnostic_increasing, ActivationSpec::leaky_relu(0.1),
         LabelModel::noisy_teacher(e1, NoiseKind::bounded_uniform, 0.01), 500},
        {"agnostic_increasing/sigmoid", Setting::agnostic_increasing, ActivationSpec::sigmoid(),
         LabelModel::agnostic_flip(e1, 0.01, 0.05), 500},
        {"agnostic_relu", Setting::agnostic_relu, ActivationSpec::relu(),
         LabelModel::noisy_teacher(e1, NoiseKind::bounded_uniform, 0.03), 500},
        {"noisy_teacher_increasing", Setting::noisy_teacher_increasing, ActivationSpec::leaky_relu(0.1),
         LabelModel::noisy_teacher(e1, NoiseKind::gaussian, 0.3), 2000},
        {"noisy_teacher_relu", Setting::noisy_teacher_relu, ActivationSpec::relu(),
         LabelModel::noisy_teacher(e1, NoiseKind::gaussian, 0.3), 2000},
    };
    const InputDist dist = InputDist::uniform_ball(3, 1.0);
    std::vector<json> results(cases.size());
    parallel_for(static_cast<long>(cases.size()), workers, [&](long k) {
      const Case& c = cases[static_cast<std::size_t>(k)];
      const Dataset data = make_dataset(dist, c.model, c.act, c.n, Rng(seed).split(0x1c00).split(static_cast<std::uint64_t>(k)));
      std::optional<Spread> sp;
      if (c.act.kind == ActivationKind::relu) sp = marginal_spread_constants(dist);
      long T = 0;
      const CertificateReport rep =
          certify_gd(c.setting, c.act, data, c.model.v, eta_cap(c.setting, c.act, dist.bound), sp, T);
      results[static_cast<std::size_t>(k)] = certificate_entry(std::string("certificate/") + c.name, rep, T);
    });
    for (auto& r : results) s.add(std::move(r));
  }

  // Realizable runs: online SGD for every activation and population-surrogate GD.
  {
    const InputDist dist = InputDist::uniform_ball(5, 1.0);
    const auto acts = all_activations();
    const int seeds = 3;
    std::vector<json> results(acts.size() * seeds);
    parallel_for(static_cast<long>(results.size()), workers, [&](long k) {
      const ActivationSpec& act = acts[static_cast<std::size_t>(k / seeds)];
      Rng rng = Rng(seed).split(0x1d02).split(static_cast<std::uint64_t>(k));
      const LabelModel model = LabelModel::realizable(random_unit(dist.dim, rng));
      OptimizerConfig oc;
      oc.method = Method::sgd_online;
      oc.eta = eta_cap(Setting::realizable_sgd, act, dist.bound);
      oc.T = 3000;
      oc.log_every = 3000;
      const Trajectory traj = sgd_run(model, dist, act, oc, rng);
      CertificateInputs ci;
      ci.setting = Setting::realizable_sgd;
      ci.act = act;
      ci.bound_x = dist.bound;
      ci.eta = oc.eta;
      ci.epsilon = 0.01;
      ci.delta = 0.05;
      if (act.kind == ActivationKind::relu) ci.spread = marginal_spread_constants(dist);
      const CertificateReport rep = certify_trajectory(traj, ci);
      results[static_cast<std::size_t>(k)] =
          certificate_entry("sgd_monotone/" + act.name() + "/seed=" + std::to_string(k % seeds), rep, oc.T);
    });
    for (auto& r : results) s.add(std::move(r));

    for (const auto& act : {ActivationSpec::leaky_relu(0.1), ActivationSpec::softplus()}) {
      const InputDist d3 = InputDist::uniform_ball(3, 1.0);
      Rng rng = Rng(seed).split(0x1d01).split(static_cast<std::uint64_t>(act.kind));
      const LabelModel model = LabelModel::realizable(random_unit(d3.dim, rng));
      CertificateInputs ci;
      ci.setting = Setting::realizable_gd;
      ci.act = act;
      ci.bound_x = d3.bound;
      ci.eta = eta_cap(Setting::realizable_gd, act, d3.bound);
      ci.epsilon = 0.01;
      OptimizerConfig oc;
      oc.method = Method::gd_population;
      oc.eta = ci.eta;
      oc.T = 1;
      const CertificateReport probe = certify_trajectory(gd_population_run(model, d3, act, oc, 20000, rng), ci);
      oc.T = probe.budget;
      oc.log_every = oc.T;
      const CertificateReport rep = certify_trajectory(gd_population_run(model, d3, act, oc, 20000, rng), ci);
      s.add(certificate_entry("population_gd/" + act.name(), rep, oc.T));
    }
  }
  return s;
}

Suite concentration(std::uint64_t seed, int workers) {
  Suite s;
  {
    const InputDist dist = InputDist::uniform_ball(5, 1.0);
    const ActivationSpec act = ActivationSpec::leaky_relu(0.1);
    const LabelModel model = LabelModel::noisy_teacher(Eigen::VectorXd::Unit(5, 0), NoiseKind::bounded_uniform, 0.5);
    const ConcentrationReport rep = concentration_check(ConcentrationKind::hoeffding_Fv, model, dist, act, 1000, 1000,
                                                        0.05, Rng(seed).split(0xc0c0).stream(), {}, workers);
    json j = to_json(rep);
    j["name"] = "hoeffding_F_hat_v";
    s.add(j);
  }
  {
    const InputDist dist = InputDist::uniform_ball(10, 1.0);
    const ActivationSpec act = ActivationSpec::leaky_relu(0.1);
    const double sd = 0.5;
    std::vector<double> c0s;
    json per = json::array();
    for (long n : {1000L, 10000L}) {
      const C0Calibration c = calibrate_c0(dist, act, NoiseKind::gaussian, sd, n, 1000, 0.05,
                                           Rng(seed).split(0xc0c1).split(static_cast<std::uint64_t>(n)).stream(), workers);
      c0s.push_back(c.c0);
      per.push_back({{"n", n}, {"c0", c.c0}});
    }
    const double rel = std::abs(c0s[1] - c0s[0]) / c0s[0];
    s.add({{"name", "c0_stability"}, {"dim", 10}, {"s", sd}, {"calibrations", per}, {"relative_change", rel},
           {"tolerance", 0.2}, {"pass", rel <= 0.2}});
  }
  return s;
}

}  // namespace

VerifyResult run_verify(const std::string& suite, std::uint64_t seed, int workers) {
  const std::vector<std::string> known = {"facts", "claims", "lemmas", "concentration"};
  std::vector<std::string> run;
  if (suite == "all") {
    run = known;
  } else if (std::find(known.begin(), known.end(), suite) != known.end()) {
    run = {suite};
  } else {
    throw Error(Errc::config_invalid, "suite: unknown suite " + suite + " (facts, claims, lemmas, concentration, all)");
  }
  VerifyResult out;
  out.pass = true;
  out.report["artifact_version"] = kArtifactVersion;
  out.report["seed"] = seed;
  out.report["suites"] = json::object();
  for (const auto& name : run) {
    Suite s;
    if (name == "facts") s = facts(seed);
    if (name == "claims") s = claims(seed, workers);
    if (name == "lemmas") s = lemmas(seed, workers);
    if (name == "concentration") s = concentration(seed, workers);
    out.report["suites"][name] = {{"pass", s.pass}, {"checks", s.checks}};
    out.pass = out.pass && s.pass;
  }
  out.report["pass"] = out.pass;
  return out;
}

}  // namespace neuronlab
