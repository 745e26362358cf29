#include "neuronlab/theory.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "neuronlab/error.hpp"
#include "neuronlab/parallel.hpp"
#include "neuronlab/risk.hpp"
#include "neuronlab/stats.hpp"

namespace neuronlab {

namespace {

constexpr double kFvFloor = 1e-12;

template <typename T>
T need(const std::optional<T>& x, const char* name, Setting s) {
  if (!x) throw Error(Errc::missing_input, std::string(name) + " is required for " + to_string(s));
  return *x;
}

// Ceiling that ignores representation noise: values within 1e-12 relative of
// an integer are treated as that integer.
long ceil_budget(double x) {
  if (!std::isfinite(x) || x > 9.0e18) throw Error(Errc::invalid_argument, "iteration budget is not finite");
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return std::max(1L, static_cast<long>(r));
  return std::max(1L, static_cast<long>(std::ceil(x)));
}

double ulp(double x) { return std::nextafter(std::abs(x), std::numeric_limits<double>::infinity()) - std::abs(x); }

double a_constant(Setting s, const BoundInputs& in) {
  if (in.a) return *in.a;
  return label_range_constant(in.act, in.bound_x, need(in.bound_y, "bound_y (or a)", s));
}

// OPT + a n^{-1/2} sqrt(log(4/δ))
double opt_plus_deviation(Setting s, const BoundInputs& in) {
  const double opt = need(in.opt, "OPT", s);
  const double n = static_cast<double>(need(in.n, "n", s));
  const double delta = need(in.delta, "delta", s);
  return opt + a_constant(s, in) / std::sqrt(n) * std::sqrt(std::log(4.0 / delta));
}

double noisy_c0(Setting s, const BoundInputs& in) {
  if (!in.c0) throw Error(Errc::uncalibrated_c0, "c0 is required for " + to_string(s));
  return *in.c0;
}

// Floor playing the role of γ in the realizable budget: γ(4B), or ν for relu.
double realizable_floor(Setting s, const BoundInputs& in) {
  if (in.gamma) return *in.gamma;
  if (in.act.kind == ActivationKind::relu) {
    if (!in.spread) throw Error(Errc::missing_input, "relu needs marginal-spread constants for " + to_string(s));
    return nu_from_spread(*in.spread);
  }
  return gamma_for_radius(in.act, gamma_radius(s, in.bound_x));
}

}  // namespace

std::string to_string(Setting s) {
  switch (s) {
    case Setting::agnostic_increasing: return "agnostic_increasing";
    case Setting::agnostic_relu: return "agnostic_relu";
    case Setting::noisy_teacher_increasing: return "noisy_teacher_increasing";
    case Setting::noisy_teacher_relu: return "noisy_teacher_relu";
    case Setting::realizable_gd: return "realizable_gd";
    case Setting::realizable_sgd: return "realizable_sgd";
  }
  return "unknown";
}

Setting parse_setting(const std::string& name) {
  for (Setting s : {Setting::agnostic_increasing, Setting::agnostic_relu, Setting::noisy_teacher_increasing,
                    Setting::noisy_teacher_relu, Setting::realizable_gd, Setting::realizable_sgd}) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::invalid_argument, "unknown setting: " + name);
}

bool is_relu_setting(Setting s) { return s == Setting::agnostic_relu || s == Setting::noisy_teacher_relu; }

double gamma_radius(Setting s, double bound_x) {
  return (s == Setting::realizable_gd || s == Setting::realizable_sgd) ? 4.0 * bound_x : 2.0 * bound_x;
}

double nu_from_spread(const Spread& spread) {
  if (!(spread.alpha > 0.0) || !(spread.beta > 0.0)) throw Error(Errc::invalid_argument, "spread constants must be positive");
  return std::pow(spread.alpha, 4) * spread.beta / (8.0 * std::numbers::sqrt2);
}

double label_range_constant(const ActivationSpec& act, double bound_x, double bound_y) {
  const double t = std::abs(act.eval(bound_x)) + bound_y;
  return t * t;
}

double eta_cap(Setting s, const ActivationSpec& act, double bound_x) {
  if (!(bound_x > 0.0)) throw Error(Errc::invalid_argument, "bound_x must be positive");
  const double L = act.lipschitz();
  const double B2 = bound_x * bound_x;
  if ((s == Setting::agnostic_increasing || s == Setting::noisy_teacher_increasing) &&
      act.kind == ActivationKind::relu) {
    throw Error(Errc::missing_gamma, "relu has no derivative floor; use the relu setting");
  }
  switch (s) {
    case Setting::agnostic_increasing: {
      const double gamma = gamma_for_radius(act, gamma_radius(s, bound_x));
      return 0.125 * gamma / (L * L * L * B2);
    }
    case Setting::agnostic_relu:
    case Setting::noisy_teacher_increasing:
    case Setting::noisy_teacher_relu: return 0.25 / (L * L * B2);
    case Setting::realizable_gd:
    case Setting::realizable_sgd: return 1.0 / (L * L * B2);
  }
  return 0.0;
}

double setting_gamma(Setting s, const BoundInputs& in) {
  if (in.gamma) return *in.gamma;
  if (s == Setting::realizable_gd || s == Setting::realizable_sgd) return realizable_floor(s, in);
  if (in.act.kind == ActivationKind::relu) throw Error(Errc::missing_gamma, "relu has no derivative floor");
  return gamma_for_radius(in.act, gamma_radius(s, in.bound_x));
}

long iteration_budget(Setting s, const BoundInputs& in) {
  const double eta = in.eta ? *in.eta : eta_cap(s, in.act, in.bound_x);
  const double L = in.act.lipschitz();
  const double B = in.bound_x;
  switch (s) {
    case Setting::agnostic_increasing: {
      const double gamma = setting_gamma(s, in);
      return ceil_budget(1.0 / (eta * gamma * L * B * opt_plus_deviation(s, in)));
    }
    case Setting::agnostic_relu:
      return ceil_budget(1.0 / (eta * B * std::sqrt(opt_plus_deviation(s, in))));
    case Setting::noisy_teacher_increasing:
    case Setting::noisy_teacher_relu: {
      const double n = static_cast<double>(need(in.n, "n", s));
      const double sd = need(in.s, "s", s);
      const double d = need(in.dim, "dim", s);
      const double delta = need(in.delta, "delta", s);
      return ceil_budget(std::sqrt(n) / (eta * noisy_c0(s, in) * L * B * sd * std::sqrt(std::log(4.0 * d / delta))));
    }
    case Setting::realizable_gd: {
      const double eps = need(in.epsilon, "epsilon", s);
      return ceil_budget(2.0 * L * in.w0_dist_sq / (eps * eta * realizable_floor(s, in)));
    }
    case Setting::realizable_sgd: {
      const double eps = need(in.epsilon, "epsilon", s);
      const double delta = need(in.delta, "delta", s);
      const long T = ceil_budget(2.0 * L * in.w0_dist_sq / (eps * eta * realizable_floor(s, in)));
      return ceil_budget(6.0 * static_cast<double>(T) * std::log(1.0 / delta));
    }
  }
  return 1;
}

TheoremBound risk_bound(Setting s, const BoundInputs& in_raw) {
  BoundInputs in = in_raw;
  TheoremBound b;
  b.setting = s;
  b.eta_cap = eta_cap(s, in.act, in.bound_x);
  b.eta = in.eta ? *in.eta : b.eta_cap;
  in.eta = b.eta;
  if (b.eta > b.eta_cap) b.flags.push_back("eta-above-cap");
  const double L = in.act.lipschitz();
  const double B = in.bound_x;
  b.constants["L"] = L;

  const bool noisy = s == Setting::noisy_teacher_increasing || s == Setting::noisy_teacher_relu;
  if (noisy && !in.c0) {
    in.c0 = 1.0;
    b.flags.push_back("uncalibrated-c0: budget and bound computed with c0 = 1");
  }
  b.T_budget = iteration_budget(s, in);

  switch (s) {
    case Setting::agnostic_increasing: {
      const double g = setting_gamma(s, in);
      const double a = a_constant(s, in);
      const double delta = need(in.delta, "delta", s);
      const double n = static_cast<double>(need(in.n, "n", s));
      const double opt = need(in.opt, "OPT", s);
      const double C1 = 12.0 * std::pow(g, -3) * L * L * L + 2.0;
      const double C2 = 36.0 * L * L * L * std::pow(g, -3) * a * std::sqrt(std::log(4.0 / delta)) +
                        4.0 * L * L * L * B * B + 4.0 * L * L * B * B * std::sqrt(2.0 * std::log(8.0 / delta));
      b.constants["gamma"] = g;
      b.constants["a"] = a;
      b.constants["C1"] = C1;
      b.constants["C2"] = C2;
      b.predicted_risk = C1 * opt + C2 / std::sqrt(n);
      break;
    }
    case Setting::agnostic_relu: {
      if (!in.spread) throw Error(Errc::missing_input, "agnostic_relu needs marginal-spread constants");
      const double nu = nu_from_spread(*in.spread);
      const double a = a_constant(s, in);
      const double delta = need(in.delta, "delta", s);
      const double n = static_cast<double>(need(in.n, "n", s));
      const double opt = need(in.opt, "OPT", s);
      const double C1 = 4.0 * B / nu + 2.0;
      const double C2 = 4.0 * B / nu * std::sqrt(3.0 * a) * std::pow(std::log(4.0 / delta), 0.25);
      const double C3 = 4.0 / nu * B * B * (1.0 + std::sqrt(2.0 * std::log(8.0 / delta)));
      b.constants["nu"] = nu;
      b.constants["alpha"] = in.spread->alpha;
      b.constants["beta"] = in.spread->beta;
      b.constants["a"] = a;
      b.constants["C1"] = C1;
      b.constants["C2"] = C2;
      b.constants["C3"] = C3;
      b.predicted_risk = C1 * std::sqrt(opt) + C2 * std::pow(n, -0.25) + C3 / std::sqrt(n);
      break;
    }
    case Setting::noisy_teacher_increasing:
    case Setting::noisy_teacher_relu: {
      const double sd = need(in.s, "s", s);
      const double delta = need(in.delta, "delta", s);
      const double n = static_cast<double>(need(in.n, "n", s));
      const double d = need(in.dim, "dim", s);
      const double opt = need(in.opt, "OPT", s);
      const double c0 = *in.c0;
      double C1, C2, C3;
      if (s == Setting::noisy_teacher_increasing) {
        const double g = setting_gamma(s, in);
        b.constants["gamma"] = g;
        C1 = 4.0 * L * L * L * B * B;
        C2 = 2.0 * std::numbers::sqrt2 * L * L * B * B * std::numbers::sqrt2;
        C3 = 4.0 * c0 / g * L * L * sd * B;
      } else {
        if (!in.spread) throw Error(Errc::missing_input, "noisy_teacher_relu needs marginal-spread constants");
        const double nu = nu_from_spread(*in.spread);
        b.constants["nu"] = nu;
        b.constants["alpha"] = in.spread->alpha;
        b.constants["beta"] = in.spread->beta;
        C1 = B * B / nu;
        C2 = 2.0 * C1;
        C3 = 4.0 * c0 * sd / nu * B;
      }
      b.constants["c0"] = c0;
      b.constants["C1"] = C1;
      b.constants["C2"] = C2;
      b.constants["C3"] = C3;
      b.predicted_risk = opt + C1 / std::sqrt(n) + C2 / std::sqrt(n) * std::sqrt(std::log(8.0 / delta)) +
                         C3 / std::sqrt(n) * std::sqrt(std::log(4.0 * d / delta));
      break;
    }
    case Setting::realizable_gd:
    case Setting::realizable_sgd: {
      const double eps = need(in.epsilon, "epsilon", s);
      b.constants[in.act.kind == ActivationKind::relu && !in.gamma ? "nu" : "gamma"] = realizable_floor(s, in);
      b.constants["epsilon"] = eps;
      if (s == Setting::realizable_sgd) {
        BoundInputs gd = in;
        b.constants["T_gd"] = static_cast<double>(iteration_budget(Setting::realizable_gd, gd));
      }
      b.predicted_risk = eps;
      break;
    }
  }

  json& j = b.inputs;
  j["activation"] = in.act.name();
  j["bound_x"] = in.bound_x;
  auto put = [&j](const char* k, const auto& opt) {
    if (opt) j[k] = *opt;
  };
  put("opt", in.opt);
  put("n", in.n);
  put("delta", in.delta);
  put("bound_y", in.bound_y);
  put("a", in.a);
  put("s", in.s);
  put("dim", in.dim);
  put("c0", in.c0);
  put("epsilon", in.epsilon);
  put("gamma_override", in.gamma);
  if (in.spread) j["spread"] = {{"alpha", in.spread->alpha}, {"beta", in.spread->beta}};
  j["w0_dist_sq"] = in.w0_dist_sq;
  return b;
}

json to_json(const TheoremBound& b) {
  json j;
  j["setting"] = to_string(b.setting);
  j["eta_cap"] = b.eta_cap;
  j["eta"] = b.eta;
  j["T_budget"] = b.T_budget;
  j["constants"] = json::object();
  for (const auto& [k, v] : b.constants) j["constants"][k] = v;
  j["predicted_risk"] = b.predicted_risk;
  j["flags"] = b.flags;
  j["inputs"] = b.inputs;
  return j;
}

// ---------------------------------------------------------------------------

const CertificateCheck* CertificateReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

struct Scan {
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
  std::optional<long> first_violation;

  // Records one instance of lhs <= rhs.
  void upper(long t, double lhs, double rhs) { record(t, lhs, rhs, rhs - lhs); }
  // Records one instance of lhs >= rhs.
  void lower(long t, double lhs, double rhs) { record(t, lhs, rhs, lhs - rhs); }

  void record(long t, double lhs, double rhs, double slack) {
    if (!(slack >= 0.0) && !first_violation) first_violation = t;
    if (slack < worst_slack || std::isnan(slack)) {
      worst_slack = slack;
      worst_lhs = lhs;
      worst_rhs = rhs;
    }
  }

  CertificateCheck finish(std::string name, long begin, long end, std::string detail) const {
    CertificateCheck c;
    c.name = std::move(name);
    c.scope_begin = begin;
    c.scope_end = end;
    c.lhs = worst_lhs;
    c.rhs = worst_rhs;
    c.slack = std::isinf(worst_slack) ? 0.0 : worst_slack;
    c.pass = !first_violation;
    c.first_violation = first_violation;
    c.detail = std::move(detail);
    return c;
  }
};

double rec_dist_sq(const TrajectoryRecord& r) {
  if (!r.dist_sq_to_v) throw Error(Errc::insufficient_logging, "distance to v not logged at t=" + std::to_string(r.t));
  return *r.dist_sq_to_v;
}

double rec_H(const TrajectoryRecord& r) {
  if (!r.H_hat) throw Error(Errc::insufficient_logging, "H_hat not logged at t=" + std::to_string(r.t));
  return *r.H_hat;
}

}  // namespace

CertificateReport certify_trajectory(const Trajectory& traj, const CertificateInputs& in) {
  if (traj.records.empty()) throw Error(Errc::insufficient_logging, "empty trajectory");
  const auto& R = traj.records;
  const long last = static_cast<long>(R.size()) - 1;
  const double L = in.act.lipschitz();
  const double B = in.bound_x;
  const double eta = in.eta > 0.0 ? in.eta : traj.config.eta;

  CertificateReport rep;
  rep.setting = in.setting;

  const bool realizable = in.setting == Setting::realizable_gd || in.setting == Setting::realizable_sgd;
  double F_v = 0.0;
  if (!realizable) {
    F_v = in.F_v_hat;
    if (F_v < kFvFloor) {
      F_v = kFvFloor;
      rep.F_v_guarded = true;
      rep.notes.push_back("F_hat(v) below 1e-12; guarded value used");
    }
  }
  rep.F_v_used = F_v;

  // Gradient upper bound on every record, with the unguarded F̂(v).
  {
    Scan scan;
    const double fv = realizable ? 0.0 : in.F_v_hat;
    for (const auto& r : R) {
      scan.upper(r.t, r.grad_norm * r.grad_norm, 4.0 * L * B * B * rec_H(r) + 4.0 * L * L * B * B * fv);
    }
    rep.checks.push_back(scan.finish("gradient_bound", 0, R.back().t, "||grad F_hat||^2 <= 4 L B^2 H_hat + 4 L^2 B^2 F_hat(v)"));
  }

  if (realizable) {
    // Population-style GD and SGD: distances never increase and the telescoped
    // sum of H is paid for by the distance travelled.
    const bool sgd = in.setting == Setting::realizable_sgd;
    double floor_value;
    if (in.gamma) {
      floor_value = *in.gamma;
    } else if (in.act.kind == ActivationKind::relu) {
      if (!in.spread) throw Error(Errc::missing_input, "relu certificate needs marginal-spread constants");
      floor_value = nu_from_spread(*in.spread);
    } else {
      floor_value = gamma_for_radius(in.act, gamma_radius(in.setting, B));
    }
    if (!in.epsilon) throw Error(Errc::missing_input, "realizable certificate needs epsilon");
    const double eps = *in.epsilon;
    rep.threshold = 0.5 * floor_value * eps;
    const double d0 = rec_dist_sq(R.front());
    rep.budget = ceil_budget(2.0 * L * d0 / (eps * eta * floor_value));
    if (sgd) {
      if (!in.delta) throw Error(Errc::missing_input, "realizable_sgd certificate needs delta");
      rep.budget = ceil_budget(6.0 * static_cast<double>(rep.budget) * std::log(1.0 / *in.delta));
    }

    Scan mono;
    for (long t = 0; t < last; ++t) {
      const double a = *R[static_cast<std::size_t>(t)].dist_to_v;
      const double b = *R[static_cast<std::size_t>(t + 1)].dist_to_v;
      mono.upper(t, b, a + kMonotoneUlps * ulp(1.0 + a));
    }
    rep.checks.push_back(mono.finish("monotone_distance", 0, R.back().t,
                                     "||w_{t+1} - v|| <= ||w_t - v|| (4 ulps of 1 + ||w_t - v||)"));

    // Displayed factor: 1 for full-batch, 2 for online SGD.
    const double factor = sgd ? 2.0 : 1.0;
    Scan tele;
    double sum_H = 0.0;
    for (long t = 1; t <= last; ++t) {
      sum_H += rec_H(R[static_cast<std::size_t>(t - 1)]);
      const double lhs = d0 - rec_dist_sq(R[static_cast<std::size_t>(t)]);
      tele.lower(t, lhs + kMonotoneUlps * ulp(1.0 + d0), factor * eta / L * sum_H);
    }
    rep.checks.push_back(tele.finish("telescoped_sum", 0, R.back().t,
                                     sgd ? "||w_0-v||^2 - ||w_T-v||^2 >= 2 eta L^-1 sum H_t"
                                         : "||w_0-v||^2 - ||w_T-v||^2 >= eta L^-1 sum H(w_t)"));
    if (!sgd) {
      for (long t = 0; t <= last; ++t) {
        if (rec_H(R[static_cast<std::size_t>(t)]) <= rep.threshold) {
          rep.hit_index = t;
          break;
        }
      }
      CertificateCheck hit;
      hit.name = "hit_within_budget";
      hit.scope_begin = 0;
      hit.scope_end = R.back().t;
      hit.rhs = static_cast<double>(rep.budget);
      hit.lhs = rep.hit_index ? static_cast<double>(*rep.hit_index) : std::numeric_limits<double>::infinity();
      hit.pass = rep.hit_index && *rep.hit_index < rep.budget;
      hit.slack = hit.pass ? hit.rhs - hit.lhs - 1.0 : -1.0;
      hit.detail = "first t with H_hat <= threshold, t < T";
      rep.checks.push_back(hit);
    }
  } else {
    // Lemma-style induction certificates.
    switch (in.setting) {
      case Setting::agnostic_increasing: {
        const double g = in.gamma ? *in.gamma : gamma_for_radius(in.act, gamma_radius(in.setting, B));
        rep.threshold = 6.0 * L * L * L / (g * g) * F_v;
        rep.decrement_required = eta * L * F_v;
        rep.budget = ceil_budget(1.0 / (eta * g * L * B * F_v));
        break;
      }
      case Setting::agnostic_relu: {
        rep.threshold = 2.0 * L * L * B * std::sqrt(F_v);
        rep.decrement_required = eta * L * B * std::sqrt(F_v);
        rep.budget = ceil_budget(1.0 / (eta * L * B * std::sqrt(F_v)));
        if (!(in.F_v_hat < 1.0)) rep.notes.push_back("F_hat(v) >= 1: the relu lemma does not apply");
        break;
      }
      case Setting::noisy_teacher_increasing:
      case Setting::noisy_teacher_relu: {
        double K = 0.0;
        for (const auto& r : R) {
          if (!r.noise_grad_norm) {
            throw Error(Errc::insufficient_logging, "noise-gradient norm not logged at t=" + std::to_string(r.t));
          }
          K = std::max(K, *r.noise_grad_norm);
        }
        if (K <= 0.0) {
          K = kFvFloor;
          rep.notes.push_back("K = 0 (noiseless sample); guarded value used");
        }
        if (K > 1.0) rep.notes.push_back("K > 1: the noisy-teacher lemma does not apply");
        rep.K = K;
        rep.threshold = 4.0 * L * K;
        rep.decrement_required = eta * K;
        rep.budget = ceil_budget(1.0 / (eta * K));
        break;
      }
      default: break;
    }

    for (long t = 0; t <= last; ++t) {
      if (rec_H(R[static_cast<std::size_t>(t)]) <= rep.threshold) {
        rep.hit_index = t;
        break;
      }
    }
    const long prefix_end = rep.hit_index ? *rep.hit_index : last;

    Scan dec;
    for (long t = 0; t < prefix_end && t < last; ++t) {
      const double d = rec_dist_sq(R[static_cast<std::size_t>(t)]) - rec_dist_sq(R[static_cast<std::size_t>(t + 1)]);
      dec.lower(t, d, rep.decrement_required);
    }
    std::string dec_detail = "||w_t-v||^2 - ||w_{t+1}-v||^2 >= required decrement before the hit";
    if (prefix_end == 0) dec_detail += " (empty prefix: threshold met at t=0)";
    rep.checks.push_back(dec.finish("decrement", 0, std::max(0L, prefix_end - 1), dec_detail));

    CertificateCheck hit;
    hit.name = "hit_within_budget";
    hit.scope_begin = 0;
    hit.scope_end = R.back().t;
    hit.rhs = static_cast<double>(rep.budget);
    hit.lhs = rep.hit_index ? static_cast<double>(*rep.hit_index) : std::numeric_limits<double>::infinity();
    hit.pass = rep.hit_index && *rep.hit_index < rep.budget;
    hit.slack = hit.pass ? hit.rhs - hit.lhs - 1.0 : -1.0;
    hit.detail = rep.hit_index ? "first t with H_hat <= threshold, t < T"
                               : "no iterate reached the threshold within the logged run";
    rep.checks.push_back(hit);

    Scan ball;
    for (long t = 0; t <= prefix_end; ++t) {
      const auto& r = R[static_cast<std::size_t>(t)];
      if (!r.dist_to_v) throw Error(Errc::insufficient_logging, "distance to v not logged");
      ball.upper(t, *r.dist_to_v, 1.0);
    }
    rep.checks.push_back(ball.finish("distance_le_one", 0, prefix_end, "||w_t - v|| <= 1 up to the hit"));
  }

  rep.pass = true;
  for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
  return rep;
}

json to_json(const CertificateReport& r) {
  json j;
  j["setting"] = to_string(r.setting);
  j["pass"] = r.pass;
  j["threshold"] = r.threshold;
  j["decrement_required"] = r.decrement_required;
  j["budget"] = r.budget;
  j["hit_index"] = r.hit_index ? json(*r.hit_index) : json(nullptr);
  j["F_v_used"] = r.F_v_used;
  j["F_v_guarded"] = r.F_v_guarded;
  j["K"] = r.K ? json(*r.K) : json(nullptr);
  j["checks"] = json::array();
  for (const auto& c : r.checks) {
    json cj;
    cj["name"] = c.name;
    cj["scope"] = {c.scope_begin, c.scope_end};
    cj["lhs"] = std::isfinite(c.lhs) ? json(c.lhs) : json(nullptr);
    cj["rhs"] = c.rhs;
    cj["slack"] = c.slack;
    cj["pass"] = c.pass;
    cj["first_violation"] = c.first_violation ? json(*c.first_violation) : json(nullptr);
    cj["detail"] = c.detail;
    j["checks"].push_back(cj);
  }
  j["notes"] = r.notes;
  return j;
}

// ---------------------------------------------------------------------------

ConcentrationReport concentration_check(ConcentrationKind kind, const LabelModel& model, const InputDist& dist,
                                        const ActivationSpec& act, long n, long replicas, double delta,
                                        std::uint64_t seed, std::optional<double> opt, int workers) {
  if (n < 1 || replicas < 1) throw Error(Errc::invalid_argument, "concentration check needs n, replicas >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::invalid_argument, "delta must lie in (0, 1)");
  ConcentrationReport rep;
  rep.kind = kind;
  rep.replicas = replicas;
  rep.n = n;
  rep.delta = delta;
  rep.values.assign(static_cast<std::size_t>(replicas), 0.0);
  const Rng root = Rng(seed).split(Stream::calibration);
  const double L = act.lipschitz();

  if (kind == ConcentrationKind::hoeffding_Fv) {
    const auto by = model.label_bound(act, dist.bound);
    if (!by) throw Error(Errc::unbounded_labels, "Hoeffding check needs a.s. bounded labels");
    const double a = label_range_constant(act, dist.bound, *by);
    const auto truth = opt ? opt : model.noise_risk();
    if (!truth) throw Error(Errc::missing_input, "F(v) has no closed form for this label model; pass it explicitly");
    rep.bound = 3.0 * a * std::sqrt(std::log(2.0 / delta) / static_cast<double>(n));
    parallel_for(replicas, workers, [&](long i) {
      const Dataset data = make_dataset(dist, model, act, n, root.split(static_cast<std::uint64_t>(i)));
      const RiskEvaluator eval(data, act, model.v);
      rep.values[static_cast<std::size_t>(i)] = eval.risk_at_v() - *truth;
    });
    for (double v : rep.values) rep.violations += std::abs(v) > rep.bound ? 1 : 0;
  } else {
    const double sd = model.kind == LabelKind::noisy_teacher ? model.s : 0.0;
    const double scale = L * dist.bound * sd * std::sqrt(std::log(2.0 * dist.dim / delta) / static_cast<double>(n));
    parallel_for(replicas, workers, [&](long i) {
      const Dataset data = make_dataset(dist, model, act, n, root.split(static_cast<std::uint64_t>(i)));
      const Eigen::VectorXd xi = data.y - act.eval((data.X * model.v).array()).matrix();
      rep.values[static_cast<std::size_t>(i)] = (L * (data.X.transpose() * xi) / static_cast<double>(n)).norm();
    });
    if (scale > 0.0) {
      for (double v : rep.values) rep.ratios.push_back(v / scale);
      rep.c0 = quantile(rep.ratios, kC0Quantile);
      rep.bound = *rep.c0 * scale;
    } else {
      rep.c0 = 0.0;
      rep.bound = 0.0;
    }
    for (double v : rep.values) rep.violations += v > rep.bound ? 1 : 0;
  }
  const double R = static_cast<double>(replicas);
  rep.violation_fraction = static_cast<double>(rep.violations) / R;
  rep.allowed_fraction = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / R);
  rep.pass = rep.violation_fraction <= rep.allowed_fraction;
  return rep;
}

json to_json(const ConcentrationReport& r) {
  json j;
  j["kind"] = r.kind == ConcentrationKind::hoeffding_Fv ? "hoeffding_Fv" : "norm_subgaussian_K";
  j["replicas"] = r.replicas;
  j["n"] = r.n;
  j["delta"] = r.delta;
  j["bound"] = r.bound;
  j["violations"] = r.violations;
  j["violation_fraction"] = r.violation_fraction;
  j["allowed_fraction"] = r.allowed_fraction;
  j["c0"] = r.c0 ? json(*r.c0) : json(nullptr);
  j["pass"] = r.pass;
  return j;
}

C0Calibration calibrate_c0(const InputDist& dist, const ActivationSpec& act, NoiseKind noise, double s, long n,
                           long replicas, double delta, std::uint64_t seed, int workers) {
  if (!(s > 0.0)) throw Error(Errc::invalid_argument, "calibration needs s > 0");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dist.dim);
  v[0] = 1.0;
  const LabelModel model = LabelModel::noisy_teacher(v, noise, s);
  const ConcentrationReport rep =
      concentration_check(ConcentrationKind::norm_subgaussian_K, model, dist, act, n, replicas, delta, seed, {}, workers);
  C0Calibration c;
  c.c0 = *rep.c0;
  c.dim = dist.dim;
  c.noise_kind = to_string(noise);
  c.s = s;
  c.n = n;
  c.replicas = replicas;
  c.delta = delta;
  c.seed = seed;
  return c;
}

void save_calibration(const std::filesystem::path& path, const C0Calibration& c) {
  json j;
  j["kind"] = "c0_calibration";
  j["version"] = kCalibrationVersion;
  j["quantile"] = kC0Quantile;
  j["c0"] = c.c0;
  j["dim"] = c.dim;
  j["noise_kind"] = c.noise_kind;
  j["s"] = c.s;
  j["n"] = c.n;
  j["replicas"] = c.replicas;
  j["delta"] = c.delta;
  j["seed"] = c.seed;
  write_json(path, j);
}

C0Calibration load_calibration(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.value("kind", std::string{}) != "c0_calibration" || j.value("version", 0) != kCalibrationVersion) {
    throw Error(Errc::config_invalid, path.string() + " is not a version-1 c0 calibration file");
  }
  C0Calibration c;
  c.c0 = j.at("c0").get<double>();
  c.dim = j.value("dim", 0);
  c.noise_kind = j.value("noise_kind", std::string{});
  c.s = j.value("s", 0.0);
  c.n = j.value("n", 0L);
  c.replicas = j.value("replicas", 0L);
  c.delta = j.value("delta", 0.0);
  c.seed = j.value("seed", std::uint64_t{0});
  return c;
}

// ---------------------------------------------------------------------------

TailBudget tail_budget(const TailParams& tail, const ActivationSpec& act, double epsilon, double eta, double w0_dist_sq) {
  if (!(epsilon > 0.0) || !(eta > 0.0)) throw Error(Errc::invalid_tail_parameters, "epsilon and eta must be positive");
  if (tail.a0 < 0.0) throw Error(Errc::invalid_tail_parameters, "a0 must be >= 0");
  TailBudget out;
  switch (tail.kind) {
    case TailClass::bounded:
      if (!(tail.bound > 0.0)) throw Error(Errc::invalid_tail_parameters, "bounded tail needs B > 0");
      out.rho = 4.0 * tail.bound;
      break;
    case TailClass::exponential:
      if (!(tail.C_e > 0.0)) throw Error(Errc::invalid_tail_parameters, "exponential tail needs C_e > 0");
      out.rho = 4.0 * std::sqrt(std::max(tail.a0, std::log(18.0 * tail.C_e / epsilon)));
      break;
    case TailClass::polynomial:
      if (!(tail.C_p > 0.0) || !(tail.beta > 1.0)) {
        throw Error(Errc::invalid_tail_parameters, "polynomial tail needs C_p > 0 and beta > 1");
      }
      out.rho = 4.0 * std::sqrt(std::max(
                          tail.a0, std::pow(18.0 * tail.C_p / (epsilon * (tail.beta - 1.0)), 1.0 / (tail.beta - 1.0))));
      break;
  }
  if (!(out.rho > 0.0)) throw Error(Errc::invalid_tail_parameters, "tail radius is not positive");
  out.gamma = gamma_for_radius(act, out.rho);
  out.T = ceil_budget(2.0 * act.lipschitz() * w0_dist_sq / (epsilon * eta * out.gamma));
  return out;
}

}  // namespace neuronlab
