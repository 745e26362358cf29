#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "neuronlab/activations.hpp"
#include "neuronlab/distributions.hpp"
#include "neuronlab/io.hpp"
#include "neuronlab/optimize.hpp"

namespace neuronlab {

enum class Setting {
  agnostic_increasing,
  agnostic_relu,
  noisy_teacher_increasing,
  noisy_teacher_relu,
  realizable_gd,
  realizable_sgd,
};

std::string to_string(Setting s);
Setting parse_setting(const std::string& name);
bool is_relu_setting(Setting s);

/// Radius at which the derivative floor is taken: 2B for the agnostic and
/// noisy-teacher settings, 4B for the realizable ones.
double gamma_radius(Setting s, double bound_x);

/// ν = α⁴β / (8√2).
double nu_from_spread(const Spread& spread);

/// Everything a budget or bound formula may need. Unset fields are only an
/// error when the requested setting uses them.
struct BoundInputs {
  ActivationSpec act;
  double bound_x = 1.0;
  /// overrides γ(ρ) from the activation
  std::optional<double> gamma;
  /// defaults to the cap
  std::optional<double> eta;
  std::optional<double> opt;
  std::optional<long> n;
  std::optional<double> delta;
  std::optional<double> bound_y;
  /// overrides (|σ(B_X)| + B_Y)²
  std::optional<double> a;
  std::optional<double> s;
  std::optional<int> dim;
  std::optional<double> c0;
  std::optional<Spread> spread;
  std::optional<double> epsilon;
  /// ||w0 - v||²
  double w0_dist_sq = 1.0;
};

struct TheoremBound {
  Setting setting = Setting::agnostic_increasing;
  double eta_cap = 0.0;
  double eta = 0.0;
  long T_budget = 0;
  std::map<std::string, double> constants;
  double predicted_risk = 0.0;
  std::vector<std::string> flags;
  json inputs = json::object();
};

json to_json(const TheoremBound& b);

/// Step-size cap of the setting. Throws missing_gamma when a
/// strictly-increasing setting is paired with relu.
double eta_cap(Setting s, const ActivationSpec& act, double bound_x);

/// γ for the setting, honouring an override.
double setting_gamma(Setting s, const BoundInputs& in);

long iteration_budget(Setting s, const BoundInputs& in);
TheoremBound risk_bound(Setting s, const BoundInputs& in);

/// Label-range constant a = (|σ(B_X)| + B_Y)².
double label_range_constant(const ActivationSpec& act, double bound_x, double bound_y);

// ---------------------------------------------------------------------------
// Trajectory certificates

struct CertificateInputs {
  Setting setting = Setting::agnostic_increasing;
  ActivationSpec act;
  double bound_x = 1.0;
  double eta = 0.0;
  /// F̂(v) on the training sample (ignored for realizable settings)
  double F_v_hat = 0.0;
  std::optional<double> gamma;
  std::optional<Spread> spread;
  std::optional<double> epsilon;
  /// realizable_sgd: confidence for the inflated budget 6T log(1/δ)
  std::optional<double> delta;
};

struct CertificateCheck {
  std::string name;
  long scope_begin = 0;
  long scope_end = 0;  ///< inclusive
  double lhs = 0.0;
  double rhs = 0.0;
  /// worst-case rhs - lhs (or lhs - rhs for lower bounds) over the scope
  double slack = 0.0;
  bool pass = false;
  std::optional<long> first_violation;
  std::string detail;
};

struct CertificateReport {
  Setting setting = Setting::agnostic_increasing;
  std::vector<CertificateCheck> checks;
  bool pass = false;
  double threshold = 0.0;
  double decrement_required = 0.0;
  long budget = 0;
  std::optional<long> hit_index;
  double F_v_used = 0.0;
  bool F_v_guarded = false;
  std::optional<double> K;
  std::vector<std::string> notes;

  const CertificateCheck* find(const std::string& name) const;
};

json to_json(const CertificateReport& r);

/// Rounding allowance for the realizable monotone-distance checks, in ulps of
/// 1 + ||w_t - v|| (a bound on ||w_t|| since ||v|| <= 1). Iterates that have
/// converged to machine precision otherwise jitter by an ulp of w around v.
inline constexpr double kMonotoneUlps = 4.0;

/// Checks the pre-hit distance decrements, the gradient upper bound on every
/// record, the Ĥ threshold hit within the lemma budget and ||w_t - v|| <= 1 up
/// to the hit. The realizable settings check monotone distances and the
/// telescoped sum instead of per-step decrements.
CertificateReport certify_trajectory(const Trajectory& traj, const CertificateInputs& in);

// ---------------------------------------------------------------------------
// Concentration checks and the c0 calibration

enum class ConcentrationKind { hoeffding_Fv, norm_subgaussian_K };

struct ConcentrationReport {
  ConcentrationKind kind = ConcentrationKind::hoeffding_Fv;
  long replicas = 0;
  long n = 0;
  double delta = 0.0;
  double bound = 0.0;
  long violations = 0;
  double violation_fraction = 0.0;
  double allowed_fraction = 0.0;
  /// K / (L B s sqrt(log(2d/δ)/n)) per replica (norm_subgaussian_K only)
  std::vector<double> ratios;
  std::vector<double> values;
  std::optional<double> c0;
  bool pass = false;
};

json to_json(const ConcentrationReport& r);

/// hoeffding_Fv: |F̂(v) - OPT| <= 3a sqrt(log(2/δ)/n) with OPT from the
/// label model's closed form (or `opt` when given).
/// norm_subgaussian_K: K = ||(1/n) Σ ξ_i L x_i||; c0 is the 0.99 quantile of
/// the normalised ratio and the pass rule uses that c0.
ConcentrationReport concentration_check(ConcentrationKind kind, const LabelModel& model, const InputDist& dist,
                                        const ActivationSpec& act, long n, long replicas, double delta,
                                        std::uint64_t seed, std::optional<double> opt = std::nullopt,
                                        int workers = 1);

inline constexpr double kC0Quantile = 0.99;
inline constexpr int kCalibrationVersion = 1;

struct C0Calibration {
  double c0 = 0.0;
  int dim = 0;
  std::string noise_kind;
  double s = 0.0;
  long n = 0;
  long replicas = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

C0Calibration calibrate_c0(const InputDist& dist, const ActivationSpec& act, NoiseKind noise, double s, long n,
                           long replicas, double delta, std::uint64_t seed, int workers = 1);
void save_calibration(const std::filesystem::path& path, const C0Calibration& c);
C0Calibration load_calibration(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tail-class budgets for population gradient descent

enum class TailClass { bounded, exponential, polynomial };

struct TailParams {
  TailClass kind = TailClass::bounded;
  double bound = 1.0;   ///< bounded: B
  double C_e = 0.0;     ///< exponential: P(||x||² >= a) <= C_e exp(-a) for a >= a0
  double C_p = 0.0;     ///< polynomial: P(||x||² >= a) <= C_p a^{-β} for a >= a0
  double beta = 0.0;    ///< polynomial exponent, > 1
  double a0 = 0.0;      ///< threshold from which the tail bound holds
};

struct TailBudget {
  double rho = 0.0;
  double gamma = 0.0;
  long T = 0;
};

/// ρ: bounded 4B; exponential 4 sqrt(max(a0, log(18 C_e / ε)));
/// polynomial 4 sqrt(max(a0, (18 C_p / (ε(β-1)))^{1/(β-1)})). T = ⌈2ε⁻¹Lη⁻¹γ⁻¹||w0-v||²⌉.
TailBudget tail_budget(const TailParams& tail, const ActivationSpec& act, double epsilon, double eta,
                       double w0_dist_sq = 1.0);

}  // namespace neuronlab
