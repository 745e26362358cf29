#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "neuronlab/activations.hpp"
#include "neuronlab/distributions.hpp"
#include "neuronlab/io.hpp"
#include "neuronlab/optimize.hpp"
#include "neuronlab/oracle.hpp"
#include "neuronlab/risk.hpp"
#include "neuronlab/theory.hpp"

namespace neuronlab {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr const char* kTrajectoryHeader = "t,F_hat,G_hat,H_hat,dist_to_v,grad_norm,decrement,cert_phase";

/// Which iterate a run reports as "the" learned weights.
enum class Selection {
  automatic,     ///< per-setting default, see selection_for
  first_hit,     ///< first iterate meeting the certificate threshold
  argmin_F_hat,  ///< argmin F̂ over t < T_budget
  argmin_H_hat,
  last,
};

std::string to_string(Selection s);
Selection parse_selection(const std::string& name);

enum class TeacherMode { given, e1, random };

struct ExperimentConfig {
  std::string name = "experiment";
  Setting setting = Setting::agnostic_increasing;
  ActivationSpec act;
  InputDist input;

  /// label model; v resolved
  LabelModel label;
  /// when set, the label model is built by opt_knob_design
  std::optional<double> opt_target;
  NoiseKind opt_noise = NoiseKind::gaussian;
  /// teacher v: given in the config, e1, or a unit vector drawn from the teacher stream
  TeacherMode teacher = TeacherMode::given;

  Method method = Method::gd;
  std::optional<double> eta;  ///< empty: from theory
  std::optional<long> T;      ///< empty: from theory
  std::optional<long> max_iters;
  long log_every = 1;
  /// "zeros" or explicit
  std::optional<Eigen::VectorXd> w0;

  long n_train = 1000;
  long n_test = 10000;
  long n_mc = 100000;  ///< gd_population surrogate size
  long replicas = 1;
  std::uint64_t seed = 0;
  double delta = 0.05;
  std::optional<double> epsilon;

  std::optional<double> c0;
  std::optional<std::filesystem::path> calibration_file;
  /// calibrate c0 at run time on n_train-sized samples
  bool calibrate_c0 = false;
  long calibration_replicas = 200;

  /// grid oracle for OPT (agnostic, d <= 3)
  std::optional<double> oracle_resolution;
  long oracle_n_mc = 20000;

  Selection selection = Selection::automatic;
  /// sgd_online: population evaluation cadence for the hit search
  long eval_every = 50;

  json raw = json::object();

  void validate() const;
};

/// Parses the JSON config. Throws Error(config_invalid) with the field name.
ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies `value` to a sweep axis: n_train, target_opt, eta or dimension.
ExperimentConfig with_axis(const ExperimentConfig& base, const std::string& axis, double value);

struct ReplicaResult {
  long replica = 0;
  Trajectory trajectory;
  CertificateReport certificate;
  TheoremBound bound;
  long T_theory = 0;
  long T_run = 0;
  long selected_t = 0;
  Eigen::VectorXd selected_w;
  PopulationEstimate population;
  double F_v_hat = 0.0;
  /// sgd_online: first evaluated snapshot with population F <= ε + 2 SE
  std::optional<long> sgd_hit_t;
  long sgd_evaluations = 0;
  json risk = json::object();
};

struct RunResult {
  ExperimentConfig config;
  LabelModel model;
  Eigen::VectorXd comparator;
  std::string comparator_source;
  double opt_estimate = 0.0;
  double opt_std_error = 0.0;
  std::string opt_source;
  std::optional<OracleResult> oracle;
  std::optional<double> c0;
  std::vector<ReplicaResult> replicas;
  json summary = json::object();
};

/// Executes all replicas (in parallel up to `workers`) and, when `out` is set,
/// writes the artifact bundle there.
RunResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out,
                         int workers = 1);

/// Trajectory CSV with the certificate phase of every row.
std::string trajectory_csv(const Trajectory& traj, const std::optional<CertificateReport>& cert);

enum class Aggregation { best_iterate_population_F, excess_risk };

struct SweepPoint {
  double value = 0.0;
  std::vector<double> population_F;
  std::vector<double> excess;
  double median_population_F = 0.0;
  double median_excess = 0.0;
  std::vector<bool> certificate_pass;
  std::vector<CertificateReport> certificates;
  double predicted_risk = 0.0;
};

struct SweepResult {
  std::string axis;
  Aggregation aggregation = Aggregation::excess_risk;
  std::vector<SweepPoint> points;
  std::optional<LineFit> fit;
  json summary = json::object();
};

SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<double>& values,
                      const std::optional<std::filesystem::path>& out, int workers = 1,
                      Aggregation aggregation = Aggregation::excess_risk);

struct VerifyResult {
  bool pass = false;
  json report = json::object();
};

/// Property suites: facts, claims, lemmas, concentration, all.
VerifyResult run_verify(const std::string& suite, std::uint64_t seed, int workers = 1);

}  // namespace neuronlab
