#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "neuronlab/error.hpp"
#include "neuronlab/harness.hpp"
#include "neuronlab/parallel.hpp"
#include "neuronlab/stats.hpp"

namespace neuronlab {

namespace fs = std::filesystem;

namespace {

bool is_noisy(Setting s) { return s == Setting::noisy_teacher_increasing || s == Setting::noisy_teacher_relu; }

// Unit vector with norm <= 1 after rounding.
Eigen::VectorXd onto_unit_sphere(Eigen::VectorXd v) {
  v /= v.norm();
  while (v.norm() > 1.0) v *= 1.0 - std::numeric_limits<double>::epsilon();
  return v;
}

Eigen::VectorXd resolve_teacher(const ExperimentConfig& cfg) {
  const int d = cfg.input.dim;
  switch (cfg.teacher) {
    case TeacherMode::given: return cfg.label.v;
    case TeacherMode::e1: return Eigen::VectorXd::Unit(d, 0);
    case TeacherMode::random: {
      Rng rng = Rng(cfg.seed).split(Stream::teacher);
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v(i) = rng.normal();
      return onto_unit_sphere(v);
    }
  }
  return cfg.label.v;
}

std::string replica_dir(long r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replica_%03ld", r);
  return buf;
}

json mean_se_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}}; }

json estimate_json(const PopulationEstimate& e) {
  json j;
  j["F"] = mean_se_json(e.F);
  if (e.G) j["G"] = mean_se_json(*e.G);
  if (e.H) j["H"] = mean_se_json(*e.H);
  if (e.F_v) j["F_v"] = mean_se_json(*e.F_v);
  if (e.excess) j["excess"] = mean_se_json(*e.excess);
  j["n_test"] = e.n_test;
  return j;
}

// Everything shared by the replicas of one run.
struct Prepared {
  LabelModel model;
  Eigen::VectorXd comparator;
  std::string comparator_source;
  double opt = 0.0;
  double opt_se = 0.0;
  std::string opt_source;
  std::optional<OracleResult> oracle;
  std::optional<double> c0;
  std::string c0_source;
  std::optional<Spread> spread;
  double eta = 0.0;
  std::optional<TheoremBound> bound;
  std::string theory_error;
  long T_theory = 0;
  long T_run = 0;
};

Prepared prepare(const ExperimentConfig& cfg, const PopulationSample*& pop_out,
                 std::optional<PopulationSample>& pop_storage) {
  Prepared p;
  const Eigen::VectorXd v = resolve_teacher(cfg);
  if (cfg.opt_target) {
    p.model = opt_knob_design(*cfg.opt_target, cfg.input, cfg.act, v, cfg.opt_noise, 100000,
                              Rng(cfg.seed).split(Stream::calibration).stream());
  } else {
    p.model = cfg.label;
    p.model.v = v;
  }
  p.model.validate();
  p.comparator = v;
  p.comparator_source = "planted_v";

  pop_storage.emplace(cfg.input, p.model, cfg.act, cfg.n_test, Rng(cfg.seed));
  pop_out = &*pop_storage;

  // OPT: exact zero, closed form, grid oracle or Monte-Carlo F(v) + 2 SE.
  const bool agnostic = cfg.setting == Setting::agnostic_increasing || cfg.setting == Setting::agnostic_relu;
  if (p.model.kind == LabelKind::realizable) {
    p.opt = 0.0;
    p.opt_source = "realizable";
  } else if (agnostic && cfg.oracle_resolution) {
    p.oracle = grid_opt(p.model, cfg.input, cfg.act, cfg.oracle_n_mc, *cfg.oracle_resolution,
                        Rng(cfg.seed).split(Stream::oracle).stream());
    p.opt = p.oracle->opt_estimate;
    p.opt_se = p.oracle->opt_std_error;
    p.opt_source = "grid_oracle";
    p.comparator = p.oracle->v_hat;
    p.comparator_source = "grid_oracle_v_hat";
  } else if (p.model.kind == LabelKind::noisy_teacher && p.model.noise_risk()) {
    p.opt = *p.model.noise_risk();
    p.opt_source = "closed_form_F_v";
  } else {
    const PopulationEstimate e = pop_storage->estimate(v);
    p.opt = e.F.mean + 2.0 * e.F.se;
    p.opt_se = e.F.se;
    p.opt_source = "monte_carlo_F_v_plus_2se";
  }

  if (cfg.c0) {
    p.c0 = cfg.c0;
    p.c0_source = "config";
  } else if (cfg.calibration_file) {
    p.c0 = load_calibration(*cfg.calibration_file).c0;
    p.c0_source = "file:" + cfg.calibration_file->string();
  } else if (cfg.calibrate_c0) {
    const LabelModel& m = p.model;
    p.c0 = calibrate_c0(cfg.input, cfg.act, m.noise, m.s, cfg.n_train, cfg.calibration_replicas, cfg.delta,
                        Rng(cfg.seed).split(Stream::calibration).stream())
               .c0;
    p.c0_source = "calibrated";
  }

  if (cfg.act.kind == ActivationKind::relu && cfg.input.kind != InputKind::two_point_mixture) {
    p.spread = marginal_spread_constants(cfg.input);
  }

  p.eta = cfg.eta ? *cfg.eta : eta_cap(cfg.setting, cfg.act, cfg.input.bound);
  BoundInputs in;
  in.act = cfg.act;
  in.bound_x = cfg.input.bound;
  in.eta = p.eta;
  in.opt = p.opt;
  in.n = cfg.n_train;
  in.delta = cfg.delta;
  in.bound_y = p.model.label_bound(cfg.act, cfg.input.bound);
  if (p.model.kind == LabelKind::noisy_teacher) in.s = p.model.s;
  in.dim = cfg.input.dim;
  in.c0 = p.c0;
  in.spread = p.spread;
  in.epsilon = cfg.epsilon;
  const Eigen::VectorXd w0 = cfg.w0 ? *cfg.w0 : Eigen::VectorXd::Zero(cfg.input.dim);
  in.w0_dist_sq = (w0 - p.comparator).squaredNorm();
  try {
    p.bound = risk_bound(cfg.setting, in);
    p.T_theory = p.bound->T_budget;
  } catch (const Error& e) {
    p.theory_error = e.what();
    if (!cfg.T) throw Error(Errc::config_invalid, "optimizer.T: from_theory unavailable (" + p.theory_error + ")");
  }
  p.T_run = cfg.T ? *cfg.T : p.T_theory;
  if (cfg.max_iters) p.T_run = std::min(p.T_run, *cfg.max_iters);
  return p;
}

Selection effective_selection(const ExperimentConfig& cfg) {
  if (cfg.selection != Selection::automatic) return cfg.selection;
  switch (cfg.setting) {
    case Setting::agnostic_increasing:
    case Setting::agnostic_relu: return Selection::argmin_F_hat;
    default: return Selection::first_hit;
  }
}

ReplicaResult run_replica(const ExperimentConfig& cfg, const Prepared& p, const PopulationSample& pop, long r) {
  ReplicaResult out;
  out.replica = r;
  out.T_theory = p.T_theory;
  out.T_run = p.T_run;
  if (p.bound) out.bound = *p.bound;
  const Rng rng = Rng(cfg.seed).split(Stream::replica).split(static_cast<std::uint64_t>(r));

  OptimizerConfig oc;
  oc.method = cfg.method;
  oc.eta = p.eta;
  oc.T = p.T_run;
  if (cfg.w0) oc.w0 = *cfg.w0;
  oc.log_every = cfg.method == Method::sgd_online ? cfg.eval_every : cfg.log_every;

  std::optional<Dataset> data;
  switch (cfg.method) {
    case Method::gd:
    case Method::glmtron: {
      data = make_dataset(cfg.input, p.model, cfg.act, cfg.n_train, rng);
      out.trajectory = cfg.method == Method::gd ? gd_run(*data, cfg.act, oc, p.comparator, is_noisy(cfg.setting))
                                                : glmtron_run(*data, cfg.act, oc, p.comparator);
      out.F_v_hat = empirical_risk(p.comparator, *data, cfg.act);
      break;
    }
    case Method::gd_population: {
      Dataset surrogate;
      out.trajectory = gd_population_run(p.model, cfg.input, cfg.act, oc, cfg.n_mc, rng, &surrogate);
      data = std::move(surrogate);
      out.F_v_hat = empirical_risk(p.comparator, *data, cfg.act);
      break;
    }
    case Method::sgd_online: out.trajectory = sgd_run(p.model, cfg.input, cfg.act, oc, rng); break;
  }

  CertificateInputs ci;
  ci.setting = cfg.setting;
  ci.act = cfg.act;
  ci.bound_x = cfg.input.bound;
  ci.eta = p.eta;
  ci.F_v_hat = out.F_v_hat;
  ci.spread = p.spread;
  ci.epsilon = cfg.epsilon;
  ci.delta = cfg.delta;
  try {
    out.certificate = certify_trajectory(out.trajectory, ci);
  } catch (const Error& e) {
    out.certificate = CertificateReport{};
    out.certificate.setting = cfg.setting;
    out.certificate.pass = false;
    out.certificate.notes.push_back(std::string("certificate unavailable: ") + e.what());
  }

  const auto& R = out.trajectory.records;
  const Selection rule = effective_selection(cfg);
  std::vector<std::string> notes;
  long idx = static_cast<long>(R.size()) - 1;
  if (cfg.method == Method::sgd_online) {
    // Population F on every snapshot until one is within ε + 2 SE.
    const double eps = *cfg.epsilon;
    for (std::size_t i = 0; i < R.size(); ++i) {
      if (!R[i].w) continue;
      const PopulationEstimate e = pop.estimate(*R[i].w);
      ++out.sgd_evaluations;
      if (e.F.mean <= eps + 2.0 * e.F.se) {
        out.sgd_hit_t = R[i].t;
        idx = static_cast<long>(i);
        break;
      }
    }
    if (!out.sgd_hit_t) notes.push_back("no snapshot reached epsilon; last iterate reported");
    while (idx > 0 && !R[static_cast<std::size_t>(idx)].w) --idx;
  } else {
    switch (rule) {
      case Selection::first_hit:
        if (out.certificate.hit_index) {
          idx = *out.certificate.hit_index;
        } else {
          notes.push_back("certificate threshold never met; last iterate reported");
        }
        break;
      case Selection::argmin_F_hat: {
        // First minimum of F̂ over t < T_theory (the whole run when the budget is unknown).
        const long limit = p.T_theory > 0 ? std::min<long>(p.T_theory, static_cast<long>(R.size())) : static_cast<long>(R.size());
        idx = 0;
        for (long i = 1; i < limit; ++i) {
          if (R[static_cast<std::size_t>(i)].F_hat < R[static_cast<std::size_t>(idx)].F_hat) idx = i;
        }
        break;
      }
      case Selection::argmin_H_hat: idx = select_best(out.trajectory, Metric::H_hat).first; break;
      case Selection::last:
      case Selection::automatic: break;
    }
  }
  out.selected_t = R[static_cast<std::size_t>(idx)].t;
  if (R[static_cast<std::size_t>(idx)].w) {
    out.selected_w = *R[static_cast<std::size_t>(idx)].w;
  } else {
    out.selected_w = iterate_at(out.trajectory, out.selected_t, *data, cfg.act);
  }
  out.population = pop.estimate(out.selected_w);

  const TrajectoryRecord& sel = R[static_cast<std::size_t>(idx)];
  json& j = out.risk;
  j["replica"] = r;
  j["selection"] = cfg.method == Method::sgd_online ? std::string("first_population_hit") : to_string(rule);
  j["t"] = out.selected_t;
  j["w"] = to_json(out.selected_w);
  j["train"] = {{"F_hat", sel.F_hat}, {"F_hat_v", out.F_v_hat}};
  if (sel.G_hat) j["train"]["G_hat"] = *sel.G_hat;
  if (sel.H_hat) j["train"]["H_hat"] = *sel.H_hat;
  if (sel.dist_to_v) j["train"]["dist_to_v"] = *sel.dist_to_v;
  j["train"]["grad_norm"] = sel.grad_norm;
  j["population"] = estimate_json(out.population);
  j["population"]["source"] = "monte_carlo_fresh_sample";
  if (cfg.method == Method::sgd_online) {
    j["sgd"] = {{"evaluations", out.sgd_evaluations}, {"hit", out.sgd_hit_t.has_value()}};
    if (out.sgd_hit_t) j["sgd"]["hit_t"] = *out.sgd_hit_t;
  }
  if (out.trajectory.diagnostic) notes.push_back(*out.trajectory.diagnostic);
  j["notes"] = notes;
  return out;
}

json weights_table_meta(const ExperimentConfig& cfg, long r) {
  return {{"kind", "weights"}, {"name", cfg.name}, {"replica", r}, {"seed", cfg.seed}};
}

void write_replica(const fs::path& dir, const ExperimentConfig& cfg, const ReplicaResult& rr) {
  fs::create_directories(dir);
  write_text(dir / "trajectory.csv", trajectory_csv(rr.trajectory, rr.certificate));
  const auto& R = rr.trajectory.records;
  long snaps = 0;
  for (const auto& rec : R) snaps += rec.w ? 1 : 0;
  ColumnTable tab;
  tab.data.resize(snaps, 1 + cfg.input.dim);
  tab.names.push_back("t");
  for (int i = 0; i < cfg.input.dim; ++i) tab.names.push_back("w" + std::to_string(i + 1));
  long row = 0;
  for (const auto& rec : R) {
    if (!rec.w) continue;
    tab.data(row, 0) = static_cast<double>(rec.t);
    tab.data.row(row).tail(cfg.input.dim) = rec.w->transpose();
    ++row;
  }
  tab.meta = weights_table_meta(cfg, rr.replica);
  write_columnar(dir / "weights.bin", tab);
  write_json(dir / "risk.json", rr.risk);
  write_json(dir / "certificate.json", to_json(rr.certificate));
}

json build_summary(const RunResult& res, const Prepared& p) {
  const ExperimentConfig& cfg = res.config;
  json s;
  s["artifact_version"] = kArtifactVersion;
  s["name"] = cfg.name;
  s["setting"] = to_string(cfg.setting);
  s["activation"] = cfg.act.name();
  s["input"] = {{"kind", to_string(cfg.input.kind)}, {"dim", cfg.input.dim}, {"bound", cfg.input.bound}};
  s["label"] = res.model.descriptor();
  s["method"] = to_string(cfg.method);
  s["seed"] = cfg.seed;
  s["replicas"] = cfg.replicas;
  s["n_train"] = cfg.n_train;
  s["n_test"] = cfg.n_test;
  s["eta"] = p.eta;
  s["eta_source"] = cfg.eta ? "config" : "theory_cap";
  s["T_theory"] = p.T_theory;
  s["T_run"] = p.T_run;
  s["T_source"] = cfg.T ? "config" : "theory_budget";
  if (cfg.max_iters) s["max_iters"] = *cfg.max_iters;
  s["comparator"] = {{"v", to_json(res.comparator)}, {"source", res.comparator_source}};
  s["opt"] = {{"estimate", res.opt_estimate}, {"se", res.opt_std_error}, {"source", res.opt_source}};
  if (res.oracle) s["oracle"] = to_json(*res.oracle);
  if (res.c0) s["c0"] = {{"value", *res.c0}, {"source", p.c0_source}};

  json pred;
  if (p.bound) {
    pred["risk"] = p.bound->predicted_risk;
    pred["source"] = "theory.risk_bound";
    pred["bound"] = to_json(*p.bound);
  } else {
    pred["risk"] = nullptr;
    pred["source"] = "unavailable";
    pred["reason"] = p.theory_error;
  }
  s["predicted"] = pred;

  std::vector<double> F, ex;
  long cert_pass = 0, sgd_hits = 0;
  json per = json::array();
  for (const auto& r : res.replicas) {
    F.push_back(r.population.F.mean);
    if (r.population.excess) ex.push_back(r.population.excess->mean);
    cert_pass += r.certificate.pass ? 1 : 0;
    sgd_hits += r.sgd_hit_t ? 1 : 0;
    json e = {{"replica", r.replica},
              {"selected_t", r.selected_t},
              {"population_F", r.population.F.mean},
              {"population_F_se", r.population.F.se},
              {"certificate_pass", r.certificate.pass}};
    if (r.population.excess) e["excess"] = r.population.excess->mean;
    if (r.sgd_hit_t) e["sgd_hit_t"] = *r.sgd_hit_t;
    per.push_back(e);
  }
  json obs;
  obs["population_F_median"] = median(F);
  obs["population_F_mean"] = mean(F);
  if (!ex.empty()) obs["excess_median"] = median(ex);
  obs["source"] = "monte_carlo_fresh_sample";
  obs["n_test"] = cfg.n_test;
  obs["replicas"] = per;
  s["observed"] = obs;
  s["certificate_pass_count"] = cert_pass;
  if (cfg.method == Method::sgd_online) s["sgd_hit_count"] = sgd_hits;
  return s;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj, const std::optional<CertificateReport>& cert) {
  std::ostringstream os;
  os << kTrajectoryHeader << '\n';
  const auto& R = traj.records;
  const long hit = cert && cert->hit_index ? *cert->hit_index : -1;
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  for (std::size_t i = 0; i < R.size(); ++i) {
    const auto& r = R[i];
    std::string decrement;
    if (i + 1 < R.size() && r.dist_sq_to_v && R[i + 1].dist_sq_to_v) {
      decrement = format_double(*r.dist_sq_to_v - *R[i + 1].dist_sq_to_v);
    }
    const char* phase = "pre_hit";
    if (hit >= 0) phase = r.t < hit ? "pre_hit" : (r.t == hit ? "hit" : "post_hit");
    os << r.t << ',' << format_double(r.F_hat) << ',' << opt(r.G_hat) << ',' << opt(r.H_hat) << ','
       << opt(r.dist_to_v) << ',' << format_double(r.grad_norm) << ',' << decrement << ',' << phase << '\n';
  }
  return os.str();
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::optional<fs::path>& out, int workers) {
  cfg.validate();
  std::optional<PopulationSample> pop_storage;
  const PopulationSample* pop = nullptr;
  const Prepared p = prepare(cfg, pop, pop_storage);

  RunResult res;
  res.config = cfg;
  res.model = p.model;
  res.comparator = p.comparator;
  res.comparator_source = p.comparator_source;
  res.opt_estimate = p.opt;
  res.opt_std_error = p.opt_se;
  res.opt_source = p.opt_source;
  res.oracle = p.oracle;
  res.c0 = p.c0;
  res.replicas.resize(static_cast<std::size_t>(cfg.replicas));
  parallel_for(cfg.replicas, workers, [&](long r) {
    res.replicas[static_cast<std::size_t>(r)] = run_replica(cfg, p, *pop, r);
  });
  res.summary = build_summary(res, p);

  if (out) {
    fs::create_directories(*out);
    json echo = cfg.raw;
    echo["seed"] = cfg.seed;
    write_json(*out / "config.json", echo);
    for (const auto& r : res.replicas) write_replica(*out / replica_dir(r.replica), cfg, r);
    write_json(*out / "summary.json", res.summary);
  }
  return res;
}

// ---------------------------------------------------------------------------

SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<double>& values,
                      const std::optional<fs::path>& out, int workers, Aggregation aggregation) {
  if (values.empty()) throw Error(Errc::config_invalid, "values: must be non-empty");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw Error(Errc::config_invalid, "values: must be strictly increasing");
  }
  std::vector<ExperimentConfig> cfgs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig c = with_axis(base, axis, values[i]);
    c.seed = Rng(base.seed).split(Stream::sweep_point).split(static_cast<std::uint64_t>(i)).stream();
    c.name = base.name + "/" + axis + "=" + format_double(values[i]);
    c.raw[axis == "target_opt" ? "target_opt" : axis] = values[i];
    cfgs.push_back(std::move(c));
  }

  SweepResult res;
  res.axis = axis;
  res.aggregation = aggregation;
  std::ostringstream csv;
  csv << "axis_value,replica,population_F,population_F_se,excess,selected_t,certificate_pass,predicted_risk\n";
  json points = json::array();
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    std::optional<fs::path> dir;
    if (out) dir = *out / ("point_" + std::to_string(i));
    const RunResult run = run_experiment(cfgs[i], dir, workers);
    SweepPoint pt;
    pt.value = values[i];
    pt.predicted_risk = run.summary["predicted"]["risk"].is_number() ? run.summary["predicted"]["risk"].get<double>()
                                                                     : std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : run.replicas) {
      pt.population_F.push_back(r.population.F.mean);
      pt.excess.push_back(r.population.excess ? r.population.excess->mean : std::numeric_limits<double>::quiet_NaN());
      pt.certificate_pass.push_back(r.certificate.pass);
      pt.certificates.push_back(r.certificate);
      csv << format_double(values[i]) << ',' << r.replica << ',' << format_double(r.population.F.mean) << ','
          << format_double(r.population.F.se) << ',' << format_double(pt.excess.back()) << ',' << r.selected_t << ','
          << (r.certificate.pass ? "true" : "false") << ',' << format_double(pt.predicted_risk) << '\n';
    }
    pt.median_population_F = median(pt.population_F);
    pt.median_excess = median(pt.excess);
    points.push_back({{"value", pt.value},
                      {"median_population_F", pt.median_population_F},
                      {"median_excess", pt.median_excess},
                      {"predicted_risk", run.summary["predicted"]["risk"]},
                      {"opt", run.summary["opt"]},
                      {"certificate_pass_count", run.summary["certificate_pass_count"]},
                      {"seed", cfgs[i].seed}});
    res.points.push_back(std::move(pt));
  }

  json s;
  s["artifact_version"] = kArtifactVersion;
  s["name"] = base.name;
  s["axis"] = axis;
  s["aggregation"] = aggregation == Aggregation::excess_risk ? "excess_risk" : "best_iterate_population_F";
  s["points"] = points;
  if ((axis == "n_train" || axis == "target_opt") && values.size() >= 2) {
    std::vector<double> ys;
    bool positive = true;
    for (const auto& pt : res.points) {
      const double y = aggregation == Aggregation::excess_risk ? pt.median_excess : pt.median_population_F;
      positive = positive && y > 0.0;
      ys.push_back(y);
    }
    if (positive) {
      res.fit = loglog_fit(values, ys);
      s["fit"] = {{"slope", res.fit->slope}, {"slope_se", res.fit->slope_se}, {"intercept", res.fit->intercept}};
    } else {
      s["fit"] = nullptr;
      s["fit_note"] = "non-positive median; log-log fit skipped";
    }
  }
  res.summary = s;
  if (out) {
    fs::create_directories(*out);
    write_text(*out / "sweep.csv", csv.str());
    write_json(*out / "sweep_summary.json", s);
  }
  return res;
}

}  // namespace neuronlab
