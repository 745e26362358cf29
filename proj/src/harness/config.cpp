#include <cmath>
#include <set>

#include "neuronlab/error.hpp"
#include "neuronlab/harness.hpp"

namespace neuronlab {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(Errc::config_invalid, field + ": " + why);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) invalid(where, "expected an object");
  for (const auto& [k, _] : obj.items()) {
    if (k == "_notes") continue;
    if (!allowed.count(k)) invalid(where.empty() ? k : where + "." + k, "unknown key");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number()) invalid(where + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(where + key, "must be finite");
  return x;
}

long get_count(const json& obj, const std::string& key, const std::string& where) {
  const json& v = obj.at(key);
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long>(x);
  }
  invalid(where + key, "expected an integer");
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_string()) invalid(where + key, "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) invalid(field, "expected a non-empty array of numbers");
  for (const auto& e : v) {
    if (!e.is_number()) invalid(field, "expected a non-empty array of numbers");
  }
  return vector_from_json(v);
}

// Rewraps library errors raised while building a typed value from the config.
template <typename F>
auto field(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::config_invalid) throw;
    invalid(name, e.what());
  }
}

void parse_input(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "input", {"kind", "dim", "bound", "scale", "point_a", "point_b", "prob_a"});
  InputDist d;
  d.kind = field("input.kind", [&] { return parse_input_kind(get_string(j, "kind", "input.")); });
  if (d.kind == InputKind::two_point_mixture) {
    if (!j.contains("point_a") || !j.contains("point_b")) invalid("input", "two_point_mixture needs point_a and point_b");
    d.point_a = get_vector(j.at("point_a"), "input.point_a");
    d.point_b = get_vector(j.at("point_b"), "input.point_b");
    d.dim = static_cast<int>(d.point_a.size());
    d.bound = std::max(d.point_a.norm(), d.point_b.norm());
    if (j.contains("prob_a")) d.prob_a = get_number(j, "prob_a", "input.");
  } else {
    if (!j.contains("dim")) invalid("input.dim", "required");
    d.dim = static_cast<int>(get_count(j, "dim", "input."));
  }
  if (j.contains("bound")) d.bound = get_number(j, "bound", "input.");
  if (j.contains("scale")) d.scale = get_number(j, "scale", "input.");
  field("input", [&] {
    d.validate();
    return 0;
  });
  cfg.input = d;
}

void parse_label(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "label", {"kind", "v", "noise", "s", "rate", "magnitude", "opt_target"});
  LabelModel m;
  if (j.contains("opt_target")) {
    cfg.opt_target = get_number(j, "opt_target", "label.");
    m.kind = LabelKind::noisy_teacher;
    if (j.contains("kind") && get_string(j, "kind", "label.") != "noisy_teacher") {
      invalid("label.opt_target", "only noisy_teacher labels are built from a target OPT");
    }
    if (j.contains("s")) invalid("label.s", "set by opt_target");
  } else {
    m.kind = field("label.kind", [&] { return parse_label_kind(get_string(j, "kind", "label.")); });
  }
  if (j.contains("noise")) m.noise = field("label.noise", [&] { return parse_noise_kind(get_string(j, "noise", "label.")); });
  cfg.opt_noise = m.noise;
  if (j.contains("s")) m.s = get_number(j, "s", "label.");
  if (j.contains("rate")) m.rate = get_number(j, "rate", "label.");
  if (j.contains("magnitude")) m.magnitude = get_number(j, "magnitude", "label.");

  if (!j.contains("v")) {
    cfg.teacher = TeacherMode::e1;
  } else if (j.at("v").is_string()) {
    const std::string mode = j.at("v").get<std::string>();
    if (mode == "e1") {
      cfg.teacher = TeacherMode::e1;
    } else if (mode == "random") {
      cfg.teacher = TeacherMode::random;
    } else {
      invalid("label.v", "expected an array, \"e1\" or \"random\"");
    }
  } else {
    cfg.teacher = TeacherMode::given;
    m.v = get_vector(j.at("v"), "label.v");
  }
  cfg.label = m;
}

void parse_optimizer(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "optimizer", {"method", "eta", "T", "max_iters", "log_every", "w0", "eval_every"});
  if (j.contains("method")) cfg.method = field("optimizer.method", [&] { return parse_method(get_string(j, "method", "optimizer.")); });
  auto theory_or = [&](const char* key) {
    return j.contains(key) && j.at(key).is_string() && j.at(key).get<std::string>() == "from_theory";
  };
  if (j.contains("eta") && !theory_or("eta")) cfg.eta = get_number(j, "eta", "optimizer.");
  if (j.contains("T") && !theory_or("T")) cfg.T = get_count(j, "T", "optimizer.");
  if (j.contains("max_iters")) cfg.max_iters = get_count(j, "max_iters", "optimizer.");
  if (j.contains("log_every")) cfg.log_every = get_count(j, "log_every", "optimizer.");
  if (j.contains("eval_every")) cfg.eval_every = get_count(j, "eval_every", "optimizer.");
  if (j.contains("w0")) {
    const json& w = j.at("w0");
    if (w.is_string()) {
      if (w.get<std::string>() != "zeros") invalid("optimizer.w0", "expected an array or \"zeros\"");
    } else {
      cfg.w0 = get_vector(w, "optimizer.w0");
    }
  }
}

}  // namespace

std::string to_string(Selection s) {
  switch (s) {
    case Selection::automatic: return "auto";
    case Selection::first_hit: return "first_hit";
    case Selection::argmin_F_hat: return "argmin_F_hat";
    case Selection::argmin_H_hat: return "argmin_H_hat";
    case Selection::last: return "last";
  }
  return "unknown";
}

Selection parse_selection(const std::string& name) {
  for (Selection s : {Selection::automatic, Selection::first_hit, Selection::argmin_F_hat, Selection::argmin_H_hat,
                      Selection::last}) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::config_invalid, "selection: unknown rule " + name);
}

void ExperimentConfig::validate() const {
  const bool realizable = setting == Setting::realizable_gd || setting == Setting::realizable_sgd;
  const bool noisy = setting == Setting::noisy_teacher_increasing || setting == Setting::noisy_teacher_relu;
  if (replicas < 1) invalid("replicas", "must be >= 1");
  if (n_train < 1) invalid("n_train", "must be >= 1");
  if (n_test < 2) invalid("n_test", "must be >= 2");
  if (n_mc < 1) invalid("n_mc", "must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) invalid("delta", "must lie in (0, 1)");
  if (epsilon && !(*epsilon > 0.0)) invalid("epsilon", "must be positive");
  if (eta && !(*eta > 0.0)) invalid("optimizer.eta", "must be positive");
  if (T && *T < 1) invalid("optimizer.T", "must be >= 1");
  if (max_iters && *max_iters < 1) invalid("optimizer.max_iters", "must be >= 1");
  if (log_every < 1) invalid("optimizer.log_every", "must be >= 1");
  if (eval_every < 1) invalid("optimizer.eval_every", "must be >= 1");
  if (w0 && w0->size() != input.dim) invalid("optimizer.w0", "length does not match input.dim");
  if (teacher == TeacherMode::given && label.v.size() != input.dim) invalid("label.v", "length does not match input.dim");
  if (teacher == TeacherMode::given && label.v.norm() > 1.0 + 1e-12) invalid("label.v", "teacher must satisfy ||v|| <= 1");
  if (opt_target && !(*opt_target > 0.0 && *opt_target <= 1.0)) invalid("label.opt_target", "must lie in (0, 1]");
  if (oracle_resolution && !(*oracle_resolution > 0.0 && *oracle_resolution <= 1.0)) {
    invalid("oracle.resolution", "must lie in (0, 1]");
  }
  if (oracle_n_mc < 1) invalid("oracle.n_mc", "must be >= 1");
  if (c0 && !(*c0 > 0.0)) invalid("c0", "must be positive");

  if (realizable && label.kind != LabelKind::realizable) invalid("label.kind", "realizable settings need realizable labels");
  if (noisy && label.kind != LabelKind::noisy_teacher) invalid("label.kind", "noisy-teacher settings need noisy_teacher labels");
  if ((setting == Setting::realizable_sgd) != (method == Method::sgd_online)) {
    invalid("optimizer.method", "sgd_online pairs with realizable_sgd and only with it");
  }
  if (method == Method::gd_population && !realizable) invalid("optimizer.method", "gd_population needs a realizable setting");
  if (is_relu_setting(setting) != (act.kind == ActivationKind::relu) &&
      !(realizable)) {
    invalid("activation", "relu settings pair with the relu activation and only with it");
  }
  if (realizable && !epsilon) invalid("epsilon", "required for realizable settings");
  if (noisy && !c0 && !calibration_file && !calibrate_c0) invalid("c0", "noisy-teacher settings need c0, a calibration file or \"calibrate\"");
  if (oracle_resolution && input.dim > 3) invalid("oracle", "grid oracle needs input.dim <= 3");
  if (label.kind == LabelKind::noisy_teacher && !opt_target && !(label.s > 0.0)) invalid("label.s", "must be positive");
  if (label.kind == LabelKind::agnostic_flip && !(label.rate >= 0.0 && label.rate <= 1.0)) invalid("label.rate", "must lie in [0, 1]");
  if (is_relu_setting(setting) && input.kind == InputKind::two_point_mixture) {
    invalid("input.kind", "relu settings need marginal-spread constants, unavailable for two_point_mixture");
  }
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, "", {"name", "setting", "activation", "input", "label", "optimizer", "n_train", "n_test", "n_mc",
                       "replicas", "seed", "delta", "epsilon", "c0", "oracle", "selection"});
  ExperimentConfig cfg;
  cfg.raw = doc;
  if (doc.contains("name")) cfg.name = get_string(doc, "name", "");
  if (!doc.contains("setting")) invalid("setting", "required");
  cfg.setting = field("setting", [&] { return parse_setting(get_string(doc, "setting", "")); });
  if (!doc.contains("activation")) invalid("activation", "required");
  cfg.act = field("activation", [&] { return ActivationSpec::parse(get_string(doc, "activation", "")); });
  if (!doc.contains("input")) invalid("input", "required");
  parse_input(doc.at("input"), cfg);
  if (!doc.contains("label")) invalid("label", "required");
  parse_label(doc.at("label"), cfg);
  if (doc.contains("optimizer")) parse_optimizer(doc.at("optimizer"), cfg);
  if (cfg.setting == Setting::realizable_sgd && !doc.contains("optimizer")) cfg.method = Method::sgd_online;

  if (doc.contains("n_train")) cfg.n_train = get_count(doc, "n_train", "");
  if (doc.contains("n_test")) cfg.n_test = get_count(doc, "n_test", "");
  if (doc.contains("n_mc")) cfg.n_mc = get_count(doc, "n_mc", "");
  if (doc.contains("replicas")) cfg.replicas = get_count(doc, "replicas", "");
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (s.is_number_unsigned()) {
      cfg.seed = s.get<std::uint64_t>();
    } else {
      const long x = get_count(doc, "seed", "");
      if (x < 0) invalid("seed", "must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(x);
    }
  }
  if (doc.contains("delta")) cfg.delta = get_number(doc, "delta", "");
  if (doc.contains("epsilon")) cfg.epsilon = get_number(doc, "epsilon", "");
  if (doc.contains("c0")) {
    const json& c = doc.at("c0");
    if (c.is_number()) {
      cfg.c0 = get_number(doc, "c0", "");
    } else if (c.is_string() && c.get<std::string>() == "calibrate") {
      cfg.calibrate_c0 = true;
    } else if (c.is_object()) {
      check_keys(c, "c0", {"file", "replicas"});
      if (c.contains("file")) cfg.calibration_file = get_string(c, "file", "c0.");
      if (c.contains("replicas")) {
        cfg.calibrate_c0 = true;
        cfg.calibration_replicas = get_count(c, "replicas", "c0.");
        if (cfg.calibration_replicas < 10) invalid("c0.replicas", "must be >= 10");
      }
    } else {
      invalid("c0", "expected a number, \"calibrate\" or {\"file\": ...}");
    }
  }
  if (doc.contains("oracle")) {
    const json& o = doc.at("oracle");
    check_keys(o, "oracle", {"resolution", "n_mc"});
    if (o.contains("resolution")) cfg.oracle_resolution = get_number(o, "resolution", "oracle.");
    if (o.contains("n_mc")) cfg.oracle_n_mc = get_count(o, "n_mc", "oracle.");
  }
  if (doc.contains("selection")) cfg.selection = parse_selection(get_string(doc, "selection", ""));
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json(path));
}

ExperimentConfig with_axis(const ExperimentConfig& base, const std::string& axis, double value) {
  ExperimentConfig cfg = base;
  if (!std::isfinite(value)) invalid("values", "must be finite");
  if (axis == "n_train") {
    if (value != std::floor(value) || value < 1.0) invalid("values", "n_train values must be positive integers");
    cfg.n_train = static_cast<long>(value);
  } else if (axis == "target_opt") {
    if (!base.opt_target) invalid("axis", "target_opt sweeps need label.opt_target in the base config");
    cfg.opt_target = value;
  } else if (axis == "eta") {
    cfg.eta = value;
  } else if (axis == "dimension") {
    if (value != std::floor(value) || value < 1.0) invalid("values", "dimension values must be positive integers");
    if (base.teacher == TeacherMode::given || base.w0 || base.input.kind == InputKind::two_point_mixture) {
      invalid("axis", "dimension sweeps need a generated teacher, zero w0 and a rotation-invariant input law");
    }
    cfg.input.dim = static_cast<int>(value);
  } else {
    invalid("axis", "unknown axis " + axis + " (n_train, target_opt, eta, dimension)");
  }
  cfg.validate();
  return cfg;
}

}  // namespace neuronlab
