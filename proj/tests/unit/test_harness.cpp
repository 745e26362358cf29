#include <doctest.h>

#include <filesystem>
#include <string>

#include "neuronlab/error.hpp"
#include "neuronlab/harness.hpp"

using namespace neuronlab;
namespace fs = std::filesystem;

namespace {

json smoke_doc() {
  return json::parse(R"({
    "name": "smoke", "setting": "realizable_gd", "activation": "leaky_relu:0.1",
    "input": {"kind": "uniform_ball", "dim": 2, "bound": 1.0},
    "label": {"kind": "realizable", "v": [0.6, -0.8]},
    "optimizer": {"method": "gd", "eta": "from_theory", "T": "from_theory", "log_every": 100},
    "n_train": 300, "n_test": 2000, "replicas": 2, "seed": 3, "epsilon": 0.05,
    "_notes": "ignored"
  })");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "neuronlab_harness" / name;
  fs::remove_all(p);
  return p;
}

Errc code_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("config was accepted");
  return Errc::invalid_argument;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("config parsing") {
    const ExperimentConfig c = parse_config(smoke_doc());
    CHECK(c.setting == Setting::realizable_gd);
    CHECK(c.act == ActivationSpec::leaky_relu(0.1));
    CHECK_FALSE(c.eta.has_value());
    CHECK_FALSE(c.T.has_value());
    CHECK(c.teacher == TeacherMode::given);
    CHECK(c.log_every == 100);

    json d = smoke_doc();
    d["label"].erase("v");
    CHECK(parse_config(d).teacher == TeacherMode::e1);
    d["seed"] = 18446744073709551615ULL;
    CHECK(parse_config(d).seed == 18446744073709551615ULL);
  }

  TEST_CASE("config errors name the field") {
    json d = smoke_doc();
    d["bogus"] = 1;
    try {
      parse_config(d);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config_invalid);
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }

    d = smoke_doc();
    d.erase("epsilon");
    CHECK(code_of(d) == Errc::config_invalid);

    d = smoke_doc();
    d["activation"] = "swish";
    CHECK(code_of(d) == Errc::config_invalid);

    d = smoke_doc();
    d["label"]["v"] = json::array({1.0, 1.0});
    CHECK(code_of(d) == Errc::config_invalid);

    d = smoke_doc();
    d["optimizer"]["method"] = "sgd_online";
    CHECK(code_of(d) == Errc::config_invalid);

    d = smoke_doc();
    d["setting"] = "noisy_teacher_increasing";
    d["label"] = {{"kind", "noisy_teacher"}, {"noise", "gaussian"}, {"s", 0.1}};
    CHECK(code_of(d) == Errc::config_invalid);  // no c0 source
    d["c0"] = 0.6;
    CHECK_NOTHROW(parse_config(d));
    d["activation"] = "relu";
    CHECK(code_of(d) == Errc::config_invalid);

    d = smoke_doc();
    d["n_train"] = 2.5;
    CHECK(code_of(d) == Errc::config_invalid);
  }

  TEST_CASE("example configs parse") {
    const fs::path dir = fs::path(NEURONLAB_SOURCE_DIR) / "configs";
    REQUIRE(fs::is_directory(dir));
    int n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      INFO(entry.path().string());
      CHECK_NOTHROW(load_config(entry.path()));
      ++n;
    }
    CHECK(n >= 3);
  }

  TEST_CASE("run writes the bundle and reruns are byte identical") {
    const ExperimentConfig c = parse_config(smoke_doc());
    const fs::path a = scratch("a"), b = scratch("b");
    const RunResult ra = run_experiment(c, a, 1);
    run_experiment(c, b, 2);
    for (const char* f : {"config.json", "summary.json", "replica_000/trajectory.csv", "replica_001/trajectory.csv",
                          "replica_000/risk.json", "replica_000/certificate.json", "replica_000/weights.bin",
                          "replica_000/weights.bin.json"}) {
      INFO(f);
      REQUIRE(fs::exists(a / f));
      CHECK(read_text(a / f) == read_text(b / f));
    }
    const std::string csv = read_text(a / "replica_000/trajectory.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "t,F_hat,G_hat,H_hat,dist_to_v,grad_norm,decrement,cert_phase");
    CHECK(csv.find(",hit\n") != std::string::npos);

    const json s = read_json(a / "summary.json");
    CHECK(s["predicted"]["source"] == "theory.risk_bound");
    CHECK(s["predicted"]["risk"].is_number());
    CHECK(s["observed"]["source"] == "monte_carlo_fresh_sample");
    CHECK(s["opt"]["source"] == "realizable");
    CHECK(s["certificate_pass_count"] == 2);
    CHECK(ra.replicas[0].T_theory == ra.replicas[0].T_run);
    const ColumnTable w = read_columnar(a / "replica_000/weights.bin");
    CHECK(w.names == std::vector<std::string>{"t", "w1", "w2"});
  }

  TEST_CASE("replicas differ and do not depend on worker count") {
    const ExperimentConfig c = parse_config(smoke_doc());
    const RunResult one = run_experiment(c, std::nullopt, 1);
    const RunResult two = run_experiment(c, std::nullopt, 2);
    CHECK(one.replicas[0].trajectory.records[1].F_hat != one.replicas[1].trajectory.records[1].F_hat);
    CHECK(one.replicas[1].population.F.mean == two.replicas[1].population.F.mean);
  }

  TEST_CASE("a step above the cap still runs") {
    json d = smoke_doc();
    d["optimizer"]["eta"] = 40.0;
    d["optimizer"]["T"] = 200;
    d["replicas"] = 1;
    const RunResult r = run_experiment(parse_config(d), std::nullopt, 1);
    CHECK(r.summary["eta_source"] == "config");
    const auto& flags = r.replicas[0].bound.flags;
    CHECK(std::find(flags.begin(), flags.end(), "eta-above-cap") != flags.end());
    CHECK(r.summary.contains("certificate_pass_count"));
  }

  TEST_CASE("sweeps") {
    json d = smoke_doc();
    d["replicas"] = 1;
    const ExperimentConfig c = parse_config(d);
    const fs::path s1 = scratch("s1");
    const SweepResult single = run_sweep(c, "n_train", {200}, s1, 1);
    CHECK(fs::exists(s1 / "sweep_summary.json"));
    CHECK_FALSE(single.fit.has_value());
    CHECK_FALSE(single.summary.contains("fit"));

    const fs::path out = fs::temp_directory_path() / "neuronlab_harness" / "s2";
    fs::remove_all(out);
    const SweepResult two = run_sweep(c, "eta", {0.5, 1.0}, out, 1);
    CHECK(two.points.size() == 2);
    CHECK(fs::exists(out / "sweep.csv"));
    CHECK(fs::exists(out / "point_1" / "summary.json"));

    CHECK_THROWS_AS(run_sweep(c, "n_train", {300, 200}, std::nullopt, 1), Error);
    CHECK_THROWS_AS(run_sweep(c, "n_train", {}, std::nullopt, 1), Error);
    CHECK_THROWS_AS(run_sweep(c, "colour", {1}, std::nullopt, 1), Error);
    CHECK_THROWS_AS(run_sweep(c, "target_opt", {0.1}, std::nullopt, 1), Error);
  }

  TEST_CASE("noisy run with an opt knob") {
    const json d = json::parse(R"({
      "setting": "noisy_teacher_increasing", "activation": "leaky_relu:0.1",
      "input": {"kind": "uniform_ball", "dim": 2},
      "label": {"opt_target": 0.02, "noise": "gaussian"},
      "optimizer": {"eta": 0.25, "T": "from_theory", "max_iters": 500},
      "n_train": 1000, "n_test": 5000, "replicas": 2, "seed": 9, "c0": 0.6
    })");
    const RunResult r = run_experiment(parse_config(d), std::nullopt, 1);
    CHECK(r.model.s == doctest::Approx(0.2));
    CHECK(r.opt_source == "closed_form_F_v");
    CHECK(r.opt_estimate == doctest::Approx(0.02));
    CHECK(r.summary["predicted"]["risk"].is_number());
    CHECK(r.replicas[0].T_run <= 500);
    CHECK(r.replicas[0].certificate.K.has_value());
  }

  TEST_CASE("sgd run reports population hits") {
    const json d = json::parse(R"({
      "setting": "realizable_sgd", "activation": "leaky_relu:0.1",
      "input": {"kind": "uniform_ball", "dim": 3},
      "label": {"kind": "realizable", "v": "random"},
      "optimizer": {"method": "sgd_online", "eta": "from_theory", "T": 4000, "eval_every": 100},
      "n_test": 5000, "replicas": 1, "seed": 4, "epsilon": 0.05
    })");
    const RunResult r = run_experiment(parse_config(d), std::nullopt, 1);
    CHECK(r.comparator.norm() <= 1.0);
    CHECK(r.comparator.norm() == doctest::Approx(1.0));
    CHECK(r.replicas[0].sgd_hit_t.has_value());
    CHECK(r.replicas[0].certificate.find("monotone_distance")->pass);
  }
}
