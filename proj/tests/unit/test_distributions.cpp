#include <doctest.h>

#include <cmath>
#include <numbers>

#include "neuronlab/distributions.hpp"
#include "neuronlab/error.hpp"

using namespace neuronlab;

TEST_SUITE("distributions") {
  TEST_CASE("support constraints") {
    const Eigen::MatrixXd X = sample_inputs(InputDist::uniform_ball(2, 1.0), 10000, 7);
    CHECK(X.rowwise().norm().maxCoeff() <= 1.0);
    const Eigen::MatrixXd S = sample_inputs(InputDist::uniform_sphere(3, 2.0), 100, 1);
    for (int i = 0; i < 100; ++i) CHECK(std::abs(S.row(i).norm() - 2.0) <= 1e-12);
    const Eigen::MatrixXd G = sample_inputs(InputDist::truncated_gaussian(4, 1.5), 5000, 2);
    CHECK(G.rowwise().norm().maxCoeff() <= 1.5);
  }

  TEST_CASE("ball second moment") {
    const Eigen::MatrixXd X = sample_inputs(InputDist::uniform_ball(2, 1.0), 1000000, 3);
    const Eigen::ArrayXd r2 = X.rowwise().squaredNorm().array();
    const double m = r2.mean();
    const double se = std::sqrt((r2 - m).square().sum() / (r2.size() - 1) / r2.size());
    CHECK(std::abs(m - 0.5) <= 3 * se);
  }

  TEST_CASE("sampling is deterministic per seed") {
    const auto d = InputDist::uniform_ball(3, 1.0);
    CHECK(sample_inputs(d, 50, 11) == sample_inputs(d, 50, 11));
    CHECK(sample_inputs(d, 50, 11) != sample_inputs(d, 50, 12));
  }

  TEST_CASE("realizable relu labels") {
    Eigen::MatrixXd X(2, 2);
    X << 1, 0, -1, 0;
    const Labels l = label(LabelModel::realizable(Eigen::Vector2d(1, 0)), ActivationSpec::relu(), X, 1.0, 0);
    CHECK(l.y[0] == 1.0);
    CHECK(l.y[1] == 0.0);
  }

  TEST_CASE("noise is mean zero") {
    const int n = 1000000;
    const auto dist = InputDist::uniform_ball(2, 1.0);
    const Eigen::MatrixXd X = sample_inputs(dist, n, 5);
    const Labels l = label(LabelModel::noisy_teacher(Eigen::Vector2d(1, 0), NoiseKind::gaussian, 0.1),
                           ActivationSpec::leaky_relu(0.1), X, 1.0, 6);
    CHECK(std::abs(l.xi.mean()) <= 3 * 0.1 / std::sqrt(n));
    const double var = l.xi.squaredNorm() / n;
    CHECK(var == doctest::Approx(0.01).epsilon(0.01));
  }

  TEST_CASE("agnostic flip corruption rate") {
    const int n = 100000;
    const Eigen::MatrixXd X = sample_inputs(InputDist::uniform_ball(2, 1.0), n, 8);
    const Labels l = label(LabelModel::agnostic_flip(Eigen::Vector2d(0, 1), 0.2, 1.0), ActivationSpec::tanh(), X, 1.0, 9);
    long c = 0;
    for (bool b : l.corrupted) c += b;
    const double frac = static_cast<double>(c) / n;
    CHECK(std::abs(frac - 0.2) <= 3 * std::sqrt(0.2 * 0.8 / n));
    for (int i = 0; i < n; ++i) {
      if (!l.corrupted[static_cast<std::size_t>(i)]) REQUIRE(l.xi[i] == 0.0);
      if (l.corrupted[static_cast<std::size_t>(i)]) REQUIRE(std::abs(l.xi[i]) == 1.0);
    }
  }

  TEST_CASE("label bounds and closed-form noise risk") {
    const Eigen::Vector2d v(1, 0);
    const auto act = ActivationSpec::leaky_relu(0.1);
    CHECK(*LabelModel::realizable(v).label_bound(act, 2.0) == doctest::Approx(2.0));
    CHECK(*LabelModel::noisy_teacher(v, NoiseKind::bounded_uniform, 0.3).label_bound(act, 1.0) == doctest::Approx(1.3));
    CHECK_FALSE(LabelModel::noisy_teacher(v, NoiseKind::gaussian, 0.3).label_bound(act, 1.0).has_value());
    CHECK(*LabelModel::noisy_teacher(v, NoiseKind::gaussian, 0.2).noise_risk() == doctest::Approx(0.02));
    CHECK(*LabelModel::noisy_teacher(v, NoiseKind::bounded_uniform, 0.3).noise_risk() == doctest::Approx(0.015));
    CHECK_FALSE(LabelModel::noisy_teacher(v, NoiseKind::heteroscedastic, 0.3).noise_risk().has_value());
    CHECK_THROWS_AS(LabelModel::realizable(Eigen::Vector2d(1, 1)), Error);
  }

  TEST_CASE("marginal spread, d = 2") {
    const Spread sp = marginal_spread_constants(InputDist::uniform_ball(2, 1.0));
    CHECK(sp.alpha == 0.5);
    CHECK(sp.beta == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));

    // MC histogram oracle: mass of the annulus 0.45 <= r <= 0.55 over its area.
    const int n = 2000000;
    const Eigen::MatrixXd X = sample_inputs(InputDist::uniform_ball(2, 1.0), n, 21);
    const Eigen::ArrayXd r = X.rowwise().norm().array();
    const double p = ((r >= 0.45) && (r <= 0.55)).cast<double>().mean();
    const double area = std::numbers::pi * (0.55 * 0.55 - 0.45 * 0.45);
    const double se = std::sqrt(p * (1 - p) / n) / area;
    CHECK(std::abs(p / area - sp.beta) <= 3 * se);
  }

  TEST_CASE("marginal spread, d = 3") {
    // Oracle: integrate the uniform 3-ball density along the projected axis.
    const double r = 0.5;
    const int m = 2000000;
    double mass = 0.0;
    for (int i = 0; i < m; ++i) {
      const double z = -1.0 + (i + 0.5) * 2.0 / m;
      if (r * r + z * z <= 1.0) mass += 2.0 / m;
    }
    const double oracle = mass / (4.0 / 3.0 * std::numbers::pi);
    const Spread sp = marginal_spread_constants(InputDist::uniform_ball(3, 1.0));
    CHECK(sp.alpha == 0.5);
    CHECK(sp.beta == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(sp.beta == doctest::Approx(0.41349667156634407).epsilon(1e-14));
  }

  TEST_CASE("spread constants need a density") {
    const auto tp = InputDist::two_point(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), 0.5);
    CHECK_THROWS_AS(marginal_spread_constants(tp), Error);
    try {
      marginal_spread_constants(tp);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unsupported_distribution);
    }
  }

  TEST_CASE("gaussian marginal density is decreasing and positive") {
    const auto g = InputDist::truncated_gaussian(3, 1.0);
    const double a = marginal_density(g, 0.1), b = marginal_density(g, 0.5);
    CHECK(a > b);
    CHECK(b > 0.0);
    const Spread sp = marginal_spread_constants(g);
    CHECK(sp.beta == doctest::Approx(b));
  }

  TEST_CASE("datasets carry provenance") {
    const auto ds = make_dataset(InputDist::uniform_ball(2, 1.0),
                                 LabelModel::noisy_teacher(Eigen::Vector2d(1, 0), NoiseKind::bounded_uniform, 0.1),
                                 ActivationSpec::sigmoid(), 100, Rng(4));
    CHECK(ds.n() == 100);
    CHECK(ds.dim() == 2);
    CHECK(ds.bound_y.has_value());
    CHECK(ds.y.cwiseAbs().maxCoeff() <= *ds.bound_y);
    CHECK_FALSE(ds.descriptor.empty());
  }
}
