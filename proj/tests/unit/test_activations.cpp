#include <doctest.h>

#include <cmath>

#include "neuronlab/activations.hpp"
#include "neuronlab/error.hpp"

using namespace neuronlab;

namespace {

double plain_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Independent oracle: brute-force minimum of a derivative over a fine grid.
template <typename F>
double grid_min(F f, double rho, int points) {
  double m = f(-rho);
  for (int i = 0; i <= points; ++i) m = std::min(m, f(-rho + 2.0 * rho * i / points));
  return m;
}

}  // namespace

TEST_SUITE("activations") {
  TEST_CASE("values") {
    CHECK(ActivationSpec::relu().eval(-1.0) == 0.0);
    CHECK(ActivationSpec::relu().eval(0.5) == 0.5);
    CHECK(ActivationSpec::identity().eval(3.2) == 3.2);
    CHECK(ActivationSpec::leaky_relu(0.1).eval(-2.0) == doctest::Approx(-0.2));
    CHECK(ActivationSpec::sigmoid().eval(0.0) == 0.5);
    CHECK(ActivationSpec::tanh().eval(1.0) == doctest::Approx(std::tanh(1.0)));
    CHECK(ActivationSpec::softplus().eval(0.0) == doctest::Approx(std::log(2.0)));
    // softplus must not overflow far out on either side
    CHECK(ActivationSpec::softplus().eval(800.0) == doctest::Approx(800.0));
    CHECK(ActivationSpec::softplus().eval(-800.0) >= 0.0);
  }

  TEST_CASE("derivatives and kink convention") {
    CHECK(ActivationSpec::relu().deriv(0.0) == 1.0);
    CHECK(ActivationSpec::relu().deriv(-0.3) == 0.0);
    CHECK(ActivationSpec::leaky_relu(0.1).deriv(-5.0) == 0.1);
    CHECK(ActivationSpec::sigmoid().deriv(0.0) == 0.25);
    CHECK(ActivationSpec::identity().deriv(-7.0) == 1.0);
  }

  TEST_CASE("derivatives match central differences away from kinks") {
    for (auto act : {ActivationSpec::sigmoid(), ActivationSpec::tanh(), ActivationSpec::softplus(),
                     ActivationSpec::leaky_relu(0.1), ActivationSpec::relu()}) {
      for (double z : {-2.3, -0.7, 0.4, 1.9}) {
        const double h = 1e-6;
        const double fd = (act.eval(z + h) - act.eval(z - h)) / (2 * h);
        CHECK(act.deriv(z) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("lipschitz constants") {
    CHECK(ActivationSpec::sigmoid().lipschitz() == 0.25);
    CHECK(ActivationSpec::relu().lipschitz() == 1.0);
    CHECK(ActivationSpec::leaky_relu(0.3).lipschitz() == 1.0);
    CHECK(ActivationSpec::tanh().lipschitz() == 1.0);
  }

  TEST_CASE("parse and name round-trip") {
    for (const char* s : {"relu", "leaky_relu:0.1", "sigmoid", "tanh", "softplus", "identity"}) {
      CHECK(ActivationSpec::parse(s).name() == s);
    }
    CHECK(ActivationSpec::parse("leaky_relu:0.25").slope == 0.25);
    CHECK_THROWS_AS(ActivationSpec::parse("swish"), Error);
    CHECK_THROWS_AS(ActivationSpec::parse("leaky_relu:1.5"), Error);
    CHECK_THROWS_AS(ActivationSpec::parse("leaky_relu:abc"), Error);
  }

  TEST_CASE("derivative floor") {
    CHECK(gamma_for_radius(ActivationSpec::leaky_relu(0.1), 3.0) == 0.1);
    CHECK(gamma_for_radius(ActivationSpec::identity(), 10.0) == 1.0);

    const double oracle = grid_min(
        [](double z) {
          const double s = plain_sigmoid(z);
          return s * (1 - s);
        },
        2.0, 1000000);
    const double gamma = gamma_for_radius(ActivationSpec::sigmoid(), 2.0);
    CHECK(gamma == doctest::Approx(oracle).epsilon(1e-12));
    // frozen from the oracle above
    CHECK(gamma == doctest::Approx(0.10499358540350662).epsilon(1e-14));

    const double tanh_oracle = grid_min([](double z) { return 1 - std::tanh(z) * std::tanh(z); }, 1.5, 100000);
    CHECK(gamma_for_radius(ActivationSpec::tanh(), 1.5) == doctest::Approx(tanh_oracle).epsilon(1e-12));
    CHECK(gamma_for_radius(ActivationSpec::softplus(), 2.0) == doctest::Approx(plain_sigmoid(-2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(gamma_for_radius(ActivationSpec::relu(), 1.0), Error);
    try {
      gamma_for_radius(ActivationSpec::relu(), 1.0);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::not_strictly_increasing);
    }
  }

  TEST_CASE("grid floor is a lower bound on the closed form") {
    for (auto act : {ActivationSpec::sigmoid(), ActivationSpec::tanh(), ActivationSpec::softplus()}) {
      const double g = gamma_on_grid(act, 2.0, 10000);
      CHECK(g <= gamma_for_radius(act, 2.0));
      CHECK(g >= 0.998 * gamma_for_radius(act, 2.0));
    }
  }

  TEST_CASE("assumption checks") {
    CHECK(validate_assumption1(ActivationSpec::sigmoid(), 4.0, 10000).all_pass());
    CHECK(validate_assumption1(ActivationSpec::sigmoid(), 4.0, 10000).lipschitz_slack >= 0.0);
    const auto relu = validate_assumption1(ActivationSpec::relu(), 4.0, 10000);
    CHECK_FALSE(relu.floor_positive());
    CHECK_FALSE(relu.all_pass());
    const auto id = validate_assumption1(ActivationSpec::identity(), 1.0, 10);
    CHECK(id.all_pass());
    CHECK(id.derivative_floor == 1.0);
  }

  TEST_CASE("array evaluation matches scalar") {
    Eigen::ArrayXd z(5);
    z << -3, -0.5, 0, 0.5, 3;
    const auto act = ActivationSpec::tanh();
    const Eigen::ArrayXd s = act.eval(z);
    const Eigen::ArrayXd d = act.deriv(z);
    for (int i = 0; i < 5; ++i) {
      CHECK(s[i] == act.eval(z[i]));
      CHECK(d[i] == act.deriv(z[i]));
    }
  }
}
