#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "emvrs/error.hpp"
#include "emvrs/sim_trainer.hpp"
#include "emvrs/value_odes.hpp"
#include "oracles.hpp"

using namespace emvrs;

namespace {

MarketParams single(double sigma, double rho, double r) {
  MarketParams p;
  p.sigma = {sigma};
  p.rho = {rho};
  p.r = {r};
  return p;
}

double max_abs_vs_oracle(const ValueCoefficients& c, const test::EmvOracle& o) {
  double err = 0.0;
  for (std::size_t k = 0; k < c.grid.points(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double t = c.grid.t(k);
    err = std::max({err, std::abs(c.p(r, 0) - o.p(t)), std::abs(c.h(r, 0) - o.h(t)),
                    std::abs(c.c(r, 0)), std::abs(c.d(r, 0) - o.d(t))});
  }
  return err;
}

}  // namespace

TEST_CASE("time grid construction") {
  const TimeGrid g = TimeGrid::make(1.0, 0.1);
  CHECK(g.steps == 10);
  CHECK(g.substeps == 10);
  CHECK(TimeGrid::make(10.0, 1.0 / 12.0).steps == 120);
  CHECK_THROWS_AS(TimeGrid::make(1.0, 0.3), ArgumentError);
  CHECK_THROWS_AS(TimeGrid::make(1.0, 0.1, 0), ArgumentError);
  CHECK_THROWS_AS(TimeGrid::make(-1.0, 0.1), ArgumentError);
  CHECK(g.refined(4).steps == 40);
}

TEST_CASE("terminal row is (1, 1, 0, 0)") {
  const SimConfig cfg = table1_config();
  for (const MarketParams& theta : {cfg.theta_true, cfg.theta0}) {
    const ValueCoefficients c = solve_phcd(theta, cfg.q, cfg.grid, cfg.xi);
    const auto last = static_cast<Eigen::Index>(cfg.grid.steps);
    for (Eigen::Index i = 0; i < 2; ++i) {
      CHECK(std::abs(c.p(last, i) - 1.0) < 1e-10);
      CHECK(std::abs(c.h(last, i) - 1.0) < 1e-10);
      CHECK(std::abs(c.c(last, i)) < 1e-10);
      CHECK(std::abs(c.d(last, i)) < 1e-10);
    }
  }
}

TEST_CASE("single regime P(0) at rho 1, r 0, T 1") {
  const ValueCoefficients c =
      solve_phcd(single(0.2, 1.0, 0.0), GeneratorMatrix::single(), TimeGrid::make(1.0, 0.1), 0.5);
  CHECK(std::abs(c.p(0, 0) - std::exp(-1.0)) < 1e-6);
  CHECK(std::abs(c.p(0, 0) - 0.367879) < 1e-6);
}

TEST_CASE("zero generator leaves C at zero") {
  MarketParams theta;
  theta.sigma = {0.2, 0.35};
  theta.rho = {1.0, -0.4};
  theta.r = {0.01, 0.03};
  const ValueCoefficients c = solve_phcd(theta, GeneratorMatrix(Matrix::Zero(2, 2)), TimeGrid::make(1.0, 0.1), 0.5);
  CHECK(c.c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed form matches the oracle and the ODE route") {
  const TimeGrid grid = TimeGrid::make(1.0, 0.1, 10);
  const test::EmvOracle o{0.2, 1.0, 0.0, 0.5, 1.0};
  const ValueCoefficients cf = emv_closed_form(0.2, 1.0, 0.0, 0.5, grid);
  CHECK(max_abs_vs_oracle(cf, o) < 1e-14);
  CHECK(cf.d(0, 0) == doctest::Approx(-1.042568).epsilon(1e-4));
  CHECK(cf.h.minCoeff() == 1.0);
  CHECK(cf.p(10, 0) == 1.0);
  CHECK(cf.d(10, 0) == 0.0);
  CHECK_THROWS_AS(emv_closed_form(0.0, 1.0, 0.0, 0.5, grid), ArgumentError);

  const ValueCoefficients ode = solve_phcd(single(0.2, 1.0, 0.0), GeneratorMatrix::single(), grid, 0.5);
  CHECK(max_abs_vs_oracle(ode, o) < 1e-6);
}

TEST_CASE("RK4 error falls at fourth order") {
  const test::EmvOracle o{0.3, 1.7, 0.04, 0.5, 1.0};
  double prev = 0.0;
  for (std::size_t sub : {1u, 2u, 4u}) {
    const ValueCoefficients c =
        solve_phcd(single(o.sigma, o.rho, o.r), GeneratorMatrix::single(), TimeGrid::make(1.0, 0.1, sub), o.xi);
    const double err = max_abs_vs_oracle(c, o);
    if (prev > 0.0) CHECK(prev / err >= 8.0);
    prev = err;
  }
}

TEST_CASE("integral forms agree with the ODE route") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> sig(0.1, 1.0), rho(-2.0, 2.0), rate(0.0, 0.1), rates(0.1, 3.0);
  const TimeGrid grid = TimeGrid::make(1.0, 0.1, 10);
  for (int n = 0; n < 20; ++n) {
    MarketParams theta;
    theta.sigma = {sig(rng), sig(rng)};
    theta.rho = {rho(rng), rho(rng)};
    theta.r = {rate(rng), rate(rng)};
    const double a = rates(rng), b = rates(rng);
    const GeneratorMatrix q = GeneratorMatrix::from_rows({{-a, a}, {b, -b}});
    const ValueCoefficients coarse = solve_phcd(theta, q, grid, 0.5);
    const ValueCoefficients fine = solve_phcd(theta, q, grid.refined(50, 1), 0.5);
    const auto [c, d] = cd_integral_form(theta, q, fine, 0.5);
    for (Eigen::Index k = 0; k <= 10; ++k) {
      for (Eigen::Index i = 0; i < 2; ++i) {
        const double cs = std::max(1.0, std::abs(coarse.c(k, i)));
        const double ds = std::max(1.0, std::abs(coarse.d(k, i)));
        CHECK(std::abs(c(50 * k, i) - coarse.c(k, i)) / cs < 1e-4);
        CHECK(std::abs(d(50 * k, i) - coarse.d(k, i)) / ds < 1e-4);
      }
    }
  }
}

TEST_CASE("integral form edge cases") {
  const SimConfig cfg = table1_config();
  const ValueCoefficients fine = solve_phcd(cfg.theta_true, cfg.q, cfg.grid.refined(20, 1), cfg.xi);
  const auto [c, d] = cd_integral_form(cfg.theta_true, cfg.q, fine, cfg.xi);
  CHECK(c.row(c.rows() - 1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.row(d.rows() - 1).cwiseAbs().maxCoeff() == 0.0);

  // Duplicated single-regime parameters: H is identical across regimes.
  MarketParams dup;
  dup.sigma = {0.25, 0.25};
  dup.rho = {0.7, 0.7};
  dup.r = {0.03, 0.03};
  const ValueCoefficients same = solve_phcd(dup, cfg.q, cfg.grid.refined(20, 1), cfg.xi);
  CHECK(cd_integral_form(dup, cfg.q, same, cfg.xi).first.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("C is positive when interest rates differ") {
  const SimConfig cfg = table2_config();
  const ValueCoefficients c = solve_phcd(cfg.theta_true, cfg.q, cfg.grid, cfg.xi);
  CHECK(c.c(0, 0) > 0.0);
  CHECK(c.c(0, 1) > 0.0);
  CHECK(c.h(0, 0) < 1.0);
}

TEST_CASE("stiff coupling on a coarse grid drives P negative") {
  MarketParams theta;
  theta.sigma = {0.2, 0.2};
  theta.rho = {2.0, 0.0};
  theta.r = {0.0, 0.0};
  const GeneratorMatrix q = GeneratorMatrix::from_rows({{-100.0, 100.0}, {100.0, -100.0}});
  try {
    solve_phcd(theta, q, TimeGrid::make(1.0, 0.1, 1), 0.5);
    FAIL("expected a numerical-domain error");
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("regime") != std::string::npos);
    CHECK(what.find("t=") != std::string::npos);
  }
  CHECK_NOTHROW(solve_phcd(theta, q, TimeGrid::make(1.0, 0.1, 100), 0.5));
}

TEST_CASE("solve at an arbitrary time matches the grid solve") {
  const SimConfig cfg = table2_config();
  const ValueCoefficients c = solve_phcd(cfg.theta_true, cfg.q, TimeGrid::make(1.0, 0.1, 10), cfg.xi);
  const CoefficientState s = solve_phcd_at(cfg.theta_true, cfg.q, 1.0, 0.3, cfg.xi, 70);
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(s.p(i) == doctest::Approx(c.p(3, i)).epsilon(1e-12));
    CHECK(s.c(i) == doctest::Approx(c.c(3, i)).epsilon(1e-10));
    CHECK(s.d(i) == doctest::Approx(c.d(3, i)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(solve_phcd_at(cfg.theta_true, cfg.q, 1.0, 1.5, cfg.xi, 10), ArgumentError);
}

TEST_CASE("coefficient CSV layout") {
  const SimConfig cfg = table1_config();
  std::ostringstream os;
  write_coefficients_csv(os, solve_phcd(cfg.theta_true, cfg.q, cfg.grid, cfg.xi));
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,regime,P,H,C,D");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 22);
}
