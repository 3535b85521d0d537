#pragma once

// Backward ODE systems for the value-function coefficients P, H, C, D:
//
//   P' = (rho^2 - 2r) P - Q P                       P(T) = 1
//   H' = r H - (1/P) sum_j q_ij P_j (H_j - H_i)      H(T) = 1
//   C' = -sum_j q_ij [P_j (H_j - H_i)^2 + C_j]       C(T) = 0
//   D' = (xi/2) log(pi xi / (sigma^2 P)) - Q D       D(T) = 0
//
// integrated with fixed-step RK4 from T down to 0.

#include <cstddef>
#include <iosfwd>
#include <utility>

#include "emvrs/market_params.hpp"
#include "emvrs/regime_markov.hpp"

namespace emvrs {

struct TimeGrid {
  double horizon = 1.0;       ///< T, years
  double dt = 0.1;            ///< rebalancing step, years
  std::size_t steps = 10;     ///< K = T / dt
  std::size_t substeps = 10;  ///< RK4 steps per dt

  /// Builds a grid from T and dt; throws ArgumentError unless T = K dt within 1e-12.
  static TimeGrid make(double horizon, double dt, std::size_t substeps = 10);

  double t(std::size_t k) const { return static_cast<double>(k) * dt; }
  std::size_t points() const { return steps + 1; }
  /// Grid with dt / factor and the same horizon.
  TimeGrid refined(std::size_t factor, std::size_t new_substeps = 1) const;
  void validate() const;
};

/// P, H, C, D at one time point for all regimes, with their time derivatives.
struct CoefficientState {
  Vector p, h, c, d;
  Vector dp, dh, dc, dd;
};

struct ValueCoefficients {
  TimeGrid grid;
  Matrix p, h, c, d;  ///< (K+1) x l, row k is time t_k

  std::size_t regimes() const { return static_cast<std::size_t>(p.cols()); }
  CoefficientState state(std::size_t k) const;
};

/// Right-hand sides of the four systems at the given values (derivative fields
/// of the returned state are filled, value fields copied).
CoefficientState phcd_derivatives(const MarketParams& theta, const GeneratorMatrix& q, double xi,
                                  const Vector& p, const Vector& h, const Vector& c,
                                  const Vector& d);

/// Solves all four systems jointly. Throws NumericalError if P(t,i) <= 0 is met.
ValueCoefficients solve_phcd(const MarketParams& theta, const GeneratorMatrix& q,
                             const TimeGrid& grid, double xi);

/// Integrates from T to an arbitrary t in [0, T] with `steps` RK4 steps and
/// returns values plus derivatives there.
CoefficientState solve_phcd_at(const MarketParams& theta, const GeneratorMatrix& q, double horizon,
                               double t, double xi, std::size_t steps);

/// C and D from their Feynman-Kac integral representation, using P and H from
/// `ph` (C, D fields ignored) and composite trapezoid quadrature over ph's grid.
std::pair<Matrix, Matrix> cd_integral_form(const MarketParams& theta, const GeneratorMatrix& q,
                                           const ValueCoefficients& ph, double xi);

/// Single-regime closed forms.
ValueCoefficients emv_closed_form(double sigma, double rho, double r, double xi,
                                  const TimeGrid& grid);

/// CSV with header t,regime,P,H,C,D (regime 1-based), full precision.
void write_coefficients_csv(std::ostream& os, const ValueCoefficients& coeffs);

}  // namespace emvrs
