#pragma once

// Continuous-time Markov chain machinery for market regimes.
//
// Regimes are 0-based inside the library; files and the CLI use 1..l.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "emvrs/random.hpp"

namespace emvrs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Generator Q of a continuous-time Markov chain (rates in 1/year).
class GeneratorMatrix {
 public:
  /// Single-regime generator Q = [0].
  GeneratorMatrix() : q_(Matrix::Zero(1, 1)) {}
  /// Validates off-diagonals >= 0 and zero row sums (tolerance 1e-12 relative
  /// to the row scale). The diagonal is then reset to minus the off-diagonal
  /// row sum so rows sum to zero exactly up to rounding.
  explicit GeneratorMatrix(Matrix q);

  /// Single-regime generator Q = [0].
  static GeneratorMatrix single();
  static GeneratorMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return static_cast<std::size_t>(q_.rows()); }
  const Matrix& matrix() const { return q_; }
  double operator()(std::size_t i, std::size_t j) const { return q_(i, j); }

 private:
  Matrix q_;
};

/// P(t) = exp(tQ) via scaling and squaring with a diagonal Pade approximant.
Matrix transition_matrix(const GeneratorMatrix& q, double t);

/// Closed form for two regimes. Throws ArgumentError unless l == 2.
Matrix transition_matrix_two_state(const GeneratorMatrix& q, double t);

/// Pade-based matrix exponential exposed for reuse (general square matrices).
Matrix expm(const Matrix& a);

/// Stationary distribution pi of a row-stochastic matrix (pi P = pi).
Vector stationary_distribution(const Matrix& p);

struct RegimePath {
  std::vector<std::size_t> alphas;  ///< K+1 regime indices, 0-based
  double dt = 0.0;
  std::uint64_t seed = 0;

  std::size_t steps() const { return alphas.empty() ? 0 : alphas.size() - 1; }
};

/// Draws a categorical successor for each step from the row of exp(dt Q).
RegimePath sample_regime_path(const GeneratorMatrix& q, double dt, std::size_t steps,
                              std::size_t alpha0, std::uint64_t seed);

/// Same, consuming an existing engine (for callers that manage streams).
RegimePath sample_regime_path(const GeneratorMatrix& q, double dt, std::size_t steps,
                              std::size_t alpha0, Rng& rng);

/// Categorical draw from a probability row.
std::size_t sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs, Rng& rng);

}  // namespace emvrs
