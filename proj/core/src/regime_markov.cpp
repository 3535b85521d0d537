#include "emvrs/regime_markov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emvrs/error.hpp"

namespace emvrs {

GeneratorMatrix::GeneratorMatrix(Matrix q) : q_(std::move(q)) {
  if (q_.rows() == 0 || q_.rows() != q_.cols()) {
    throw ArgumentError("generator must be a non-empty square matrix");
  }
  const Eigen::Index l = q_.rows();
  for (Eigen::Index i = 0; i < l; ++i) {
    double off = 0.0;
    double scale = std::abs(q_(i, i));
    for (Eigen::Index j = 0; j < l; ++j) {
      if (!std::isfinite(q_(i, j))) throw ArgumentError("generator entries must be finite");
      if (i == j) continue;
      if (q_(i, j) < 0.0) {
        throw ArgumentError("generator off-diagonal q(" + std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + ") is negative");
      }
      off += q_(i, j);
      scale = std::max(scale, q_(i, j));
    }
    if (std::abs(off + q_(i, i)) > 1e-12 * std::max(1.0, scale)) {
      throw ArgumentError("generator row " + std::to_string(i + 1) + " does not sum to zero");
    }
    q_(i, i) = -off;
  }
}

GeneratorMatrix GeneratorMatrix::single() { return GeneratorMatrix(Matrix::Zero(1, 1)); }

GeneratorMatrix GeneratorMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const auto l = static_cast<Eigen::Index>(rows.size());
  Matrix q(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != l) {
      throw ArgumentError("generator rows must all have length " + std::to_string(l));
    }
    for (Eigen::Index j = 0; j < l; ++j) q(i, j) = rows[i][j];
  }
  return GeneratorMatrix(std::move(q));
}

Matrix expm(const Matrix& a) {
  // Golub & Van Loan, Algorithm 11.3.1 with a degree-8 diagonal Pade approximant.
  constexpr int kDegree = 8;
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.5))));
  const Matrix as = a / std::ldexp(1.0, squarings);

  Matrix numer = Matrix::Identity(n, n);
  Matrix denom = Matrix::Identity(n, n);
  Matrix power = Matrix::Identity(n, n);
  double c = 1.0;
  for (int k = 1; k <= kDegree; ++k) {
    c *= static_cast<double>(kDegree - k + 1) / static_cast<double>(k * (2 * kDegree - k + 1));
    power = as * power;
    numer += c * power;
    denom += ((k % 2 == 0) ? c : -c) * power;
  }
  Matrix result = denom.partialPivLu().solve(numer);
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

Matrix transition_matrix(const GeneratorMatrix& q, double t) {
  if (!(t >= 0.0)) throw ArgumentError("transition_matrix: duration must be >= 0");
  if (t == 0.0) return Matrix::Identity(q.size(), q.size());
  Matrix p = expm(t * q.matrix());
  // Clip rounding noise so every entry is a probability and rows sum to one.
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p.row(i) = p.row(i).cwiseMax(0.0).cwiseMin(1.0);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Matrix transition_matrix_two_state(const GeneratorMatrix& q, double t) {
  if (q.size() != 2) throw ArgumentError("two-state transition matrix needs l == 2");
  if (!(t >= 0.0)) throw ArgumentError("transition_matrix: duration must be >= 0");
  const double a = q(0, 1);
  const double b = q(1, 0);
  const double s = a + b;
  Matrix p(2, 2);
  if (s == 0.0) return Matrix::Identity(2, 2);
  // Eigenvalues 0 and -(a+b); decay = 1 - e^{-(a+b)t}.
  const double decay = -std::expm1(-s * t);
  p(0, 1) = a / s * decay;
  p(1, 0) = b / s * decay;
  p(0, 0) = 1.0 - p(0, 1);
  p(1, 1) = 1.0 - p(1, 0);
  return p;
}

Vector stationary_distribution(const Matrix& p) {
  const Eigen::Index n = p.rows();
  // Solve (P^T - I) pi = 0 with sum(pi) = 1 replacing the last equation.
  Matrix a = p.transpose() - Matrix::Identity(n, n);
  a.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  return a.colPivHouseholderQr().solve(b);
}

std::size_t sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const Eigen::Index n = probs.size();
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    acc += probs(j);
    if (u < acc) return static_cast<std::size_t>(j);
  }
  return static_cast<std::size_t>(n - 1);
}

RegimePath sample_regime_path(const GeneratorMatrix& q, double dt, std::size_t steps,
                              std::size_t alpha0, Rng& rng) {
  if (alpha0 >= q.size()) {
    throw ArgumentError("initial regime " + std::to_string(alpha0 + 1) + " outside 1.." +
                        std::to_string(q.size()));
  }
  if (!(dt > 0.0)) throw ArgumentError("regime path step must be > 0");
  if (steps < 1) throw ArgumentError("regime path needs at least one step");
  const Matrix p = transition_matrix(q, dt);
  RegimePath path;
  path.dt = dt;
  path.alphas.reserve(steps + 1);
  path.alphas.push_back(alpha0);
  for (std::size_t k = 0; k < steps; ++k) {
    path.alphas.push_back(sample_categorical(p.row(static_cast<Eigen::Index>(path.alphas.back())), rng));
  }
  return path;
}

RegimePath sample_regime_path(const GeneratorMatrix& q, double dt, std::size_t steps,
                              std::size_t alpha0, std::uint64_t seed) {
  Rng rng{seed};
  RegimePath path = sample_regime_path(q, dt, steps, alpha0, rng);
  path.seed = seed;
  return path;
}

}  // namespace emvrs
