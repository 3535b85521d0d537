#include "emvrs/value_odes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "emvrs/error.hpp"
#include "emvrs/io.hpp"

namespace emvrs {

TimeGrid TimeGrid::make(double horizon, double dt, std::size_t substeps) {
  if (!(horizon > 0.0) || !(dt > 0.0)) throw ArgumentError("time grid needs T > 0 and dt > 0");
  const double ratio = horizon / dt;
  const auto k = static_cast<std::size_t>(std::llround(ratio));
  TimeGrid g{horizon, dt, k, substeps};
  g.validate();
  return g;
}

void TimeGrid::validate() const {
  if (steps < 1) throw ArgumentError("time grid needs at least one step");
  if (substeps < 1) throw ArgumentError("time grid substeps must be >= 1");
  if (std::abs(static_cast<double>(steps) * dt - horizon) > 1e-12 * std::max(1.0, horizon)) {
    std::ostringstream msg;
    msg << "time grid: T = " << horizon << " is not a whole number of dt = " << dt;
    throw ArgumentError(msg.str());
  }
}

TimeGrid TimeGrid::refined(std::size_t factor, std::size_t new_substeps) const {
  if (factor < 1) throw ArgumentError("refinement factor must be >= 1");
  return TimeGrid{horizon, dt / static_cast<double>(factor), steps * factor, new_substeps};
}

CoefficientState ValueCoefficients::state(std::size_t k) const {
  CoefficientState s;
  s.p = p.row(static_cast<Eigen::Index>(k)).transpose();
  s.h = h.row(static_cast<Eigen::Index>(k)).transpose();
  s.c = c.row(static_cast<Eigen::Index>(k)).transpose();
  s.d = d.row(static_cast<Eigen::Index>(k)).transpose();
  return s;
}

namespace {

void check_positive_p(const Vector& p, double t) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) > 0.0)) {
      std::ostringstream msg;
      msg << "P(t=" << t << ", regime " << (i + 1) << ") = " << p(i) << " is not positive";
      throw NumericalError(msg.str());
    }
  }
}

// State vectors are packed as [P | H | C | D], each block of length l. The
// integrator works on flat buffers to keep the inner loop allocation-free.
class PackedSystem {
 public:
  PackedSystem(const MarketParams& theta, const GeneratorMatrix& q, double xi)
      : l_(q.size()), q_(l_ * l_), a_(l_), r_(theta.r), log_scale_(l_), xi_(xi),
        k1_(4 * l_), k2_(4 * l_), k3_(4 * l_), k4_(4 * l_), tmp_(4 * l_) {
    for (std::size_t i = 0; i < l_; ++i) {
      for (std::size_t j = 0; j < l_; ++j) {
        q_[i * l_ + j] = q.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      const double rho = theta.rho[i];
      const double sigma = theta.sigma[i];
      a_[i] = rho * rho - 2.0 * r_[i];
      log_scale_[i] = std::numbers::pi * xi / (sigma * sigma);
    }
  }

  // One backward RK4 step from t to t - step, in place.
  void step_back(std::vector<double>& y, double t, double step) {
    const std::size_t n = y.size();
    rhs(y.data(), k1_.data(), t);
    for (std::size_t m = 0; m < n; ++m) tmp_[m] = y[m] - 0.5 * step * k1_[m];
    rhs(tmp_.data(), k2_.data(), t - 0.5 * step);
    for (std::size_t m = 0; m < n; ++m) tmp_[m] = y[m] - 0.5 * step * k2_[m];
    rhs(tmp_.data(), k3_.data(), t - 0.5 * step);
    for (std::size_t m = 0; m < n; ++m) tmp_[m] = y[m] - step * k3_[m];
    rhs(tmp_.data(), k4_.data(), t - step);
    for (std::size_t m = 0; m < n; ++m) {
      y[m] -= (step / 6.0) * (k1_[m] + 2.0 * k2_[m] + 2.0 * k3_[m] + k4_[m]);
    }
  }

 private:
  void rhs(const double* y, double* out, double t) const {
    const double* p = y;
    const double* h = y + l_;
    const double* c = y + 2 * l_;
    const double* d = y + 3 * l_;
    for (std::size_t i = 0; i < l_; ++i) {
      if (!(p[i] > 0.0)) {
        std::ostringstream msg;
        msg << "P(t=" << t << ", regime " << (i + 1) << ") = " << p[i] << " is not positive";
        throw NumericalError(msg.str());
      }
    }
    for (std::size_t i = 0; i < l_; ++i) {
      const double* qi = &q_[i * l_];
      double qp = 0.0;
      double qd = 0.0;
      double jump_h = 0.0;
      double jump_c = 0.0;
      for (std::size_t j = 0; j < l_; ++j) {
        qp += qi[j] * p[j];
        qd += qi[j] * d[j];
        if (qi[j] == 0.0) continue;
        const double gap = h[j] - h[i];
        jump_h += qi[j] * p[j] * gap;
        jump_c += qi[j] * (p[j] * gap * gap + c[j]);
      }
      out[i] = a_[i] * p[i] - qp;
      out[l_ + i] = r_[i] * h[i] - jump_h / p[i];
      out[2 * l_ + i] = -jump_c;
      out[3 * l_ + i] = 0.5 * xi_ * std::log(log_scale_[i] / p[i]) - qd;
    }
  }

  std::size_t l_;
  std::vector<double> q_;
  std::vector<double> a_;
  std::vector<double> r_;
  std::vector<double> log_scale_;
  double xi_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

std::vector<double> terminal_values(std::size_t l) {
  std::vector<double> y(4 * l, 0.0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(2 * l), 1.0);
  return y;
}

void check_inputs(const MarketParams& theta, const GeneratorMatrix& q, double xi) {
  theta.validate();
  if (theta.regimes() != q.size()) {
    throw ArgumentError("market parameters and generator disagree on the regime count");
  }
  if (!(xi > 0.0)) throw ArgumentError("exploration weight xi must be > 0");
}

}  // namespace

CoefficientState phcd_derivatives(const MarketParams& theta, const GeneratorMatrix& q, double xi,
                                  const Vector& p, const Vector& h, const Vector& c,
                                  const Vector& d) {
  const Eigen::Index l = p.size();
  const Matrix& qm = q.matrix();
  CoefficientState s{p, h, c, d, Vector(l), Vector(l), Vector(l), Vector(l)};
  const Vector qp = qm * p;
  const Vector qd = qm * d;
  for (Eigen::Index i = 0; i < l; ++i) {
    const double rho = theta.rho[static_cast<std::size_t>(i)];
    const double r = theta.r[static_cast<std::size_t>(i)];
    const double sigma = theta.sigma[static_cast<std::size_t>(i)];
    double jump_h = 0.0;
    double jump_c = 0.0;
    for (Eigen::Index j = 0; j < l; ++j) {
      const double q_ij = qm(i, j);
      if (q_ij == 0.0) continue;
      const double gap = h(j) - h(i);
      jump_h += q_ij * p(j) * gap;
      jump_c += q_ij * (p(j) * gap * gap + c(j));
    }
    s.dp(i) = (rho * rho - 2.0 * r) * p(i) - qp(i);
    s.dh(i) = r * h(i) - jump_h / p(i);
    s.dc(i) = -jump_c;
    s.dd(i) = 0.5 * xi * std::log(std::numbers::pi * xi / (sigma * sigma * p(i))) - qd(i);
  }
  return s;
}

ValueCoefficients solve_phcd(const MarketParams& theta, const GeneratorMatrix& q,
                             const TimeGrid& grid, double xi) {
  check_inputs(theta, q, xi);
  grid.validate();
  const auto l = static_cast<Eigen::Index>(q.size());
  const auto rows = static_cast<Eigen::Index>(grid.points());
  ValueCoefficients out{grid, Matrix(rows, l), Matrix(rows, l), Matrix(rows, l), Matrix(rows, l)};

  PackedSystem system(theta, q, xi);
  std::vector<double> y = terminal_values(q.size());
  const double h = grid.dt / static_cast<double>(grid.substeps);
  auto store = [&](std::size_t k) {
    const auto row = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < l; ++i) {
      out.p(row, i) = y[static_cast<std::size_t>(i)];
      out.h(row, i) = y[static_cast<std::size_t>(l + i)];
      out.c(row, i) = y[static_cast<std::size_t>(2 * l + i)];
      out.d(row, i) = y[static_cast<std::size_t>(3 * l + i)];
    }
  };
  store(grid.steps);
  for (std::size_t k = grid.steps; k-- > 0;) {
    for (std::size_t s = 0; s < grid.substeps; ++s) {
      system.step_back(y, grid.t(k + 1) - static_cast<double>(s) * h, h);
    }
    store(k);
    check_positive_p(out.p.row(static_cast<Eigen::Index>(k)).transpose(), grid.t(k));
  }
  return out;
}

CoefficientState solve_phcd_at(const MarketParams& theta, const GeneratorMatrix& q, double horizon,
                               double t, double xi, std::size_t steps) {
  check_inputs(theta, q, xi);
  if (!(t >= 0.0 && t <= horizon)) throw ArgumentError("solve_phcd_at: t outside [0, T]");
  if (steps < 1) throw ArgumentError("solve_phcd_at: steps must be >= 1");
  const auto l = static_cast<Eigen::Index>(q.size());
  PackedSystem system(theta, q, xi);
  std::vector<double> y = terminal_values(q.size());
  const double h = (horizon - t) / static_cast<double>(steps);
  if (h > 0.0) {
    for (std::size_t s = 0; s < steps; ++s) {
      system.step_back(y, horizon - static_cast<double>(s) * h, h);
    }
  }
  const Eigen::Map<const Vector> packed(y.data(), 4 * l);
  check_positive_p(packed.segment(0, l), t);
  return phcd_derivatives(theta, q, xi, packed.segment(0, l), packed.segment(l, l),
                          packed.segment(2 * l, l), packed.segment(3 * l, l));
}

std::pair<Matrix, Matrix> cd_integral_form(const MarketParams& theta, const GeneratorMatrix& q,
                                           const ValueCoefficients& ph, double xi) {
  check_inputs(theta, q, xi);
  const auto l = static_cast<Eigen::Index>(q.size());
  const auto n = static_cast<Eigen::Index>(ph.grid.steps);
  const double h = ph.grid.dt;
  const Matrix& qm = q.matrix();

  // Running costs g (for C) and f (for D) at each grid point, per regime m.
  Matrix g(n + 1, l);
  Matrix f(n + 1, l);
  for (Eigen::Index k = 0; k <= n; ++k) {
    for (Eigen::Index m = 0; m < l; ++m) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < l; ++j) {
        const double gap = ph.h(k, j) - ph.h(k, m);
        acc += qm(m, j) * ph.p(k, j) * gap * gap;
      }
      g(k, m) = acc;
      const double sigma = theta.sigma[static_cast<std::size_t>(m)];
      f(k, m) = -0.5 * xi * std::log(std::numbers::pi * xi / (sigma * sigma * ph.p(k, m)));
    }
  }
  // p(n h) for every lag on the uniform grid.
  std::vector<Matrix> lag(static_cast<std::size_t>(n + 1));
  lag[0] = Matrix::Identity(l, l);
  const Matrix step = transition_matrix(q, h);
  for (Eigen::Index s = 1; s <= n; ++s) lag[static_cast<std::size_t>(s)] = lag[static_cast<std::size_t>(s - 1)] * step;

  Matrix c = Matrix::Zero(n + 1, l);
  Matrix d = Matrix::Zero(n + 1, l);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vector cacc = Vector::Zero(l);
    Vector dacc = Vector::Zero(l);
    for (Eigen::Index s = k; s <= n; ++s) {
      const double w = (s == k || s == n) ? 0.5 : 1.0;
      const Matrix& pk = lag[static_cast<std::size_t>(s - k)];
      cacc += w * (pk * g.row(s).transpose());
      dacc += w * (pk * f.row(s).transpose());
    }
    c.row(k) = h * cacc.transpose();
    d.row(k) = h * dacc.transpose();
  }
  return {c, d};
}

ValueCoefficients emv_closed_form(double sigma, double rho, double r, double xi,
                                  const TimeGrid& grid) {
  if (!(sigma > 0.0)) throw ArgumentError("emv_closed_form: sigma must be > 0");
  if (!(xi > 0.0)) throw ArgumentError("emv_closed_form: xi must be > 0");
  grid.validate();
  const auto rows = static_cast<Eigen::Index>(grid.points());
  ValueCoefficients out{grid, Matrix(rows, 1), Matrix(rows, 1), Matrix::Zero(rows, 1), Matrix(rows, 1)};
  const double a = rho * rho - 2.0 * r;
  const double big_t = grid.horizon;
  const double log_term = std::log(sigma * sigma / (std::numbers::pi * xi));
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double t = (k == rows - 1) ? big_t : grid.t(static_cast<std::size_t>(k));
    const double tau = big_t - t;
    out.p(k, 0) = std::exp(-a * tau);
    out.h(k, 0) = std::exp(-r * tau);
    out.d(k, 0) = xi * a * (big_t * big_t - t * t) / 4.0 - 0.5 * xi * (a * big_t - log_term) * tau;
  }
  return out;
}

void write_coefficients_csv(std::ostream& os, const ValueCoefficients& coeffs) {
  os << "t,regime,P,H,C,D\n";
  for (Eigen::Index k = 0; k < coeffs.p.rows(); ++k) {
    for (Eigen::Index i = 0; i < coeffs.p.cols(); ++i) {
      os << format_double(coeffs.grid.t(static_cast<std::size_t>(k))) << ',' << (i + 1) << ','
         << format_double(coeffs.p(k, i)) << ',' << format_double(coeffs.h(k, i)) << ','
         << format_double(coeffs.c(k, i)) << ',' << format_double(coeffs.d(k, i)) << '\n';
    }
  }
}

}  // namespace emvrs
