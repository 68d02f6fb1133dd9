#pragma once

// Shared fixtures for the test binaries: random fields, a dissipative parameter
// set, and a dense brute-force reference for the implicit solve that never
// touches the library's operator code.

#include <Eigen/Dense>

#include <random>

#include "selkov/lattice.hpp"
#include "selkov/measure.hpp"
#include "selkov/model.hpp"
#include "selkov/scheme.hpp"

namespace selkov::testing {

inline Field random_field(std::mt19937_64& rng, int n, Boundary b, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Field f(n, b);
  for (int i = -n; i <= n; ++i) f.at(i) = U(rng);
  return f;
}

inline State random_state(std::mt19937_64& rng, int n, Boundary b, double scale = 1.0) {
  return {random_field(rng, n, b, scale), random_field(rng, n, b, scale)};
}

inline Field box(int radius, double amplitude) {
  return Field::constant(radius, Boundary::ZeroPad, amplitude);
}

/// a1 = a2 = 1, b1 = b2 = 1, p = 1, compact forcing and tanh noise.
inline ModelParams dissipative_params(double beta = 0.2) {
  ModelParams m;
  m.d1 = 1.0;
  m.d2 = 1.0;
  m.a1 = 1.0;
  m.a2 = 1.0;
  m.b1 = 1.0;
  m.b2 = 1.0;
  m.p = 1;
  m.f = box(4, 0.6);
  m.g = box(4, 0.2);
  m.h = box(4, 0.1);
  m.delta = box(4, 0.1);
  m.beta = beta;
  m.sigma_family = SigmaFamily::Tanh;
  m.L_sigma = m.noise().lipschitz();
  return m;
}

inline ModelParams quiet_params() {
  ModelParams m = dissipative_params(0.0);
  m.f = Field(0, Boundary::ZeroPad);
  m.g = Field(0, Boundary::ZeroPad);
  m.h = Field(0, Boundary::ZeroPad);
  m.delta = Field(0, Boundary::ZeroPad);
  m.sigma_family = SigmaFamily::Zero;
  m.L_sigma = 0.0;
  return m;
}

inline SchemeConfig scheme(double dt, int n, Boundary b) {
  SchemeConfig c;
  c.dt = dt;
  c.n_sites = n;
  c.boundary = b;
  return c;
}

/// Independent dense reference: per-site scalar formulas with explicit
/// neighbor indices, a finite-difference Jacobian, and undamped Newton with a
/// full LU solve on the 2(2N+1) unknowns (ordered u block then v block).
class DenseOracle {
 public:
  DenseOracle(const ModelParams& m, double dt, int n, Boundary b) : m_(m), dt_(dt), n_(n), b_(b) {}

  int sites() const { return 2 * n_ + 1; }

  double at(const Eigen::VectorXd& x, int k) const {
    const int s = sites();
    if (b_ == Boundary::Periodic) return x(((k % s) + s) % s);
    return (k < 0 || k >= s) ? 0.0 : x(k);
  }

  Eigen::VectorXd op(const Eigen::VectorXd& z) const {
    const int s = sites();
    const Eigen::VectorXd u = z.head(s), v = z.tail(s);
    Eigen::VectorXd out(2 * s);
    for (int k = 0; k < s; ++k) {
      const double lu = -at(u, k - 1) + 2 * u(k) - at(u, k + 1);
      const double lv = -at(v, k - 1) + 2 * v(k) - at(v, k + 1);
      double u2p = 1.0;
      for (int j = 0; j < 2 * m_.p; ++j) u2p *= u(k);
      const double F = u2p * v(k);
      const double G = u2p * u(k);
      out(k) = u(k) + dt_ * (m_.d1 * lu + m_.a1 * u(k) - m_.b1 * F + m_.b2 * G);
      out(s + k) = v(k) + dt_ * (m_.d2 * lv + m_.a2 * v(k) + m_.b1 * F - m_.b2 * G);
    }
    return out;
  }

  Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& z, double h = 1e-6) const {
    Eigen::MatrixXd J(z.size(), z.size());
    for (Eigen::Index c = 0; c < z.size(); ++c) {
      Eigen::VectorXd zp = z, zm = z;
      zp(c) += h;
      zm(c) -= h;
      J.col(c) = (op(zp) - op(zm)) / (2 * h);
    }
    return J;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& d, Eigen::VectorXd z) const {
    for (int it = 0; it < 100; ++it) {
      const Eigen::VectorXd r = op(z) - d;
      if (r.norm() < 1e-14 * std::max(1.0, d.norm())) break;
      const Eigen::VectorXd dz = fd_jacobian(z).partialPivLu().solve(-r);
      z += dz;
      if (dz.norm() < 1e-15 * std::max(1.0, z.norm())) break;
    }
    return z;
  }

  Eigen::VectorXd to_blocks(const State& s) const {
    Eigen::VectorXd z(2 * sites());
    z << s.u.values(), s.v.values();
    return z;
  }

  State from_blocks(const Eigen::VectorXd& z) const {
    return {Field(z.head(sites()), b_), Field(z.tail(sites()), b_)};
  }

 private:
  ModelParams m_;
  double dt_;
  int n_;
  Boundary b_;
};

inline EmpiricalMeasure random_measure(std::mt19937_64& rng, std::size_t n, int trunc, double scale, double shift = 0.0) {
  std::vector<State> s;
  for (std::size_t k = 0; k < n; ++k) {
    State x = random_state(rng, trunc, Boundary::ZeroPad, scale);
    x.u.values().array() += shift;
    s.push_back(std::move(x));
  }
  return EmpiricalMeasure(std::move(s));
}

inline State point(double u0, double v0) {
  State s = State::zeros(0, Boundary::ZeroPad);
  s.u.at(0) = u0;
  s.v.at(0) = v0;
  return s;
}

// Two-point problem on a grid of budgets and test-function values.
inline double dirac_grid_oracle(double d) {
  double best = 0.0;
  double lo = 0.0, hi = 1.0, bestL = 0.0;
  for (int round = 0; round < 5; ++round) {
    for (int k = 0; k <= 400; ++k) {
      const double L = lo + (hi - lo) * k / 400.0;
      const double cap = 1 - L;
      for (int m = 0; m <= 400; ++m) {
        const double v1 = -cap + 2 * cap * m / 400.0;
        const double v2 = std::max(-cap, v1 - L * d);
        if (v1 - v2 > best) {
          best = v1 - v2;
          bestL = L;
        }
      }
    }
    const double w = (hi - lo) / 200.0;
    lo = std::max(0.0, bestL - w);
    hi = std::min(1.0, bestL + w);
  }
  return best;
}

// The constant re-derived term by term from the raw parameters.
inline double moment_constant_oracle(const ModelParams& m) {
  auto sq = [](const Field& f) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < f.values().size(); ++k) s += f.values()(k) * f.values()(k);
    return s;
  };
  const double lam = std::min(m.a1, m.a2);
  const double terms = m.b2 * sq(m.f) / lam + m.b1 * sq(m.g) / lam + 2 * m.b2 * sq(m.h) + 2 * m.b1 * sq(m.h) +
                       4 * m.b2 * sq(m.delta) + 4 * m.b1 * sq(m.delta);
  return terms * 4 / lam;
}

}  // namespace selkov::testing
