#include "selkov/ops_check.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <random>

namespace selkov {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Field random_field(std::mt19937_64& rng, int n, Boundary b, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Field f(n, b);
  for (int i = -n; i <= n; ++i) f.at(i) = U(rng);
  return f;
}

void record(OpsCheckResult& r, double defect) {
  ++r.trials;
  if (!(defect <= r.tolerance)) ++r.failures;
  if (std::isnan(defect) || defect > r.worst) r.worst = defect;
}

// Per-site formulas of the implicit operator on blocks (u then v), with its
// own neighbor indexing so it shares nothing with the library operator.
struct DenseMap {
  const ModelParams& m;
  double dt;
  int sites;
  bool periodic;

  double at(const Eigen::VectorXd& x, int k) const {
    if (periodic) return x(((k % sites) + sites) % sites);
    return (k < 0 || k >= sites) ? 0.0 : x(k);
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd u = z.head(sites), v = z.tail(sites);
    Eigen::VectorXd out(2 * sites);
    for (int k = 0; k < sites; ++k) {
      const double lu = -at(u, k - 1) + 2 * u(k) - at(u, k + 1);
      const double lv = -at(v, k - 1) + 2 * v(k) - at(v, k + 1);
      const double u2p = std::pow(u(k), 2 * m.p);
      const double F = u2p * v(k), G = u2p * u(k);
      out(k) = u(k) + dt * (m.d1 * lu + m.a1 * u(k) - m.b1 * F + m.b2 * G);
      out(sites + k) = v(k) + dt * (m.d2 * lv + m.a2 * v(k) + m.b1 * F - m.b2 * G);
    }
    return out;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& d, Eigen::VectorXd z) const {
    const double h = 1e-6;
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd r = (*this)(z) - d;
      if (r.norm() < 1e-14 * std::max(1.0, d.norm())) break;
      Eigen::MatrixXd J(z.size(), z.size());
      for (Eigen::Index c = 0; c < z.size(); ++c) {
        Eigen::VectorXd zp = z, zm = z;
        zp(c) += h;
        zm(c) -= h;
        J.col(c) = ((*this)(zp) - (*this)(zm)) / (2 * h);
      }
      Eigen::VectorXd dz = J.partialPivLu().solve(-r);
      // Halve until the residual drops; the map is monotone so this terminates.
      double t = 1.0;
      while (t > 1e-8 && ((*this)(z + t * dz) - d).norm() >= r.norm()) t *= 0.5;
      z += t * dz;
      if ((t * dz).norm() < 1e-15 * std::max(1.0, z.norm())) break;
    }
    return z;
  }
};

}  // namespace

std::vector<OpsCheckResult> run_ops_check(const ModelParams& params, const SchemeConfig& cfg, std::uint64_t seed,
                                          const OpsCheckSizes& sizes) {
  std::mt19937_64 rng(seed);
  std::vector<OpsCheckResult> out;
  const Boundary modes[] = {Boundary::ZeroPad, Boundary::Periodic};

  for (Boundary b : modes) {
    const auto t0 = Clock::now();
    OpsCheckResult bbs{"operators", "A = B B*", to_string(b), 0, 0, 0.0, 1e-12};
    OpsCheckResult bsb{"operators", "A = B* B", to_string(b), 0, 0, 0.0, 1e-12};
    OpsCheckResult adj{"operators", "(B* u, v) = (u, B v)", to_string(b), 0, 0, 0.0, 1e-12};
    OpsCheckResult pos{"operators", "(A u, u) >= 0", to_string(b), 0, 0, 0.0, 1e-12};
    OpsCheckResult bnd{"operators", "||A u|| <= 4 ||u||", to_string(b), 0, 0, 0.0, 1e-12};
    for (std::size_t t = 0; t < sizes.operator_fields; ++t) {
      const int n = static_cast<int>(rng() % 16);
      const Field u = random_field(rng, n, b, 5.0), v = random_field(rng, n, b, 5.0);
      const Field Au = apply_laplacian(u);
      const double un = std::sqrt(squared_norm(u)), vn = std::sqrt(squared_norm(v));
      const double an = std::max(1e-300, std::sqrt(squared_norm(Au)));
      // B and B* push ZeroPad support one site outward; compose on the extension.
      const Field ue = u.resized(n + (b == Boundary::ZeroPad ? 1 : 0));
      const Field p1 = apply_forward_difference(apply_backward_difference(ue)).resized(n);
      const Field p2 = apply_backward_difference(apply_forward_difference(ue)).resized(n);
      record(bbs, (p1.values() - Au.values()).norm() / an);
      record(bsb, (p2.values() - Au.values()).norm() / an);
      record(adj, std::abs(inner(apply_backward_difference(u), v) - inner(u, apply_forward_difference(v))) /
                      std::max(1e-300, un * vn));
      record(pos, -inner(Au, u) / std::max(1e-300, un * un));
      record(bnd, std::sqrt(squared_norm(Au)) / std::max(1e-300, un) / 4.0 - 1.0);
    }
    const double s = seconds_since(t0);
    for (OpsCheckResult* r : {&bbs, &bsb, &adj, &pos, &bnd}) {
      r->seconds = s;
      out.push_back(*r);
    }
  }

  {
    const auto t0 = Clock::now();
    OpsCheckResult sign{"inequality", "2 b1 b2 x^(2p+1) y <= x^(2p) (b2^2 x^2 + b1^2 y^2)", "", 0, 0, 0.0, 1e-12};
    std::uniform_real_distribution<double> X(-3.0, 3.0), C(0.05, 5.0);
    for (std::size_t t = 0; t < sizes.sign_tuples; ++t) {
      const double x = X(rng), y = X(rng), b1 = C(rng), b2 = C(rng);
      const int p = 1 + static_cast<int>(rng() % 3);
      const double scale = std::pow(x, 2 * p) * (b2 * b2 * x * x + b1 * b1 * y * y);
      record(sign, scale > 0 ? check_sign_inequality(x, y, b1, b2, p) / scale : check_sign_inequality(x, y, b1, b2, p));
    }
    sign.seconds = seconds_since(t0);
    out.push_back(sign);
  }

  const WeightedGeometry geo = params.geometry();
  for (Boundary b : modes) {
    const auto t0 = Clock::now();
    OpsCheckResult co{"coercivity", "<psi, G psi> >= (1 + lambda dt) ||psi||^2", to_string(b), 0, 0, 0.0, 1e-12};
    std::uniform_real_distribution<double> R(0.0, 100.0);
    for (std::size_t t = 0; t < sizes.coercive_states; ++t) {
      const int n = 1 + static_cast<int>(rng() % 10);
      State psi{random_field(rng, n, b, 1.0), random_field(rng, n, b, 1.0)};
      const double scale = R(rng) / std::max(1e-300, std::sqrt(weighted_norm_sq(geo, psi)));
      psi.u.values() *= scale;
      psi.v.values() *= scale;
      SchemeConfig c = cfg;
      c.n_sites = n;
      c.boundary = b;
      const double lhs = weighted_inner(geo, psi, implicit_operator(params, c, psi));
      const double rhs = (1.0 + params.lambda() * cfg.dt) * weighted_norm_sq(geo, psi);
      record(co, (rhs - lhs) / std::max(1e-300, rhs));
    }
    co.seconds = seconds_since(t0);
    out.push_back(co);
  }

  for (Boundary b : modes) {
    const auto t0 = Clock::now();
    OpsCheckResult eq{"solver", "solve_implicit = dense Newton in ||.||_X", to_string(b), 0, 0, 0.0, 1e-8};
    OpsCheckResult res{"solver", "accepted residual <= 1e-10", to_string(b), 0, 0, 0.0, 1e-10};
    for (int n = 0; n <= 2; ++n) {
      SchemeConfig c = cfg;
      c.n_sites = n;
      c.boundary = b;
      const int sites = 2 * n + 1;
      const DenseMap dense{params, cfg.dt, sites, b == Boundary::Periodic};
      for (std::size_t t = 0; t < sizes.solver_rhs; ++t) {
        const RightHandSide D{random_field(rng, n, b, 2.0), random_field(rng, n, b, 2.0)};
        const State guess{D.D1, D.D2};
        const SolveResult got = solve_implicit(params, c, D, guess);
        Eigen::VectorXd d(2 * sites);
        d << D.D1.values(), D.D2.values();
        const Eigen::VectorXd z = dense.solve(d, d);
        const State ref{Field(Eigen::VectorXd(z.head(sites)), b), Field(Eigen::VectorXd(z.tail(sites)), b)};
        record(eq, weighted_distance(geo, got.state, ref));
        const State G = implicit_operator(params, c, got.state);
        const State r{Field(Eigen::VectorXd(G.u.values() - D.D1.values()), b),
                      Field(Eigen::VectorXd(G.v.values() - D.D2.values()), b)};
        record(res, std::sqrt(weighted_norm_sq(geo, r)));
      }
    }
    const double s = seconds_since(t0);
    eq.seconds = res.seconds = s;
    out.push_back(eq);
    out.push_back(res);
  }
  return out;
}

}  // namespace selkov
