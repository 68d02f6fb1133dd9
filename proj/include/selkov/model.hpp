#pragma once

// Selkov coefficients, the polynomial reaction kernels F and G, the noise
// coefficient families and the weighted phase-space geometry of X = l2 x l2.

#include <algorithm>
#include <cmath>
#include <string>

#include "selkov/lattice.hpp"

namespace selkov {

template <typename Scalar>
Scalar int_power(Scalar x, int k) noexcept {
  Scalar r(1);
  Scalar base = x;
  while (k > 0) {
    if (k & 1) r *= base;
    base *= base;
    k >>= 1;
  }
  return r;
}

/// F(u, v)_i = u_i^{2p} v_i.
template <typename Scalar>
LatticeField<Scalar> eval_F(const LatticeField<Scalar>& u, const LatticeField<Scalar>& v, int p) {
  detail::require_same_shape(u, v, "eval_F");
  LatticeField<Scalar> out(u.truncation(), u.boundary());
  out.values() = u.values().unaryExpr([p](Scalar x) { return int_power(x, 2 * p); }).cwiseProduct(
      v.values());
  if (!out.is_finite()) throw Error(ErrorKind::NonFiniteState, "F(u, v) overflowed");
  return out;
}

/// G(u)_i = u_i^{2p+1}.
template <typename Scalar>
LatticeField<Scalar> eval_G(const LatticeField<Scalar>& u, int p) {
  LatticeField<Scalar> out(u.truncation(), u.boundary());
  out.values() = u.values().unaryExpr([p](Scalar x) { return int_power(x, 2 * p + 1); });
  if (!out.is_finite()) throw Error(ErrorKind::NonFiniteState, "G(u) overflowed");
  return out;
}

enum class SigmaFamily : std::uint8_t { Zero, Linear, Tanh };

const char* to_string(SigmaFamily f) noexcept;
SigmaFamily sigma_family_from_string(const std::string& name);

/// sigma_i(s): Zero -> 0, Linear -> beta s, Tanh -> delta_i tanh(s) + beta s.
struct NoiseCoefficient {
  SigmaFamily family = SigmaFamily::Zero;
  double beta = 0.0;
  Field delta;  // growth offsets delta_i >= 0, zero beyond their support

  double operator()(int site, double s) const {
    switch (family) {
      case SigmaFamily::Zero:
        return 0.0;
      case SigmaFamily::Linear:
        return beta * s;
      case SigmaFamily::Tanh:
        return delta.extended(site) * std::tanh(s) + beta * s;
    }
    return 0.0;
  }

  /// Certified Lipschitz constant: beta (Linear), beta + sup delta (Tanh), 0 (Zero).
  double lipschitz() const {
    switch (family) {
      case SigmaFamily::Zero:
        return 0.0;
      case SigmaFamily::Linear:
        return beta;
      case SigmaFamily::Tanh:
        return beta + (delta.size() ? delta.values().cwiseAbs().maxCoeff() : 0.0);
    }
    return 0.0;
  }

  /// Linear-growth slope of |sigma_i(s)| <= delta_i + slope |s|.
  double growth_slope() const { return family == SigmaFamily::Zero ? 0.0 : beta; }
};

inline Field eval_sigma(const NoiseCoefficient& coeff, const Field& u) {
  Field out(u.truncation(), u.boundary());
  if (coeff.family == SigmaFamily::Zero) return out;
  const int n = u.truncation();
  for (int i = -n; i <= n; ++i) out.at(i) = coeff(i, u[i]);
  return out;
}

/// Weights of <psi1, psi2> = b2 (u1, u2) + b1 (v1, v2).
struct WeightedGeometry {
  double b1 = 1.0;
  double b2 = 1.0;
};

template <typename Scalar>
Scalar weighted_inner(const WeightedGeometry& g, const PairState<Scalar>& a,
                      const PairState<Scalar>& b) {
  if (!a.u.same_shape(b.u)) {
    throw Error(ErrorKind::MismatchedShapes, "weighted_inner: states are not aligned");
  }
  return Scalar(g.b2) * a.u.values().dot(b.u.values()) +
         Scalar(g.b1) * a.v.values().dot(b.v.values());
}

template <typename Scalar>
Scalar weighted_norm_sq(const WeightedGeometry& g, const PairState<Scalar>& a) {
  return Scalar(g.b2) * a.u.values().squaredNorm() + Scalar(g.b1) * a.v.values().squaredNorm();
}

/// ||psi1 - psi2||_X for states of possibly different truncation (zero extension).
double weighted_distance(const WeightedGeometry& g, const State& a, const State& b);

/// Weighted tail energy sum_{|i|>cutoff} (b2 |u_i|^2 + b1 |v_i|^2).
inline double weighted_tail(const WeightedGeometry& g, const State& s, int cutoff) {
  return g.b2 * tail_squared_norm(s.u, cutoff) + g.b1 * tail_squared_norm(s.v, cutoff);
}

/// 2 b1 b2 x^{2p+1} y - x^{2p} (b2^2 x^2 + b1^2 y^2); never positive.
inline double check_sign_inequality(double x, double y, double b1, double b2, int p) {
  const double x2p = int_power(x, 2 * p);
  return 2.0 * b1 * b2 * x2p * x * y - x2p * (b2 * b2 * x * x + b1 * b1 * y * y);
}

struct ModelParams {
  double d1 = 1.0;
  double d2 = 1.0;
  double a1 = 1.0;
  double a2 = 1.0;
  double b1 = 1.0;
  double b2 = 1.0;
  int p = 1;
  Field f;
  Field g;
  Field h;
  Field delta;
  double beta = 0.0;
  double L_sigma = 0.0;
  SigmaFamily sigma_family = SigmaFamily::Zero;

  double lambda() const noexcept { return std::min(a1, a2); }

  WeightedGeometry geometry() const noexcept { return {b1, b2}; }

  NoiseCoefficient noise() const { return {sigma_family, beta, delta}; }

  /// Copy with the forcing and noise sequences masked/extended to truncation n.
  ModelParams restricted(int n, Boundary boundary) const;

  /// (b2||f||^2/lambda + b1||g||^2/lambda + 2b2||h||^2 + 2b1||h||^2
  ///  + 4b2||delta||^2 + 4b1||delta||^2) * 4/lambda.
  double moment_constant() const;
};

}  // namespace selkov
