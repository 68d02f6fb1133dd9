#pragma once

// Lattice value types and the exact linear kernels A, B, B* on truncated
// one-dimensional lattices. Sites run over i = -N..N and site 0 sits at the
// array center, so site i is stored at index i + N.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

#include "selkov/errors.hpp"

namespace selkov {

/// ZeroPad: the field is an element of l2 extended by zeros outside |i| <= N.
/// Periodic: sites -N and N are neighbors (the wrap-around closure).
enum class Boundary : std::uint8_t { ZeroPad, Periodic };

inline const char* to_string(Boundary b) noexcept {
  return b == Boundary::ZeroPad ? "zero_pad" : "periodic";
}

template <typename Scalar>
class LatticeField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  LatticeField() : values_(Vector::Zero(1)) {}

  LatticeField(int truncation, Boundary boundary)
      : values_(Vector::Zero(2 * checked_truncation(truncation) + 1)),
        truncation_(truncation),
        boundary_(boundary) {}

  /// Adopts `values`; the length must be odd (2N+1) and every entry finite.
  LatticeField(Vector values, Boundary boundary) : values_(std::move(values)), boundary_(boundary) {
    if (values_.size() % 2 != 1) {
      throw Error(ErrorKind::MismatchedShapes,
                  "lattice field length must be 2N+1, got " + std::to_string(values_.size()));
    }
    truncation_ = static_cast<int>((values_.size() - 1) / 2);
    if (!values_.allFinite()) throw Error(ErrorKind::NonFiniteState, "lattice field has NaN/Inf");
  }

  static LatticeField zeros(int truncation, Boundary boundary) { return {truncation, boundary}; }

  static LatticeField constant(int truncation, Boundary boundary, Scalar c) {
    LatticeField f(truncation, boundary);
    f.values_.setConstant(c);
    return f;
  }

  /// Unit vector at `site` (|site| <= N).
  static LatticeField basis(int truncation, Boundary boundary, int site) {
    LatticeField f(truncation, boundary);
    f.at(site) = Scalar(1);
    return f;
  }

  int truncation() const noexcept { return truncation_; }
  Boundary boundary() const noexcept { return boundary_; }
  Eigen::Index size() const noexcept { return values_.size(); }

  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }

  /// Site-indexed access, i in [-N, N].
  Scalar operator[](int site) const { return values_(index_of(site)); }
  Scalar& at(int site) { return values_(index_of(site)); }

  /// Value at any integer site; zero outside the box (natural zero extension of l2).
  Scalar extended(int site) const noexcept {
    return (site < -truncation_ || site > truncation_) ? Scalar(0) : values_(site + truncation_);
  }

  bool is_finite() const { return values_.allFinite(); }

  /// Same field on truncation `n`: zero-extends when n > N, restricts (masks) when n < N.
  LatticeField resized(int n) const {
    LatticeField out(n, boundary_);
    for (int i = -n; i <= n; ++i) out.at(i) = extended(i);
    return out;
  }

  LatticeField with_boundary(Boundary b) const {
    LatticeField out = *this;
    out.boundary_ = b;
    return out;
  }

  /// Largest |i| with a nonzero entry, or -1 for the zero field.
  int support_radius() const noexcept {
    for (int r = truncation_; r >= 0; --r) {
      if (values_(r + truncation_) != Scalar(0) || values_(truncation_ - r) != Scalar(0)) return r;
    }
    return -1;
  }

  bool same_shape(const LatticeField& o) const noexcept {
    return truncation_ == o.truncation_ && boundary_ == o.boundary_;
  }

  friend bool operator==(const LatticeField& a, const LatticeField& b) {
    return a.same_shape(b) && a.values_ == b.values_;
  }

 private:
  static int checked_truncation(int n) {
    if (n < 0) throw Error(ErrorKind::MismatchedShapes, "truncation must be >= 0");
    return n;
  }

  Eigen::Index index_of(int site) const {
    if (site < -truncation_ || site > truncation_) {
      throw Error(ErrorKind::MismatchedShapes, "site " + std::to_string(site) + " outside [-" +
                                                   std::to_string(truncation_) + ", " +
                                                   std::to_string(truncation_) + "]");
    }
    return site + truncation_;
  }

  Vector values_;
  int truncation_ = 0;
  Boundary boundary_ = Boundary::ZeroPad;
};

/// The lattice state psi = (u, v).
template <typename Scalar>
struct PairState {
  LatticeField<Scalar> u;
  LatticeField<Scalar> v;

  PairState() = default;
  PairState(LatticeField<Scalar> u_, LatticeField<Scalar> v_) : u(std::move(u_)), v(std::move(v_)) {
    if (!u.same_shape(v)) {
      throw Error(ErrorKind::MismatchedShapes, "u and v must share truncation and boundary");
    }
  }

  static PairState zeros(int truncation, Boundary boundary) {
    return {LatticeField<Scalar>(truncation, boundary), LatticeField<Scalar>(truncation, boundary)};
  }

  int truncation() const noexcept { return u.truncation(); }
  Boundary boundary() const noexcept { return u.boundary(); }
  bool is_finite() const { return u.is_finite() && v.is_finite(); }

  PairState resized(int n) const { return {u.resized(n), v.resized(n)}; }
  PairState with_boundary(Boundary b) const { return {u.with_boundary(b), v.with_boundary(b)}; }

  friend bool operator==(const PairState& a, const PairState& b) { return a.u == b.u && a.v == b.v; }
};

using Field = LatticeField<double>;
using State = PairState<double>;

namespace detail {

template <typename Scalar>
void require_same_shape(const LatticeField<Scalar>& a, const LatticeField<Scalar>& b,
                        const char* where) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::MismatchedShapes, std::string(where) + ": fields are not aligned");
  }
}

// Neighbor lookup honoring the boundary closure: ZeroPad returns 0 outside the
// box, Periodic wraps i = N+1 -> -N and i = -N-1 -> N.
template <typename Scalar>
Scalar neighbor(const LatticeField<Scalar>& u, int site) noexcept {
  const int n = u.truncation();
  if (u.boundary() == Boundary::Periodic) {
    const int period = 2 * n + 1;
    int k = (site + n) % period;
    if (k < 0) k += period;
    return u.values()(k);
  }
  return u.extended(site);
}

}  // namespace detail

/// (Au)_i = -u_{i-1} + 2u_i - u_{i+1}; A_N with wrap-around for Periodic fields.
template <typename Scalar>
LatticeField<Scalar> apply_laplacian(const LatticeField<Scalar>& u) {
  LatticeField<Scalar> out(u.truncation(), u.boundary());
  const int n = u.truncation();
  for (int i = -n; i <= n; ++i) {
    out.at(i) = -detail::neighbor(u, i - 1) + Scalar(2) * u[i] - detail::neighbor(u, i + 1);
  }
  return out;
}

/// (Bu)_i = u_{i+1} - u_i.
template <typename Scalar>
LatticeField<Scalar> apply_forward_difference(const LatticeField<Scalar>& u) {
  LatticeField<Scalar> out(u.truncation(), u.boundary());
  const int n = u.truncation();
  for (int i = -n; i <= n; ++i) out.at(i) = detail::neighbor(u, i + 1) - u[i];
  return out;
}

/// (B*u)_i = u_{i-1} - u_i.
template <typename Scalar>
LatticeField<Scalar> apply_backward_difference(const LatticeField<Scalar>& u) {
  LatticeField<Scalar> out(u.truncation(), u.boundary());
  const int n = u.truncation();
  for (int i = -n; i <= n; ++i) out.at(i) = detail::neighbor(u, i - 1) - u[i];
  return out;
}

/// l2 inner product (u, v) over the box.
template <typename Scalar>
Scalar inner(const LatticeField<Scalar>& u, const LatticeField<Scalar>& v) {
  detail::require_same_shape(u, v, "inner");
  return u.values().dot(v.values());
}

template <typename Scalar>
Scalar squared_norm(const LatticeField<Scalar>& u) {
  return u.values().squaredNorm();
}

/// Sum of |u_i|^2 over sites with |i| > cutoff.
template <typename Scalar>
Scalar tail_squared_norm(const LatticeField<Scalar>& u, int cutoff) {
  Scalar s(0);
  for (int i = cutoff + 1; i <= u.truncation(); ++i) {
    if (i < 0) continue;
    if (i == 0) {
      s += u[0] * u[0];
      continue;
    }
    s += u[i] * u[i] + u[-i] * u[-i];
  }
  return s;
}

}  // namespace selkov
