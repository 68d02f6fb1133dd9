#include "selkov/model.hpp"

#include <algorithm>

namespace selkov {

const char* to_string(SigmaFamily f) noexcept {
  switch (f) {
    case SigmaFamily::Zero: return "zero";
    case SigmaFamily::Linear: return "linear";
    case SigmaFamily::Tanh: return "tanh";
  }
  return "zero";
}

SigmaFamily sigma_family_from_string(const std::string& name) {
  if (name == "zero") return SigmaFamily::Zero;
  if (name == "linear") return SigmaFamily::Linear;
  if (name == "tanh") return SigmaFamily::Tanh;
  throw Error(ErrorKind::ParseError, "unknown sigma family '" + name + "'");
}

double weighted_distance(const WeightedGeometry& g, const State& a, const State& b) {
  const int n = std::max(a.truncation(), b.truncation());
  double su = 0.0;
  double sv = 0.0;
  for (int i = -n; i <= n; ++i) {
    const double du = a.u.extended(i) - b.u.extended(i);
    const double dv = a.v.extended(i) - b.v.extended(i);
    su += du * du;
    sv += dv * dv;
  }
  return std::sqrt(g.b2 * su + g.b1 * sv);
}

ModelParams ModelParams::restricted(int n, Boundary boundary) const {
  ModelParams out = *this;
  out.f = f.resized(n).with_boundary(boundary);
  out.g = g.resized(n).with_boundary(boundary);
  out.h = h.resized(n).with_boundary(boundary);
  out.delta = delta.resized(n).with_boundary(boundary);
  return out;
}

double ModelParams::moment_constant() const {
  const double lam = lambda();
  const double hh = squared_norm(h);
  const double dd = squared_norm(delta);
  const double inner = b2 * squared_norm(f) / lam + b1 * squared_norm(g) / lam + 2.0 * b2 * hh +
                       2.0 * b1 * hh + 4.0 * b2 * dd + 4.0 * b1 * dd;
  return inner * 4.0 / lam;
}

}  // namespace selkov
