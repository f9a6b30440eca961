#include "phsim/monotone.hpp"

#include <algorithm>
#include <cmath>

#include "phsim/rng.hpp"

namespace phsim {
namespace {

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// Root of r + alpha r^p = s for s >= 0, r >= 0. Strictly increasing in r;
// safeguarded Newton from a bisection bracket.
double power_resolve_pos(double alpha, double p, double s) {
  if (s <= 0.0) return 0.0;
  double lo = 0.0, hi = std::min(s, std::pow(s / alpha, 1.0 / p) + 1e-30);
  hi = std::max(hi, 1e-300);
  while (hi + alpha * std::pow(hi, p) < s) hi *= 2.0;
  double r = std::min(s, hi);
  for (int it = 0; it < 200; ++it) {
    const double f = r + alpha * std::pow(r, p) - s;
    if (f > 0) hi = r; else lo = r;
    const double df = 1.0 + alpha * p * std::pow(r, p - 1.0);
    double step = f / df;
    double rn = r - step;
    if (!(rn > lo && rn < hi)) rn = 0.5 * (lo + hi);
    if (std::abs(rn - r) <= 1e-16 * (1.0 + std::abs(rn))) { r = rn; break; }
    r = rn;
  }
  return r;
}

}  // namespace

MonotoneMap MonotoneMap::zero(int n) { return MonotoneMap(Kind::Zero, n); }

MonotoneMap MonotoneMap::linear(Matrix S) {
  if (S.rows() != S.cols()) throw DimensionError("MonotoneMap::linear: square matrix required");
  MonotoneMap m(Kind::Linear, static_cast<int>(S.rows()));
  m.S_ = std::move(S);
  return m;
}

MonotoneMap MonotoneMap::relay(Vector levels) {
  if ((levels.array() < 0).any()) throw std::invalid_argument("relay: levels must be >= 0");
  MonotoneMap m(Kind::Relay, static_cast<int>(levels.size()));
  m.levels_ = std::move(levels);
  return m;
}

MonotoneMap MonotoneMap::relay(int n, double level) {
  return relay(Vector::Constant(n, level));
}

MonotoneMap MonotoneMap::saturation(int n, double gain, double u_max) {
  if (gain <= 0 || u_max <= 0) throw std::invalid_argument("saturation: gain and u_max must be > 0");
  MonotoneMap m(Kind::Saturation, n);
  m.gain_ = gain;
  m.u_max_ = u_max;
  return m;
}

MonotoneMap MonotoneMap::deadzone(int n, double width) {
  if (width < 0) throw std::invalid_argument("deadzone: width must be >= 0");
  MonotoneMap m(Kind::Deadzone, n);
  m.width_ = width;
  return m;
}

MonotoneMap MonotoneMap::power_law(int n, double p) {
  if (p < 1) throw std::invalid_argument("power_law: p must be >= 1");
  MonotoneMap m(Kind::PowerLaw, n);
  m.p_ = p;
  return m;
}

MonotoneMap MonotoneMap::blocks(std::vector<MonotoneMap> parts) {
  int n = 0;
  for (const auto& p : parts) n += p.dim();
  MonotoneMap m(Kind::Blocks, n);
  m.parts_ = std::move(parts);
  return m;
}

bool MonotoneMap::scalar_blocks() const {
  switch (kind_) {
    case Kind::Linear: return n_ == 1;
    case Kind::Blocks:
      return std::all_of(parts_.begin(), parts_.end(),
                         [](const MonotoneMap& p) { return p.scalar_blocks(); });
    default: return n_ == 1;
  }
}

double MonotoneMap::resolve1(double alpha, double v, int i) const {
  switch (kind_) {
    case Kind::Zero: return v;
    case Kind::Relay:
      return sgn(v) * std::max(std::abs(v) - alpha * levels_(i), 0.0);
    case Kind::Saturation: {
      const double k = gain_, um = u_max_;
      if (std::abs(v) <= um * (1.0 + alpha * k) / k) return v / (1.0 + alpha * k);
      return v - alpha * um * sgn(v);
    }
    case Kind::Deadzone: {
      if (std::abs(v) <= width_) return v;
      return (v + alpha * width_ * sgn(v)) / (1.0 + alpha);
    }
    case Kind::PowerLaw: {
      return sgn(v) * power_resolve_pos(alpha, p_, std::abs(v));
    }
    default: throw std::logic_error("resolve1: not a scalar kind");
  }
}

Vector MonotoneMap::resolve(double alpha, const Vector& v) const {
  if (alpha <= 0) throw std::invalid_argument("resolve: alpha must be > 0");
  if (v.size() != n_) throw DimensionError("resolve: dimension mismatch");
  switch (kind_) {
    case Kind::Zero: return v;
    case Kind::Linear: {
      Matrix A = Matrix::Identity(n_, n_) + alpha * S_;
      return solve_dense(A, Matrix(v)).col(0);
    }
    case Kind::Blocks: {
      Vector w(n_);
      int off = 0;
      for (const auto& p : parts_) {
        w.segment(off, p.dim()) = p.resolve(alpha, v.segment(off, p.dim()));
        off += p.dim();
      }
      return w;
    }
    default: {
      Vector w(n_);
      for (int i = 0; i < n_; ++i) w(i) = resolve1(alpha, v(i), i);
      return w;
    }
  }
}

double MonotoneMap::minsec1(double v, int i) const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Relay: return v == 0.0 ? 0.0 : levels_(i) * sgn(v);
    case Kind::Saturation: return std::clamp(gain_ * v, -u_max_, u_max_);
    case Kind::Deadzone: return sgn(v) * std::max(std::abs(v) - width_, 0.0);
    case Kind::PowerLaw: return sgn(v) * std::pow(std::abs(v), p_);
    default: throw std::logic_error("minsec1: not a scalar kind");
  }
}

Vector MonotoneMap::minimal_section(const Vector& v) const {
  if (v.size() != n_) throw DimensionError("minimal_section: dimension mismatch");
  switch (kind_) {
    case Kind::Zero: return Vector::Zero(n_);
    case Kind::Linear: return S_ * v;
    case Kind::Blocks: {
      Vector w(n_);
      int off = 0;
      for (const auto& p : parts_) {
        w.segment(off, p.dim()) = p.minimal_section(v.segment(off, p.dim()));
        off += p.dim();
      }
      return w;
    }
    default: {
      Vector w(n_);
      for (int i = 0; i < n_; ++i) w(i) = minsec1(v(i), i);
      return w;
    }
  }
}

double MonotoneMap::dist1(double v, double w, int i) const {
  switch (kind_) {
    case Kind::Relay: {
      const double F = levels_(i);
      if (v == 0.0) return std::max(std::abs(w) - F, 0.0);
      return std::abs(w - F * sgn(v));
    }
    default: return std::abs(w - minsec1(v, i));
  }
}

double MonotoneMap::graph_distance(const Vector& v, const Vector& w) const {
  if (v.size() != n_ || w.size() != n_) throw DimensionError("graph_distance: dimension mismatch");
  switch (kind_) {
    case Kind::Zero: return w.norm();
    case Kind::Linear: return (w - S_ * v).norm();
    case Kind::Blocks: {
      double s2 = 0.0;
      int off = 0;
      for (const auto& p : parts_) {
        const double di = p.graph_distance(v.segment(off, p.dim()), w.segment(off, p.dim()));
        s2 += di * di;
        off += p.dim();
      }
      return std::sqrt(s2);
    }
    default: {
      double s2 = 0.0;
      for (int i = 0; i < n_; ++i) {
        const double di = dist1(v(i), w(i), i);
        s2 += di * di;
      }
      return std::sqrt(s2);
    }
  }
}

MonotonicityReport verify_monotone(const MonotoneMap& phi, int trials, std::uint64_t seed) {
  CounterRng rng(seed, "verify-monotone");
  MonotonicityReport rep;
  rep.worst_pairing = std::numeric_limits<double>::infinity();
  const int n = phi.dim();
  for (int t = 0; t < trials; ++t) {
    const double scale1 = rng.log_uniform(1e-3, 1e3);
    const double scale2 = rng.log_uniform(1e-3, 1e3);
    const double alpha = rng.log_uniform(1e-3, 1e3);
    const Vector v1 = scale1 * rng.normal_vec(n);
    const Vector v2 = scale2 * rng.normal_vec(n);
    // each resolvent output (w, (v - w)/alpha) is a point on the graph
    const Vector w1 = phi.resolve(alpha, v1);
    const Vector w2 = phi.resolve(alpha, v2);
    const Vector g1 = (v1 - w1) / alpha;
    const Vector g2 = (v2 - w2) / alpha;
    const double dw = (w1 - w2).norm();
    const double dg = (g1 - g2).norm();
    const double pairing = (g1 - g2).dot(w1 - w2);
    // round-off floor of the pairing: g carries error of order eps|v|/alpha,
    // w of order eps|v|
    const double eps = std::numeric_limits<double>::epsilon();
    const double noise = 64.0 * eps *
                         ((v1.norm() + v2.norm() + w1.norm() + w2.norm()) * dw / alpha +
                          (v1.norm() + v2.norm()) * dg);
    const double sc = std::max({1.0, dw * dg, noise * 1e12});
    rep.worst_pairing = std::min(rep.worst_pairing, pairing / sc);
    ++rep.pairs;
  }
  if (rep.pairs == 0) rep.worst_pairing = 0.0;
  rep.ok = rep.worst_pairing >= -1e-12;
  return rep;
}

SectorReport verify_sector(const MonotoneMap& phi, double kappa, int samples,
                           double v_min, double v_max, std::uint64_t seed) {
  if (kappa <= 0) throw std::invalid_argument("verify_sector: kappa must be > 0");
  if (!phi.scalar_blocks())
    throw std::invalid_argument("verify_sector: map must decompose into scalar blocks");
  CounterRng rng(seed, "verify-sector");
  SectorReport rep;
  rep.worst_lower = std::numeric_limits<double>::infinity();
  rep.worst_upper = 0.0;
  const int n = phi.dim();
  bool ok = true;
  const double tol = 1e-12;
  for (int t = 0; t < samples; ++t) {
    Vector v = Vector::Zero(n);
    const int comp = n == 1 ? 0 : rng.uniform_int(0, n - 1);
    const double mag = rng.log_uniform(v_min, v_max);
    const double vv = (rng.uniform() < 0.5 ? -1.0 : 1.0) * mag;
    v(comp) = vv;
    const double z = phi.minimal_section(v)(comp);
    const double lower = std::abs(z) / (std::abs(vv) / kappa);
    const double upper = std::abs(z) / (kappa * std::abs(vv));
    if (lower < rep.worst_lower) {
      rep.worst_lower = lower;
      rep.v_at_worst = vv;
    }
    rep.worst_upper = std::max(rep.worst_upper, upper);
    if (lower < 1.0 - tol || upper > 1.0 + tol) ok = false;
  }
  rep.ok = ok;
  rep.kappa_tilde = ok ? 0.5 * std::min(kappa, 1.0 / kappa) : 0.0;
  return rep;
}

}  // namespace phsim
