#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "phsim/densekit.hpp"

namespace phsim {

/// Maximal monotone map on R^n, represented only through its resolvent
/// (I + alpha*phi)^{-1} and minimal section. All shipped kinds satisfy
/// 0 in phi(0) and have full-domain resolvents.
class MonotoneMap {
public:
  enum class Kind { Zero, Linear, Relay, Saturation, Deadzone, PowerLaw, Blocks };

  static MonotoneMap zero(int n);
  /// phi(v) = S v. Monotone iff the symmetric part of S is PSD (verify_monotone
  /// reports, construction does not reject).
  static MonotoneMap linear(Matrix S);
  /// Componentwise relay with level F >= 0: phi_i(v) = F_i sign(v_i), phi_i(0) = [-F_i, F_i].
  static MonotoneMap relay(Vector levels);
  static MonotoneMap relay(int n, double level);
  /// Componentwise sat(k v, u_max) = clamp(k v, -u_max, u_max), k > 0.
  static MonotoneMap saturation(int n, double gain, double u_max);
  /// Componentwise deadzone of width delta: 0 on [-delta, delta], slope 1 outside.
  static MonotoneMap deadzone(int n, double width);
  /// Componentwise |v|^{p-1} v, p >= 1.
  static MonotoneMap power_law(int n, double p);
  /// Block-diagonal composition; dimension is the sum of part dimensions.
  static MonotoneMap blocks(std::vector<MonotoneMap> parts);

  int dim() const { return n_; }
  Kind kind() const { return kind_; }

  /// The unique w with w + alpha*phi(w) ∋ v (alpha > 0).
  Vector resolve(double alpha, const Vector& v) const;

  /// Least-norm element of phi(v).
  Vector minimal_section(const Vector& v) const;

  /// Distance of w to the set phi(v); exact per kind.
  double graph_distance(const Vector& v, const Vector& w) const;

  /// True when the map decomposes into 1-D pieces (required by verify_sector).
  bool scalar_blocks() const;

  const std::vector<MonotoneMap>& parts() const { return parts_; }

private:
  MonotoneMap(Kind k, int n) : kind_(k), n_(n) {}

  double resolve1(double alpha, double v, int comp) const;
  double minsec1(double v, int comp) const;
  double dist1(double v, double w, int comp) const;

  Kind kind_;
  int n_;
  Matrix S_;               // Linear
  Vector levels_;          // Relay
  double gain_ = 1.0;      // Saturation
  double u_max_ = 0.0;     // Saturation
  double width_ = 0.0;     // Deadzone
  double p_ = 1.0;         // PowerLaw
  std::vector<MonotoneMap> parts_;  // Blocks
};

struct MonotonicityReport {
  bool ok = true;
  double worst_pairing = 0.0;  // min of normalized <w - w', v - v'> over sampled pairs
  int pairs = 0;
};

/// Samples graph pairs through the resolvent and checks the monotonicity
/// pairing >= -1e-12 (normalized by the pair scale).
MonotonicityReport verify_monotone(const MonotoneMap& phi, int trials, std::uint64_t seed);

struct SectorReport {
  bool ok = false;
  double kappa_tilde = 0.0;  // 0.5 * min(kappa, 1/kappa) on success
  double worst_lower = 0.0;  // min over samples of |z| / (|v|/kappa)
  double worst_upper = 0.0;  // max over samples of |z| / (kappa |v|)
  double v_at_worst = 0.0;
};

/// Checks kappa^{-1}|v| <= |z| <= kappa|v| for z = minimal_section(v), sampling
/// v log-uniformly on [v_min, v_max] (both signs). Map must have scalar blocks.
SectorReport verify_sector(const MonotoneMap& phi, double kappa, int samples,
                           double v_min = 1e-6, double v_max = 1e3, std::uint64_t seed = 0);

}  // namespace phsim
