#ifndef REACHZONO_FITCERT_HPP_
#define REACHZONO_FITCERT_HPP_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "reachzono/io.hpp"
#include "reachzono/setalg.hpp"
#include "reachzono/sysim.hpp"

namespace reachzono {

/// Smallest PCA-aligned zonotope around the sample mean containing every
/// point: generators rho_i u_i with rho_i = max_t |u_i'(p_t - mean)|.
/// Always returns n_y generators; zero-radius directions give zero generators.
Zonotope pca_fit(std::span<const Vector> points);

/// Axis strips |y_d - c_d| <= r_d.
struct Strip {
  Vector center;
  Vector radius;

  bool outside(const Vector& y) const;
};

/// Exterior certificate: outside(k, y) == true claims y is not reachable at
/// step k. Soundness is the caller's responsibility.
class Certificate {
 public:
  using Callback = std::function<bool(int step, const Vector& y)>;

  static Certificate strip(Strip s);
  static Certificate per_step_strips(std::map<int, Strip> strips);
  static Certificate callback(Callback fn);

  bool outside(int step, const Vector& y) const;

  bool is_strip() const { return !fn_; }
  /// Strip used at `step` (throws for callback certificates).
  const Strip& strip_at(int step) const;

 private:
  std::map<int, Strip> by_step_;
  std::optional<Strip> fallback_;
  Callback fn_;
};

/// Midrange/half-range of historical outputs per dimension, radii scaled by
/// (1 + inflation). With per_step, one strip per time index; otherwise one
/// strip over all samples.
Certificate strip_cert_from_history(std::span<const Trajectory> trajs, double inflation,
                                    bool per_step = true);

struct ContractionReport {
  std::vector<double> rho_dd;    // half-width along each generator direction
  std::vector<double> rho_cert;  // certified radius
  std::vector<double> lambda;    // contraction factor in [0, 1]
  Zonotope tightened;
};

/// Queries the certificate along +-q_j (q_j = g_j / |g_j|) at n_ray evenly
/// spaced radii in [0, rho_dd_j] and scales g_j by the first certified
/// radius over rho_dd_j. Zero generators keep lambda = 1.
ContractionReport directional_contract(const Zonotope& ydd, const Certificate& cert, int step,
                                       int n_ray = 201);

json contraction_to_json(const ContractionReport& rep, int step);

}  // namespace reachzono

#endif  // REACHZONO_FITCERT_HPP_
