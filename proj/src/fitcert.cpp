#include "reachzono/fitcert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reachzono/linsolve.hpp"

namespace reachzono {

namespace {

// Sign convention: the largest-magnitude entry is positive (first one on ties).
void canonicalize_sign(Eigen::Ref<Vector> u) {
  Index arg = 0;
  u.cwiseAbs().maxCoeff(&arg);
  if (u(arg) < 0.0) u = -u;
}

}  // namespace

Zonotope pca_fit(std::span<const Vector> points) {
  if (points.empty()) throw std::invalid_argument("pca_fit: empty point set");
  const Index n = points.front().size();
  const Index m = static_cast<Index>(points.size());
  Vector mean = Vector::Zero(n);
  for (const auto& p : points) {
    if (p.size() != n) {
      throw DimensionError("pca_fit: point of dimension " + std::to_string(p.size()) +
                           " in a cloud of dimension " + std::to_string(n));
    }
    mean += p;
  }
  mean /= static_cast<double>(m);

  Matrix centered(m, n);
  for (Index t = 0; t < m; ++t) centered.row(t) = (points[static_cast<size_t>(t)] - mean).transpose();

  const SvdResult d = svd(centered);
  Matrix dirs = d.v;
  Vector sv = Vector::Zero(n);
  sv.head(d.singular_values.size()) = d.singular_values;
  if (dirs.cols() < n) dirs = complete_orthonormal_basis(dirs);
  for (Index i = 0; i < n; ++i) canonicalize_sign(dirs.col(i));

  const double tie_tol = 1e-12 * std::max(sv.maxCoeff(), 1e-300);
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (std::abs(sv(a) - sv(b)) > tie_tol) return sv(a) > sv(b);
    for (Index r = 0; r < n; ++r) {
      if (dirs(r, a) != dirs(r, b)) return dirs(r, a) > dirs(r, b);
    }
    return false;
  });

  Matrix gens(n, n);
  for (Index i = 0; i < n; ++i) {
    const Vector u = dirs.col(order[static_cast<size_t>(i)]);
    const double rho = (centered * u).cwiseAbs().maxCoeff();
    gens.col(i) = rho * u;
  }
  return Zonotope(std::move(mean), std::move(gens));
}

bool Strip::outside(const Vector& y) const {
  return ((y - center).cwiseAbs().array() > radius.array()).any();
}

Certificate Certificate::strip(Strip s) {
  Certificate c;
  c.fallback_ = std::move(s);
  return c;
}

Certificate Certificate::per_step_strips(std::map<int, Strip> strips) {
  Certificate c;
  c.by_step_ = std::move(strips);
  return c;
}

Certificate Certificate::callback(Callback fn) {
  Certificate c;
  c.fn_ = std::move(fn);
  return c;
}

const Strip& Certificate::strip_at(int step) const {
  if (fn_) throw std::logic_error("Certificate::strip_at: callback certificate");
  auto it = by_step_.find(step);
  if (it != by_step_.end()) return it->second;
  if (fallback_) return *fallback_;
  throw std::out_of_range("Certificate: no strip for step " + std::to_string(step));
}

bool Certificate::outside(int step, const Vector& y) const {
  if (fn_) return fn_(step, y);
  auto it = by_step_.find(step);
  if (it != by_step_.end()) return it->second.outside(y);
  // No history at this step: vacuous.
  return fallback_ ? fallback_->outside(y) : false;
}

Certificate strip_cert_from_history(std::span<const Trajectory> trajs, double inflation,
                                    bool per_step) {
  if (trajs.empty()) throw std::invalid_argument("strip_cert_from_history: no trajectories");
  auto make = [inflation](const Vector& lo, const Vector& hi) {
    return Strip{0.5 * (lo + hi), 0.5 * (hi - lo) * (1.0 + inflation)};
  };
  if (!per_step) {
    Vector lo = trajs.front().outputs.front();
    Vector hi = lo;
    for (const auto& t : trajs) {
      for (const auto& y : t.outputs) {
        lo = lo.cwiseMin(y);
        hi = hi.cwiseMax(y);
      }
    }
    return Certificate::strip(make(lo, hi));
  }
  std::map<int, Strip> strips;
  size_t longest = 0;
  for (const auto& t : trajs) longest = std::max(longest, t.length());
  for (size_t k = 0; k < longest; ++k) {
    const IntervalBox hull = mc_hull(trajs, k);
    strips.emplace(static_cast<int>(k), make(hull.lower, hull.upper));
  }
  return Certificate::per_step_strips(std::move(strips));
}

ContractionReport directional_contract(const Zonotope& ydd, const Certificate& cert, int step,
                                       int n_ray) {
  if (n_ray < 2) throw std::invalid_argument("directional_contract: n_ray must be >= 2");
  const Index gamma = ydd.num_generators();
  bool any_nonzero = false;
  for (Index j = 0; j < gamma && !any_nonzero; ++j) any_nonzero = ydd.generator(j).norm() > 0.0;
  if (!any_nonzero) {
    throw std::invalid_argument("directional_contract: set has no nonzero generator");
  }

  ContractionReport rep;
  rep.rho_dd.assign(static_cast<size_t>(gamma), 0.0);
  rep.rho_cert.assign(static_cast<size_t>(gamma), 0.0);
  rep.lambda.assign(static_cast<size_t>(gamma), 1.0);
  Matrix g = ydd.generators();
  const Vector& c = ydd.center();

  for (Index j = 0; j < gamma; ++j) {
    const double nrm = ydd.generator(j).norm();
    if (nrm == 0.0) continue;
    const Vector q = ydd.generator(j) / nrm;
    const double rho_dd = (q.transpose() * ydd.generators()).cwiseAbs().sum();
    auto first_hit = [&](double sign) {
      for (int m = 0; m < n_ray; ++m) {
        const double r = rho_dd * static_cast<double>(m) / static_cast<double>(n_ray - 1);
        if (cert.outside(step, c + sign * r * q)) return r;
      }
      return rho_dd;
    };
    const double rho_cert = std::min(first_hit(1.0), first_hit(-1.0));
    const double lambda = rho_dd > 0.0 ? std::clamp(rho_cert / rho_dd, 0.0, 1.0) : 1.0;
    rep.rho_dd[static_cast<size_t>(j)] = rho_dd;
    rep.rho_cert[static_cast<size_t>(j)] = rho_cert;
    rep.lambda[static_cast<size_t>(j)] = lambda;
    g.col(j) *= lambda;
  }
  rep.tightened = Zonotope(c, std::move(g));
  return rep;
}

json contraction_to_json(const ContractionReport& rep, int step) {
  return json{{"step", step},
              {"lambda", rep.lambda},
              {"rho_dd", rep.rho_dd},
              {"rho_cert", rep.rho_cert}};
}

}  // namespace reachzono
