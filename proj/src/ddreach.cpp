#include "reachzono/ddreach.hpp"

#include <sstream>

#include "reachzono/linsolve.hpp"

namespace reachzono {

Vector lifted_vector(const Trajectory& t, int k, int n_o) {
  if (k < n_o || static_cast<size_t>(k) > t.length()) {
    throw std::out_of_range("lifted_vector: step " + std::to_string(k) + " outside [" +
                            std::to_string(n_o) + ", " + std::to_string(t.length()) + "]");
  }
  const Index ny = t.outputs.front().size();
  const Index nu = t.inputs.front().size();
  Vector z(n_o * (ny + nu));
  for (int i = 1; i <= n_o; ++i) {
    z.segment((i - 1) * ny, ny) = t.outputs[static_cast<size_t>(k - i)];
    z.segment(n_o * ny + (i - 1) * nu, nu) = t.inputs[static_cast<size_t>(k - i)];
  }
  return z;
}

LiftedRecord build_lifted(std::span<const Trajectory> trajs, int n_o) {
  if (n_o < 1) throw std::invalid_argument("build_lifted: n_o must be >= 1");
  LiftedRecord lr;
  lr.n_o = n_o;
  std::vector<const Trajectory*> usable;
  Index total = 0;
  for (size_t i = 0; i < trajs.size(); ++i) {
    const auto& t = trajs[i];
    if (t.length() < static_cast<size_t>(n_o) + 2) {
      std::ostringstream os;
      os << "trajectory " << i << " (seed " << t.seed << ") has length " << t.length()
         << " < n_o + 2 = " << n_o + 2 << "; skipped";
      lr.warnings.push_back(os.str());
      continue;
    }
    if (lr.ny == 0) {
      lr.ny = t.outputs.front().size();
      lr.nu = t.inputs.front().size();
    }
    usable.push_back(&t);
    total += static_cast<Index>(t.length()) - n_o - 1;
  }
  if (total == 0) throw std::invalid_argument("build_lifted: no usable data columns");

  const Index p = lr.lifted_dim();
  lr.z_plus.resize(p, total);
  lr.phi_minus.resize(p + lr.nu, total);
  Index col = 0;
  for (const Trajectory* t : usable) {
    for (int k = n_o; k + 2 <= static_cast<int>(t->length()); ++k) {
      lr.phi_minus.col(col).head(p) = lifted_vector(*t, k, n_o);
      lr.phi_minus.col(col).tail(lr.nu) = t->inputs[static_cast<size_t>(k)];
      lr.z_plus.col(col) = lifted_vector(*t, k + 1, n_o);
      ++col;
    }
  }
  return lr;
}

Zonotope embed_residual(const Zonotope& eps_bound, Index p) {
  if (eps_bound.dim() > p) {
    throw DimensionError("embed_residual: residual of dimension " +
                         std::to_string(eps_bound.dim()) + " into lifted dimension " +
                         std::to_string(p));
  }
  Vector c = Vector::Zero(p);
  c.head(eps_bound.dim()) = eps_bound.center();
  Matrix g = Matrix::Zero(p, eps_bound.num_generators());
  g.topRows(eps_bound.dim()) = eps_bound.generators();
  return Zonotope(std::move(c), std::move(g));
}

MatrixZonotope build_noise_matzono(const Zonotope& eps_bound, Index columns, Index p,
                                   bool restrict_block) {
  if (columns < 1) throw std::invalid_argument("build_noise_matzono: need at least one column");
  const Zonotope eps =
      restrict_block
          ? embed_residual(eps_bound, p)
          : minkowski_sum(embed_residual(Zonotope(eps_bound.center()), p),
                          Zonotope::box(Vector::Zero(p),
                                        Vector::Constant(p, interval_hull(eps_bound)
                                                                .width()
                                                                .maxCoeff() /
                                                                2.0)));
  Matrix center = eps.center().replicate(1, columns);
  std::vector<Matrix> gens;
  gens.reserve(static_cast<size_t>(eps.num_generators() * columns));
  for (Index i = 0; i < eps.num_generators(); ++i) {
    for (Index j = 0; j < columns; ++j) {
      Matrix g = Matrix::Zero(p, columns);
      g.col(j) = eps.generator(i);
      gens.push_back(std::move(g));
    }
  }
  return MatrixZonotope(std::move(center), std::move(gens));
}

ModelSet build_model_set(const LiftedRecord& lr, const MatrixZonotope& meps, double rank_tol) {
  if (meps.rows() != lr.z_plus.rows() || meps.cols() != lr.z_plus.cols()) {
    throw DimensionError("build_model_set: noise matrix zonotope " +
                         shape_str(meps.rows(), meps.cols()) + " vs Z+ " +
                         shape_str(lr.z_plus.rows(), lr.z_plus.cols()));
  }
  const SvdResult d = svd(lr.phi_minus);
  const Index rank = numerical_rank(d.singular_values, rank_tol);
  const Index need = lr.phi_minus.rows();
  if (rank < need) {
    throw NumericalError("build_model_set: regressor matrix has rank " + std::to_string(rank) +
                         " < " + std::to_string(need) + " (" + std::to_string(lr.columns()) +
                         " columns); collect more or richer input-output data");
  }
  const Matrix phi_pinv = pinv(lr.phi_minus, rank_tol);

  ModelSet ms;
  ms.columns = lr.columns();
  ms.rank = rank;
  ms.sigma_max = d.singular_values(0);
  ms.sigma_min = d.singular_values(d.singular_values.size() - 1);
  ms.n_o = lr.n_o;
  ms.ny = lr.ny;
  ms.nu = lr.nu;

  Matrix center = (lr.z_plus - meps.center()) * phi_pinv;
  std::vector<Matrix> gens;
  gens.reserve(meps.generators().size());
  for (const auto& g : meps.generators()) gens.push_back(-g * phi_pinv);
  ms.msigma = MatrixZonotope(std::move(center), std::move(gens));
  return ms;
}

json model_set_to_json(const ModelSet& ms) {
  json j = matzono_to_json(ms.msigma);
  j["metadata"] = {{"columns", ms.columns}, {"rank", ms.rank},
                   {"sigma_max", ms.sigma_max}, {"sigma_min", ms.sigma_min},
                   {"n_o", ms.n_o}, {"n_y", ms.ny}, {"n_u", ms.nu}};
  return j;
}

ModelSet model_set_from_json(const json& j) {
  ModelSet ms;
  ms.msigma = matzono_from_json(j);
  const json& m = j.at("metadata");
  ms.columns = m.at("columns").get<Index>();
  ms.rank = m.at("rank").get<Index>();
  ms.sigma_max = m.at("sigma_max").get<double>();
  ms.sigma_min = m.at("sigma_min").get<double>();
  ms.n_o = m.at("n_o").get<int>();
  ms.ny = m.at("n_y").get<Index>();
  ms.nu = m.at("n_u").get<Index>();
  return ms;
}

Zonotope propagate_step(const ModelSet& ms, const Zonotope& zk, const Zonotope& uk,
                        const Zonotope& eps_bound) {
  const Index p = ms.msigma.rows();
  if (zk.dim() != p || uk.dim() != ms.msigma.cols() - p) {
    throw DimensionError("propagate_step: lifted set of dimension " + std::to_string(zk.dim()) +
                         " and input set of dimension " + std::to_string(uk.dim()) +
                         " for model set " + shape_str(p, ms.msigma.cols()));
  }
  return minkowski_sum(matzono_mul(ms.msigma, cartesian_product(zk, uk)),
                       embed_residual(eps_bound, p));
}

Zonotope initial_lifted_set(std::span<const Zonotope> outputs, std::span<const Zonotope> inputs) {
  if (outputs.size() != inputs.size() || outputs.empty()) {
    throw DimensionError("initial_lifted_set: " + std::to_string(outputs.size()) +
                         " output sets vs " + std::to_string(inputs.size()) + " input sets");
  }
  std::vector<Zonotope> parts(outputs.rbegin(), outputs.rend());
  parts.insert(parts.end(), inputs.rbegin(), inputs.rend());
  return cartesian_product(parts);
}

ReachResult run_reachability(const ModelSet& ms, const Zonotope& z_init, const InputSetFn& inputs,
                             const Zonotope& eps_bound, int horizon, int rho_max) {
  if (z_init.dim() != ms.msigma.rows()) {
    throw DimensionError("run_reachability: initial lifted set of dimension " +
                         std::to_string(z_init.dim()) + " for lifted dimension " +
                         std::to_string(ms.msigma.rows()));
  }
  ReachResult r;
  r.first_step = ms.n_o;
  r.rho_max = rho_max;
  r.lifted_sets.push_back(z_init);
  for (int k = ms.n_o; k <= horizon; ++k) {
    Zonotope next = reduce(propagate_step(ms, r.lifted_sets.back(), inputs(k), eps_bound), rho_max);
    if (!all_finite(next)) {
      throw NumericalError("run_reachability: non-finite lifted set at step " +
                           std::to_string(k + 1));
    }
    r.output_sets.push_back(project(next, 0, ms.ny));
    r.lifted_sets.push_back(std::move(next));
  }
  return r;
}

json reach_result_to_json(const ReachResult& r) {
  json sets = json::array();
  for (size_t i = 0; i < r.output_sets.size(); ++i) {
    sets.push_back({{"step", r.first_step + static_cast<int>(i)},
                    {"zonotope", zonotope_to_json(r.output_sets[i])}});
  }
  return json{{"first_step", r.first_step}, {"rho_max", r.rho_max}, {"output_sets", sets}};
}

ReachResult reach_result_from_json(const json& j) {
  ReachResult r;
  r.first_step = j.at("first_step").get<int>();
  r.rho_max = j.at("rho_max").get<int>();
  for (const auto& s : j.at("output_sets")) r.output_sets.push_back(zonotope_from_json(s.at("zonotope")));
  return r;
}

}  // namespace reachzono
