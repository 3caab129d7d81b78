#include "tdreg/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "tdreg/errors.hpp"

namespace tdreg {

namespace {

// Flip so that the largest-magnitude entry (first on ties) is positive.
void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0.0) v = -v;
}

}  // namespace

SpectralWhitening whiten_spectral(const Eigen::MatrixXd& m2, int k, double rank_tol) {
  const Eigen::Index d = m2.rows();
  if (m2.cols() != d) throw ShapeError("whiten: M2 must be square");
  if (k < 1 || k > d)
    throw ShapeError("whiten: need 1 <= K <= D, got K=" + std::to_string(k) +
                     " D=" + std::to_string(d));
  if (!m2.allFinite()) throw NumericError("whiten: non-finite entries in M2");
  const Eigen::MatrixXd sym = 0.5 * (m2 + m2.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("whiten: eigendecomposition failed");

  SpectralWhitening out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < d; ++j) normalize_sign(out.vectors.col(j));

  const double largest = std::max(std::abs(out.values(0)), std::abs(out.values(d - 1)));
  const double kth = out.values(k - 1);
  if (!(kth > rank_tol * largest) || !(kth > 0.0)) {
    throw RankDeficiencyError(
        "whiten: effective rank below K=" + std::to_string(k) + "; eigenvalue " +
        std::to_string(k) + " is " + std::to_string(kth) + " against largest " +
        std::to_string(largest) + " (tolerance " + std::to_string(rank_tol * largest) + ")");
  }
  out.pair.s = out.values.head(k);
  const Eigen::MatrixXd u = out.vectors.leftCols(k);
  out.pair.w = u * out.pair.s.cwiseSqrt().cwiseInverse().asDiagonal();
  out.pair.b = u * out.pair.s.cwiseSqrt().asDiagonal();
  return out;
}

WhiteningPair whiten(const Eigen::MatrixXd& m2, int k, double rank_tol) {
  return whiten_spectral(m2, k, rank_tol).pair;
}

Tensor3 whitened_raw_triples(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, ModelKind model,
                             std::span<const double> lengths) {
  if (x.rows() != w.rows())
    throw ShapeError("whitened_raw_triples: data has D=" + std::to_string(x.rows()) +
                     " but W has " + std::to_string(w.rows()) + " rows");
  const Eigen::Index k = w.cols();
  Tensor3 out(k);
  const Eigen::MatrixXd y = w.transpose() * x;
  if (model == ModelKind::Gmm) {
    for (Eigen::Index n = 0; n < x.cols(); ++n) out.add_cube(1.0, y.col(n));
    return out;
  }
  std::vector<double> own;
  if (lengths.empty()) {
    own = column_lengths(x);
    lengths = own;
  }
  if (static_cast<Eigen::Index>(lengths.size()) != x.cols())
    throw ShapeError("whitened_raw_triples: one length per document required");
  Eigen::VectorXd omega(x.cols());
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    const double ell = lengths[static_cast<std::size_t>(n)];
    if (ell < 3.0)
      throw InsufficientLengthError("whitened_raw_triples: document " + std::to_string(n) +
                                        " has length < 3",
                                    n);
    omega(n) = 1.0 / (ell * (ell - 1.0) * (ell - 2.0));
  }
  for (Eigen::Index n = 0; n < x.cols(); ++n) out.add_cube(omega(n), y.col(n));
  // q_i = Σ_n ω_n c_in y_n and h_i = Σ_n ω_n c_in
  const Eigen::MatrixXd q = x * omega.asDiagonal() * y.transpose();
  const Eigen::VectorXd h = x * omega;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd wi = w.row(i).transpose();
    const Eigen::VectorXd qi = q.row(i).transpose();
    out.add_outer(-1.0, wi, wi, qi);
    out.add_outer(-1.0, wi, qi, wi);
    out.add_outer(-1.0, qi, wi, wi);
    if (h(i) != 0.0) out.add_cube(2.0 * h(i), wi);
  }
  return out;
}

Tensor3 center_whitened_third(const Tensor3& raw_avg, const Eigen::VectorXd& m1,
                              const Eigen::MatrixXd& raw2, const Eigen::MatrixXd& w,
                              ModelKind model, double shift) {
  Tensor3 t = raw_avg;
  const Eigen::VectorXd mw = w.transpose() * m1;
  if (model == ModelKind::Gmm) {
    t.add_sym_matrix_vector(-shift, w.transpose() * w, mw);
    return t;
  }
  const double a0 = shift;
  t.add_sym_matrix_vector(-a0 / (a0 + 2.0), w.transpose() * raw2 * w, mw);
  t.add_cube(2.0 * a0 * a0 / ((a0 + 2.0) * (a0 + 1.0)), mw);
  return t;
}

Tensor3 whitened_third_moment(const Eigen::MatrixXd& x, const WhiteningPair& whitening,
                              const ModelConstants& consts, std::span<const double> lengths) {
  if (x.rows() != whitening.w.rows()) throw ShapeError("whitened_third_moment: dimension mismatch");
  MomentSet ms;
  if (consts.model == ModelKind::Gmm) {
    const double s2 = consts.sigma2 ? *consts.sigma2 : gmm_estimate_sigma2(x);
    ms = gmm_moments(x, s2);
  } else {
    ms = lda_moments(x, consts, ThirdMoment::Skip, lengths);
  }
  Tensor3 raw = whitened_raw_triples(x, whitening.w, consts.model, lengths);
  raw *= 1.0 / static_cast<double>(x.cols());
  return center_whitened_third(raw, ms.m1, ms.raw2, whitening.w, consts.model, ms.shift);
}

Tensor3 whitened_third_moment(const MomentSet& ms, const WhiteningPair& whitening) {
  if (!ms.m3) throw ShapeError("whitened_third_moment: moment set has no explicit M3");
  if (ms.m3->dim() != whitening.w.rows())
    throw ShapeError("whitened_third_moment: dimension mismatch");
  return ms.m3->multilinear(whitening.w);
}

EigenpairList tensor_power_method(const Tensor3& t, int k, const PowerMethodOptions& opts,
                                  PowerMethodTrace* trace) {
  if (opts.restarts < 1 || opts.iters < 1 || opts.polish < 0)
    throw ShapeError("tensor_power_method: restarts and iters must be >= 1");
  if (!t.all_finite()) throw NumericError("tensor_power_method: non-finite tensor entries");
  const Eigen::Index dim = t.dim();
  if (k < 1 || k > dim) throw ShapeError("tensor_power_method: need 1 <= k <= dim");

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> starts;
  starts.reserve(static_cast<std::size_t>(k * opts.restarts));
  for (int i = 0; i < k * opts.restarts; ++i) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index j = 0; j < dim; ++j) v(j) = normal(rng);
    const double nv = v.norm();
    starts.push_back(nv > 0.0 ? Eigen::VectorXd(v / nv) : Eigen::VectorXd::Unit(dim, 0));
  }

  // Runs `steps` power iterations in place; optionally records iterates.
  auto iterate = [](const Tensor3& tt, Eigen::VectorXd& v, int steps,
                    std::vector<Eigen::VectorXd>* path) {
    for (int s = 0; s < steps; ++s) {
      Eigen::VectorXd u = tt.apply(v, v);
      const double nu = u.norm();
      if (!(nu > 0.0)) break;
      v = u / nu;
      if (path) path->push_back(v);
    }
  };

  Tensor3 work = t;
  EigenpairList found;
  if (trace) {
    trace->components.clear();
    trace->order.clear();
  }
  for (int c = 0; c < k; ++c) {
    int winner = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
      Eigen::VectorXd v = starts[static_cast<std::size_t>(c * opts.restarts + r)];
      iterate(work, v, opts.iters, nullptr);
      const double obj = work.contract(v, v, v);
      if (obj > best) {
        best = obj;
        winner = r;
      }
    }
    // Replay the winner so the recorded path matches the returned vector.
    Eigen::VectorXd v = starts[static_cast<std::size_t>(c * opts.restarts + winner)];
    std::vector<Eigen::VectorXd> path{v};
    iterate(work, v, opts.iters, &path);
    iterate(work, v, opts.polish, &path);
    double lambda = work.contract(v, v, v);
    double sign = 1.0;
    if (lambda < 0.0) {
      sign = -1.0;
      lambda = -lambda;
    }
    const Eigen::VectorXd vf = sign * v;
    if (trace) trace->components.push_back({work, std::move(path), sign, winner});
    work.add_cube(-lambda, vf);
    found.push_back({lambda, vf});
  }

  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return found[static_cast<std::size_t>(a)].lambda > found[static_cast<std::size_t>(b)].lambda;
  });
  EigenpairList sorted;
  for (int i : order) sorted.push_back(found[static_cast<std::size_t>(i)]);
  if (trace) trace->order = order;
  return sorted;
}

double reconstruction_scale(const ModelConstants& consts) {
  return consts.model == ModelKind::Gmm ? 1.0 : consts.beta() / consts.gamma();
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Eigen::MatrixXd simplex_projection_vjp(const Eigen::MatrixXd& projected,
                                       const Eigen::MatrixXd& bar) {
  if (projected.rows() != bar.rows() || projected.cols() != bar.cols())
    throw ShapeError("simplex_projection_vjp: shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(bar.rows(), bar.cols());
  for (Eigen::Index j = 0; j < bar.cols(); ++j) {
    const auto support = (projected.col(j).array() > 0.0).cast<double>();
    const double n = support.sum();
    if (n == 0.0) continue;
    const double mean = (bar.col(j).array() * support).sum() / n;
    out.col(j) = ((bar.col(j).array() - mean) * support).matrix();
  }
  return out;
}

DecompositionResult reconstruct_parameters(const EigenpairList& pairs,
                                           const WhiteningPair& whitening,
                                           const ModelConstants& consts, double rank_tol) {
  const auto k = static_cast<Eigen::Index>(pairs.size());
  if (k != whitening.b.cols())
    throw ShapeError("reconstruct_parameters: eigenpair count does not match whitening rank");
  double max_lambda = 0.0;
  for (const auto& p : pairs) max_lambda = std::max(max_lambda, p.lambda);
  const double kappa = reconstruction_scale(consts);
  DecompositionResult out;
  out.whitening = whitening;
  out.eigenpairs = pairs;
  out.a_raw.resize(whitening.b.rows(), k);
  out.weights.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& p = pairs[static_cast<std::size_t>(j)];
    if (!(p.lambda > rank_tol * std::max(1.0, max_lambda)))
      throw NumericError("reconstruct_parameters: component " + std::to_string(j) +
                         " has eigenvalue " + std::to_string(p.lambda) +
                         " at or below the rank tolerance; unrecoverable");
    out.a_raw.col(j) = kappa * p.lambda * (whitening.b * p.v);
    out.weights(j) = consts.model == ModelKind::Gmm ? 1.0 / (p.lambda * p.lambda)
                                                    : 1.0 / static_cast<double>(k);
  }
  out.weights /= out.weights.sum();
  out.a = out.a_raw;
  if (consts.model == ModelKind::Lda)
    for (Eigen::Index j = 0; j < k; ++j) out.a.col(j) = project_to_simplex(out.a_raw.col(j));
  return out;
}

DecompositionResult tdm(const Eigen::MatrixXd& x, const ModelConstants& consts,
                        const TdmOptions& opts, std::span<const double> lengths) {
  MomentSet ms;
  if (consts.model == ModelKind::Gmm) {
    const double s2 = consts.sigma2 ? *consts.sigma2 : gmm_estimate_sigma2(x);
    ms = gmm_moments(x, s2);
  } else {
    ms = lda_moments(x, consts, ThirdMoment::Skip, lengths);
  }
  const WhiteningPair wp = whiten(ms.m2, consts.k, opts.rank_tol);
  Tensor3 raw = whitened_raw_triples(x, wp.w, consts.model, lengths);
  raw *= 1.0 / static_cast<double>(x.cols());
  const Tensor3 t = center_whitened_third(raw, ms.m1, ms.raw2, wp.w, consts.model, ms.shift);
  const EigenpairList pairs = tensor_power_method(t, consts.k, opts.power);
  return reconstruct_parameters(pairs, wp, consts, opts.rank_tol);
}

DecompositionResult tdm(const MomentSet& ms, const ModelConstants& consts,
                        const TdmOptions& opts) {
  if (ms.model != consts.model) throw ShapeError("tdm: moment set belongs to another model");
  const WhiteningPair wp = whiten(ms.m2, consts.k, opts.rank_tol);
  const Tensor3 t = whitened_third_moment(ms, wp);
  const EigenpairList pairs = tensor_power_method(t, consts.k, opts.power);
  return reconstruct_parameters(pairs, wp, consts, opts.rank_tol);
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Hungarian algorithm with potentials, O(n³).
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ShapeError("solve_assignment: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

Alignment align_columns(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref,
                        bool allow_sign_flip) {
  if (a.rows() != ref.rows() || a.cols() != ref.cols())
    throw ShapeError("align_columns: shape mismatch");
  const Eigen::Index k = a.cols();
  Eigen::MatrixXd cost(k, k);
  Eigen::MatrixXd flip(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double plus = (a.col(j) - ref.col(i)).norm();
      const double minus = (a.col(j) + ref.col(i)).norm();
      if (allow_sign_flip && minus < plus) {
        cost(i, j) = minus;
        flip(i, j) = -1.0;
      } else {
        cost(i, j) = plus;
        flip(i, j) = 1.0;
      }
    }
  }
  const std::vector<int> assign = solve_assignment(cost);
  Alignment out;
  out.permutation = assign;
  out.signs.resize(static_cast<std::size_t>(k));
  out.aligned.resize(a.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const int j = assign[static_cast<std::size_t>(i)];
    const double s = flip(i, j);
    out.signs[static_cast<std::size_t>(i)] = s;
    out.aligned.col(i) = s * a.col(j);
    out.distance += cost(i, j);
  }
  return out;
}

double aligned_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref,
                        bool allow_sign_flip) {
  return (align_columns(a, ref, allow_sign_flip).aligned - ref).norm();
}

double aligned_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref,
                              bool allow_sign_flip) {
  return aligned_distance(a, ref, allow_sign_flip) / ref.norm();
}

}  // namespace tdreg
