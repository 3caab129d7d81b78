#include "tdreg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tdreg {

namespace {

std::vector<double> repeated(double value, Eigen::Index n) {
  return std::vector<double>(static_cast<std::size_t>(n), value);
}

Eigen::MatrixXd concat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// ⟨T, G⟩ over the first two indices: out_c = Σ_ab T_abc G_ab (T symmetric).
Eigen::VectorXd contract_matrix(const Tensor3& t, const Eigen::MatrixXd& g) {
  Eigen::VectorXd out(t.dim());
  for (Eigen::Index c = 0; c < t.dim(); ++c) out(c) = t.slice(c).cwiseProduct(g).sum();
  return out;
}

}  // namespace

TrainingBlock make_training_block(const Eigen::MatrixXd& x, const ModelConstants& consts) {
  TrainingBlock block;
  block.consts = consts;
  block.x = x;
  if (consts.model == ModelKind::Gmm) {
    if (!block.consts.sigma2) block.consts.sigma2 = gmm_estimate_sigma2(x);
    block.moments = gmm_moments(x, *block.consts.sigma2);
  } else {
    block.lengths = column_lengths(x);
    block.moments = lda_moments(x, consts, ThirdMoment::Skip, block.lengths);
  }
  return block;
}

PipelineTape combined_forward(const TrainingBlock& train, const Eigen::MatrixXd& x_p,
                              const PipelineOptions& opts) {
  const ModelConstants& consts = train.consts;
  const bool lda = consts.model == ModelKind::Lda;
  if (x_p.cols() > 0 && x_p.rows() != train.x.rows())
    throw ShapeError("combined_forward: pseudo data has the wrong dimension");
  if (lda && x_p.cols() > 0 && opts.pseudo_length < 3.0)
    throw InsufficientLengthError("combined_forward: pseudo-document length must be >= 3");

  PipelineTape tape;
  tape.n_t = train.x.cols();
  tape.n_p = x_p.cols();
  const double n = static_cast<double>(tape.n_t + tape.n_p);
  const double nt = static_cast<double>(tape.n_t);
  const std::vector<double> p_lengths = repeated(opts.pseudo_length, x_p.cols());

  Eigen::MatrixXd all;
  std::vector<double> all_lengths;
  if (opts.recompute_training) {
    all = concat(train.x, x_p);
    if (lda) {
      all_lengths = train.lengths;
      all_lengths.insert(all_lengths.end(), p_lengths.begin(), p_lengths.end());
    }
    const MomentSet ms = lda ? lda_moments(all, consts, ThirdMoment::Skip, all_lengths)
                             : gmm_moments(all, *consts.sigma2);
    tape.m1 = ms.m1;
    tape.raw2 = ms.raw2;
  } else {
    tape.m1 = nt * train.moments.m1;
    tape.raw2 = nt * train.moments.raw2;
    if (x_p.cols() > 0) {
      if (lda) {
        const double ell = opts.pseudo_length;
        const Eigen::VectorXd total = x_p.rowwise().sum();
        tape.m1 += total / ell;
        Eigen::MatrixXd pairs = x_p * x_p.transpose();
        pairs.diagonal() -= total;
        tape.raw2 += pairs / (ell * (ell - 1.0));
      } else {
        tape.m1 += x_p.rowwise().sum();
        tape.raw2 += x_p * x_p.transpose();
      }
    }
    tape.m1 /= n;
    tape.raw2 /= n;
    tape.raw2 = (0.5 * (tape.raw2 + tape.raw2.transpose())).eval();
  }

  MomentSet centered;
  centered.model = consts.model;
  centered.m1 = tape.m1;
  centered.raw2 = tape.raw2;
  centered.shift = train.moments.shift;
  recenter(centered);
  tape.m2 = centered.m2;

  tape.spectral = whiten_spectral(tape.m2, consts.k, opts.tdm.rank_tol);
  const Eigen::MatrixXd& w = tape.spectral.pair.w;
  Tensor3 raw;
  if (opts.recompute_training) {
    raw = whitened_raw_triples(all, w, consts.model, all_lengths);
  } else {
    raw = whitened_raw_triples(train.x, w, consts.model, train.lengths);
    if (x_p.cols() > 0) raw += whitened_raw_triples(x_p, w, consts.model, p_lengths);
  }
  raw *= 1.0 / n;
  tape.tensor =
      center_whitened_third(raw, tape.m1, tape.raw2, w, consts.model, train.moments.shift);
  const EigenpairList pairs =
      tensor_power_method(tape.tensor, consts.k, opts.tdm.power, &tape.power);
  tape.result = reconstruct_parameters(pairs, tape.spectral.pair, consts, opts.tdm.rank_tol);
  return tape;
}

Eigen::MatrixXd whitening_vjp(const SpectralWhitening& sw, const Eigen::MatrixXd& w_bar,
                              const Eigen::MatrixXd& b_bar, double gap_tol) {
  const Eigen::VectorXd& s = sw.pair.s;
  const Eigen::Index k = s.size();
  const Eigen::Index d = sw.values.size();
  const Eigen::MatrixXd u = sw.vectors.leftCols(k);
  const Eigen::VectorXd rs = s.cwiseSqrt();
  const Eigen::VectorXd irs = rs.cwiseInverse();

  const Eigen::MatrixXd u_bar = w_bar * irs.asDiagonal() + b_bar * rs.asDiagonal();
  Eigen::VectorXd s_bar(k);
  for (Eigen::Index j = 0; j < k; ++j)
    s_bar(j) = -0.5 * irs(j) / s(j) * u.col(j).dot(w_bar.col(j)) +
               0.5 * irs(j) * u.col(j).dot(b_bar.col(j));

  const double scale = sw.values.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd proj = sw.vectors.transpose() * u_bar;  // D×K
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i == j) {
        inner(i, j) = s_bar(j);
        continue;
      }
      const double gap = sw.values(j) - sw.values(i);
      if (std::abs(gap) < gap_tol * scale)
        throw DegenerateSpectrumError(
            "eigenvalue gap " + std::to_string(std::abs(gap)) + " between eigenvalues " +
            std::to_string(j) + " and " + std::to_string(i) +
            " is below the adjoint safeguard; use the finite-difference gradient");
      inner(i, j) = proj(i, j) / gap;
    }
  }
  const Eigen::MatrixXd m_bar = sw.vectors * inner * u.transpose();
  return 0.5 * (m_bar + m_bar.transpose());
}

Tensor3 power_method_vjp(const PowerMethodTrace& trace, const EigenpairList& pairs,
                         const Eigen::VectorXd& lambda_bar, const Eigen::MatrixXd& v_bar) {
  const auto k = static_cast<Eigen::Index>(pairs.size());
  const Eigen::Index dim = pairs.empty() ? 0 : pairs.front().v.size();
  // Re-index the output-order adjoints by extraction order.
  Eigen::VectorXd lb_ext(k);
  Eigen::MatrixXd vb_ext(dim, k);
  std::vector<double> lambda_ext(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const int e = trace.order[static_cast<std::size_t>(j)];
    lb_ext(e) = lambda_bar(j);
    vb_ext.col(e) = v_bar.col(j);
    lambda_ext[static_cast<std::size_t>(e)] = pairs[static_cast<std::size_t>(j)].lambda;
  }

  Tensor3 next(dim);  // adjoint of the tensor left after component e
  for (Eigen::Index e = k - 1; e >= 0; --e) {
    const auto& comp = trace.components[static_cast<std::size_t>(e)];
    const Tensor3& te = comp.tensor;
    const Eigen::VectorXd v = comp.sign * comp.iterates.back();
    const double lambda = lambda_ext[static_cast<std::size_t>(e)];

    // Deflation: T_next = T_e − λ v⊗v⊗v.
    const Tensor3 next_sym = next.symmetrized();
    double lb = lb_ext(e) - next_sym.contract(v, v, v);
    Eigen::VectorXd vb = vb_ext.col(e) - 3.0 * lambda * next_sym.apply(v, v);
    Tensor3 cur = next;
    // λ = T_e(v, v, v)
    cur.add_cube(lb, v);
    vb += 3.0 * lb * te.apply(v, v);
    vb *= comp.sign;
    // Unrolled iterations v_t = T_e(I, v_{t−1}, v_{t−1}) / ‖·‖.
    for (std::size_t t = comp.iterates.size() - 1; t >= 1; --t) {
      const Eigen::VectorXd& vprev = comp.iterates[t - 1];
      const Eigen::VectorXd& vt = comp.iterates[t];
      const double nu = te.apply(vprev, vprev).norm();
      const Eigen::VectorXd ub = (vb - vt * vt.dot(vb)) / nu;
      cur.add_outer(1.0, ub, vprev, vprev);
      vb = 2.0 * te.apply(ub, vprev);
    }
    next = std::move(cur);
  }
  return next.symmetrized();
}

void whitened_raw_triples_vjp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                              ModelKind model, std::span<const double> lengths,
                              const Tensor3& t_bar, double scale, Eigen::MatrixXd& w_bar,
                              Eigen::MatrixXd* x_bar) {
  const Eigen::Index k = w.cols();
  const Eigen::Index n = x.cols();
  const Eigen::MatrixXd y = w.transpose() * x;
  Eigen::MatrixXd y_bar(k, n);
  if (model == ModelKind::Gmm) {
    for (Eigen::Index i = 0; i < n; ++i) y_bar.col(i) = 3.0 * scale * t_bar.apply(y.col(i), y.col(i));
    w_bar.noalias() += x * y_bar.transpose();
    if (x_bar) x_bar->noalias() += w * y_bar;
    return;
  }

  std::vector<double> own;
  if (lengths.empty()) {
    own = column_lengths(x);
    lengths = own;
  }
  Eigen::VectorXd omega(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ell = lengths[static_cast<std::size_t>(i)];
    omega(i) = 1.0 / (ell * (ell - 1.0) * (ell - 2.0));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    y_bar.col(i) = 3.0 * scale * omega(i) * t_bar.apply(y.col(i), y.col(i));

  const Eigen::MatrixXd q = x * omega.asDiagonal() * y.transpose();  // D×K
  const Eigen::VectorXd h = x * omega;
  const Eigen::Index d = x.rows();
  Eigen::MatrixXd q_bar(d, k);
  Eigen::VectorXd h_bar(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::VectorXd wi = w.row(i).transpose();
    const Eigen::VectorXd tww = t_bar.apply(wi, wi);
    q_bar.row(i) = -3.0 * scale * tww.transpose();
    h_bar(i) = 2.0 * scale * tww.dot(wi);
    w_bar.row(i) += (-6.0 * scale * t_bar.apply(wi, Eigen::VectorXd(q.row(i).transpose())) +
                     6.0 * scale * h(i) * tww)
                        .transpose();
  }
  y_bar.noalias() += (q_bar.transpose() * x) * omega.asDiagonal();
  w_bar.noalias() += x * y_bar.transpose();
  if (x_bar) {
    x_bar->noalias() += q_bar * y * omega.asDiagonal();
    x_bar->noalias() += h_bar * omega.transpose();
    x_bar->noalias() += w * y_bar;
  }
}

Eigen::MatrixXd combined_backward(const TrainingBlock& train, const Eigen::MatrixXd& x_p,
                                  const PipelineTape& tape, const Eigen::MatrixXd& a_bar,
                                  const PipelineOptions& opts) {
  const ModelConstants& consts = train.consts;
  const bool lda = consts.model == ModelKind::Lda;
  const Eigen::Index k = consts.k;
  const Eigen::Index d = train.x.rows();
  const double n = static_cast<double>(tape.n_t + tape.n_p);
  const double shift = train.moments.shift;
  const EigenpairList& pairs = tape.result.eigenpairs;
  const Eigen::MatrixXd& w = tape.spectral.pair.w;
  const Eigen::MatrixXd& b = tape.spectral.pair.b;

  // Reconstruction a_j = κ λ_j B v_j.
  const double kappa = reconstruction_scale(consts);
  Eigen::VectorXd lambda_bar(k);
  Eigen::MatrixXd v_bar(k, k);
  Eigen::MatrixXd b_bar = Eigen::MatrixXd::Zero(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& p = pairs[static_cast<std::size_t>(j)];
    lambda_bar(j) = kappa * (b * p.v).dot(a_bar.col(j));
    v_bar.col(j) = kappa * p.lambda * (b.transpose() * a_bar.col(j));
    b_bar.noalias() += kappa * p.lambda * a_bar.col(j) * p.v.transpose();
  }

  const Tensor3 t_bar = power_method_vjp(tape.power, pairs, lambda_bar, v_bar);

  Eigen::MatrixXd w_bar = Eigen::MatrixXd::Zero(d, k);
  Eigen::VectorXd m1_bar = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd raw2_bar = Eigen::MatrixXd::Zero(d, d);

  // Centering of the whitened third moment.
  const Eigen::VectorXd mw = w.transpose() * tape.m1;
  Eigen::VectorXd mw_bar;
  if (lda) {
    const double ca = shift / (shift + 2.0);
    const double cb = 2.0 * shift * shift / ((shift + 2.0) * (shift + 1.0));
    const Eigen::MatrixXd e = w.transpose() * tape.raw2 * w;
    const Eigen::MatrixXd e_bar = -3.0 * ca * t_bar.apply(mw);
    mw_bar = -3.0 * ca * contract_matrix(t_bar, e) + 3.0 * cb * t_bar.apply(mw, mw);
    w_bar.noalias() += tape.raw2 * w * (e_bar + e_bar.transpose());
    raw2_bar.noalias() += w * e_bar * w.transpose();
  } else {
    const Eigen::MatrixXd g = w.transpose() * w;
    const Eigen::MatrixXd g_bar = -3.0 * shift * t_bar.apply(mw);
    mw_bar = -3.0 * shift * contract_matrix(t_bar, g);
    w_bar.noalias() += w * (g_bar + g_bar.transpose());
  }
  w_bar.noalias() += tape.m1 * mw_bar.transpose();
  m1_bar.noalias() += w * mw_bar;

  // Raw whitened triples, averaged over all n observations.
  Eigen::MatrixXd x_bar = Eigen::MatrixXd::Zero(d, x_p.cols());
  const std::vector<double> p_lengths = repeated(opts.pseudo_length, x_p.cols());
  if (opts.recompute_training) {
    const Eigen::MatrixXd all = concat(train.x, x_p);
    std::vector<double> all_lengths;
    if (lda) {
      all_lengths = train.lengths;
      all_lengths.insert(all_lengths.end(), p_lengths.begin(), p_lengths.end());
    }
    Eigen::MatrixXd all_bar = Eigen::MatrixXd::Zero(d, all.cols());
    whitened_raw_triples_vjp(all, w, consts.model, all_lengths, t_bar, 1.0 / n, w_bar, &all_bar);
    x_bar += all_bar.rightCols(x_p.cols());
  } else {
    whitened_raw_triples_vjp(train.x, w, consts.model, train.lengths, t_bar, 1.0 / n, w_bar,
                             nullptr);
    if (x_p.cols() > 0)
      whitened_raw_triples_vjp(x_p, w, consts.model, p_lengths, t_bar, 1.0 / n, w_bar, &x_bar);
  }

  // Whitening of the centered second moment.
  const Eigen::MatrixXd m2_bar = whitening_vjp(tape.spectral, w_bar, b_bar, opts.eigen_gap_tol);
  raw2_bar += m2_bar;
  if (lda) m1_bar -= (shift / (shift + 1.0)) * (m2_bar + m2_bar.transpose()) * tape.m1;

  // Pseudo-data contributions to m1 and raw2.
  const Eigen::MatrixXd r2 = raw2_bar + raw2_bar.transpose();
  if (lda) {
    const double ell = opts.pseudo_length;
    const double pair_norm = n * ell * (ell - 1.0);
    x_bar.colwise() += m1_bar / (n * ell) - raw2_bar.diagonal() / pair_norm;
    x_bar.noalias() += r2 * x_p / pair_norm;
  } else {
    x_bar.colwise() += m1_bar / n;
    x_bar.noalias() += r2 * x_p / n;
  }
  return x_bar;
}

}  // namespace tdreg
