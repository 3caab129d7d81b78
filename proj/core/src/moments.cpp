#include "tdreg/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "tdreg/errors.hpp"

namespace tdreg {

namespace {

void check_third_dim(Eigen::Index d) {
  if (d > kMaxExplicitThirdDim)
    throw ShapeError("explicit third moment requested for D=" + std::to_string(d) +
                     " (limit " + std::to_string(kMaxExplicitThirdDim) +
                     "); use the whitened path");
}

// Σ over the nonzero entries of c of the distinct-position triple numerator
//   c⊗c⊗c − Σ_i c_i (e_i⊗e_i⊗c + e_i⊗c⊗e_i + c⊗e_i⊗e_i) + 2 Σ_i c_i e_i⊗e_i⊗e_i
// scaled by `scale` and added into `out`.
void add_doc_triples(const Eigen::VectorXd& c, double scale, Tensor3& out) {
  std::vector<Eigen::Index> nz;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (c(i) != 0.0) nz.push_back(i);
  for (Eigen::Index i : nz)
    for (Eigen::Index j : nz)
      for (Eigen::Index k : nz) out(i, j, k) += scale * c(i) * c(j) * c(k);
  for (Eigen::Index i : nz) {
    const double ci = scale * c(i);
    for (Eigen::Index k : nz) {
      const double t = ci * c(k);
      out(i, i, k) -= t;
      out(i, k, i) -= t;
      out(k, i, i) -= t;
    }
    out(i, i, i) += 2.0 * ci;
  }
}

}  // namespace

std::vector<double> column_lengths(const Eigen::MatrixXd& docs) {
  std::vector<double> out(static_cast<std::size_t>(docs.cols()));
  for (Eigen::Index n = 0; n < docs.cols(); ++n) out[static_cast<std::size_t>(n)] = docs.col(n).sum();
  return out;
}

double gmm_estimate_sigma2(const Eigen::MatrixXd& x) {
  if (x.cols() < 2) throw DegenerateDataError("sigma2 estimate needs at least 2 observations");
  if (x.rows() < 1) throw DegenerateDataError("sigma2 estimate needs D >= 1");
  const double n = static_cast<double>(x.cols());
  const Eigen::VectorXd mean = x.rowwise().sum() / n;
  Eigen::MatrixXd cov = (x * x.transpose()) / n - mean * mean.transpose();
  cov = (0.5 * (cov + cov.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double smallest = es.eigenvalues()(0);
  if (smallest < -1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw NumericError("covariance has a significantly negative eigenvalue: " +
                       std::to_string(smallest));
  return std::max(0.0, smallest);
}

void recenter(MomentSet& ms) {
  const Eigen::Index d = ms.m1.size();
  if (ms.model == ModelKind::Gmm) {
    ms.m2 = ms.raw2 - ms.shift * Eigen::MatrixXd::Identity(d, d);
    if (ms.raw3) {
      Tensor3 m3 = *ms.raw3;
      m3.add_sym_matrix_vector(-ms.shift, Eigen::MatrixXd::Identity(d, d), ms.m1);
      ms.m3 = std::move(m3);
    } else {
      ms.m3.reset();
    }
    return;
  }
  const double a0 = ms.shift;
  ms.m2 = ms.raw2 - (a0 / (a0 + 1.0)) * ms.m1 * ms.m1.transpose();
  if (ms.raw3) {
    Tensor3 m3 = *ms.raw3;
    m3.add_sym_matrix_vector(-a0 / (a0 + 2.0), ms.raw2, ms.m1);
    m3.add_cube(2.0 * a0 * a0 / ((a0 + 2.0) * (a0 + 1.0)), ms.m1);
    ms.m3 = std::move(m3);
  } else {
    ms.m3.reset();
  }
}

MomentSet gmm_moments(const Eigen::MatrixXd& x, double sigma2, ThirdMoment third) {
  if (x.cols() < 1) throw DegenerateDataError("gmm_moments: empty dataset");
  if (!(sigma2 >= 0.0)) throw DomainError("gmm_moments: sigma2 must be nonnegative");
  const Eigen::Index d = x.rows();
  const double n = static_cast<double>(x.cols());
  MomentSet ms;
  ms.model = ModelKind::Gmm;
  ms.n = x.cols();
  ms.shift = sigma2;
  ms.m1 = x.rowwise().sum() / n;
  ms.raw2 = (x * x.transpose()) / n;
  ms.raw2 = (0.5 * (ms.raw2 + ms.raw2.transpose())).eval();
  if (third == ThirdMoment::Materialize) {
    check_third_dim(d);
    Tensor3 raw3(d);
    for (Eigen::Index i = 0; i < x.cols(); ++i) raw3.add_cube(1.0 / n, x.col(i));
    ms.raw3 = std::move(raw3);
  }
  recenter(ms);
  return ms;
}

DocStatistics lda_doc_statistics(const Eigen::VectorXd& c, double ell, ThirdMoment third) {
  if ((c.array() < 0.0).any()) throw DomainError("lda_doc_statistics: negative count");
  if (ell < 3.0)
    throw InsufficientLengthError("lda_doc_statistics: document length " + std::to_string(ell) +
                                  " < 3");
  DocStatistics st;
  st.first = c / ell;
  const double pair_norm = ell * (ell - 1.0);
  st.pairs = c * c.transpose();
  st.pairs.diagonal() -= c;
  st.pairs /= pair_norm;
  if (third == ThirdMoment::Materialize) {
    check_third_dim(c.size());
    Tensor3 t(c.size());
    add_doc_triples(c, 1.0 / (pair_norm * (ell - 2.0)), t);
    st.triples = std::move(t);
  }
  return st;
}

MomentSet lda_moments(const Eigen::MatrixXd& docs, const ModelConstants& consts,
                      ThirdMoment third, std::span<const double> lengths) {
  if (docs.cols() < 1) throw DegenerateDataError("lda_moments: empty corpus");
  std::vector<double> own;
  if (lengths.empty()) {
    own = column_lengths(docs);
    lengths = own;
  }
  if (static_cast<Eigen::Index>(lengths.size()) != docs.cols())
    throw ShapeError("lda_moments: one length per document required");
  const Eigen::Index d = docs.rows();
  const double n = static_cast<double>(docs.cols());
  MomentSet ms;
  ms.model = ModelKind::Lda;
  ms.n = docs.cols();
  ms.shift = consts.alpha0();
  ms.m1 = Eigen::VectorXd::Zero(d);
  ms.raw2 = Eigen::MatrixXd::Zero(d, d);
  if (third == ThirdMoment::Materialize) {
    check_third_dim(d);
    ms.raw3 = Tensor3(d);
  }
  if ((docs.array() < 0.0).any()) throw DomainError("lda_moments: negative count");
  for (Eigen::Index i = 0; i < docs.cols(); ++i) {
    const double ell = lengths[static_cast<std::size_t>(i)];
    if (ell < 3.0)
      throw InsufficientLengthError(
          "lda_moments: document " + std::to_string(i) + " has length " + std::to_string(ell) +
              " < 3",
          i);
    const auto c = docs.col(i);
    const double pair_norm = ell * (ell - 1.0);
    ms.m1 += c / (ell * n);
    ms.raw2.noalias() += (c * c.transpose()) / (pair_norm * n);
    ms.raw2.diagonal() -= c / (pair_norm * n);
    if (ms.raw3) add_doc_triples(c, 1.0 / (pair_norm * (ell - 2.0) * n), *ms.raw3);
  }
  ms.raw2 = (0.5 * (ms.raw2 + ms.raw2.transpose())).eval();
  recenter(ms);
  return ms;
}

MomentSet combine_moments(const MomentSet& mt, const MomentSet& mp) {
  if (mp.n == 0) return mt;
  if (mt.n == 0) return mp;
  if (mt.model != mp.model) throw ShapeError("combine_moments: model mismatch");
  if (mt.dim() != mp.dim()) throw ShapeError("combine_moments: dimension mismatch");
  if (mt.raw3.has_value() != mp.raw3.has_value())
    throw ShapeError("combine_moments: only one side carries a third moment");
  if (mt.shift != mp.shift) throw ShapeError("combine_moments: centering constants differ");
  const double nt = static_cast<double>(mt.n);
  const double np = static_cast<double>(mp.n);
  const double wt = nt / (nt + np);
  const double wp = np / (nt + np);
  MomentSet out;
  out.model = mt.model;
  out.n = mt.n + mp.n;
  out.shift = mt.shift;
  out.m1 = wt * mt.m1 + wp * mp.m1;
  out.raw2 = wt * mt.raw2 + wp * mp.raw2;
  if (mt.raw3) {
    Tensor3 r = wt * *mt.raw3;
    r += wp * *mp.raw3;
    out.raw3 = std::move(r);
  }
  recenter(out);
  return out;
}

}  // namespace tdreg
