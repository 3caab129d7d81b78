#include "tdreg/tensor3.hpp"

#include <algorithm>
#include <cmath>

namespace tdreg {

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

void Tensor3::add_outer(double s, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c) {
  const Eigen::MatrixXd bc = b * c.transpose();
  for (Eigen::Index i = 0; i < n_; ++i) {
    const double sa = s * a(i);
    if (sa == 0.0) continue;
    auto sl = slice(i);
    sl += sa * bc;
  }
}

void Tensor3::add_sym_matrix_vector(double s, const Eigen::MatrixXd& m,
                                    const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < n_; ++i) {
    auto sl = slice(i);
    // M_ij v_k + M_ik v_j
    sl += s * (m.col(i) * v.transpose() + v * m.row(i));
    // v_i M_jk
    sl += (s * v(i)) * m;
  }
}

double Tensor3::contract(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                         const Eigen::VectorXd& w) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < n_; ++i) {
    if (u(i) == 0.0) continue;
    total += u(i) * v.dot(slice(i) * w);
  }
  return total;
}

Eigen::VectorXd Tensor3::apply(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
  // Plain loops: for the K×K×K tensors of the power method this beats
  // per-slice matrix products, which allocate a temporary each.
  Eigen::VectorXd out(n_);
  const double* t = data_.data();
  for (Eigen::Index i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n_; ++j, t += n_) {
      double row = 0.0;
      for (Eigen::Index k = 0; k < n_; ++k) row += t[k] * w(k);
      acc += v(j) * row;
    }
    out(i) = acc;
  }
  return out;
}

Eigen::MatrixXd Tensor3::apply(const Eigen::VectorXd& w) const {
  Eigen::MatrixXd out(n_, n_);
  for (Eigen::Index i = 0; i < n_; ++i) out.row(i) = (slice(i) * w).transpose();
  return out;
}

Tensor3 Tensor3::multilinear(const Eigen::MatrixXd& w) const {
  const Eigen::Index m = w.cols();
  // Contract one mode at a time: n³m + n²m² + nm³.
  // step1(i, j, c) = Σ_k T_ijk W_kc
  std::vector<Eigen::MatrixXd> step1(static_cast<std::size_t>(n_));
  for (Eigen::Index i = 0; i < n_; ++i) step1[static_cast<std::size_t>(i)] = slice(i) * w;
  // step2(i, b, c) = Σ_j W_jb step1(i, j, c)
  std::vector<Eigen::MatrixXd> step2(static_cast<std::size_t>(n_));
  for (Eigen::Index i = 0; i < n_; ++i)
    step2[static_cast<std::size_t>(i)] = w.transpose() * step1[static_cast<std::size_t>(i)];
  Tensor3 out(m);
  for (Eigen::Index i = 0; i < n_; ++i) {
    const auto& s2 = step2[static_cast<std::size_t>(i)];
    for (Eigen::Index a = 0; a < m; ++a) {
      const double wa = w(i, a);
      if (wa == 0.0) continue;
      out.slice(a) += wa * s2;
    }
  }
  return out;
}

Tensor3 Tensor3::symmetrized() const {
  Tensor3 out(n_);
  for (Eigen::Index i = 0; i < n_; ++i)
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index k = 0; k < n_; ++k)
        out(i, j, k) = ((*this)(i, j, k) + (*this)(i, k, j) + (*this)(j, i, k) +
                        (*this)(j, k, i) + (*this)(k, i, j) + (*this)(k, j, i)) /
                       6.0;
  return out;
}

double Tensor3::max_asymmetry() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n_; ++i)
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double x = (*this)(i, j, k);
        for (double y : {(*this)(i, k, j), (*this)(j, i, k), (*this)(j, k, i), (*this)(k, i, j),
                         (*this)(k, j, i)})
          worst = std::max(worst, std::abs(x - y));
      }
  return worst;
}

double Tensor3::frobenius_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

bool Tensor3::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

}  // namespace tdreg
