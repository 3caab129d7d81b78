#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace tdreg {

/// Dense cubic third-order tensor of side n, stored row-major in (i, j, k).
/// Used both for explicit D×D×D moments and for whitened K×K×K tensors.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Eigen::Index n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  static Tensor3 zero(Eigen::Index n) { return Tensor3(n); }

  Eigen::Index dim() const { return n_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    return data_[static_cast<std::size_t>((i * n_ + j) * n_ + k)];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data_[static_cast<std::size_t>((i * n_ + j) * n_ + k)];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // Slice k of the first index as an n×n matrix view (row-major).
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  slice(Eigen::Index i) const {
    return {data_.data() + i * n_ * n_, n_, n_};
  }
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slice(
      Eigen::Index i) {
    return {data_.data() + i * n_ * n_, n_, n_};
  }

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator-=(const Tensor3& o);
  Tensor3& operator*=(double s);

  // this += s · a⊗b⊗c
  void add_outer(double s, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const Eigen::VectorXd& c);
  // this += s · v⊗v⊗v
  void add_cube(double s, const Eigen::VectorXd& v) { add_outer(s, v, v, v); }
  // this += s · (M⊗v + perms): M_ij v_k + M_ik v_j + v_i M_jk, M symmetric
  void add_sym_matrix_vector(double s, const Eigen::MatrixXd& m, const Eigen::VectorXd& v);

  // T(u, v, w) = Σ T_ijk u_i v_j w_k
  double contract(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                  const Eigen::VectorXd& w) const;
  // T(I, v, w): the vector with entries Σ_jk T_ijk v_j w_k
  Eigen::VectorXd apply(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;
  // T(I, I, w): matrix with entries Σ_k T_ijk w_k
  Eigen::MatrixXd apply(const Eigen::VectorXd& w) const;
  // T(W, W, W) for an n×m matrix W, giving an m×m×m tensor.
  Tensor3 multilinear(const Eigen::MatrixXd& w) const;

  // Average over the six index permutations.
  Tensor3 symmetrized() const;
  double max_asymmetry() const;
  double frobenius_norm() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  Eigen::Index n_ = 0;
  std::vector<double> data_;
};

Tensor3 operator+(Tensor3 a, const Tensor3& b);
Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator*(double s, Tensor3 a);

}  // namespace tdreg
