#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace protgnn {

// Dense row-major tensor of doubles. Rank 1 or 2 everywhere in this
// project; scalars are rank-1 tensors with a single element.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> s);
  static Tensor full(std::vector<std::size_t> s, double value);
  static Tensor scalar(double x);
  static Tensor vector(std::size_t n, double fill = 0.0);
  static Tensor matrix(std::size_t r, std::size_t c, double fill = 0.0);

  std::size_t numel() const;
  int rank() const { return static_cast<int>(shape.size()); }
  bool is_scalar() const { return numel() == 1; }
  std::size_t rows() const;
  std::size_t cols() const;
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  std::string shape_str() const;

  double& at(std::size_t i) { return v[i]; }
  double at(std::size_t i) const { return v[i]; }
  double& at(std::size_t i, std::size_t j) { return v[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * cols() + j]; }
};

// Plain kernels shared by the autodiff forward passes and by code that
// needs the exact same floating point results without a tape.
Tensor matmul(const Tensor& a, const Tensor& b);   // (r,k)x(k,c) or (r,k)x(k)
void addmul_nt(Tensor& out, const Tensor& g, const Tensor& b);  // out += g * b^T
void addmul_tn(Tensor& out, const Tensor& a, const Tensor& g);  // out += a^T * g

double squared_distance(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);

Tensor matrix_row(const Tensor& m, std::size_t i);  // copy of one row as rank-1

// A_hat -> D^{-1/2} A_hat D^{-1/2} with D the row-sum degree matrix.
// Single implementation so weighted and unweighted paths agree bitwise.
Tensor sym_degree_normalize(const Tensor& a_hat);

}  // namespace protgnn
