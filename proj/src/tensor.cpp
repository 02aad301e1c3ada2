#include "protgnn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace protgnn {

Tensor Tensor::zeros(std::vector<std::size_t> s) {
  Tensor t;
  t.shape = std::move(s);
  t.v.assign(t.numel(), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<std::size_t> s, double value) {
  Tensor t = zeros(std::move(s));
  for (double& x : t.v) x = value;
  return t;
}

Tensor Tensor::scalar(double x) {
  Tensor t;
  t.shape = {1};
  t.v = {x};
  return t;
}

Tensor Tensor::vector(std::size_t n, double fill) { return full({n}, fill); }

Tensor Tensor::matrix(std::size_t r, std::size_t c, double fill) { return full({r, c}, fill); }

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::size_t Tensor::rows() const {
  if (shape.empty()) throw std::invalid_argument("rows() on empty tensor");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() != 2) throw std::invalid_argument("cols() on tensor of rank " + std::to_string(shape.size()));
  return shape[1];
}

bool Tensor::all_finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2) throw std::invalid_argument("matmul: lhs must be rank 2, got " + a.shape_str());
  const std::size_t r = a.shape[0], k = a.shape[1];
  if (b.rank() == 2) {
    if (b.shape[0] != k)
      throw std::invalid_argument("matmul: inner dims " + a.shape_str() + " x " + b.shape_str());
    const std::size_t c = b.shape[1];
    Tensor out = Tensor::matrix(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      const double* arow = &a.v[i * k];
      double* orow = &out.v[i * c];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double av = arow[kk];
        if (av == 0.0) continue;
        const double* brow = &b.v[kk * c];
        for (std::size_t j = 0; j < c; ++j) orow[j] += av * brow[j];
      }
    }
    return out;
  }
  if (b.rank() == 1) {
    if (b.shape[0] != k)
      throw std::invalid_argument("matmul: inner dims " + a.shape_str() + " x " + b.shape_str());
    Tensor out = Tensor::vector(r);
    for (std::size_t i = 0; i < r; ++i) {
      const double* arow = &a.v[i * k];
      double s = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * b.v[kk];
      out.v[i] = s;
    }
    return out;
  }
  throw std::invalid_argument("matmul: rhs must be rank 1 or 2, got " + b.shape_str());
}

void addmul_nt(Tensor& out, const Tensor& g, const Tensor& b) {
  // out (r,k) += g (r,c) * b^T with b (k,c)
  const std::size_t r = g.shape[0], c = g.shape[1], k = b.shape[0];
  for (std::size_t i = 0; i < r; ++i) {
    const double* grow = &g.v[i * c];
    double* orow = &out.v[i * k];
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double* brow = &b.v[kk * c];
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += grow[j] * brow[j];
      orow[kk] += s;
    }
  }
}

void addmul_tn(Tensor& out, const Tensor& a, const Tensor& g) {
  // out (k,c) += a^T * g with a (r,k), g (r,c)
  const std::size_t r = a.shape[0], k = a.shape[1], c = g.shape[1];
  for (std::size_t i = 0; i < r; ++i) {
    const double* arow = &a.v[i * k];
    const double* grow = &g.v[i * c];
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      double* orow = &out.v[kk * c];
      for (std::size_t j = 0; j < c; ++j) orow[j] += av * grow[j];
    }
  }
}

double squared_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    s += d * d;
  }
  return s;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

Tensor matrix_row(const Tensor& m, std::size_t i) {
  if (m.rank() != 2) throw std::invalid_argument("matrix_row: rank-2 tensor required, got " + m.shape_str());
  if (i >= m.shape[0]) throw std::invalid_argument("matrix_row: row index out of range");
  Tensor out = Tensor::zeros({m.shape[1]});
  for (std::size_t j = 0; j < m.shape[1]; ++j) out.v[j] = m.v[i * m.shape[1] + j];
  return out;
}

Tensor sym_degree_normalize(const Tensor& a_hat) {
  if (a_hat.rank() != 2 || a_hat.shape[0] != a_hat.shape[1])
    throw std::invalid_argument("sym_degree_normalize: square matrix required, got " + a_hat.shape_str());
  const std::size_t n = a_hat.shape[0];
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a_hat.at(i, j);
    if (d <= 0.0) throw std::invalid_argument("sym_degree_normalize: nonpositive degree at row " + std::to_string(i));
    r[i] = 1.0 / std::sqrt(d);
  }
  Tensor out = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = a_hat.at(i, j) * r[i] * r[j];
  return out;
}

}  // namespace protgnn
