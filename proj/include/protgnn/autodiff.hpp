#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "protgnn/tensor.hpp"

namespace protgnn {

// Trainable (or frozen) tensor with an accumulated gradient buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape, zeroed between optimizer steps
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor val, bool train = true)
      : name(std::move(n)), value(std::move(val)), trainable(train) {
    grad = Tensor::zeros(value.shape);
  }
  void zero_grad() { grad.v.assign(grad.v.size(), 0.0); }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager tape: every operation computes its value immediately and records a
// closure for the reverse sweep. Gradients of a parameter used several
// times accumulate additively. Single threaded by design; independent
// tapes never share state, so callers may run one tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t);
  Var param(Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var log(Var a);  // elementwise natural log, domain (0, inf)
  Var concat(Var a, Var b);            // rank-1 tensors
  Var row_sum(Var m);                  // (r,c) -> (c), adds all rows together
  Var row_max(Var m);                  // (r,c) -> (c), columnwise max, ties to lowest row
  Var row(Var m, std::size_t i);       // (r,c) -> (c)
  Var stack(const std::vector<Var>& scalars);  // n scalars -> (n)
  Var reshape(Var a, std::vector<std::size_t> shape);
  Var sum_elements(Var a);             // any shape -> scalar
  Var squared_distance(Var a, Var b);  // rank-1, same length -> scalar
  Var cosine(Var a, Var b);            // rank-1 -> scalar; 0 if either input is zero
  Var softmax_cross_entropy(Var logits, std::size_t target);  // rank-1 -> scalar
  Var clamp_max(Var a, double cap);    // min(x, cap) elementwise
  Var add_row_vector(Var m, Var b);    // (r,c) + (c) broadcast over rows

  // Rows of out are [z[u]; z[v]; p] for each (u,v) in edges.
  Var gather_edge_features(Var z, const std::vector<std::pair<int, int>>& edges, Var p);
  // n x n matrix: identity plus scores[k] at (u,v) and (v,u) for edge k.
  Var weighted_adjacency(Var scores, const std::vector<std::pair<int, int>>& edges, std::size_t n);
  // Differentiable D^{-1/2} A_hat D^{-1/2}; forward matches sym_degree_normalize.
  Var sym_normalize(Var a_hat);

  Var sum(const std::vector<Var>& scalars);
  Var mean(const std::vector<Var>& scalars);
  Var min_element(const std::vector<Var>& scalars);  // ties route the gradient to the first

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  double scalar(Var v) const;
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar root; accumulates into Parameter::grad.
  void backward(Var root);

  // Gradient of a non-parameter node after backward(); zeros if unreached.
  Tensor gradient(Var v) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // lazily allocated during backward
    std::function<void()> vjp;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  int push(Tensor value, bool needs_grad, Parameter* p = nullptr);
  Tensor& grad_buf(int id);
  bool has_grad(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.v.empty(); }
  const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  std::vector<Node> nodes_;
};

// Central-difference oracle. loss() must recompute the loss from the
// current parameter values; analytic gradients must already sit in each
// Parameter::grad. Returns the max relative error over all coordinates,
// with denominator max(|fd|, |analytic|, 1e-8).
double finite_difference_check(const std::function<double()>& loss,
                               const std::vector<Parameter*>& params, double h = 1e-5);

}  // namespace protgnn
