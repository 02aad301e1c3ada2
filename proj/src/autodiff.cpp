#include "protgnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "protgnn/errors.hpp"

namespace protgnn {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void check_rank1(const Tensor& a, const char* op) {
  if (a.rank() != 1) throw std::invalid_argument(std::string(op) + ": rank-1 tensor required, got " + a.shape_str());
}

}  // namespace

int Tape::push(Tensor value, bool needs_grad, Parameter* p) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.param = p;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.v.empty()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

double Tape::scalar(Var v) const {
  const Tensor& t = value(v);
  if (!t.is_scalar()) throw std::invalid_argument("scalar() on tensor " + t.shape_str());
  return t.v[0];
}

Var Tape::constant(Tensor t) { return {push(std::move(t), false)}; }

Var Tape::param(Parameter& p) { return {push(p.value, p.trainable, &p)}; }

Var Tape::matmul(Var a, Var b) {
  Tensor out = protgnn::matmul(val(a.id), val(b.id));
  bool ng = needs_grad(a) || needs_grad(b);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, b = b.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& av = val(a);
      const Tensor& bv = val(b);
      if (bv.rank() == 2) {
        if (nodes_[static_cast<std::size_t>(a)].needs_grad) addmul_nt(grad_buf(a), g, bv);
        if (nodes_[static_cast<std::size_t>(b)].needs_grad) addmul_tn(grad_buf(b), av, g);
      } else {
        // a (r,k) * b (k) -> (r)
        const std::size_t r = av.shape[0], k = av.shape[1];
        if (nodes_[static_cast<std::size_t>(a)].needs_grad) {
          Tensor& ga = grad_buf(a);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t kk = 0; kk < k; ++kk) ga.at(i, kk) += g.v[i] * bv.v[kk];
        }
        if (nodes_[static_cast<std::size_t>(b)].needs_grad) {
          Tensor& gb = grad_buf(b);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t kk = 0; kk < k; ++kk) gb.v[kk] += av.at(i, kk) * g.v[i];
        }
      }
    };
  }
  return {id};
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  check_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv.v[i];
  bool ng = needs_grad(a) || needs_grad(b);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, b = b.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      for (int in : {a, b}) {
        if (!nodes_[static_cast<std::size_t>(in)].needs_grad) continue;
        Tensor& gi = grad_buf(in);
        for (std::size_t i = 0; i < g.v.size(); ++i) gi.v[i] += g.v[i];
      }
    };
  }
  return {id};
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  check_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= bv.v[i];
  bool ng = needs_grad(a) || needs_grad(b);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, b = b.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      if (nodes_[static_cast<std::size_t>(a)].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[static_cast<std::size_t>(b)].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] -= g.v[i];
      }
    };
  }
  return {id};
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  check_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= bv.v[i];
  bool ng = needs_grad(a) || needs_grad(b);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, b = b.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& av2 = val(a);
      const Tensor& bv2 = val(b);
      if (nodes_[static_cast<std::size_t>(a)].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * bv2.v[i];
      }
      if (nodes_[static_cast<std::size_t>(b)].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i] * av2.v[i];
      }
    };
  }
  return {id};
}

Var Tape::scale(Var a, double c) {
  Tensor out = val(a.id);
  for (double& x : out.v) x *= c;
  bool ng = needs_grad(a);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, c, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += c * g.v[i];
    };
  }
  return {id};
}

Var Tape::add_const(Var a, double c) {
  Tensor out = val(a.id);
  for (double& x : out.v) x += c;
  bool ng = needs_grad(a);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
    };
  }
  return {id};
}

Var Tape::relu(Var a) {
  Tensor out = val(a.id);
  for (double& x : out.v) x = x > 0.0 ? x : 0.0;
  bool ng = needs_grad(a);
  int id = push(std::move(out), ng);
  if (ng) {
    // subgradient at 0 is 0
    nodes_.back().vjp = [this, a = a.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& av = val(a);
      Tensor& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.v.size(); ++i)
        if (av.v[i] > 0.0) ga.v[i] += g.v[i];
    };
  }
  return {id};
}

Var Tape::sigmoid(Var a) {
  Tensor out = val(a.id);
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  bool ng = needs_grad(a);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& ov = val(id);
      Tensor& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * ov.v[i] * (1.0 - ov.v[i]);
    };
  }
  return {id};
}

Var Tape::log(Var a) {
  Tensor out = val(a.id);
  for (double& x : out.v) {
    if (x <= 0.0) throw NumericError("log: nonpositive input " + std::to_string(x));
    x = std::log(x);
  }
  bool ng = needs_grad(a);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& av = val(a);
      Tensor& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] / av.v[i];
    };
  }
  return {id};
}

Var Tape::concat(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  check_rank1(av, "concat");
  check_rank1(bv, "concat");
  Tensor out = Tensor::vector(av.v.size() + bv.v.size());
  std::copy(av.v.begin(), av.v.end(), out.v.begin());
  std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + static_cast<long>(av.v.size()));
  bool ng = needs_grad(a) || needs_grad(b);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, b = b.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const std::size_t na = val(a).v.size();
      if (nodes_[static_cast<std::size_t>(a)].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (std::size_t i = 0; i < na; ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[static_cast<std::size_t>(b)].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (std::size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += g.v[na + i];
      }
    };
  }
  return {id};
}

Var Tape::row_sum(Var m) {
  const Tensor& mv = val(m.id);
  const std::size_t r = mv.rows(), c = mv.cols();
  Tensor out = Tensor::vector(c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.v[j] += mv.at(i, j);
  bool ng = needs_grad(m);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, m = m.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& gm = grad_buf(m);
      const std::size_t r2 = gm.rows(), c2 = gm.cols();
      for (std::size_t i = 0; i < r2; ++i)
        for (std::size_t j = 0; j < c2; ++j) gm.at(i, j) += g.v[j];
    };
  }
  return {id};
}

Var Tape::row_max(Var m) {
  const Tensor& mv = val(m.id);
  const std::size_t r = mv.rows(), c = mv.cols();
  if (r == 0) throw std::invalid_argument("row_max: empty matrix");
  Tensor out = Tensor::vector(c);
  std::vector<std::size_t> arg(c, 0);
  for (std::size_t j = 0; j < c; ++j) {
    double best = mv.at(0, j);
    for (std::size_t i = 1; i < r; ++i)
      if (mv.at(i, j) > best) {
        best = mv.at(i, j);
        arg[j] = i;
      }
    out.v[j] = best;
  }
  bool ng = needs_grad(m);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, m = m.id, id, arg = std::move(arg)]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& gm = grad_buf(m);
      for (std::size_t j = 0; j < g.v.size(); ++j) gm.at(arg[j], j) += g.v[j];
    };
  }
  return {id};
}

Var Tape::row(Var m, std::size_t i) {
  const Tensor& mv = val(m.id);
  const std::size_t c = mv.cols();
  if (i >= mv.rows()) throw std::invalid_argument("row: index out of range");
  Tensor out = Tensor::vector(c);
  for (std::size_t j = 0; j < c; ++j) out.v[j] = mv.at(i, j);
  bool ng = needs_grad(m);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, m = m.id, i, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& gm = grad_buf(m);
      for (std::size_t j = 0; j < g.v.size(); ++j) gm.at(i, j) += g.v[j];
    };
  }
  return {id};
}

Var Tape::stack(const std::vector<Var>& scalars) {
  Tensor out = Tensor::vector(scalars.size());
  bool ng = false;
  std::vector<int> ids(scalars.size());
  for (std::size_t k = 0; k < scalars.size(); ++k) {
    const Tensor& s = val(scalars[k].id);
    if (!s.is_scalar()) throw std::invalid_argument("stack: inputs must be scalars");
    out.v[k] = s.v[0];
    ids[k] = scalars[k].id;
    ng = ng || needs_grad(scalars[k]);
  }
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, ids = std::move(ids), id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!nodes_[static_cast<std::size_t>(ids[k])].needs_grad) continue;
        grad_buf(ids[k]).v[0] += g.v[k];
      }
    };
  }
  return {id};
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
  Tensor out = val(a.id);
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n != out.numel()) throw std::invalid_argument("reshape: element count mismatch");
  out.shape = std::move(shape);
  bool ng = needs_grad(a);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
    };
  }
  return {id};
}

Var Tape::sum_elements(Var a) {
  const Tensor& av = val(a.id);
  double s = 0.0;
  for (double x : av.v) s += x;
  bool ng = needs_grad(a);
  int id = push(Tensor::scalar(s), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, id]() {
      const double g = nodes_[static_cast<std::size_t>(id)].grad.v[0];
      Tensor& ga = grad_buf(a);
      for (double& x : ga.v) x += g;
    };
  }
  return {id};
}

Var Tape::squared_distance(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  check_same_shape(av, bv, "squared_distance");
  bool ng = needs_grad(a) || needs_grad(b);
  int id = push(Tensor::scalar(protgnn::squared_distance(av, bv)), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, b = b.id, id]() {
      const double g = nodes_[static_cast<std::size_t>(id)].grad.v[0];
      const Tensor& av2 = val(a);
      const Tensor& bv2 = val(b);
      if (nodes_[static_cast<std::size_t>(a)].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += 2.0 * (av2.v[i] - bv2.v[i]) * g;
      }
      if (nodes_[static_cast<std::size_t>(b)].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (std::size_t i = 0; i < gb.v.size(); ++i) gb.v[i] -= 2.0 * (av2.v[i] - bv2.v[i]) * g;
      }
    };
  }
  return {id};
}

Var Tape::cosine(Var a, Var b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  check_same_shape(av, bv, "cosine");
  const double na2 = protgnn::dot(av, av);
  const double nb2 = protgnn::dot(bv, bv);
  // zero vectors get cosine 0 and a zero gradient
  const bool degenerate = (na2 == 0.0 || nb2 == 0.0);
  const double d = degenerate ? 0.0 : protgnn::dot(av, bv);
  const double denom = degenerate ? 1.0 : std::sqrt(na2) * std::sqrt(nb2);
  bool ng = (needs_grad(a) || needs_grad(b)) && !degenerate;
  int id = push(Tensor::scalar(degenerate ? 0.0 : d / denom), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, b = b.id, id, na2, nb2, denom]() {
      const double g = nodes_[static_cast<std::size_t>(id)].grad.v[0];
      const double c = val(id).v[0];
      const Tensor& av2 = val(a);
      const Tensor& bv2 = val(b);
      if (nodes_[static_cast<std::size_t>(a)].needs_grad) {
        Tensor& ga = grad_buf(a);
        for (std::size_t i = 0; i < ga.v.size(); ++i)
          ga.v[i] += g * (bv2.v[i] / denom - c * av2.v[i] / na2);
      }
      if (nodes_[static_cast<std::size_t>(b)].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (std::size_t i = 0; i < gb.v.size(); ++i)
          gb.v[i] += g * (av2.v[i] / denom - c * bv2.v[i] / nb2);
      }
    };
  }
  return {id};
}

Var Tape::softmax_cross_entropy(Var logits, std::size_t target) {
  const Tensor& lv = val(logits.id);
  check_rank1(lv, "softmax_cross_entropy");
  if (target >= lv.v.size()) throw std::invalid_argument("softmax_cross_entropy: target out of range");
  double mx = lv.v[0];
  for (double x : lv.v) mx = std::max(mx, x);
  double se = 0.0;
  for (double x : lv.v) se += std::exp(x - mx);
  const double lse = mx + std::log(se);
  bool ng = needs_grad(logits);
  int id = push(Tensor::scalar(lse - lv.v[target]), ng);
  if (ng) {
    nodes_.back().vjp = [this, l = logits.id, target, id, mx, se]() {
      const double g = nodes_[static_cast<std::size_t>(id)].grad.v[0];
      const Tensor& lv2 = val(l);
      Tensor& gl = grad_buf(l);
      for (std::size_t i = 0; i < gl.v.size(); ++i) {
        const double p = std::exp(lv2.v[i] - mx) / se;
        gl.v[i] += g * (p - (i == target ? 1.0 : 0.0));
      }
    };
  }
  return {id};
}

Var Tape::clamp_max(Var a, double cap) {
  Tensor out = val(a.id);
  for (double& x : out.v) x = std::min(x, cap);
  bool ng = needs_grad(a);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a.id, cap, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& av = val(a);
      Tensor& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.v.size(); ++i)
        if (av.v[i] < cap) ga.v[i] += g.v[i];
    };
  }
  return {id};
}

Var Tape::add_row_vector(Var m, Var b) {
  const Tensor& mv = val(m.id);
  const Tensor& bv = val(b.id);
  check_rank1(bv, "add_row_vector");
  if (mv.cols() != bv.v.size())
    throw std::invalid_argument("add_row_vector: width mismatch " + mv.shape_str() + " vs " + bv.shape_str());
  Tensor out = mv;
  const std::size_t r = mv.rows(), c = mv.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += bv.v[j];
  bool ng = needs_grad(m) || needs_grad(b);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, m = m.id, b = b.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const std::size_t r2 = g.rows(), c2 = g.cols();
      if (nodes_[static_cast<std::size_t>(m)].needs_grad) {
        Tensor& gm = grad_buf(m);
        for (std::size_t i = 0; i < g.v.size(); ++i) gm.v[i] += g.v[i];
      }
      if (nodes_[static_cast<std::size_t>(b)].needs_grad) {
        Tensor& gb = grad_buf(b);
        for (std::size_t i = 0; i < r2; ++i)
          for (std::size_t j = 0; j < c2; ++j) gb.v[j] += g.at(i, j);
      }
    };
  }
  return {id};
}

Var Tape::gather_edge_features(Var z, const std::vector<std::pair<int, int>>& edges, Var p) {
  const Tensor& zv = val(z.id);
  const Tensor& pv = val(p.id);
  check_rank1(pv, "gather_edge_features");
  const std::size_t d = zv.cols();
  const std::size_t dp = pv.v.size();
  Tensor out = Tensor::matrix(edges.size(), 2 * d + dp);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [u, v] = edges[k];
    for (std::size_t j = 0; j < d; ++j) {
      out.at(k, j) = zv.at(static_cast<std::size_t>(u), j);
      out.at(k, d + j) = zv.at(static_cast<std::size_t>(v), j);
    }
    for (std::size_t j = 0; j < dp; ++j) out.at(k, 2 * d + j) = pv.v[j];
  }
  bool ng = needs_grad(z) || needs_grad(p);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, z = z.id, p = p.id, edges, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const std::size_t d = val(z).cols();
      const std::size_t dp = val(p).v.size();
      const bool gz_needed = nodes_[static_cast<std::size_t>(z)].needs_grad;
      const bool gp_needed = nodes_[static_cast<std::size_t>(p)].needs_grad;
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [u, v] = edges[k];
        if (gz_needed) {
          Tensor& gz = grad_buf(z);
          for (std::size_t j = 0; j < d; ++j) {
            gz.at(static_cast<std::size_t>(u), j) += g.at(k, j);
            gz.at(static_cast<std::size_t>(v), j) += g.at(k, d + j);
          }
        }
        if (gp_needed) {
          Tensor& gp = grad_buf(p);
          for (std::size_t j = 0; j < dp; ++j) gp.v[j] += g.at(k, 2 * d + j);
        }
      }
    };
  }
  return {id};
}

Var Tape::weighted_adjacency(Var scores, const std::vector<std::pair<int, int>>& edges, std::size_t n) {
  const Tensor& sv = val(scores.id);
  check_rank1(sv, "weighted_adjacency");
  if (sv.v.size() != edges.size())
    throw std::invalid_argument("weighted_adjacency: one score per edge required");
  Tensor out = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = 1.0;  // self loops keep weight 1
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto [u, v] = edges[k];
    out.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = sv.v[k];
    out.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = sv.v[k];
  }
  bool ng = needs_grad(scores);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, s = scores.id, edges, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& gs = grad_buf(s);
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [u, v] = edges[k];
        gs.v[k] += g.at(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) +
                   g.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u));
      }
    };
  }
  return {id};
}

Var Tape::sym_normalize(Var a_hat) {
  const Tensor& av = val(a_hat.id);
  Tensor out = sym_degree_normalize(av);
  bool ng = needs_grad(a_hat);
  int id = push(std::move(out), ng);
  if (ng) {
    nodes_.back().vjp = [this, a = a_hat.id, id]() {
      const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& av2 = val(a);
      const std::size_t n = av2.rows();
      std::vector<double> r(n);
      for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += av2.at(i, j);
        r[i] = 1.0 / std::sqrt(d);
      }
      // s[k] = dL/dr_k accumulated over row k and column k of the output
      std::vector<double> s(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = g.at(i, j);
          if (gij == 0.0) continue;
          s[i] += gij * av2.at(i, j) * r[j];
          s[j] += gij * av2.at(i, j) * r[i];
        }
      Tensor& ga = grad_buf(a);
      for (std::size_t k = 0; k < n; ++k) {
        const double drk = -0.5 * r[k] * r[k] * r[k] * s[k];
        for (std::size_t l = 0; l < n; ++l) ga.at(k, l) += g.at(k, l) * r[k] * r[l] + drk;
      }
    };
  }
  return {id};
}

Var Tape::sum(const std::vector<Var>& scalars) {
  if (scalars.empty()) return constant(Tensor::scalar(0.0));
  Var acc = scalars[0];
  for (std::size_t i = 1; i < scalars.size(); ++i) acc = add(acc, scalars[i]);
  return acc;
}

Var Tape::mean(const std::vector<Var>& scalars) {
  if (scalars.empty()) return constant(Tensor::scalar(0.0));
  return scale(sum(scalars), 1.0 / static_cast<double>(scalars.size()));
}

Var Tape::min_element(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("min_element: empty input");
  std::size_t best = 0;
  bool ng = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& t = val(scalars[i].id);
    if (!t.is_scalar()) throw std::invalid_argument("min_element: scalar inputs required");
    if (t.v[0] < val(scalars[best].id).v[0]) best = i;
    ng = ng || needs_grad(scalars[i]);
  }
  const int winner = scalars[best].id;
  int id = push(Tensor::scalar(val(winner).v[0]), ng);
  if (ng) {
    nodes_.back().vjp = [this, winner, id]() {
      if (!nodes_[static_cast<std::size_t>(winner)].needs_grad) return;
      grad_buf(winner).v[0] += nodes_[static_cast<std::size_t>(id)].grad.v[0];
    };
  }
  return {id};
}

void Tape::backward(Var root) {
  if (!root.valid()) throw std::invalid_argument("backward: invalid root");
  const Tensor& rv = value(root);
  if (!rv.is_scalar()) throw std::invalid_argument("backward: root must be scalar, got " + rv.shape_str());
  grad_buf(root.id).v[0] = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.v.empty()) continue;
    if (n.vjp) n.vjp();
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr && n.param->trainable && !n.grad.v.empty()) {
      for (std::size_t i = 0; i < n.grad.v.size(); ++i) n.param->grad.v[i] += n.grad.v[i];
    }
  }
}

Tensor Tape::gradient(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.v.empty()) return Tensor::zeros(n.value.shape);
  return n.grad;
}

double finite_difference_check(const std::function<double()>& loss,
                               const std::vector<Parameter*>& params, double h) {
  double worst = 0.0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.v.size(); ++i) {
      const double saved = p->value.v[i];
      p->value.v[i] = saved + h;
      const double up = loss();
      p->value.v[i] = saved - h;
      const double down = loss();
      p->value.v[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = p->grad.v[i];
      const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
      worst = std::max(worst, std::fabs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace protgnn
