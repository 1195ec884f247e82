#include "nap/tensor.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nap/errors.hpp"

namespace nap {

const Matrix& Tensor::value() const { return tape->value(id); }
int Tensor::rows() const { return value().rows; }
int Tensor::cols() const { return value().cols; }

namespace {

void check_same_tape(Tensor a, Tensor b) {
  if (a.tape != b.tape) throw std::logic_error("tensors belong to different tapes");
}

void check_finite(const char* op, const Matrix& m) {
  if (!all_finite(m)) throw NonFiniteValue(std::string("result of ") + op);
}

void accumulate(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace

Tensor Tape::constant(Matrix value) {
  return record("constant", std::move(value), {}, nullptr, false);
}

Tensor Tape::param(ParamTensor& p) {
  Tensor t = record("param", p.value, {}, nullptr, true);
  nodes_[t.id].bound = &p;
  return t;
}

Tensor Tape::record(const char* op, Matrix value, std::vector<int> parents,
                    std::function<void(Tape&, int)> backprop, bool needs_grad) {
  check_finite(op, value);
  Node node;
  node.value = std::move(value);
  node.parents = std::move(parents);
  node.backprop = std::move(backprop);
  node.needs_grad = needs_grad;
  node.op = op;
  nodes_.push_back(std::move(node));
  return Tensor{this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad_buffer(int id, int rows, int cols) {
  if (!grads_[id]) grads_[id] = Matrix(rows, cols);
  return *grads_[id];
}

const Matrix* Tape::grad(int id) const {
  if (id < 0 || id >= static_cast<int>(grads_.size()) || !grads_[id]) return nullptr;
  return &*grads_[id];
}

void Tape::backward(Tensor loss) {
  if (loss.tape != this) throw std::logic_error("loss from another tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows != 1 || lv.cols != 1) throw NotAScalar("backward target is " + shape_str(lv));

  grads_.assign(nodes_.size(), std::nullopt);
  grads_[loss.id] = Matrix::ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    if (!grads_[id] || !nodes_[id].needs_grad) continue;
    if (nodes_[id].backprop) nodes_[id].backprop(*this, id);
  }
  for (int id = 0; id <= loss.id; ++id) {
    ParamTensor* p = nodes_[id].bound;
    if (!p || !grads_[id]) continue;
    if (p->grad)
      accumulate(*p->grad, *grads_[id]);
    else
      p->grad = *grads_[id];
  }
}

namespace {

using PullFn = std::function<void(Tape&, int self, const Matrix& gout, Matrix& gx)>;

Tensor unary(const char* op, Tensor x, Matrix value, PullFn pull) {
  Tape& t = *x.tape;
  bool ng = t.needs_grad(x.id);
  std::function<void(Tape&, int)> back;
  if (ng) {
    back = [x, pull](Tape& tape, int self) {
      const Matrix& gout = *tape.grad(self);
      const Matrix& xv = x.value();
      Matrix& gx = tape.grad_buffer(x.id, xv.rows, xv.cols);
      pull(tape, self, gout, gx);
    };
  }
  return t.record(op, std::move(value), {x.id}, std::move(back), ng);
}

Tensor binary(const char* op, Tensor a, Tensor b, Matrix value,
              std::function<void(Tape&, int self, const Matrix& gout)> pull) {
  check_same_tape(a, b);
  Tape& t = *a.tape;
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  std::function<void(Tape&, int)> back;
  if (ng) {
    back = [pull](Tape& tape, int self) { pull(tape, self, *tape.grad(self)); };
  }
  return t.record(op, std::move(value), {a.id, b.id}, std::move(back), ng);
}

}  // namespace

Tensor matmul(Tensor a, Tensor b) {
  check_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols != bv.rows) throw ShapeMismatch("matmul " + shape_str(av) + " * " + shape_str(bv));
  Matrix out(av.rows, bv.cols);
  for (int i = 0; i < av.rows; ++i)
    for (int k = 0; k < av.cols; ++k) {
      const double aik = av.at(i, k);
      for (int j = 0; j < bv.cols; ++j) out.at(i, j) += aik * bv.at(k, j);
    }
  return binary("matmul", a, b, std::move(out), [a, b](Tape& tape, int, const Matrix& gout) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (tape.needs_grad(a.id)) {
      // ga += gout * b^T
      Matrix& ga = tape.grad_buffer(a.id, av.rows, av.cols);
      for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < bv.cols; ++j) {
          const double g = gout.at(i, j);
          for (int k = 0; k < av.cols; ++k) ga.at(i, k) += g * bv.at(k, j);
        }
    }
    if (tape.needs_grad(b.id)) {
      // gb += a^T * gout
      Matrix& gb = tape.grad_buffer(b.id, bv.rows, bv.cols);
      for (int k = 0; k < bv.rows; ++k)
        for (int i = 0; i < av.rows; ++i) {
          const double aik = av.at(i, k);
          for (int j = 0; j < bv.cols; ++j) gb.at(k, j) += aik * gout.at(i, j);
        }
    }
  });
}

Matrix spmm_value(const NormalizedAdjacency& adj, const Matrix& dense) {
  if (adj.n != dense.rows)
    throw ShapeMismatch("spmm: adjacency " + std::to_string(adj.n) + "x" + std::to_string(adj.n) +
                        " vs dense " + shape_str(dense));
  Matrix out(adj.n, dense.cols);
  for (int i = 0; i < adj.n; ++i)
    for (int k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const int j = adj.col[k];
      const double w = adj.val[k];
      for (int c = 0; c < dense.cols; ++c) out.at(i, c) += w * dense.at(j, c);
    }
  return out;
}

Tensor spmm(const NormalizedAdjacency& adj, Tensor h) {
  Matrix out = spmm_value(adj, h.value());
  const NormalizedAdjacency* aptr = &adj;
  // adjacency is symmetric: A^T gout == A gout
  return unary("spmm", h, std::move(out), [aptr](Tape&, int, const Matrix& gout, Matrix& gx) {
    accumulate(gx, spmm_value(*aptr, gout));
  });
}

Tensor relu(Tensor x) {
  Matrix out = x.value();
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return unary("relu", x, std::move(out), [x](Tape&, int, const Matrix& gout, Matrix& gx) {
    const Matrix& xv = x.value();
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      if (xv.data[i] > 0.0) gx.data[i] += gout.data[i];
  });
}

Tensor row_l2_normalize(Tensor x) {
  const Matrix& xv = x.value();
  Matrix out(xv.rows, xv.cols);
  auto norms = std::make_shared<std::vector<double>>(xv.rows, 0.0);
  for (int i = 0; i < xv.rows; ++i) {
    double s = 0.0;
    for (int c = 0; c < xv.cols; ++c) s += xv.at(i, c) * xv.at(i, c);
    (*norms)[i] = std::sqrt(s);
    if ((*norms)[i] > 0.0)
      for (int c = 0; c < xv.cols; ++c) out.at(i, c) = xv.at(i, c) / (*norms)[i];
  }
  // per row: g_x = (g - (g . y) y) / n ; zero rows keep zero gradient
  return unary("row_l2_normalize", x, std::move(out),
               [norms](Tape& tape, int self, const Matrix& gout, Matrix& gx) {
    const Matrix& yv = tape.value(self);
    for (int i = 0; i < yv.rows; ++i) {
      const double n = (*norms)[i];
      if (n == 0.0) continue;
      double dot = 0.0;
      for (int c = 0; c < yv.cols; ++c) dot += gout.at(i, c) * yv.at(i, c);
      for (int c = 0; c < yv.cols; ++c) gx.at(i, c) += (gout.at(i, c) - dot * yv.at(i, c)) / n;
    }
  });
}

Tensor add(Tensor a, Tensor b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) throw ShapeMismatch("add " + shape_str(av) + " vs " + shape_str(bv));
  Matrix out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  return binary("add", a, b, std::move(out), [a, b](Tape& tape, int, const Matrix& gout) {
    for (Tensor p : {a, b}) {
      if (!tape.needs_grad(p.id)) continue;
      accumulate(tape.grad_buffer(p.id, gout.rows, gout.cols), gout);
    }
  });
}

Tensor sub(Tensor a, Tensor b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) throw ShapeMismatch("sub " + shape_str(av) + " vs " + shape_str(bv));
  Matrix out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  return binary("sub", a, b, std::move(out), [a, b](Tape& tape, int, const Matrix& gout) {
    if (tape.needs_grad(a.id)) accumulate(tape.grad_buffer(a.id, gout.rows, gout.cols), gout);
    if (tape.needs_grad(b.id)) {
      Matrix& gb = tape.grad_buffer(b.id, gout.rows, gout.cols);
      for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= gout.data[i];
    }
  });
}

Tensor hadamard(Tensor a, Tensor b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) throw ShapeMismatch("hadamard " + shape_str(av) + " vs " + shape_str(bv));
  Matrix out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  return binary("hadamard", a, b, std::move(out), [a, b](Tape& tape, int, const Matrix& gout) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (tape.needs_grad(a.id)) {
      Matrix& ga = tape.grad_buffer(a.id, av.rows, av.cols);
      for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += gout.data[i] * bv.data[i];
    }
    if (tape.needs_grad(b.id)) {
      Matrix& gb = tape.grad_buffer(b.id, bv.rows, bv.cols);
      for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += gout.data[i] * av.data[i];
    }
  });
}

Tensor divide(Tensor a, Tensor b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) throw ShapeMismatch("divide " + shape_str(av) + " vs " + shape_str(bv));
  Matrix out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] /= bv.data[i];
  return binary("divide", a, b, std::move(out), [a, b](Tape& tape, int self, const Matrix& gout) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const Matrix& ov = tape.value(self);
    if (tape.needs_grad(a.id)) {
      Matrix& ga = tape.grad_buffer(a.id, av.rows, av.cols);
      for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += gout.data[i] / bv.data[i];
    }
    if (tape.needs_grad(b.id)) {
      Matrix& gb = tape.grad_buffer(b.id, bv.rows, bv.cols);
      for (std::size_t i = 0; i < gb.data.size(); ++i)
        gb.data[i] -= gout.data[i] * ov.data[i] / bv.data[i];
    }
  });
}

Tensor exp(Tensor x) {
  Matrix out = x.value();
  for (double& v : out.data) v = std::exp(v);
  return unary("exp", x, std::move(out), [](Tape& tape, int self, const Matrix& gout, Matrix& gx) {
    const Matrix& ov = tape.value(self);
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gout.data[i] * ov.data[i];
  });
}

Tensor log(Tensor x) {
  const Matrix& xv = x.value();
  for (double v : xv.data)
    if (!(v > 0.0)) throw LogOfNonPositive("log of " + std::to_string(v));
  Matrix out = xv;
  for (double& v : out.data) v = std::log(v);
  return unary("log", x, std::move(out), [x](Tape&, int, const Matrix& gout, Matrix& gx) {
    const Matrix& xv = x.value();
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gout.data[i] / xv.data[i];
  });
}

Tensor negate(Tensor x) {
  Matrix out = x.value();
  for (double& v : out.data) v = -v;
  return unary("negate", x, std::move(out), [](Tape&, int, const Matrix& gout, Matrix& gx) {
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] -= gout.data[i];
  });
}

Tensor scale(Tensor x, double c) {
  Matrix out = x.value();
  for (double& v : out.data) v *= c;
  return unary("scale", x, std::move(out), [c](Tape&, int, const Matrix& gout, Matrix& gx) {
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += c * gout.data[i];
  });
}

Tensor sum(Tensor x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  Matrix out(1, 1);
  out.at(0, 0) = s;
  return unary("sum", x, std::move(out), [](Tape&, int, const Matrix& gout, Matrix& gx) {
    const double g = gout.at(0, 0);
    for (double& v : gx.data) v += g;
  });
}

Tensor transpose(Tensor x) {
  Matrix out = transposed(x.value());
  return unary("transpose", x, std::move(out), [](Tape&, int, const Matrix& gout, Matrix& gx) {
    for (int i = 0; i < gout.rows; ++i)
      for (int j = 0; j < gout.cols; ++j) gx.at(j, i) += gout.at(i, j);
  });
}

}  // namespace nap
