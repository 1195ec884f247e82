#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nap/graph.hpp"
#include "nap/matrix.hpp"

namespace nap {

/// A trainable matrix together with its accumulated gradient.
struct ParamTensor {
  Matrix value;
  std::optional<Matrix> grad;
};

class Tape;

/// Handle to one node of a recorded computation.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  int rows() const;
  int cols() const;
};

/// Reverse-mode tape over dense matrices. Every forward op records itself;
/// backward() runs the reverse sweep and accumulates into bound parameters.
/// A tape is confined to one thread; forward values are checked finite and
/// any non-finite result aborts with NonFiniteValue.
class Tape {
 public:
  Tensor constant(Matrix value);

  /// Leaf bound to external parameter storage. backward() adds this leaf's
  /// gradient into p.grad. The ParamTensor must outlive the tape.
  Tensor param(ParamTensor& p);

  /// Reverse accumulation from a scalar (1x1) node. Throws NotAScalar
  /// otherwise.
  void backward(Tensor loss);

  const Matrix& value(int id) const { return nodes_[id].value; }

  /// Gradient of the last backward() target w.r.t. node id; nullptr if the
  /// node did not participate or no backward has run.
  const Matrix* grad(int id) const;

  std::size_t size() const { return nodes_.size(); }

  // --- op construction (use the free functions below) ---
  Tensor record(const char* op, Matrix value, std::vector<int> parents,
                std::function<void(Tape&, int)> backprop, bool needs_grad);
  Matrix& grad_buffer(int id, int rows, int cols);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

 private:
  struct Node {
    Matrix value;
    std::vector<int> parents;
    std::function<void(Tape&, int)> backprop;
    bool needs_grad = false;
    ParamTensor* bound = nullptr;
    const char* op = "";
  };
  std::vector<Node> nodes_;
  std::vector<std::optional<Matrix>> grads_;
};

// Recorded forward ops. Inputs must live on the same tape.
Tensor matmul(Tensor a, Tensor b);
Tensor spmm(const NormalizedAdjacency& adj, Tensor h);  // adj held by caller, no grad
Tensor relu(Tensor x);
Tensor row_l2_normalize(Tensor x);  // all-zero rows stay zero
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor hadamard(Tensor a, Tensor b);
Tensor divide(Tensor a, Tensor b);
Tensor exp(Tensor x);
Tensor log(Tensor x);  // throws LogOfNonPositive on any entry <= 0
Tensor negate(Tensor x);
Tensor scale(Tensor x, double c);
Tensor sum(Tensor x);  // full reduction to 1x1
Tensor transpose(Tensor x);

/// Plain spmm used by the recorded op and by evaluation paths.
Matrix spmm_value(const NormalizedAdjacency& adj, const Matrix& dense);

}  // namespace nap
