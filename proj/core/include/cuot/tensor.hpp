#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cuot::ad {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

class Graph;

// Dense row-major tensor of doubles. `node >= 0` means the tensor is a
// recorded value on `graph`; node == -1 is a detached plain value.
// Data is shared, so copies are cheap handles onto the same buffer.
struct Tensor {
  Shape shape;
  std::shared_ptr<std::vector<double>> data;
  int64_t node = -1;
  Graph* graph = nullptr;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double v);

  int64_t numel() const { return ad::numel(shape); }
  int64_t rows() const;
  int64_t cols() const;
  double value() const;  // requires numel() == 1
  std::span<const double> values() const { return {data->data(), data->size()}; }
  std::span<double> mutable_values() { return {data->data(), data->size()}; }
  Tensor detached() const;
  bool attached() const { return node >= 0; }
};

enum class Op : uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  SMul,
  AddScalar,
  MatMul,
  Transpose,
  ConcatCols,
  SliceCols,
  Reshape,
  Square,
  Exp,
  Log,
  Recip,
  Softplus,
  Sigmoid,
  Silu,
  Relu,
  Sum,
};

const char* op_name(Op op);

struct Node {
  Op op = Op::Leaf;
  int64_t in0 = -1;
  int64_t in1 = -1;
  double c = 0.0;   // scalar payload (SMul factor / AddScalar addend)
  int64_t i0 = 0;   // column-range payload for SliceCols
  int64_t i1 = 0;
  Tensor out;
};

// Append-only tape. Nodes are recorded in execution order, which is a
// topological order by construction; backward walks it in reverse.
class Graph {
 public:
  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }
  const Node& node(int64_t id) const { return nodes_[static_cast<size_t>(id)]; }
  Node& node(int64_t id) { return nodes_[static_cast<size_t>(id)]; }

  // Records `t` as a leaf if it is not already a node of this graph.
  Tensor ensure(const Tensor& t);
  Tensor leaf(Shape shape, std::shared_ptr<std::vector<double>> data);

  int64_t record(Op op, int64_t in0, int64_t in1, Tensor out, double c = 0.0,
                 int64_t i0 = 0, int64_t i1 = 0);

 private:
  std::vector<Node> nodes_;
};

// ---- forward ops -----------------------------------------------------------
// All ops check shapes and reject non-finite outputs with an error naming
// the op. Broadcasting is limited to scalar-with-tensor (Add/Sub/Mul) and
// row-wise bias add of a [1,d] tensor onto [n,d].

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor smul(Graph& g, const Tensor& a, double c);
Tensor add_scalar(Graph& g, const Tensor& a, double c);
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
Tensor transpose(Graph& g, const Tensor& a);
Tensor concat_cols(Graph& g, const Tensor& a, const Tensor& b);
Tensor slice_cols(Graph& g, const Tensor& a, int64_t c0, int64_t c1);
Tensor reshape(Graph& g, const Tensor& a, Shape s);
Tensor square(Graph& g, const Tensor& a);
Tensor exp(Graph& g, const Tensor& a);
Tensor log(Graph& g, const Tensor& a);
Tensor recip(Graph& g, const Tensor& a);
Tensor softplus(Graph& g, const Tensor& a);
Tensor sigmoid(Graph& g, const Tensor& a);
Tensor silu(Graph& g, const Tensor& a);
Tensor relu(Graph& g, const Tensor& a);
Tensor sum(Graph& g, const Tensor& a);

// Composites.
Tensor mean(Graph& g, const Tensor& a);
Tensor rownorm2(Graph& g, const Tensor& a);            // squared L2 norm per row -> [n,1]
Tensor clamp_max(Graph& g, const Tensor& a, double c); // min(a, c) via relu

// ---- backward --------------------------------------------------------------

class GradMap {
 public:
  // Gradient of the root w.r.t. node `id`; zeros for detached/unreached nodes.
  Tensor at(const Graph& g, int64_t id) const;
  Tensor at(const Tensor& t) const;
  bool contains(int64_t id) const { return grads_.count(id) > 0; }
  std::unordered_map<int64_t, Tensor>& raw() { return grads_; }

 private:
  friend GradMap backward(Graph&, const Tensor&, const std::vector<int64_t>*);
  std::unordered_map<int64_t, Tensor> grads_;
  const Graph* graph_ = nullptr;
};

// Reverse-mode gradients of a scalar root. The backward pass records its own
// ops onto the tape, so returned gradients are themselves differentiable
// (double backward). When `targets` is given, work is restricted to paths
// that reach those nodes.
GradMap backward(Graph& g, const Tensor& root,
                 const std::vector<int64_t>* targets = nullptr);

// ---- finite-difference validation -------------------------------------------

struct Array {
  Shape shape;
  std::vector<double> data;
};

using ScalarFn = std::function<Tensor(Graph&, const std::vector<Tensor>&)>;

// Max relative error between reverse-mode and central finite differences,
// with denominator max(|analytic|, |numeric|, 1e-8).
double grad_check(const ScalarFn& f, const std::vector<Array>& point, double step);

}  // namespace cuot::ad
