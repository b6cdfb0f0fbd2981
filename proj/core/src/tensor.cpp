#include "cuot/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace cuot::ad {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> values)
    : shape(std::move(s)), data(std::make_shared<std::vector<double>>(std::move(values))) {
  if (static_cast<int64_t>(data->size()) != ad::numel(shape))
    throw ShapeError("tensor data length " + std::to_string(data->size()) +
                     " does not match shape " + shape_str(shape));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(Shape s) {
  auto n = ad::numel(s);
  return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
}

Tensor Tensor::full(Shape s, double v) {
  auto n = ad::numel(s);
  return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), v));
}

int64_t Tensor::rows() const {
  if (shape.size() == 2) return shape[0];
  if (shape.size() == 1) return 1;
  return 1;
}

int64_t Tensor::cols() const {
  if (shape.size() == 2) return shape[1];
  if (shape.size() == 1) return shape[0];
  return 1;
}

double Tensor::value() const {
  if (numel() != 1) throw ShapeError("Tensor::value on non-scalar " + shape_str(shape));
  return (*data)[0];
}

Tensor Tensor::detached() const {
  Tensor t;
  t.shape = shape;
  t.data = data;
  return t;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::SMul: return "smul";
    case Op::AddScalar: return "add_scalar";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::Reshape: return "reshape";
    case Op::Square: return "square";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Recip: return "recip";
    case Op::Softplus: return "softplus";
    case Op::Sigmoid: return "sigmoid";
    case Op::Silu: return "silu";
    case Op::Relu: return "relu";
    case Op::Sum: return "sum";
  }
  return "?";
}

namespace {

void check_finite(const Tensor& t, Op op) {
  for (double v : *t.data) {
    if (!std::isfinite(v))
      throw NumericError(std::string("non-finite output of op '") + op_name(op) + "'");
  }
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string("op '") + op_name(op) + "' shape mismatch: " +
                   shape_str(a.shape) + " vs " + shape_str(b.shape));
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

bool is_scalar(const Tensor& t) { return t.numel() == 1; }

// [n,d] op [1,d] (or [d]) row-wise bias.
bool is_row_bias(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2) return false;
  if (b.shape.size() == 2 && b.shape[0] == 1 && b.shape[1] == a.shape[1]) return true;
  if (b.shape.size() == 1 && b.shape[0] == a.shape[1]) return true;
  return false;
}

Tensor make_out(Shape s) { return Tensor::zeros(std::move(s)); }

struct Recorded {
  Tensor a;  // graph-resident handles
  Tensor b;
};

Recorded attach2(Graph& g, const Tensor& a, const Tensor& b) {
  return {g.ensure(a), g.ensure(b)};
}

Tensor finish(Graph& g, Op op, Tensor out, int64_t in0, int64_t in1, double c = 0.0,
              int64_t i0 = 0, int64_t i1 = 0) {
  check_finite(out, op);
  int64_t id = g.record(op, in0, in1, out, c, i0, i1);
  out.node = id;
  out.graph = &g;
  return out;
}

}  // namespace

Tensor Graph::ensure(const Tensor& t) {
  if (t.graph == this && t.node >= 0) return t;
  if (!t.data) throw ShapeError("ensure: tensor has no data");
  Tensor out = t.detached();
  int64_t id = record(Op::Leaf, -1, -1, out);
  out.node = id;
  out.graph = this;
  node(id).out = out;
  return out;
}

Tensor Graph::leaf(Shape shape, std::shared_ptr<std::vector<double>> data) {
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::move(data);
  if (static_cast<int64_t>(t.data->size()) != ad::numel(t.shape))
    throw ShapeError("leaf data length does not match shape");
  return ensure(t);
}

int64_t Graph::record(Op op, int64_t in0, int64_t in1, Tensor out, double c,
                      int64_t i0, int64_t i1) {
  Node n;
  n.op = op;
  n.in0 = in0;
  n.in1 = in1;
  n.c = c;
  n.i0 = i0;
  n.i1 = i1;
  n.out = std::move(out);
  nodes_.push_back(std::move(n));
  int64_t id = size() - 1;
  nodes_.back().out.node = id;
  nodes_.back().out.graph = this;
  return id;
}

// ---- elementwise helpers ----------------------------------------------------

namespace {

template <class F>
Tensor unary_op(Graph& g, const Tensor& a, Op op, F f) {
  Tensor ga = g.ensure(a);
  Tensor out = make_out(a.shape);
  const auto& src = *ga.data;
  auto& dst = *out.data;
  for (size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return finish(g, op, std::move(out), ga.node, -1);
}

}  // namespace

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  auto [ga, gb] = attach2(g, a, b);
  Tensor out;
  if (same_shape(ga, gb)) {
    out = make_out(ga.shape);
    for (size_t i = 0; i < out.data->size(); ++i)
      (*out.data)[i] = (*ga.data)[i] + (*gb.data)[i];
  } else if (is_scalar(gb)) {
    out = make_out(ga.shape);
    const double s = (*gb.data)[0];
    for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = (*ga.data)[i] + s;
  } else if (is_scalar(ga)) {
    out = make_out(gb.shape);
    const double s = (*ga.data)[0];
    for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = s + (*gb.data)[i];
  } else if (is_row_bias(ga, gb)) {
    out = make_out(ga.shape);
    const int64_t n = ga.shape[0], d = ga.shape[1];
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < d; ++c)
        (*out.data)[r * d + c] = (*ga.data)[r * d + c] + (*gb.data)[c];
  } else {
    shape_fail(Op::Add, ga, gb);
  }
  return finish(g, Op::Add, std::move(out), ga.node, gb.node);
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
  auto [ga, gb] = attach2(g, a, b);
  Tensor out;
  if (same_shape(ga, gb)) {
    out = make_out(ga.shape);
    for (size_t i = 0; i < out.data->size(); ++i)
      (*out.data)[i] = (*ga.data)[i] - (*gb.data)[i];
  } else if (is_scalar(gb)) {
    out = make_out(ga.shape);
    const double s = (*gb.data)[0];
    for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = (*ga.data)[i] - s;
  } else if (is_scalar(ga)) {
    out = make_out(gb.shape);
    const double s = (*ga.data)[0];
    for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = s - (*gb.data)[i];
  } else if (is_row_bias(ga, gb)) {
    out = make_out(ga.shape);
    const int64_t n = ga.shape[0], d = ga.shape[1];
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < d; ++c)
        (*out.data)[r * d + c] = (*ga.data)[r * d + c] - (*gb.data)[c];
  } else {
    shape_fail(Op::Sub, ga, gb);
  }
  return finish(g, Op::Sub, std::move(out), ga.node, gb.node);
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  auto [ga, gb] = attach2(g, a, b);
  Tensor out;
  if (same_shape(ga, gb)) {
    out = make_out(ga.shape);
    for (size_t i = 0; i < out.data->size(); ++i)
      (*out.data)[i] = (*ga.data)[i] * (*gb.data)[i];
  } else if (is_scalar(gb)) {
    out = make_out(ga.shape);
    const double s = (*gb.data)[0];
    for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = (*ga.data)[i] * s;
  } else if (is_scalar(ga)) {
    out = make_out(gb.shape);
    const double s = (*ga.data)[0];
    for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = s * (*gb.data)[i];
  } else {
    shape_fail(Op::Mul, ga, gb);
  }
  return finish(g, Op::Mul, std::move(out), ga.node, gb.node);
}

Tensor smul(Graph& g, const Tensor& a, double c) {
  Tensor ga = g.ensure(a);
  Tensor out = make_out(ga.shape);
  for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = (*ga.data)[i] * c;
  return finish(g, Op::SMul, std::move(out), ga.node, -1, c);
}

Tensor add_scalar(Graph& g, const Tensor& a, double c) {
  Tensor ga = g.ensure(a);
  Tensor out = make_out(ga.shape);
  for (size_t i = 0; i < out.data->size(); ++i) (*out.data)[i] = (*ga.data)[i] + c;
  return finish(g, Op::AddScalar, std::move(out), ga.node, -1, c);
}

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
  auto [ga, gb] = attach2(g, a, b);
  if (ga.shape.size() != 2 || gb.shape.size() != 2 || ga.shape[1] != gb.shape[0])
    shape_fail(Op::MatMul, ga, gb);
  const int64_t n = ga.shape[0], k = ga.shape[1], m = gb.shape[1];
  Tensor out = make_out({n, m});
  ConstMatMap A(ga.data->data(), n, k);
  ConstMatMap B(gb.data->data(), k, m);
  MatMap C(out.data->data(), n, m);
  C.noalias() = A * B;
  return finish(g, Op::MatMul, std::move(out), ga.node, gb.node);
}

Tensor transpose(Graph& g, const Tensor& a) {
  Tensor ga = g.ensure(a);
  if (ga.shape.size() != 2)
    throw ShapeError("transpose expects rank-2, got " + shape_str(ga.shape));
  const int64_t n = ga.shape[0], m = ga.shape[1];
  Tensor out = make_out({m, n});
  ConstMatMap A(ga.data->data(), n, m);
  MatMap T(out.data->data(), m, n);
  T = A.transpose();
  return finish(g, Op::Transpose, std::move(out), ga.node, -1);
}

Tensor concat_cols(Graph& g, const Tensor& a, const Tensor& b) {
  auto [ga, gb] = attach2(g, a, b);
  if (ga.shape.size() != 2 || gb.shape.size() != 2 || ga.shape[0] != gb.shape[0])
    shape_fail(Op::ConcatCols, ga, gb);
  const int64_t n = ga.shape[0], ca = ga.shape[1], cb = gb.shape[1];
  Tensor out = make_out({n, ca + cb});
  for (int64_t r = 0; r < n; ++r) {
    double* dst = out.data->data() + r * (ca + cb);
    const double* pa = ga.data->data() + r * ca;
    const double* pb = gb.data->data() + r * cb;
    std::copy(pa, pa + ca, dst);
    std::copy(pb, pb + cb, dst + ca);
  }
  return finish(g, Op::ConcatCols, std::move(out), ga.node, gb.node);
}

Tensor slice_cols(Graph& g, const Tensor& a, int64_t c0, int64_t c1) {
  Tensor ga = g.ensure(a);
  if (ga.shape.size() != 2 || c0 < 0 || c1 > ga.shape[1] || c0 >= c1)
    throw ShapeError("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") invalid for " + shape_str(ga.shape));
  const int64_t n = ga.shape[0], m = ga.shape[1], w = c1 - c0;
  Tensor out = make_out({n, w});
  for (int64_t r = 0; r < n; ++r) {
    const double* src = ga.data->data() + r * m + c0;
    std::copy(src, src + w, out.data->data() + r * w);
  }
  return finish(g, Op::SliceCols, std::move(out), ga.node, -1, 0.0, c0, c1);
}

Tensor reshape(Graph& g, const Tensor& a, Shape s) {
  Tensor ga = g.ensure(a);
  if (ad::numel(s) != ga.numel())
    throw ShapeError("reshape " + shape_str(ga.shape) + " -> " + shape_str(s) +
                     " changes element count");
  Tensor out(std::move(s), *ga.data);
  return finish(g, Op::Reshape, std::move(out), ga.node, -1);
}

Tensor square(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Square, [](double x) { return x * x; });
}

Tensor exp(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Exp, [](double x) { return std::exp(x); });
}

Tensor log(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Log, [](double x) { return std::log(x); });
}

Tensor recip(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Recip, [](double x) { return 1.0 / x; });
}

namespace {
inline double softplus_scalar(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sigmoid_scalar(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

Tensor softplus(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Softplus, softplus_scalar);
}

Tensor sigmoid(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Sigmoid, sigmoid_scalar);
}

Tensor silu(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Silu, [](double x) { return x * sigmoid_scalar(x); });
}

Tensor relu(Graph& g, const Tensor& a) {
  return unary_op(g, a, Op::Relu, [](double x) { return x > 0 ? x : 0.0; });
}

Tensor sum(Graph& g, const Tensor& a) {
  Tensor ga = g.ensure(a);
  double acc = 0.0;
  for (double v : *ga.data) acc += v;
  Tensor out({}, {acc});
  return finish(g, Op::Sum, std::move(out), ga.node, -1);
}

Tensor mean(Graph& g, const Tensor& a) {
  Tensor s = sum(g, a);
  return smul(g, s, 1.0 / static_cast<double>(a.numel()));
}

Tensor rownorm2(Graph& g, const Tensor& a) {
  Tensor ga = g.ensure(a);
  if (ga.shape.size() == 1) ga = reshape(g, ga, {1, ga.shape[0]});
  if (ga.shape.size() != 2)
    throw ShapeError("rownorm2 expects rank 1 or 2, got " + shape_str(ga.shape));
  Tensor ones = Tensor::full({ga.shape[1], 1}, 1.0);
  return matmul(g, square(g, ga), ones);
}

Tensor clamp_max(Graph& g, const Tensor& a, double c) {
  // min(a, c) = c - relu(c - a)
  Tensor t = relu(g, sub(g, Tensor::scalar(c), a));
  return sub(g, Tensor::scalar(c), t);
}

// ---- backward ---------------------------------------------------------------

Tensor GradMap::at(const Graph& g, int64_t id) const {
  auto it = grads_.find(id);
  if (it != grads_.end()) return it->second;
  return Tensor::zeros(g.node(id).out.shape);
}

Tensor GradMap::at(const Tensor& t) const {
  if (!t.attached() || graph_ == nullptr) {
    // Detached leaf: zero gradient by definition.
    return Tensor::zeros(t.shape);
  }
  return at(*graph_, t.node);
}

namespace {

// Sum of gradient g over broadcast dimensions, to match input shape.
Tensor reduce_to_shape(Graph& g, const Tensor& grad, const Shape& target) {
  if (grad.shape == target) return grad;
  const int64_t tn = ad::numel(target);
  if (tn == 1) {
    Tensor s = sum(g, grad);
    if (target.empty()) return s;
    return reshape(g, s, target);
  }
  // Row-bias case: grad [n,d] -> target [1,d] or [d].
  if (grad.shape.size() == 2 &&
      ((target.size() == 2 && target[0] == 1 && target[1] == grad.shape[1]) ||
       (target.size() == 1 && target[0] == grad.shape[1]))) {
    Tensor ones = Tensor::full({1, grad.shape[0]}, 1.0);
    Tensor r = matmul(g, ones, grad);  // [1,d]
    if (target.size() == 1) return reshape(g, r, target);
    return r;
  }
  throw ShapeError("cannot reduce gradient " + shape_str(grad.shape) + " to " +
                   shape_str(target));
}

}  // namespace

GradMap backward(Graph& g, const Tensor& root, const std::vector<int64_t>* targets) {
  if (root.numel() != 1)
    throw ShapeError("backward requires a scalar root, got " + shape_str(root.shape));
  if (!root.attached() || root.graph != &g)
    throw ShapeError("backward root is not attached to this graph");

  const int64_t root_id = root.node;

  // Reachability: ancestors of root (the recorded forward subgraph).
  std::vector<uint8_t> reach(static_cast<size_t>(g.size()), 0);
  {
    std::vector<int64_t> stack{root_id};
    reach[static_cast<size_t>(root_id)] = 1;
    while (!stack.empty()) {
      int64_t id = stack.back();
      stack.pop_back();
      const Node& n = g.node(id);
      for (int64_t in : {n.in0, n.in1}) {
        if (in >= 0 && !reach[static_cast<size_t>(in)]) {
          reach[static_cast<size_t>(in)] = 1;
          stack.push_back(in);
        }
      }
    }
  }

  // Optional restriction: only propagate along paths that reach a target.
  std::vector<uint8_t> useful;
  if (targets) {
    useful.assign(static_cast<size_t>(g.size()), 0);
    for (int64_t t : *targets)
      if (t >= 0 && t < g.size()) useful[static_cast<size_t>(t)] = 1;
    for (int64_t id = 0; id < g.size(); ++id) {
      if (useful[static_cast<size_t>(id)]) continue;
      const Node& n = g.node(id);
      const bool u0 = n.in0 >= 0 && useful[static_cast<size_t>(n.in0)];
      const bool u1 = n.in1 >= 0 && useful[static_cast<size_t>(n.in1)];
      if (u0 || u1) useful[static_cast<size_t>(id)] = 1;
    }
  }
  auto want = [&](int64_t id) {
    return !targets || useful[static_cast<size_t>(id)];
  };

  GradMap gm;
  gm.graph_ = &g;
  auto& grads = gm.raw();

  const int64_t upper = g.size();  // nodes appended during backward are not revisited
  Tensor seed = g.ensure(root.shape.empty() ? Tensor::scalar(1.0)
                                            : Tensor::full(root.shape, 1.0));
  grads[root_id] = seed;

  auto accum = [&](int64_t id, const Tensor& contribution) {
    auto it = grads.find(id);
    if (it == grads.end())
      grads.emplace(id, contribution);
    else
      it->second = add(g, it->second, contribution);
  };

  for (int64_t id = upper - 1; id >= 0; --id) {
    if (!reach[static_cast<size_t>(id)] || !want(id)) continue;
    auto git = grads.find(id);
    if (git == grads.end()) continue;
    const Node n = g.node(id);  // copy: the vector may reallocate while recording
    Tensor go = git->second;
    auto in_val = [&](int64_t in) { return g.node(in).out; };

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add: {
        const Tensor a = in_val(n.in0), b = in_val(n.in1);
        if (want(n.in0)) accum(n.in0, reduce_to_shape(g, go, a.shape));
        if (want(n.in1)) accum(n.in1, reduce_to_shape(g, go, b.shape));
        break;
      }
      case Op::Sub: {
        const Tensor a = in_val(n.in0), b = in_val(n.in1);
        if (want(n.in0)) accum(n.in0, reduce_to_shape(g, go, a.shape));
        if (want(n.in1))
          accum(n.in1, reduce_to_shape(g, smul(g, go, -1.0), b.shape));
        break;
      }
      case Op::Mul: {
        const Tensor a = in_val(n.in0), b = in_val(n.in1);
        if (want(n.in0)) accum(n.in0, reduce_to_shape(g, mul(g, go, b), a.shape));
        if (want(n.in1)) accum(n.in1, reduce_to_shape(g, mul(g, go, a), b.shape));
        break;
      }
      case Op::SMul:
        if (want(n.in0)) accum(n.in0, smul(g, go, n.c));
        break;
      case Op::AddScalar:
        if (want(n.in0)) accum(n.in0, go);
        break;
      case Op::MatMul: {
        const Tensor a = in_val(n.in0), b = in_val(n.in1);
        if (want(n.in0)) accum(n.in0, matmul(g, go, transpose(g, b)));
        if (want(n.in1)) accum(n.in1, matmul(g, transpose(g, a), go));
        break;
      }
      case Op::Transpose:
        if (want(n.in0)) accum(n.in0, transpose(g, go));
        break;
      case Op::ConcatCols: {
        const Tensor a = in_val(n.in0), b = in_val(n.in1);
        if (want(n.in0)) accum(n.in0, slice_cols(g, go, 0, a.shape[1]));
        if (want(n.in1))
          accum(n.in1, slice_cols(g, go, a.shape[1], a.shape[1] + b.shape[1]));
        break;
      }
      case Op::SliceCols: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        const int64_t rows = a.shape[0], m = a.shape[1];
        Tensor padded = go;
        if (n.i0 > 0) padded = concat_cols(g, Tensor::zeros({rows, n.i0}), padded);
        if (n.i1 < m) padded = concat_cols(g, padded, Tensor::zeros({rows, m - n.i1}));
        accum(n.in0, padded);
        break;
      }
      case Op::Reshape: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        accum(n.in0, reshape(g, go, a.shape));
        break;
      }
      case Op::Square: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        accum(n.in0, mul(g, go, smul(g, a, 2.0)));
        break;
      }
      case Op::Exp:
        if (want(n.in0)) accum(n.in0, mul(g, go, n.out));
        break;
      case Op::Log: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        accum(n.in0, mul(g, go, recip(g, a)));
        break;
      }
      case Op::Recip: {
        if (!want(n.in0)) break;
        accum(n.in0, smul(g, mul(g, go, square(g, n.out)), -1.0));
        break;
      }
      case Op::Softplus: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        accum(n.in0, mul(g, go, sigmoid(g, a)));
        break;
      }
      case Op::Sigmoid: {
        if (!want(n.in0)) break;
        Tensor one_minus = sub(g, Tensor::scalar(1.0), n.out);
        accum(n.in0, mul(g, go, mul(g, n.out, one_minus)));
        break;
      }
      case Op::Silu: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        Tensor s = sigmoid(g, a);
        Tensor one_minus = sub(g, Tensor::scalar(1.0), s);
        Tensor d = add(g, s, mul(g, mul(g, a, s), one_minus));
        accum(n.in0, mul(g, go, d));
        break;
      }
      case Op::Relu: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        Tensor mask = Tensor::zeros(a.shape);
        for (size_t i = 0; i < mask.data->size(); ++i)
          (*mask.data)[i] = (*a.data)[i] > 0 ? 1.0 : 0.0;
        accum(n.in0, mul(g, go, mask));
        break;
      }
      case Op::Sum: {
        if (!want(n.in0)) break;
        const Tensor a = in_val(n.in0);
        Tensor ones = Tensor::full(a.shape, 1.0);
        accum(n.in0, mul(g, ones, go));
        break;
      }
    }
  }
  return gm;
}

double grad_check(const ScalarFn& f, const std::vector<Array>& point, double step) {
  if (step <= 0) throw std::invalid_argument("grad_check: step must be > 0");

  auto eval = [&](const std::vector<Array>& at) {
    Graph g;
    std::vector<Tensor> leaves;
    leaves.reserve(at.size());
    for (const auto& a : at)
      leaves.push_back(g.leaf(a.shape, std::make_shared<std::vector<double>>(a.data)));
    Tensor out = f(g, leaves);
    return out.value();
  };

  // Analytic gradients.
  std::vector<std::vector<double>> analytic;
  {
    Graph g;
    std::vector<Tensor> leaves;
    for (const auto& a : point)
      leaves.push_back(g.leaf(a.shape, std::make_shared<std::vector<double>>(a.data)));
    Tensor out = f(g, leaves);
    GradMap gm = backward(g, out);
    for (const auto& leaf : leaves) analytic.push_back(*gm.at(leaf).data);
  }

  double max_rel = 0.0;
  std::vector<Array> probe = point;
  for (size_t t = 0; t < point.size(); ++t) {
    for (size_t i = 0; i < point[t].data.size(); ++i) {
      probe[t].data[i] = point[t].data[i] + step;
      const double fp = eval(probe);
      probe[t].data[i] = point[t].data[i] - step;
      const double fm = eval(probe);
      probe[t].data[i] = point[t].data[i];
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace cuot::ad
