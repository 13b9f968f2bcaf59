#include "stnmt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

STNMT_BEGIN_NAMESPACE

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(t.shape()));
  }
}

Real stable_sigmoid(Real x) {
  if (x >= 0) {
    return Real(1) / (Real(1) + std::exp(-x));
  }
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

bool wants_grad(const std::shared_ptr<TensorData>& t) { return t->requires_grad; }

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

// -- Tensor -------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  if (shape.empty() || shape.size() > 2) {
    throw ShapeError("tensor rank must be 1 or 2, got " + to_string(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
  }
  auto data = std::make_shared<TensorData>();
  data->value.assign(product(shape), Real(0));
  data->shape = std::move(shape);
  Tensor t(std::move(data));
  t.set_requires_grad(requires_grad);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  Tensor t = zeros(shape);
  if (values.size() != t.size()) {
    throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                     to_string(shape));
  }
  t.data_->value = std::move(values);
  t.set_requires_grad(requires_grad);
  return t;
}

Tensor Tensor::vector(std::initializer_list<Real> values, bool requires_grad) {
  return from({values.size()}, std::vector<Real>(values), requires_grad);
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : shape()[0]; }

std::size_t Tensor::cols() const { return shape().back(); }

Real Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
  return data_->value[0];
}

void Tensor::set_requires_grad(bool on) {
  data_->requires_grad = on;
  if (on) {
    data_->grad.assign(data_->value.size(), Real(0));
  } else {
    data_->grad.clear();
  }
}

void Tensor::zero_grad() { std::fill(data_->grad.begin(), data_->grad.end(), Real(0)); }

Tensor Tensor::clone() const {
  auto data = std::make_shared<TensorData>(*data_);
  return Tensor(std::move(data));
}

// -- Tape plumbing --------------------------------------------------------------

Tensor Tape::make_output(Shape shape, std::initializer_list<const Tensor*> inputs) {
  bool grad = false;
  if (recording_) {
    for (const Tensor* t : inputs) grad = grad || t->requires_grad();
  }
  return Tensor::zeros(std::move(shape), grad);
}

void Tape::record(Tensor& out, std::initializer_list<const Tensor*> inputs,
                  std::function<void(Node&)> rule) {
  if (!out.requires_grad()) return;
  Node node;
  node.inputs.reserve(inputs.size());
  for (const Tensor* t : inputs) node.inputs.push_back(t->storage());
  node.output = out.storage();
  node.backward = std::move(rule);
  nodes_.push_back(std::move(node));
}

void Tape::record(Tensor& out, std::span<const Tensor> inputs, std::function<void(Node&)> rule) {
  if (!out.requires_grad()) return;
  Node node;
  node.inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) node.inputs.push_back(t.storage());
  node.output = out.storage();
  node.backward = std::move(rule);
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss, Real seed) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss does not depend on any differentiable tensor");
  }
  for (Node& node : nodes_) {
    std::fill(node.output->grad.begin(), node.output->grad.end(), Real(0));
  }
  loss.storage()->grad[0] += seed;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->backward(*it);
  }
}

// -- linear algebra ---------------------------------------------------------------

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  }
  Tensor out = make_output({m, n}, {&a, &b});
  const Real* av = a.values().data();
  const Real* bv = b.values().data();
  Real* ov = out.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const Real s = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += s * bv[p * n + j];
    }
  }
  record(out, {&a, &b}, [m, k, n](Node& node) {
    const auto& A = *node.inputs[0];
    const auto& B = *node.inputs[1];
    const Real* g = node.output->grad.data();
    if (A.requires_grad) {
      Real* ga = node.inputs[0]->grad.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          Real s = 0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B.value[p * n + j];
          ga[i * k + p] += s;
        }
    }
    if (B.requires_grad) {
      Real* gb = node.inputs[1]->grad.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const Real s = A.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * g[i * n + j];
        }
    }
  });
  return out;
}

Tensor Tape::linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_rank("linear", w, 2);
  const std::size_t out_dim = w.shape()[0], in_dim = w.shape()[1];
  if (x.cols() != in_dim) {
    throw ShapeError("linear: input " + to_string(x.shape()) + " does not match weight " +
                     to_string(w.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.size() != out_dim)) {
    throw ShapeError("linear: bias " + to_string(bias.shape()) + " does not match weight " +
                     to_string(w.shape()));
  }
  const std::size_t n = x.rows();
  Shape shape = x.rank() == 1 ? Shape{out_dim} : Shape{n, out_dim};
  Tensor out = has_bias ? make_output(std::move(shape), {&x, &w, &bias})
                        : make_output(std::move(shape), {&x, &w});
  const Real* xv = x.values().data();
  const Real* wv = w.values().data();
  Real* ov = out.values().data();
  for (std::size_t r = 0; r < n; ++r) {
    const Real* xr = xv + r * in_dim;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const Real* wo = wv + o * in_dim;
      Real s = has_bias ? bias[o] : Real(0);
      for (std::size_t i = 0; i < in_dim; ++i) s += wo[i] * xr[i];
      ov[r * out_dim + o] = s;
    }
  }
  auto rule = [n, in_dim, out_dim, has_bias](Node& node) {
    auto& X = *node.inputs[0];
    auto& W = *node.inputs[1];
    const Real* g = node.output->grad.data();
    for (std::size_t r = 0; r < n; ++r) {
      const Real* gr = g + r * out_dim;
      const Real* xr = X.value.data() + r * in_dim;
      for (std::size_t o = 0; o < out_dim; ++o) {
        const Real go = gr[o];
        if (go == Real(0)) continue;
        if (X.requires_grad) {
          Real* gx = X.grad.data() + r * in_dim;
          const Real* wo = W.value.data() + o * in_dim;
          for (std::size_t i = 0; i < in_dim; ++i) gx[i] += go * wo[i];
        }
        if (W.requires_grad) {
          Real* gw = W.grad.data() + o * in_dim;
          for (std::size_t i = 0; i < in_dim; ++i) gw[i] += go * xr[i];
        }
      }
      if (has_bias && node.inputs[2]->requires_grad) {
        Real* gb = node.inputs[2]->grad.data();
        for (std::size_t o = 0; o < out_dim; ++o) gb[o] += gr[o];
      }
    }
  };
  if (has_bias) {
    record(out, {&x, &w, &bias}, rule);
  } else {
    record(out, {&x, &w}, rule);
  }
  return out;
}

Tensor Tape::matvec(const Tensor& m, const Tensor& v) {
  require_rank("matvec", m, 2);
  require_rank("matvec", v, 1);
  const std::size_t n = m.shape()[0], k = m.shape()[1];
  if (v.size() != k) {
    throw ShapeError("matvec: " + to_string(m.shape()) + " x " + to_string(v.shape()));
  }
  Tensor out = make_output({n}, {&m, &v});
  for (std::size_t i = 0; i < n; ++i) {
    Real s = 0;
    for (std::size_t j = 0; j < k; ++j) s += m.values()[i * k + j] * v[j];
    out.values()[i] = s;
  }
  record(out, {&m, &v}, [n, k](Node& node) {
    auto& M = *node.inputs[0];
    auto& V = *node.inputs[1];
    const Real* g = node.output->grad.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (M.requires_grad)
        for (std::size_t j = 0; j < k; ++j) M.grad[i * k + j] += g[i] * V.value[j];
      if (V.requires_grad)
        for (std::size_t j = 0; j < k; ++j) V.grad[j] += g[i] * M.value[i * k + j];
    }
  });
  return out;
}

// -- elementwise -------------------------------------------------------------------

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out = make_output(a.shape(), {&a, &b});
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a[i] + b[i];
  record(out, {&a, &b}, [](Node& node) {
    const auto& g = node.output->grad;
    for (auto& in : node.inputs)
      if (wants_grad(in))
        for (std::size_t i = 0; i < g.size(); ++i) in->grad[i] += g[i];
  });
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out = make_output(a.shape(), {&a, &b});
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a[i] - b[i];
  record(out, {&a, &b}, [](Node& node) {
    const auto& g = node.output->grad;
    if (wants_grad(node.inputs[0]))
      for (std::size_t i = 0; i < g.size(); ++i) node.inputs[0]->grad[i] += g[i];
    if (wants_grad(node.inputs[1]))
      for (std::size_t i = 0; i < g.size(); ++i) node.inputs[1]->grad[i] -= g[i];
  });
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out = make_output(a.shape(), {&a, &b});
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a[i] * b[i];
  record(out, {&a, &b}, [](Node& node) {
    const auto& g = node.output->grad;
    auto& A = *node.inputs[0];
    auto& B = *node.inputs[1];
    if (A.requires_grad)
      for (std::size_t i = 0; i < g.size(); ++i) A.grad[i] += g[i] * B.value[i];
    if (B.requires_grad)
      for (std::size_t i = 0; i < g.size(); ++i) B.grad[i] += g[i] * A.value[i];
  });
  return out;
}

Tensor Tape::sigmoid(const Tensor& x) {
  Tensor out = make_output(x.shape(), {&x});
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = stable_sigmoid(x[i]);
  record(out, {&x}, [](Node& node) {
    const auto& g = node.output->grad;
    const auto& s = node.output->value;
    auto& gx = node.inputs[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s[i] * (Real(1) - s[i]);
  });
  return out;
}

Tensor Tape::tanh(const Tensor& x) {
  Tensor out = make_output(x.shape(), {&x});
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = std::tanh(x[i]);
  record(out, {&x}, [](Node& node) {
    const auto& g = node.output->grad;
    const auto& t = node.output->value;
    auto& gx = node.inputs[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (Real(1) - t[i] * t[i]);
  });
  return out;
}

Tensor Tape::one_minus(const Tensor& x) {
  Tensor out = make_output(x.shape(), {&x});
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = Real(1) - x[i];
  record(out, {&x}, [](Node& node) {
    const auto& g = node.output->grad;
    auto& gx = node.inputs[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
  });
  return out;
}

Tensor Tape::scale(const Tensor& x, Real factor) {
  Tensor out = make_output(x.shape(), {&x});
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = factor * x[i];
  record(out, {&x}, [factor](Node& node) {
    const auto& g = node.output->grad;
    auto& gx = node.inputs[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
  });
  return out;
}

Tensor Tape::add_bias(const Tensor& m, const Tensor& bias) {
  require_rank("add_bias", bias, 1);
  if (m.cols() != bias.size()) {
    throw ShapeError("add_bias: " + to_string(m.shape()) + " + " + to_string(bias.shape()));
  }
  const std::size_t n = m.rows(), k = m.cols();
  Tensor out = make_output(m.shape(), {&m, &bias});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) out.values()[r * k + c] = m[r * k + c] + bias[c];
  record(out, {&m, &bias}, [n, k](Node& node) {
    const auto& g = node.output->grad;
    if (wants_grad(node.inputs[0]))
      for (std::size_t i = 0; i < g.size(); ++i) node.inputs[0]->grad[i] += g[i];
    if (wants_grad(node.inputs[1]))
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) node.inputs[1]->grad[c] += g[r * k + c];
  });
  return out;
}

// -- reductions and normalisation -------------------------------------------------

Tensor Tape::softmax(const Tensor& v) {
  require_rank("softmax", v, 1);
  Tensor out = make_output(v.shape(), {&v});
  const Real mx = *std::max_element(v.values().begin(), v.values().end());
  Real total = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.values()[i] = std::exp(v[i] - mx);
    total += out.values()[i];
  }
  for (Real& y : out.values()) y /= total;
  record(out, {&v}, [](Node& node) {
    const auto& g = node.output->grad;
    const auto& y = node.output->value;
    Real dot = 0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    auto& gx = node.inputs[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - dot);
  });
  return out;
}

Tensor Tape::log_softmax(const Tensor& v) {
  require_rank("log_softmax", v, 1);
  Tensor out = make_output(v.shape(), {&v});
  const Real mx = *std::max_element(v.values().begin(), v.values().end());
  Real total = 0;
  for (std::size_t i = 0; i < v.size(); ++i) total += std::exp(v[i] - mx);
  const Real log_z = mx + std::log(total);
  for (std::size_t i = 0; i < v.size(); ++i) out.values()[i] = v[i] - log_z;
  record(out, {&v}, [](Node& node) {
    const auto& g = node.output->grad;
    const auto& y = node.output->value;
    Real gsum = 0;
    for (Real gi : g) gsum += gi;
    auto& gx = node.inputs[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] - std::exp(y[i]) * gsum;
  });
  return out;
}

Tensor Tape::pick(const Tensor& v, std::size_t index) {
  require_rank("pick", v, 1);
  if (index >= v.size()) {
    throw ContractError("pick: index " + std::to_string(index) + " out of range for " +
                        to_string(v.shape()));
  }
  Tensor out = make_output({1}, {&v});
  out.values()[0] = v[index];
  record(out, {&v}, [index](Node& node) {
    node.inputs[0]->grad[index] += node.output->grad[0];
  });
  return out;
}

Tensor Tape::sum(const Tensor& x) {
  Tensor out = make_output({1}, {&x});
  Real s = 0;
  for (Real v : x.values()) s += v;
  out.values()[0] = s;
  record(out, {&x}, [](Node& node) {
    const Real g = node.output->grad[0];
    for (Real& gx : node.inputs[0]->grad) gx += g;
  });
  return out;
}

// -- structural ---------------------------------------------------------------------

Tensor Tape::concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  const std::size_t rank = parts[0].rank();
  const std::size_t n = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  bool grad = false;
  for (const Tensor& p : parts) {
    if (p.rank() != rank || p.rows() != n) {
      throw ShapeError("concat: cannot join " + to_string(parts[0].shape()) + " with " +
                       to_string(p.shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
    grad = grad || p.requires_grad();
  }
  Tensor out = Tensor::zeros(rank == 1 ? Shape{total} : Shape{n, total}, recording_ && grad);
  std::size_t offset = 0;
  for (std::size_t q = 0; q < parts.size(); ++q) {
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(parts[q].values().data() + r * widths[q], widths[q],
                  out.values().data() + r * total + offset);
    }
    offset += widths[q];
  }
  record(out, parts, [n, total, widths](Node& node) {
    const auto& g = node.output->grad;
    std::size_t off = 0;
    for (std::size_t q = 0; q < widths.size(); ++q) {
      if (node.inputs[q]->requires_grad) {
        auto& gq = node.inputs[q]->grad;
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < widths[q]; ++c)
            gq[r * widths[q] + c] += g[r * total + off + c];
      }
      off += widths[q];
    }
  });
  return out;
}

Tensor Tape::stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t k = rows[0].size();
  bool grad = false;
  for (const Tensor& r : rows) {
    if (r.rank() != 1 || r.size() != k) {
      throw ShapeError("stack_rows: cannot stack " + to_string(rows[0].shape()) + " with " +
                       to_string(r.shape()));
    }
    grad = grad || r.requires_grad();
  }
  Tensor out = Tensor::zeros({rows.size(), k}, recording_ && grad);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(rows[i].values().data(), k, out.values().data() + i * k);
  }
  record(out, rows, [k](Node& node) {
    const auto& g = node.output->grad;
    for (std::size_t i = 0; i < node.inputs.size(); ++i)
      if (node.inputs[i]->requires_grad)
        for (std::size_t c = 0; c < k; ++c) node.inputs[i]->grad[c] += g[i * k + c];
  });
  return out;
}

Tensor Tape::gather_rows(const Tensor& m, std::span<const int> indices) {
  require_rank("gather_rows", m, 2);
  const std::size_t n = m.shape()[0], k = m.shape()[1];
  std::vector<int> idx(indices.begin(), indices.end());
  for (int i : idx) {
    if (i >= static_cast<int>(n)) {
      throw ContractError("gather_rows: row " + std::to_string(i) + " out of range for " +
                          to_string(m.shape()));
    }
  }
  Tensor out = make_output({idx.size(), k}, {&m});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0) continue;
    std::copy_n(m.values().data() + idx[r] * k, k, out.values().data() + r * k);
  }
  record(out, {&m}, [idx = std::move(idx), k](Node& node) {
    const auto& g = node.output->grad;
    auto& gm = node.inputs[0]->grad;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] < 0) continue;
      for (std::size_t c = 0; c < k; ++c) gm[idx[r] * k + c] += g[r * k + c];
    }
  });
  return out;
}

Tensor Tape::repeat_rows(const Tensor& v, std::size_t n) {
  require_rank("repeat_rows", v, 1);
  const std::size_t k = v.size();
  Tensor out = make_output({n, k}, {&v});
  for (std::size_t r = 0; r < n; ++r) std::copy_n(v.values().data(), k, out.values().data() + r * k);
  record(out, {&v}, [n, k](Node& node) {
    const auto& g = node.output->grad;
    auto& gv = node.inputs[0]->grad;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < k; ++c) gv[c] += g[r * k + c];
  });
  return out;
}

Tensor Tape::mean_rows(const Tensor& m) {
  require_rank("mean_rows", m, 2);
  const std::size_t n = m.shape()[0], k = m.shape()[1];
  Tensor out = make_output({k}, {&m});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) out.values()[c] += m[r * k + c];
  const Real inv = Real(1) / static_cast<Real>(n);
  for (Real& v : out.values()) v *= inv;
  record(out, {&m}, [n, k, inv](Node& node) {
    const auto& g = node.output->grad;
    auto& gm = node.inputs[0]->grad;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < k; ++c) gm[r * k + c] += inv * g[c];
  });
  return out;
}

Tensor Tape::row(const Tensor& m, std::size_t index) {
  require_rank("row", m, 2);
  const std::size_t k = m.shape()[1];
  if (index >= m.shape()[0]) {
    throw ContractError("row: index " + std::to_string(index) + " out of range for " +
                        to_string(m.shape()));
  }
  Tensor out = make_output({k}, {&m});
  std::copy_n(m.values().data() + index * k, k, out.values().data());
  record(out, {&m}, [index, k](Node& node) {
    const auto& g = node.output->grad;
    auto& gm = node.inputs[0]->grad;
    for (std::size_t c = 0; c < k; ++c) gm[index * k + c] += g[c];
  });
  return out;
}

Tensor Tape::reshape(const Tensor& x, Shape shape) {
  if (product(shape) != x.size()) {
    throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  Tensor out = make_output(std::move(shape), {&x});
  std::copy(x.values().begin(), x.values().end(), out.values().begin());
  record(out, {&x}, [](Node& node) {
    const auto& g = node.output->grad;
    auto& gx = node.inputs[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
  return out;
}

Tensor Tape::weighted_sum(const Tensor& weights, const Tensor& rows) {
  require_rank("weighted_sum", weights, 1);
  require_rank("weighted_sum", rows, 2);
  const std::size_t n = rows.shape()[0], k = rows.shape()[1];
  if (weights.size() != n) {
    throw ShapeError("weighted_sum: " + to_string(weights.shape()) + " weights for " +
                     to_string(rows.shape()));
  }
  Tensor out = make_output({k}, {&weights, &rows});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) out.values()[c] += weights[i] * rows[i * k + c];
  record(out, {&weights, &rows}, [n, k](Node& node) {
    const auto& g = node.output->grad;
    auto& W = *node.inputs[0];
    auto& H = *node.inputs[1];
    for (std::size_t i = 0; i < n; ++i) {
      if (W.requires_grad) {
        Real s = 0;
        for (std::size_t c = 0; c < k; ++c) s += g[c] * H.value[i * k + c];
        W.grad[i] += s;
      }
      if (H.requires_grad)
        for (std::size_t c = 0; c < k; ++c) H.grad[i * k + c] += W.value[i] * g[c];
    }
  });
  return out;
}

// -- gradient check -----------------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss, std::span<Tensor> params,
                           double eps) {
  if (!kDoublePrecision) {
    throw ContractError("grad_check requires the 64-bit build");
  }
  if (eps < 1e-6 || eps > 1e-4) {
    throw ContractError("grad_check: eps must lie in [1e-6, 1e-4]");
  }
  for (Tensor& p : params) {
    if (!p.requires_grad()) p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  GradCheckReport report;
  for (std::size_t q = 0; q < params.size(); ++q) {
    Tensor& p = params[q];
    const std::vector<Real> analytic(p.grad().begin(), p.grad().end());
    for (std::size_t e = 0; e < p.size(); ++e) {
      const Real original = p.values()[e];
      p.values()[e] = original + static_cast<Real>(eps);
      Tape plus = Tape::inference();
      const double up = loss(plus).item();
      p.values()[e] = original - static_cast<Real>(eps);
      Tape minus = Tape::inference();
      const double down = loss(minus).item();
      p.values()[e] = original;
      const double numeric = (up - down) / (2 * eps);
      const double err =
          std::abs(static_cast<double>(analytic[e]) - numeric) / std::max(1.0, std::abs(numeric));
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.param_index = q;
        report.element = e;
      }
    }
  }
  return report;
}

STNMT_END_NAMESPACE
