#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stnmt/errors.hpp"
#include "stnmt/precision.hpp"

STNMT_BEGIN_NAMESPACE

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);

struct TensorData {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // same length as value when requires_grad
  bool requires_grad = false;
};

// Dense row-major array. Copies share storage; use clone() for a deep copy.
// Vectors have rank 1, matrices rank 2. Nothing else is supported.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor vector(std::initializer_list<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const noexcept { return data_ != nullptr; }
  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t size() const { return data_->value.size(); }
  // Rank-1 tensors count as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<Real> values() { return data_->value; }
  std::span<const Real> values() const { return data_->value; }
  std::span<Real> grad() { return data_->grad; }
  std::span<const Real> grad() const { return data_->grad; }

  Real operator[](std::size_t i) const { return data_->value[i]; }
  Real at(std::size_t r, std::size_t c) const { return data_->value[r * cols() + c]; }
  Real item() const;

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool on);
  void zero_grad();

  Tensor clone() const;

  const std::shared_ptr<TensorData>& storage() const { return data_; }

 private:
  explicit Tensor(std::shared_ptr<TensorData> data) : data_(std::move(data)) {}

  std::shared_ptr<TensorData> data_;

  friend class Tape;
};

// Reverse-mode tape. One tape per sentence: the graph is rebuilt for every
// example because tree shapes vary.
class Tape {
 public:
  struct Node {
    std::vector<std::shared_ptr<TensorData>> inputs;
    std::shared_ptr<TensorData> output;
    std::function<void(Node&)> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // A non-recording tape evaluates forward values only.
  static Tape inference() {
    Tape t;
    t.recording_ = false;
    return t;
  }

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Accumulates seed * d(loss)/d(t) into every requires_grad leaf reachable
  // from loss. Intermediate gradients are reset first, so calling backward
  // twice accumulates twice into the leaves.
  void backward(const Tensor& loss, Real seed = 1);

  // -- operations ---------------------------------------------------------

  Tensor matmul(const Tensor& a, const Tensor& b);
  // x W^T (+ b): x is [in] or [n x in], W is [out x in], b is [out].
  Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = {});
  Tensor matvec(const Tensor& m, const Tensor& v);

  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor sigmoid(const Tensor& x);
  Tensor tanh(const Tensor& x);
  Tensor one_minus(const Tensor& x);
  Tensor scale(const Tensor& x, Real factor);
  // Matrix plus a row vector added to every row.
  Tensor add_bias(const Tensor& m, const Tensor& bias);

  Tensor softmax(const Tensor& v);
  Tensor log_softmax(const Tensor& v);
  Tensor pick(const Tensor& v, std::size_t index);
  Tensor sum(const Tensor& x);

  // Joins along the last axis; matrices must agree on row count.
  Tensor concat(std::span<const Tensor> parts);
  Tensor concat(std::initializer_list<Tensor> parts) {
    return concat(std::span<const Tensor>(parts.begin(), parts.size()));
  }
  Tensor stack_rows(std::span<const Tensor> rows);
  // Row i of the result is m[indices[i]], or zeros when indices[i] < 0.
  Tensor gather_rows(const Tensor& m, std::span<const int> indices);
  Tensor repeat_rows(const Tensor& v, std::size_t n);
  Tensor mean_rows(const Tensor& m);
  Tensor row(const Tensor& m, std::size_t index);
  Tensor reshape(const Tensor& x, Shape shape);
  // alpha^T H: weights [n], rows [n x k] -> [k].
  Tensor weighted_sum(const Tensor& weights, const Tensor& rows);

 private:
  Tensor make_output(Shape shape, std::initializer_list<const Tensor*> inputs);
  void record(Tensor& out, std::initializer_list<const Tensor*> inputs,
              std::function<void(Node&)> rule);
  void record(Tensor& out, std::span<const Tensor> inputs, std::function<void(Node&)> rule);

  std::vector<Node> nodes_;
  bool recording_ = true;
};

// Largest |analytic - central difference| / max(1, |central difference|)
// over every element of `params`. `loss` builds a fresh graph on the tape it
// is handed and returns a scalar. Only meaningful in 64-bit builds.
struct GradCheckReport {
  double max_rel_error = 0;
  std::size_t param_index = 0;
  std::size_t element = 0;
  std::size_t checked = 0;
};

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss, std::span<Tensor> params,
                           double eps = 1e-5);

STNMT_END_NAMESPACE
