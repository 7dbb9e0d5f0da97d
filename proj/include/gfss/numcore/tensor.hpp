#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gfss::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;
struct TensorImpl;

// Backward closure of one recorded operation. It receives the output whose
// grad is already populated and accumulates into the grads of its inputs.
using BackwardFn = std::function<void(TensorImpl& out)>;

struct Node {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
  std::string op;
};

struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty means "no gradient yet"
  bool requires_grad = false;
  std::shared_ptr<Node> node;

  std::span<float> grad_buffer();  // allocates zeros on first use
};

/// Dense row-major float32 array with an optional gradient. Copies share
/// storage (handle semantics); use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0f); }
  static Tensor scalar(float v) { return Tensor(Shape{1}, v); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<float> data();
  std::span<const float> data() const;
  float item() const;
  float at(std::size_t flat) const { return data()[flat]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);

  bool has_grad() const;
  std::span<float> grad();
  std::span<const float> grad() const;
  void clear_grad();

  /// Reverse-mode sweep from this scalar: seeds d(this)=1.
  void backward() const;

  Tensor detach() const;  // same values, no graph, no grad
  Tensor clone() const;
  bool all_finite() const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& impl_ptr() const { return impl_; }

  // Builds the result of a differentiable op. The node is attached only when
  // at least one input requires a gradient.
  static Tensor make_result(Shape shape, std::vector<float> data,
                            const std::vector<Tensor>& inputs, BackwardFn fn,
                            const char* op);

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

/// Topologically ordered record of the operations reachable from a root.
class Graph {
 public:
  static Graph trace(const Tensor& root);

  // Every entry's inputs appear before it.
  const std::vector<TensorImpl*>& order() const { return order_; }
  std::size_t op_count() const;

  void run_backward() const;

 private:
  std::vector<TensorImpl*> order_;
};

}  // namespace gfss::num
