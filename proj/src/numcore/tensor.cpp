#include "gfss/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gfss::num {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::span<float> TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0f);
  return grad;
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have rank >= 1");
  for (auto e : shape)
    if (e == 0) throw std::invalid_argument("tensor extents must be positive: " + shape_str(shape));
}
}  // namespace

Tensor::Tensor(Shape shape, float fill) : impl_(std::make_shared<TensorImpl>()) {
  check_shape(shape);
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : impl_(std::make_shared<TensorImpl>()) {
  check_shape(shape);
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) throw std::out_of_range("axis out of range");
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }
std::span<float> Tensor::data() { return impl_->data; }
std::span<const float> Tensor::data() const { return impl_->data; }

float Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (impl_->node && !flag) throw std::logic_error("cannot stop gradients of a non-leaf tensor in place");
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<float> Tensor::grad() { return impl_->grad; }
std::span<const float> Tensor::grad() const { return impl_->grad; }
void Tensor::clear_grad() { impl_->grad.clear(); }

void Tensor::backward() const {
  if (numel() != 1) throw std::invalid_argument("backward() requires a scalar root");
  if (!requires_grad()) throw std::logic_error("backward() on a tensor that does not require grad");
  auto g = impl_->grad_buffer();
  g[0] += 1.0f;
  Graph::trace(*this).run_backward();
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
  Tensor t = detach();
  t.impl_->requires_grad = impl_->requires_grad && !impl_->node;
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(impl_->data.begin(), impl_->data.end(), [](float v) { return std::isfinite(v); });
}

Tensor Tensor::make_result(Shape shape, std::vector<float> data, const std::vector<Tensor>& inputs,
                           BackwardFn fn, const char* op) {
  Tensor out(std::move(shape), std::move(data));
  bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    auto node = std::make_shared<Node>();
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.impl_);
    node->backward = std::move(fn);
    node->op = op;
    out.impl_->requires_grad = true;
    out.impl_->node = std::move(node);
  }
  return out;
}

Graph Graph::trace(const Tensor& root) {
  Graph g;
  std::unordered_set<TensorImpl*> seen;
  // Iterative post-order DFS so deep graphs do not overflow the stack.
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(root.impl(), 0);
  seen.insert(root.impl());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (impl->node && next < impl->node->inputs.size()) {
      TensorImpl* child = impl->node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    g.order_.push_back(impl);
    stack.pop_back();
  }
  return g;
}

std::size_t Graph::op_count() const {
  return static_cast<std::size_t>(
      std::count_if(order_.begin(), order_.end(), [](TensorImpl* t) { return t->node != nullptr; }));
}

void Graph::run_backward() const {
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    TensorImpl* t = *it;
    if (t->node && !t->grad.empty()) t->node->backward(*t);
  }
}

}  // namespace gfss::num
