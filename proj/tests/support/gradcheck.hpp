#pragma once

// Central finite-difference oracle for the autograd ops, shared by the unit
// tests and the acceptance suite. It only uses forward values, never the
// backward closures under test.

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "gfss/numcore/ops.hpp"
#include "gfss/numcore/rng.hpp"
#include "gfss/numcore/tensor.hpp"

namespace gfss::testing {

using num::Rng;
using num::Shape;
using num::Tensor;

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(lo + (hi - lo) * rng.uniform());
  return t;
}

// Values spaced at least `gap` apart (useful for ops with kinks such as max).
inline Tensor distinct_tensor(Rng& rng, Shape shape, float gap = 0.05f) {
  Tensor t(std::move(shape));
  std::vector<std::size_t> order(t.numel());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
  for (std::size_t i = 0; i < order.size(); ++i)
    t.data()[order[i]] = gap * (static_cast<float>(i) - static_cast<float>(order.size()) / 2.0f);
  return t;
}

inline std::size_t random_extent(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.uniform_int(hi - lo + 1);
}

using OpFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCase {
  std::vector<Tensor> inputs;  // those with requires_grad are checked
  OpFn fn;
  double step = 1.0 / 128;  // power of two keeps x +- step exact for |x| < 2
};

struct GradCheckResult {
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  std::size_t checked = 0;
};

// Compares d/dx sum(r * f(x)) against the fourth-order central difference
// (8[f(x+h) - f(x-h)] - [f(x+2h) - f(x-2h)]) / 12h.
inline GradCheckResult grad_check(GradCase c, Rng& rng) {
  const double h = c.step;
  std::vector<Tensor> inputs = c.inputs;
  Tensor probe = c.fn(inputs);
  // Shuffled, evenly spaced weights in [0.5, 2]. Near-equal weights would
  // cancel in ops whose outputs sum to a constant (softmax), and weights summing
  // to zero would cancel in ops that copy one input to many outputs.
  std::vector<double> weights(probe.numel(), 1.0);
  const std::size_t n = weights.size();
  for (std::size_t i = 0; n > 1 && i < n; ++i) weights[i] = 0.5 + 1.5 * static_cast<double>(i) / (n - 1);
  for (std::size_t i = n; i > 1; --i) std::swap(weights[i - 1], weights[rng.uniform_int(i)]);

  auto objective = [&](const std::vector<Tensor>& xs) {
    std::vector<Tensor> detached;
    for (const auto& x : xs) detached.push_back(x.detach());
    Tensor out = c.fn(detached);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) acc += weights[i] * static_cast<double>(out.data()[i]);
    return acc;
  };

  // Analytic side through the autograd graph.
  for (auto& x : inputs) x.clear_grad();
  Tensor out = c.fn(inputs);
  Tensor w(out.shape());
  for (std::size_t i = 0; i < weights.size(); ++i) w.data()[i] = static_cast<float>(weights[i]);
  num::sum(num::mul(out, w)).backward();

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    std::vector<float> analytic(inputs[k].numel(), 0.0f);
    if (inputs[k].has_grad()) analytic.assign(inputs[k].grad().begin(), inputs[k].grad().end());
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      auto shifted = [&](double offset) {
        std::vector<Tensor> xs;
        for (const auto& x : inputs) xs.push_back(x.detach());
        xs[k].data()[i] = static_cast<float>(xs[k].data()[i] + offset);
        return objective(xs);
      };
      const double numeric = (8.0 * (shifted(h) - shifted(-h)) - (shifted(2 * h) - shifted(-2 * h))) / (12.0 * h);
      const double a = analytic[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      ++result.checked;
    }
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  result.relative_error = std::sqrt(diff2) / denom;
  return result;
}

struct NamedGradCase {
  std::string name;
  std::function<GradCase(Rng&)> make;
};

// Randomized small-shape cases for every differentiable numcore op.
inline std::vector<NamedGradCase> numcore_gradient_cases() {
  using namespace gfss::num;
  auto leaf = [](Tensor t) {
    t.set_requires_grad(true);
    return t;
  };
  std::vector<NamedGradCase> cases;

  cases.push_back({"add", [=](Rng& r) {
                     Shape s{random_extent(r, 1, 4), random_extent(r, 1, 5)};
                     return GradCase{{leaf(random_tensor(r, s)), leaf(random_tensor(r, s))},
                                     [](const std::vector<Tensor>& x) { return add(x[0], x[1]); }};
                   }});
  cases.push_back({"sub", [=](Rng& r) {
                     Shape s{random_extent(r, 1, 4), random_extent(r, 1, 5)};
                     return GradCase{{leaf(random_tensor(r, s)), leaf(random_tensor(r, s))},
                                     [](const std::vector<Tensor>& x) { return sub(x[0], x[1]); }};
                   }});
  cases.push_back({"mul", [=](Rng& r) {
                     Shape s{random_extent(r, 1, 4), random_extent(r, 1, 5)};
                     return GradCase{{leaf(random_tensor(r, s)), leaf(random_tensor(r, s))},
                                     [](const std::vector<Tensor>& x) { return mul(x[0], x[1]); }};
                   }});
  cases.push_back({"scale", [=](Rng& r) {
                     const float f = static_cast<float>(r.uniform() * 4.0 - 2.0);
                     return GradCase{{leaf(random_tensor(r, {3, 4}))},
                                     [f](const std::vector<Tensor>& x) { return scale(x[0], f); }};
                   }});
  cases.push_back({"add_bias", [=](Rng& r) {
                     Shape s{random_extent(r, 1, 3), random_extent(r, 1, 4), random_extent(r, 1, 3)};
                     const std::size_t axis = r.uniform_int(3);
                     return GradCase{{leaf(random_tensor(r, s)), leaf(random_tensor(r, {s[axis]}))},
                                     [axis](const std::vector<Tensor>& x) { return add_bias(x[0], x[1], axis); }};
                   }});
  cases.push_back({"matmul", [=](Rng& r) {
                     const auto m = random_extent(r, 1, 4), k = random_extent(r, 1, 4), n = random_extent(r, 1, 4);
                     return GradCase{{leaf(random_tensor(r, {m, k})), leaf(random_tensor(r, {k, n}))},
                                     [](const std::vector<Tensor>& x) { return matmul(x[0], x[1]); }};
                   }});
  cases.push_back({"matmul_batched", [=](Rng& r) {
                     const auto b = random_extent(r, 1, 3), m = random_extent(r, 1, 3), k = random_extent(r, 1, 4),
                                n = random_extent(r, 1, 3);
                     return GradCase{{leaf(random_tensor(r, {b, m, k})), leaf(random_tensor(r, {b, k, n}))},
                                     [](const std::vector<Tensor>& x) { return matmul(x[0], x[1]); }};
                   }});
  cases.push_back({"linear", [=](Rng& r) {
                     const auto t = random_extent(r, 1, 4), i = random_extent(r, 1, 4), o = random_extent(r, 1, 4);
                     return GradCase{
                         {leaf(random_tensor(r, {t, i})), leaf(random_tensor(r, {i, o})), leaf(random_tensor(r, {o}))},
                         [](const std::vector<Tensor>& x) { return linear(x[0], x[1], x[2]); }};
                   }});
  cases.push_back({"transpose", [=](Rng& r) {
                     Shape s{random_extent(r, 1, 3), random_extent(r, 1, 3), random_extent(r, 1, 3),
                             random_extent(r, 1, 2)};
                     const std::size_t a = r.uniform_int(4), b = r.uniform_int(4);
                     return GradCase{{leaf(random_tensor(r, s))},
                                     [a, b](const std::vector<Tensor>& x) { return transpose(x[0], a, b); }};
                   }});
  cases.push_back({"reshape", [=](Rng& r) {
                     const auto a = random_extent(r, 1, 4), b = random_extent(r, 1, 4);
                     return GradCase{{leaf(random_tensor(r, {a, b}))},
                                     [a, b](const std::vector<Tensor>& x) { return reshape(x[0], {b, a}); }};
                   }});
  cases.push_back({"concat", [=](Rng& r) {
                     const std::size_t axis = r.uniform_int(2);
                     Shape s1{random_extent(r, 1, 3), random_extent(r, 1, 3)}, s2 = s1;
                     s2[axis] = random_extent(r, 1, 3);
                     return GradCase{{leaf(random_tensor(r, s1)), leaf(random_tensor(r, s2))},
                                     [axis](const std::vector<Tensor>& x) { return concat({x[0], x[1]}, axis); }};
                   }});
  cases.push_back({"stack", [=](Rng& r) {
                     Shape s{random_extent(r, 1, 3), random_extent(r, 1, 3)};
                     return GradCase{{leaf(random_tensor(r, s)), leaf(random_tensor(r, s))},
                                     [](const std::vector<Tensor>& x) { return stack({x[0], x[1]}); }};
                   }});
  cases.push_back({"narrow", [=](Rng& r) {
                     Shape s{random_extent(r, 2, 4), random_extent(r, 2, 5)};
                     const std::size_t axis = r.uniform_int(2);
                     const std::size_t start = r.uniform_int(s[axis] - 1);
                     const std::size_t len = 1 + r.uniform_int(s[axis] - start);
                     return GradCase{{leaf(random_tensor(r, s))}, [=](const std::vector<Tensor>& x) {
                                       return narrow(x[0], axis, start, len);
                                     }};
                   }});
  cases.push_back({"relu", [=](Rng& r) {
                     Tensor t = random_tensor(r, {3, 5});
                     for (auto& v : t.data()) v = (v >= 0 ? 1.0f : -1.0f) * (0.05f + std::abs(v));
                     return GradCase{{leaf(t)}, [](const std::vector<Tensor>& x) { return relu(x[0]); }};
                   }});
  cases.push_back({"gelu", [=](Rng& r) {
                     return GradCase{{leaf(random_tensor(r, {3, 5}, -3.0, 3.0))},
                                     [](const std::vector<Tensor>& x) { return gelu(x[0]); }};
                   }});
  cases.push_back({"layer_norm", [=](Rng& r) {
                     // d >= 3: with two features the normalized output is +-1 and the gradient vanishes.
                     const auto d = random_extent(r, 3, 6);
                     return GradCase{{leaf(random_tensor(r, {random_extent(r, 1, 3), d}, -2.0, 2.0)),
                                      leaf(random_tensor(r, {d}, 0.5, 1.5)), leaf(random_tensor(r, {d}))},
                                     [](const std::vector<Tensor>& x) { return layer_norm(x[0], x[1], x[2]); }};
                   }});
  cases.push_back({"softmax", [=](Rng& r) {
                     Shape s{random_extent(r, 1, 3), random_extent(r, 2, 4), random_extent(r, 1, 3)};
                     const std::size_t axis = r.uniform_int(3);
                     return GradCase{{leaf(random_tensor(r, s, -2.0, 2.0))},
                                     [axis](const std::vector<Tensor>& x) { return softmax(x[0], axis); }};
                   }});
  cases.push_back({"conv2d", [=](Rng& r) {
                     const std::size_t k = random_extent(r, 1, 3), stride = random_extent(r, 1, 2),
                                       pad = r.uniform_int(2), o = random_extent(r, 1, 3);
                     return GradCase{{leaf(random_tensor(r, {1, 2, 4, 4})), leaf(random_tensor(r, {o, 2, k, k}))},
                                     [=](const std::vector<Tensor>& x) { return conv2d(x[0], x[1], stride, pad); }};
                   }});
  cases.push_back({"max_pool2d", [=](Rng& r) {
                     return GradCase{{leaf(distinct_tensor(r, {1, 2, 4, 4}))},
                                     [](const std::vector<Tensor>& x) { return max_pool2d(x[0], 2, 2); }};
                   }});
  cases.push_back({"bilinear_upsample", [=](Rng& r) {
                     const auto h = random_extent(r, 1, 3), w = random_extent(r, 1, 3);
                     const auto oh = random_extent(r, 1, 7), ow = random_extent(r, 1, 7);
                     return GradCase{{leaf(random_tensor(r, {2, h, w}))}, [=](const std::vector<Tensor>& x) {
                                       return bilinear_upsample(x[0], oh, ow);
                                     }};
                   }});
  cases.push_back({"embedding", [=](Rng& r) {
                     const auto v = random_extent(r, 2, 5);
                     std::vector<std::size_t> ids(random_extent(r, 1, 6));
                     for (auto& id : ids) id = r.uniform_int(v);
                     return GradCase{{leaf(random_tensor(r, {v, 3}))},
                                     [ids](const std::vector<Tensor>& x) { return embedding(x[0], ids); }};
                   }});
  cases.push_back({"sum", [=](Rng& r) {
                     return GradCase{{leaf(random_tensor(r, {random_extent(r, 1, 4), 3}))},
                                     [](const std::vector<Tensor>& x) { return sum(x[0]); }};
                   }});
  cases.push_back({"mean", [=](Rng& r) {
                     return GradCase{{leaf(random_tensor(r, {random_extent(r, 1, 4), 3}))},
                                     [](const std::vector<Tensor>& x) { return mean(x[0]); }};
                   }});
  cases.push_back({"cross_entropy", [=](Rng& r) {
                     // Composed with softmax, differentiated wrt the logits.
                     // Few pixels: the float32 scalar loss bounds the finite-difference resolution.
                     const auto n = random_extent(r, 1, 2), k = random_extent(r, 2, 4);
                     const auto h = random_extent(r, 1, 2), w = std::size_t{1};
                     std::vector<std::uint8_t> labels(n * h * w);
                     for (auto& l : labels) l = static_cast<std::uint8_t>(r.uniform_int(k));
                     labels[0] = static_cast<std::uint8_t>(r.uniform_int(k));
                     if (labels.size() > 1 && r.uniform() < 0.5) labels[1] = 255;
                     return GradCase{{leaf(random_tensor(r, {n, k, h, w}, -2.0, 2.0))},
                                     [=](const std::vector<Tensor>& x) {
                                       return cross_entropy(softmax(x[0], 1), labels);
                                     }};
                   }});
  cases.push_back({"multi_head_attention", [=](Rng& r) {
                     const std::size_t heads = random_extent(r, 1, 2), dh = random_extent(r, 1, 3);
                     const std::size_t d = heads * dh, t = random_extent(r, 1, 4);
                     return GradCase{{leaf(random_tensor(r, {t, d})), leaf(random_tensor(r, {d, 3 * d}, -0.7, 0.7)),
                                      leaf(random_tensor(r, {3 * d}, -0.2, 0.2)), leaf(random_tensor(r, {d, d})),
                                      leaf(random_tensor(r, {d}))},
                                     [heads](const std::vector<Tensor>& x) {
                                       return multi_head_attention(x[0], {x[1], x[2], x[3], x[4]}, heads);
                                     }};
                   }});
  return cases;
}

}  // namespace gfss::testing
