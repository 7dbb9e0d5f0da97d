#include "gfss/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gemm.hpp"

namespace gfss::num {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

// Returns the input's gradient buffer, or an empty span when it needs none.
std::span<float> grad_of(const Tensor& t) {
  if (!t.requires_grad()) return {};
  return t.impl()->grad_buffer();
}

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<float> out(a.numel());
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b},
                             [a, b](TensorImpl& o) {
                               auto ga = grad_of(a), gb = grad_of(b);
                               for (std::size_t i = 0; i < o.grad.size(); ++i) {
                                 if (!ga.empty()) ga[i] += o.grad[i];
                                 if (!gb.empty()) gb[i] += o.grad[i];
                               }
                             },
                             "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<float> out(a.numel());
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b},
                             [a, b](TensorImpl& o) {
                               auto ga = grad_of(a), gb = grad_of(b);
                               for (std::size_t i = 0; i < o.grad.size(); ++i) {
                                 if (!ga.empty()) ga[i] += o.grad[i];
                                 if (!gb.empty()) gb[i] -= o.grad[i];
                               }
                             },
                             "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<float> out(a.numel());
  auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b},
                             [a, b](TensorImpl& o) {
                               auto ga = grad_of(a), gb = grad_of(b);
                               auto ad = a.data(), bd = b.data();
                               for (std::size_t i = 0; i < o.grad.size(); ++i) {
                                 if (!ga.empty()) ga[i] += o.grad[i] * bd[i];
                                 if (!gb.empty()) gb[i] += o.grad[i] * ad[i];
                               }
                             },
                             "mul");
}

Tensor scale(const Tensor& a, float factor) {
  std::vector<float> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return Tensor::make_result(a.shape(), std::move(out), {a},
                             [a, factor](TensorImpl& o) {
                               auto ga = grad_of(a);
                               for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * factor;
                             },
                             "scale");
}

Tensor add_bias(const Tensor& x, const Tensor& bias, std::size_t axis) {
  if (axis >= x.rank()) throw std::invalid_argument("add_bias: axis out of range");
  if (bias.numel() != x.dim(axis))
    throw std::invalid_argument("add_bias: bias length " + std::to_string(bias.numel()) + " != extent " +
                                std::to_string(x.dim(axis)));
  const auto sp = split_at(x.shape(), axis);
  std::vector<float> out(x.data().begin(), x.data().end());
  auto bd = bias.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t c = 0; c < sp.len; ++c) {
      float* row = out.data() + (o * sp.len + c) * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) row[i] += bd[c];
    }
  return Tensor::make_result(x.shape(), std::move(out), {x, bias},
                             [x, bias, sp](TensorImpl& o) {
                               auto gx = grad_of(x), gb = grad_of(bias);
                               if (!gx.empty())
                                 for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i];
                               if (!gb.empty())
                                 for (std::size_t a = 0; a < sp.outer; ++a)
                                   for (std::size_t c = 0; c < sp.len; ++c) {
                                     const float* row = o.grad.data() + (a * sp.len + c) * sp.inner;
                                     float acc = 0.0f;
                                     for (std::size_t i = 0; i < sp.inner; ++i) acc += row[i];
                                     gb[c] += acc;
                                   }
                             },
                             "add_bias");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const bool batched = a.rank() == 3;
  if (!((a.rank() == 2 && b.rank() == 2) || (a.rank() == 3 && b.rank() == 3)))
    throw std::invalid_argument("matmul: expected two 2-D or two 3-D tensors, got " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  const std::size_t batch = batched ? a.dim(0) : 1;
  if (batched && b.dim(0) != batch) throw std::invalid_argument("matmul: batch mismatch");
  const std::size_t m = a.dim(batched ? 1 : 0), k = a.dim(batched ? 2 : 1);
  const std::size_t kb = b.dim(batched ? 1 : 0), n = b.dim(batched ? 2 : 1);
  if (k != kb)
    throw std::invalid_argument("matmul: inner dimensions disagree " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  std::vector<float> out(batch * m * n, 0.0f);
  for (std::size_t t = 0; t < batch; ++t)
    detail::gemm_nn(m, n, k, a.data().data() + t * m * k, b.data().data() + t * k * n, out.data() + t * m * n);
  Shape shape = batched ? Shape{batch, m, n} : Shape{m, n};
  return Tensor::make_result(std::move(shape), std::move(out), {a, b},
                             [a, b, batch, m, n, k](TensorImpl& o) {
                               auto ga = grad_of(a), gb = grad_of(b);
                               for (std::size_t t = 0; t < batch; ++t) {
                                 const float* go = o.grad.data() + t * m * n;
                                 if (!ga.empty())
                                   detail::gemm_nt(m, k, n, go, b.data().data() + t * k * n, ga.data() + t * m * k);
                                 if (!gb.empty())
                                   detail::gemm_tn(k, n, m, a.data().data() + t * m * k, go, gb.data() + t * k * n);
                               }
                             },
                             "matmul");
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_bias(matmul(x, w), b, 1);
}

namespace {

// Views x as [A, d0, B, d1, C] and swaps d0 and d1.
struct SwapGeometry {
  std::size_t a = 1, d0 = 1, b = 1, d1 = 1, c = 1;
};

SwapGeometry swap_geometry(const Shape& s, std::size_t ax0, std::size_t ax1) {
  SwapGeometry g;
  for (std::size_t i = 0; i < ax0; ++i) g.a *= s[i];
  g.d0 = s[ax0];
  for (std::size_t i = ax0 + 1; i < ax1; ++i) g.b *= s[i];
  g.d1 = s[ax1];
  for (std::size_t i = ax1 + 1; i < s.size(); ++i) g.c *= s[i];
  return g;
}

// dst[A,d1,B,d0,C] (+)= src[A,d0,B,d1,C]
template <bool Accumulate>
void swap_copy(const SwapGeometry& g, const float* src, float* dst) {
  for (std::size_t ia = 0; ia < g.a; ++ia)
    for (std::size_t i0 = 0; i0 < g.d0; ++i0)
      for (std::size_t ib = 0; ib < g.b; ++ib)
        for (std::size_t i1 = 0; i1 < g.d1; ++i1) {
          const float* s = src + ((((ia * g.d0 + i0) * g.b + ib) * g.d1 + i1) * g.c);
          float* d = dst + ((((ia * g.d1 + i1) * g.b + ib) * g.d0 + i0) * g.c);
          for (std::size_t ic = 0; ic < g.c; ++ic) {
            if constexpr (Accumulate)
              d[ic] += s[ic];
            else
              d[ic] = s[ic];
          }
        }
}

}  // namespace

Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1) {
  if (axis0 >= x.rank() || axis1 >= x.rank()) throw std::invalid_argument("transpose: axis out of range");
  if (axis0 == axis1) return reshape(x, x.shape());
  if (axis0 > axis1) std::swap(axis0, axis1);
  const auto g = swap_geometry(x.shape(), axis0, axis1);
  Shape shape = x.shape();
  std::swap(shape[axis0], shape[axis1]);
  std::vector<float> out(x.numel());
  swap_copy<false>(g, x.data().data(), out.data());
  SwapGeometry back{g.a, g.d1, g.b, g.d0, g.c};
  return Tensor::make_result(std::move(shape), std::move(out), {x},
                             [x, back](TensorImpl& o) {
                               auto gx = grad_of(x);
                               swap_copy<true>(back, o.grad.data(), gx.data());
                             },
                             "transpose");
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw std::invalid_argument("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  std::vector<float> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {x},
                             [x](TensorImpl& o) {
                               auto gx = grad_of(x);
                               for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i];
                             },
                             "reshape");
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) throw std::invalid_argument("concat: axis out of range");
  Shape shape = ref;
  shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != ref.size()) throw std::invalid_argument("concat: rank mismatch");
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (i != axis && p.dim(i) != ref[i])
        throw std::invalid_argument("concat: extent mismatch " + shape_str(p.shape()) + " vs " + shape_str(ref));
    shape[axis] += p.dim(axis);
  }
  const auto sp = split_at(shape, axis);
  std::vector<float> out(shape_numel(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t block = p.dim(axis) * sp.inner;
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy_n(p.data().data() + o * block, block, out.data() + o * sp.len * sp.inner + offset * sp.inner);
    offset += p.dim(axis);
  }
  return Tensor::make_result(std::move(shape), std::move(out), parts,
                             [parts, offsets, sp, axis](TensorImpl& o) {
                               for (std::size_t n = 0; n < parts.size(); ++n) {
                                 auto gp = grad_of(parts[n]);
                                 if (gp.empty()) continue;
                                 const std::size_t block = parts[n].dim(axis) * sp.inner;
                                 for (std::size_t a = 0; a < sp.outer; ++a) {
                                   const float* src = o.grad.data() + a * sp.len * sp.inner + offsets[n] * sp.inner;
                                   float* dst = gp.data() + a * block;
                                   for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                                 }
                               }
                             },
                             "concat");
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("stack: no inputs");
  std::vector<Tensor> lifted;
  lifted.reserve(parts.size());
  for (const auto& p : parts) {
    Shape s{1};
    s.insert(s.end(), p.shape().begin(), p.shape().end());
    lifted.push_back(reshape(p, std::move(s)));
  }
  return concat(lifted, 0);
}

Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank()) throw std::invalid_argument("narrow: axis out of range");
  if (length == 0 || start + length > x.dim(axis)) throw std::invalid_argument("narrow: range out of bounds");
  const auto sp = split_at(x.shape(), axis);
  Shape shape = x.shape();
  shape[axis] = length;
  std::vector<float> out(shape_numel(shape));
  const std::size_t block = length * sp.inner;
  for (std::size_t o = 0; o < sp.outer; ++o)
    std::copy_n(x.data().data() + (o * sp.len + start) * sp.inner, block, out.data() + o * block);
  return Tensor::make_result(std::move(shape), std::move(out), {x},
                             [x, sp, start, block](TensorImpl& o) {
                               auto gx = grad_of(x);
                               for (std::size_t a = 0; a < sp.outer; ++a) {
                                 float* dst = gx.data() + (a * sp.len + start) * sp.inner;
                                 const float* src = o.grad.data() + a * block;
                                 for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                               }
                             },
                             "narrow");
}

Tensor relu(const Tensor& x) {
  std::vector<float> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > 0.0f ? xd[i] : 0.0f;
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [x](TensorImpl& o) {
                               auto gx = grad_of(x);
                               auto xd = x.data();
                               for (std::size_t i = 0; i < o.grad.size(); ++i)
                                 if (xd[i] > 0.0f) gx[i] += o.grad[i];
                             },
                             "relu");
}

Tensor gelu(const Tensor& x) {
  constexpr float inv_sqrt2 = static_cast<float>(1.0 / std::numbers::sqrt2);
  std::vector<float> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5f * xd[i] * (1.0f + std::erf(xd[i] * inv_sqrt2));
  return Tensor::make_result(x.shape(), std::move(out), {x},
                             [x](TensorImpl& o) {
                               constexpr float inv_sqrt2pi = static_cast<float>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
                               auto gx = grad_of(x);
                               auto xd = x.data();
                               for (std::size_t i = 0; i < o.grad.size(); ++i) {
                                 const float v = xd[i];
                                 const float cdf = 0.5f * (1.0f + std::erf(v * inv_sqrt2));
                                 const float pdf = inv_sqrt2pi * std::exp(-0.5f * v * v);
                                 gx[i] += o.grad[i] * (cdf + v * pdf);
                               }
                             },
                             "gelu");
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const std::size_t d = x.shape().back();
  if (gamma.numel() != d || beta.numel() != d) throw std::invalid_argument("layer_norm: parameter length mismatch");
  const std::size_t rows = x.numel() / d;
  std::vector<float> out(x.numel()), xhat(x.numel()), rstd(rows);
  auto xd = x.data(), gd = gamma.data(), bd = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = xd.data() + r * d;
    float mu = 0.0f;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<float>(d);
    float var = 0.0f;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<float>(d);
    const float rs = 1.0f / std::sqrt(var + eps);
    rstd[r] = rs;
    for (std::size_t i = 0; i < d; ++i) {
      const float h = (row[i] - mu) * rs;
      xhat[r * d + i] = h;
      out[r * d + i] = h * gd[i] + bd[i];
    }
  }
  return Tensor::make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), rstd = std::move(rstd), d, rows](TensorImpl& o) {
        auto gx = grad_of(x), gg = grad_of(gamma), gb = grad_of(beta);
        auto gd = gamma.data();
        std::vector<float> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const float* go = o.grad.data() + r * d;
          const float* h = xhat.data() + r * d;
          for (std::size_t i = 0; i < d; ++i) {
            if (!gg.empty()) gg[i] += go[i] * h[i];
            if (!gb.empty()) gb[i] += go[i];
          }
          if (gx.empty()) continue;
          float mean_dh = 0.0f, mean_dh_h = 0.0f;
          for (std::size_t i = 0; i < d; ++i) {
            dxhat[i] = go[i] * gd[i];
            mean_dh += dxhat[i];
            mean_dh_h += dxhat[i] * h[i];
          }
          mean_dh /= static_cast<float>(d);
          mean_dh_h /= static_cast<float>(d);
          for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += rstd[r] * (dxhat[i] - mean_dh - h[i] * mean_dh_h);
        }
      },
      "layer_norm");
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw std::invalid_argument("softmax: axis out of range");
  const auto sp = split_at(x.shape(), axis);
  std::vector<float> out(x.numel());
  auto xd = x.data();
  std::vector<float> mx(sp.inner), acc(sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    const float* base = xd.data() + o * sp.len * sp.inner;
    float* obase = out.data() + o * sp.len * sp.inner;
    std::copy_n(base, sp.inner, mx.begin());
    for (std::size_t c = 1; c < sp.len; ++c)
      for (std::size_t i = 0; i < sp.inner; ++i) mx[i] = std::max(mx[i], base[c * sp.inner + i]);
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::size_t c = 0; c < sp.len; ++c)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const float e = std::exp(base[c * sp.inner + i] - mx[i]);
        obase[c * sp.inner + i] = e;
        acc[i] += e;
      }
    for (std::size_t c = 0; c < sp.len; ++c)
      for (std::size_t i = 0; i < sp.inner; ++i) obase[c * sp.inner + i] /= acc[i];
  }
  // The backward reads the softmax output from the node owner `o`.
  return Tensor::make_result(
      x.shape(), std::move(out), {x},
      [x, sp](TensorImpl& o) {
        auto gx = grad_of(x);
        std::vector<float> dot(sp.inner);
        for (std::size_t a = 0; a < sp.outer; ++a) {
          const std::size_t off = a * sp.len * sp.inner;
          const float* y = o.data.data() + off;
          const float* gy = o.grad.data() + off;
          std::fill(dot.begin(), dot.end(), 0.0f);
          for (std::size_t c = 0; c < sp.len; ++c)
            for (std::size_t i = 0; i < sp.inner; ++i) dot[i] += gy[c * sp.inner + i] * y[c * sp.inner + i];
          for (std::size_t c = 0; c < sp.len; ++c)
            for (std::size_t i = 0; i < sp.inner; ++i)
              gx[off + c * sp.inner + i] += y[c * sp.inner + i] * (gy[c * sp.inner + i] - dot[i]);
        }
      },
      "softmax");
}

namespace {

struct ConvGeometry {
  std::size_t n, c, h, w, o, k, stride, pad, oh, ow;
  std::size_t patch() const { return c * k * k; }
  std::size_t positions() const { return oh * ow; }
};

// cols[(c*k + ky)*k + kx, oy*ow + ox] = x[c, oy*s - p + ky, ox*s - p + kx]
void im2col(const ConvGeometry& g, const float* x, float* cols) {
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        float* row = cols + ((c * g.k + ky) * g.k + kx) * g.positions();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.h) && ix < static_cast<long>(g.w);
            row[oy * g.ow + ox] = inside ? x[(c * g.h + iy) * g.w + ix] : 0.0f;
          }
        }
      }
}

void col2im(const ConvGeometry& g, const float* cols, float* gx) {
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const float* row = cols + ((c * g.k + ky) * g.k + kx) * g.positions();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
            gx[(c * g.h + iy) * g.w + ix] += row[oy * g.ow + ox];
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t padding) {
  if (x.rank() != 4 || w.rank() != 4) throw std::invalid_argument("conv2d: expected x[N,C,H,W] and w[O,C,k,k]");
  if (w.dim(1) != x.dim(1)) throw std::invalid_argument("conv2d: channel mismatch");
  if (w.dim(2) != w.dim(3)) throw std::invalid_argument("conv2d: kernel must be square");
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), stride, padding, 0, 0};
  if (g.k > g.h + 2 * padding || g.k > g.w + 2 * padding)
    throw std::invalid_argument("conv2d: invalid geometry, kernel " + std::to_string(g.k) + " exceeds padded input");
  g.oh = (g.h + 2 * padding - g.k) / stride + 1;
  g.ow = (g.w + 2 * padding - g.k) / stride + 1;
  std::vector<float> out(g.n * g.o * g.positions(), 0.0f);
  std::vector<float> cols(g.patch() * g.positions());
  for (std::size_t b = 0; b < g.n; ++b) {
    im2col(g, x.data().data() + b * g.c * g.h * g.w, cols.data());
    detail::gemm_nn(g.o, g.positions(), g.patch(), w.data().data(), cols.data(),
                    out.data() + b * g.o * g.positions());
  }
  return Tensor::make_result(Shape{g.n, g.o, g.oh, g.ow}, std::move(out), {x, w},
                             [x, w, g](TensorImpl& o) {
                               auto gx = grad_of(x), gw = grad_of(w);
                               std::vector<float> cols(g.patch() * g.positions());
                               std::vector<float> dcols;
                               if (!gx.empty()) dcols.resize(cols.size());
                               for (std::size_t b = 0; b < g.n; ++b) {
                                 const float* go = o.grad.data() + b * g.o * g.positions();
                                 if (!gw.empty()) {
                                   im2col(g, x.data().data() + b * g.c * g.h * g.w, cols.data());
                                   detail::gemm_nt(g.o, g.patch(), g.positions(), go, cols.data(), gw.data());
                                 }
                                 if (!gx.empty()) {
                                   std::fill(dcols.begin(), dcols.end(), 0.0f);
                                   detail::gemm_tn(g.patch(), g.positions(), g.o, w.data().data(), go, dcols.data());
                                   col2im(g, dcols.data(), gx.data() + b * g.c * g.h * g.w);
                                 }
                               }
                             },
                             "conv2d");
}

Tensor max_pool2d(const Tensor& x, std::size_t kernel, std::size_t stride) {
  if (x.rank() != 4) throw std::invalid_argument("max_pool2d: expected x[N,C,H,W]");
  if (kernel == 0 || stride == 0 || kernel > x.dim(2) || kernel > x.dim(3))
    throw std::invalid_argument("max_pool2d: invalid geometry");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  std::vector<float> out(planes * oh * ow);
  std::vector<std::size_t> arg(out.size());
  auto xd = x.data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = p * h * w + oy * stride * w + ox * stride;
        for (std::size_t ky = 0; ky < kernel; ++ky)
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = p * h * w + (oy * stride + ky) * w + ox * stride + kx;
            if (xd[idx] > xd[best]) best = idx;
          }
        const std::size_t oi = (p * oh + oy) * ow + ox;
        out[oi] = xd[best];
        arg[oi] = best;
      }
  return Tensor::make_result(Shape{x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                             [x, arg = std::move(arg)](TensorImpl& o) {
                               auto gx = grad_of(x);
                               for (std::size_t i = 0; i < o.grad.size(); ++i) gx[arg[i]] += o.grad[i];
                             },
                             "max_pool2d");
}

namespace {

struct Tap {
  std::size_t i0, i1;
  float w0, w1;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const float scale = static_cast<float>(in) / static_cast<float>(out);
  for (std::size_t d = 0; d < out; ++d) {
    float src = (static_cast<float>(d) + 0.5f) * scale - 0.5f;
    if (src < 0.0f) src = 0.0f;
    auto i0 = static_cast<std::size_t>(src);
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = i0 + (i0 < in - 1 ? 1 : 0);
    const float l1 = src - static_cast<float>(i0);
    taps[d] = {i0, i1, 1.0f - l1, l1};
  }
  return taps;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  if (x.rank() < 2) throw std::invalid_argument("bilinear_upsample: rank must be >= 2");
  if (out_h == 0 || out_w == 0) throw std::invalid_argument("bilinear_upsample: empty output");
  const std::size_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  const std::size_t planes = x.numel() / (h * w);
  auto ty = bilinear_taps(h, out_h), tx = bilinear_taps(w, out_w);
  Shape shape = x.shape();
  shape[shape.size() - 2] = out_h;
  shape[shape.size() - 1] = out_w;
  std::vector<float> out(planes * out_h * out_w);
  auto xd = x.data();
  for (std::size_t p = 0; p < planes; ++p) {
    const float* src = xd.data() + p * h * w;
    float* dst = out.data() + p * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const Tap& a = ty[oy];
      const float* r0 = src + a.i0 * w;
      const float* r1 = src + a.i1 * w;
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const Tap& b = tx[ox];
        dst[oy * out_w + ox] =
            a.w0 * (b.w0 * r0[b.i0] + b.w1 * r0[b.i1]) + a.w1 * (b.w0 * r1[b.i0] + b.w1 * r1[b.i1]);
      }
    }
  }
  return Tensor::make_result(std::move(shape), std::move(out), {x},
                             [x, ty = std::move(ty), tx = std::move(tx), planes, h, w, out_h, out_w](TensorImpl& o) {
                               auto gx = grad_of(x);
                               for (std::size_t p = 0; p < planes; ++p) {
                                 float* g = gx.data() + p * h * w;
                                 const float* go = o.grad.data() + p * out_h * out_w;
                                 for (std::size_t oy = 0; oy < out_h; ++oy) {
                                   const Tap& a = ty[oy];
                                   for (std::size_t ox = 0; ox < out_w; ++ox) {
                                     const Tap& b = tx[ox];
                                     const float v = go[oy * out_w + ox];
                                     g[a.i0 * w + b.i0] += a.w0 * b.w0 * v;
                                     g[a.i0 * w + b.i1] += a.w0 * b.w1 * v;
                                     g[a.i1 * w + b.i0] += a.w1 * b.w0 * v;
                                     g[a.i1 * w + b.i1] += a.w1 * b.w1 * v;
                                   }
                                 }
                               }
                             },
                             "bilinear_upsample");
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  if (table.rank() != 2) throw std::invalid_argument("embedding: table must be [V,D]");
  if (ids.empty()) throw std::invalid_argument("embedding: no ids");
  const std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<float> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) throw std::out_of_range("embedding: id " + std::to_string(ids[r]) + " >= " + std::to_string(v));
    std::copy_n(table.data().data() + ids[r] * d, d, out.data() + r * d);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return Tensor::make_result(Shape{ids.size(), d}, std::move(out), {table},
                             [table, idv = std::move(idv), d](TensorImpl& o) {
                               auto gt = grad_of(table);
                               for (std::size_t r = 0; r < idv.size(); ++r)
                                 for (std::size_t i = 0; i < d; ++i) gt[idv[r] * d + i] += o.grad[r * d + i];
                             },
                             "embedding");
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  return Tensor::make_result(Shape{1}, {static_cast<float>(acc)}, {x},
                             [x](TensorImpl& o) {
                               auto gx = grad_of(x);
                               for (auto& g : gx) g += o.grad[0];
                             },
                             "sum");
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0f / static_cast<float>(x.numel())); }

Tensor cross_entropy(const Tensor& probs, std::span<const std::uint8_t> labels, int ignore_id) {
  if (probs.rank() != 3 && probs.rank() != 4) throw std::invalid_argument("cross_entropy: probs must be [N,K,H,W]");
  const bool batched = probs.rank() == 4;
  const std::size_t n = batched ? probs.dim(0) : 1;
  const std::size_t k = probs.dim(batched ? 1 : 0);
  const std::size_t hw = probs.dim(probs.rank() - 2) * probs.dim(probs.rank() - 1);
  if (labels.size() != n * hw)
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(n * hw) + " pixels");
  auto pd = probs.data();
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < hw; ++i) {
      const int label = labels[b * hw + i];
      if (label == ignore_id) continue;
      if (label < 0 || static_cast<std::size_t>(label) >= k)
        throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " out of range for " +
                                std::to_string(k) + " classes");
      const float p = pd[(b * k + label) * hw + i];
      acc -= std::log(std::max(p, kLogClamp));
      ++count;
    }
  if (count == 0) throw std::invalid_argument("empty loss support");
  const float loss = static_cast<float>(acc / static_cast<double>(count));
  std::vector<std::uint8_t> lab(labels.begin(), labels.end());
  return Tensor::make_result(Shape{1}, {loss}, {probs},
                             [probs, lab = std::move(lab), n, k, hw, count, ignore_id](TensorImpl& o) {
                               auto gp = grad_of(probs);
                               auto pd = probs.data();
                               const float g = o.grad[0] / static_cast<float>(count);
                               for (std::size_t b = 0; b < n; ++b)
                                 for (std::size_t i = 0; i < hw; ++i) {
                                   const int label = lab[b * hw + i];
                                   if (label == ignore_id) continue;
                                   const std::size_t idx = (b * k + label) * hw + i;
                                   if (pd[idx] > kLogClamp) gp[idx] -= g / pd[idx];
                                 }
                             },
                             "cross_entropy");
}

Tensor multi_head_attention(const Tensor& x, const AttentionWeights& w, std::size_t heads) {
  if (x.rank() != 2) throw std::invalid_argument("multi_head_attention: x must be [T,D]");
  const std::size_t t = x.dim(0), d = x.dim(1);
  if (heads == 0 || d % heads != 0) throw std::invalid_argument("multi_head_attention: dim not divisible by heads");
  const std::size_t dh = d / heads;
  Tensor qkv = linear(x, w.qkv_weight, w.qkv_bias);  // [T,3D]
  auto split_heads = [&](std::size_t part) {
    Tensor p = reshape(narrow(qkv, 1, part * d, d), Shape{t, heads, dh});
    return transpose(p, 0, 1);  // [H,T,dh]
  };
  Tensor q = split_heads(0), k = split_heads(1), v = split_heads(2);
  Tensor scores = scale(matmul(q, transpose(k, 1, 2)), 1.0f / std::sqrt(static_cast<float>(dh)));
  Tensor attn = softmax(scores, 2);
  Tensor ctx = reshape(transpose(matmul(attn, v), 0, 1), Shape{t, d});
  return linear(ctx, w.out_weight, w.out_bias);
}

}  // namespace gfss::num
