#include "ntlgen/autodiff/ops.hpp"

#include <cmath>
#include <random>

#include "ntlgen/kernels/kernels.hpp"

namespace ntlgen::ad {

namespace {

template <class T>
void require_finite(const Tensor<T>& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite input");
}

void require_rank4(const Shape& s, const char* op, const char* what) {
  if (s.size() != 4) {
    throw ShapeError(std::string(op) + ": " + what + " must be rank 4, got " + shape_str(s));
  }
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape " + shape_str(a) + " vs " + shape_str(b));
}

struct ConvGeometry {
  std::size_t channels, height, width;  // image side
  std::size_t kh, kw, stride, padding;
  std::size_t out_h, out_w;  // column grid
};

// col has (channels * kh * kw) rows and (out_h * out_w) columns.
template <class T>
void im2col(const T* img, const ConvGeometry& g, T* col) {
  const std::size_t cols = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* dst = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long h = static_cast<long>(oh * g.stride + i) - static_cast<long>(g.padding);
          T* row = dst + oh * g.out_w;
          if (h < 0 || h >= static_cast<long>(g.height)) {
            std::fill_n(row, g.out_w, T{0});
            continue;
          }
          const T* src = img + (c * g.height + static_cast<std::size_t>(h)) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long w = static_cast<long>(ow * g.stride + j) - static_cast<long>(g.padding);
            row[ow] = (w < 0 || w >= static_cast<long>(g.width)) ? T{0}
                                                                 : src[static_cast<std::size_t>(w)];
          }
        }
      }
    }
  }
}

// Scatter-adds col back into img (the adjoint of im2col).
template <class T>
void col2im_add(const T* col, const ConvGeometry& g, T* img) {
  const std::size_t cols = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* src = col + ((c * g.kh + i) * g.kw + j) * cols;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long h = static_cast<long>(oh * g.stride + i) - static_cast<long>(g.padding);
          if (h < 0 || h >= static_cast<long>(g.height)) continue;
          T* dst = img + (c * g.height + static_cast<std::size_t>(h)) * g.width;
          const T* row = src + oh * g.out_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long w = static_cast<long>(ow * g.stride + j) - static_cast<long>(g.padding);
            if (w >= 0 && w < static_cast<long>(g.width)) dst[static_cast<std::size_t>(w)] += row[ow];
          }
        }
      }
    }
  }
}

// dst (cols x rows) = src (rows x cols)^T
template <class T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

template <class T>
void check_bias(const std::optional<Var<T>>& bias, std::size_t channels, const char* op) {
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != channels)) {
    throw ShapeError(std::string(op) + ": bias shape " + shape_str(bias->shape()) +
                     " does not match " + std::to_string(channels) + " output channels");
  }
}

template <class T>
void add_bias(Tensor<T>& out, const Tensor<T>& bias) {
  const std::size_t n = out.dim(0), c = out.dim(1), hw = out.dim(2) * out.dim(3);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      T* p = out.ptr() + (b * c + ch) * hw;
      const T v = bias[ch];
      for (std::size_t i = 0; i < hw; ++i) p[i] += v;
    }
  }
}

template <class T>
void bias_grad(Tape<T>& tape, std::size_t bias_id, const Tensor<T>& gout) {
  T* gb = tape.grad_buffer(bias_id);
  if (!gb) return;
  const std::size_t n = gout.dim(0), c = gout.dim(1), hw = gout.dim(2) * gout.dim(3);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* p = gout.ptr() + (b * c + ch) * hw;
      T s{0};
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
      gb[ch] += s;
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

template <class T, class Fwd, class Bwd>
Var<T> unary(const Var<T>& a, Fwd fwd, Bwd bwd) {
  const Tensor<T>& x = a.value();
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  const std::size_t in = a.id();
  return a.tape().record(std::move(y), {a}, [in, bwd](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& gx = tape.grad(self);
    const Tensor<T>& xv = tape.value(in);
    const Tensor<T>& yv = tape.value(self);
    if (T* g = tape.grad_buffer(in)) {
      for (std::size_t i = 0; i < gx.size(); ++i) g[i] += gx[i] * bwd(xv[i], yv[i]);
    }
  });
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding) {
  if (stride == 0) throw ShapeError("convolution stride must be positive");
  if (in + 2 * padding < kernel) {
    throw ShapeError("convolution kernel " + std::to_string(kernel) + " exceeds padded extent " +
                     std::to_string(in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

template <std::floating_point T>
Var<T> conv2d(const Var<T>& input, const Var<T>& kernel, const std::type_identity_t<std::optional<Var<T>>>& bias,
              ConvParams params) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  require_rank4(xs, "conv2d", "input");
  require_rank4(ks, "conv2d", "kernel");
  if (xs[1] != ks[1]) {
    throw ShapeError("conv2d: input channels " + std::to_string(xs[1]) + " vs kernel " +
                     shape_str(ks));
  }
  check_bias(bias, ks[0], "conv2d");
  require_finite(input.value(), "conv2d");
  require_finite(kernel.value(), "conv2d");

  const std::size_t n = xs[0], cin = xs[1], cout = ks[0];
  ConvGeometry g{cin, xs[2], xs[3], ks[2], ks[3], params.stride, params.padding, 0, 0};
  g.out_h = conv_out_extent(g.height, g.kh, g.stride, g.padding);
  g.out_w = conv_out_extent(g.width, g.kw, g.stride, g.padding);
  const std::size_t ck = cin * g.kh * g.kw, pix = g.out_h * g.out_w;

  Tensor<T> out({n, cout, g.out_h, g.out_w});
  std::vector<T> col(ck * pix);
  for (std::size_t b = 0; b < n; ++b) {
    im2col(input.value().ptr() + b * cin * g.height * g.width, g, col.data());
    kernels::gemm<T>(false, cout, pix, ck, kernel.value().ptr(), col.data(),
                     out.ptr() + b * cout * pix, false);
  }
  if (bias) add_bias(out, bias->value());

  const std::size_t xid = input.id(), kid = kernel.id();
  const std::optional<std::size_t> bid = bias ? std::optional(bias->id()) : std::nullopt;
  auto backward = [=](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& gout = tape.grad(self);
    const Tensor<T>& x = tape.value(xid);
    const Tensor<T>& k = tape.value(kid);
    std::vector<T> colbuf(ck * pix);
    T* gx = tape.grad_buffer(xid);
    T* gk = tape.grad_buffer(kid);
    std::vector<T> gk_t;  // (ck x cout), transposed kernel gradient
    std::vector<T> gout_t;
    if (gk) {
      gk_t.assign(ck * cout, T{0});
      gout_t.resize(pix * cout);
    }
    for (std::size_t b = 0; b < n; ++b) {
      const T* gy = gout.ptr() + b * cout * pix;
      if (gk) {
        im2col(x.ptr() + b * cin * g.height * g.width, g, colbuf.data());
        transpose(gy, cout, pix, gout_t.data());
        kernels::gemm<T>(false, ck, cout, pix, colbuf.data(), gout_t.data(), gk_t.data(), true);
      }
      if (gx) {
        kernels::gemm<T>(true, ck, pix, cout, k.ptr(), gy, colbuf.data(), false);
        col2im_add(colbuf.data(), g, gx + b * cin * g.height * g.width);
      }
    }
    if (gk) {
      for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t r = 0; r < ck; ++r) gk[co * ck + r] += gk_t[r * cout + co];
      }
    }
    if (bid) bias_grad(tape, *bid, gout);
  };
  if (bias) return input.tape().record(std::move(out), {input, kernel, *bias}, backward);
  return input.tape().record(std::move(out), {input, kernel}, backward);
}

template <std::floating_point T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& kernel,
                        const std::type_identity_t<std::optional<Var<T>>>& bias, ConvParams params) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  require_rank4(xs, "conv_transpose2d", "input");
  require_rank4(ks, "conv_transpose2d", "kernel");
  if (xs[1] != ks[0]) {
    throw ShapeError("conv_transpose2d: input channels " + std::to_string(xs[1]) +
                     " vs kernel " + shape_str(ks));
  }
  if (params.stride == 0) throw ShapeError("conv_transpose2d: stride must be positive");
  const std::size_t n = xs[0], cin = xs[1], cout = ks[1], h = xs[2], w = xs[3];
  check_bias(bias, cout, "conv_transpose2d");
  require_finite(input.value(), "conv_transpose2d");
  require_finite(kernel.value(), "conv_transpose2d");
  const long oh = static_cast<long>((h - 1) * params.stride + ks[2]) - 2 * static_cast<long>(params.padding);
  const long ow = static_cast<long>((w - 1) * params.stride + ks[3]) - 2 * static_cast<long>(params.padding);
  if (oh <= 0 || ow <= 0) throw ShapeError("conv_transpose2d: padding leaves an empty output");

  // The output plays the image role of the matching forward convolution.
  ConvGeometry g{cout, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow), ks[2], ks[3],
                 params.stride, params.padding, h, w};
  if (conv_out_extent(g.height, g.kh, g.stride, g.padding) != h ||
      conv_out_extent(g.width, g.kw, g.stride, g.padding) != w) {
    throw ShapeError("conv_transpose2d: inconsistent stride/padding for input " + shape_str(xs));
  }
  const std::size_t ck = cout * g.kh * g.kw, pix = h * w, opix = g.height * g.width;

  Tensor<T> out({n, cout, g.height, g.width});
  std::vector<T> col(ck * pix);
  for (std::size_t b = 0; b < n; ++b) {
    kernels::gemm<T>(true, ck, pix, cin, kernel.value().ptr(), input.value().ptr() + b * cin * pix,
                     col.data(), false);
    col2im_add(col.data(), g, out.ptr() + b * cout * opix);
  }
  if (bias) add_bias(out, bias->value());

  const std::size_t xid = input.id(), kid = kernel.id();
  const std::optional<std::size_t> bid = bias ? std::optional(bias->id()) : std::nullopt;
  auto backward = [=](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& gout = tape.grad(self);
    const Tensor<T>& x = tape.value(xid);
    const Tensor<T>& k = tape.value(kid);
    T* gx = tape.grad_buffer(xid);
    T* gk = tape.grad_buffer(kid);
    std::vector<T> colbuf(ck * pix);
    std::vector<T> gk_t;  // (ck x cin)
    std::vector<T> x_t;
    if (gk) {
      gk_t.assign(ck * cin, T{0});
      x_t.resize(pix * cin);
    }
    for (std::size_t b = 0; b < n; ++b) {
      im2col(gout.ptr() + b * cout * opix, g, colbuf.data());
      if (gx) kernels::gemm<T>(false, cin, pix, ck, k.ptr(), colbuf.data(), gx + b * cin * pix, true);
      if (gk) {
        transpose(x.ptr() + b * cin * pix, cin, pix, x_t.data());
        kernels::gemm<T>(false, ck, cin, pix, colbuf.data(), x_t.data(), gk_t.data(), true);
      }
    }
    if (gk) {
      for (std::size_t ci = 0; ci < cin; ++ci) {
        for (std::size_t r = 0; r < ck; ++r) gk[ci * ck + r] += gk_t[r * cin + ci];
      }
    }
    if (bid) bias_grad(tape, *bid, gout);
  };
  if (bias) return input.tape().record(std::move(out), {input, kernel, *bias}, backward);
  return input.tape().record(std::move(out), {input, kernel}, backward);
}

template <std::floating_point T>
Var<T> batch_norm(const Var<T>& input, const Var<T>& gamma, const Var<T>& beta,
                  const BatchNormParams& params, std::type_identity_t<RunningStats<T>>* stats) {
  const Shape& xs = input.shape();
  require_rank4(xs, "batch_norm", "input");
  const std::size_t n = xs[0], c = xs[1], hw = xs[2] * xs[3], count = n * hw;
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    throw ShapeError("batch_norm: gamma/beta must have shape [" + std::to_string(c) + "]");
  }
  if (!(params.eps > 0.0)) throw ConfigError("batch_norm: eps must be positive");
  const bool train = params.mode == Mode::kTrain;
  if (train && count < 2) {
    throw DegenerateBatchError("batch_norm: train mode needs at least 2 values per channel, got " +
                               std::to_string(count));
  }
  if (!train && (!stats || stats->mean.shape() != Shape{c} || stats->var.shape() != Shape{c})) {
    throw ShapeError("batch_norm: eval mode requires running stats of shape [" +
                     std::to_string(c) + "]");
  }
  const Tensor<T>& x = input.value();
  std::vector<T> mean(c), inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (train) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = x.ptr() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = x.ptr() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / static_cast<double>(count);
      mean[ch] = static_cast<T>(mu);
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + params.eps));
      if (stats) {
        if (stats->mean.shape() != Shape{c}) stats->mean = Tensor<T>({c}, T{0});
        if (stats->var.shape() != Shape{c}) stats->var = Tensor<T>({c}, T{1});
        const double unbiased = ss / static_cast<double>(count - 1);
        const double m = params.momentum;
        stats->mean[ch] = static_cast<T>((1.0 - m) * stats->mean[ch] + m * mu);
        stats->var[ch] = static_cast<T>((1.0 - m) * stats->var[ch] + m * unbiased);
      }
    } else {
      mean[ch] = stats->mean[ch];
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(stats->var[ch]) + params.eps));
    }
  }
  Tensor<T> y(xs);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* p = x.ptr() + (b * c + ch) * hw;
      T* q = y.ptr() + (b * c + ch) * hw;
      const T g = gamma.value()[ch], be = beta.value()[ch];
      for (std::size_t i = 0; i < hw; ++i) q[i] = g * ((p[i] - mean[ch]) * inv_std[ch]) + be;
    }
  }
  const std::size_t xid = input.id(), gid = gamma.id(), bid = beta.id();
  return input.tape().record(
      std::move(y), {input, gamma, beta},
      [=, mean = std::move(mean), inv_std = std::move(inv_std)](Tape<T>& tape, std::size_t self) {
        const Tensor<T>& gy = tape.grad(self);
        const Tensor<T>& xv = tape.value(xid);
        const Tensor<T>& gv = tape.value(gid);
        T* gx = tape.grad_buffer(xid);
        T* gg = tape.grad_buffer(gid);
        T* gb = tape.grad_buffer(bid);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              const double xhat = (xv[off + i] - mean[ch]) * inv_std[ch];
              sum_dy += gy[off + i];
              sum_dy_xhat += gy[off + i] * xhat;
            }
          }
          if (gg) gg[ch] += static_cast<T>(sum_dy_xhat);
          if (gb) gb[ch] += static_cast<T>(sum_dy);
          if (!gx) continue;
          const double scale = static_cast<double>(gv[ch]) * inv_std[ch];
          const double m = static_cast<double>(count);
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              if (train) {
                const double xhat = (xv[off + i] - mean[ch]) * inv_std[ch];
                gx[off + i] += static_cast<T>(scale * (gy[off + i] - sum_dy / m - xhat * sum_dy_xhat / m));
              } else {
                gx[off + i] += static_cast<T>(scale * gy[off + i]);
              }
            }
          }
        }
      });
}

template <std::floating_point T>
Var<T> activation(const Var<T>& input, Activation act) {
  const T slope = static_cast<T>(act.slope);
  switch (act.kind) {
    case ActivationKind::kRelu:
      return unary(input, [](T x) { return x > T{0} ? x : T{0}; },
                   [](T x, T) { return x > T{0} ? T{1} : T{0}; });
    case ActivationKind::kLeakyRelu:
      return unary(input, [slope](T x) { return x > T{0} ? x : slope * x; },
                   [slope](T x, T) { return x > T{0} ? T{1} : slope; });
    case ActivationKind::kTanh:
      return unary(input, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
    case ActivationKind::kSigmoid:
      return unary(
          input,
          [](T x) {
            // Split by sign so exp never overflows.
            if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
            const T e = std::exp(x);
            return e / (T{1} + e);
          },
          [](T, T y) { return y * (T{1} - y); });
  }
  throw ConfigError("activation: unknown kind");
}

template <std::floating_point T>
Var<T> dropout(const Var<T>& input, const DropoutParams& params) {
  if (!(params.rate >= 0.0 && params.rate < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(params.rate));
  }
  const Tensor<T>& x = input.value();
  if (params.rate == 0.0) {
    return unary(input, [](T v) { return v; }, [](T, T) { return T{1}; });
  }
  std::mt19937_64 rng(splitmix64(params.seed));
  const T keep_scale = static_cast<T>(1.0 / (1.0 - params.rate));
  std::vector<T> mask(x.size());
  for (auto& m : mask) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u >= params.rate ? keep_scale : T{0};
  }
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
  const std::size_t xid = input.id();
  return input.tape().record(std::move(y), {input},
                             [xid, mask = std::move(mask)](Tape<T>& tape, std::size_t self) {
                               const Tensor<T>& gy = tape.grad(self);
                               if (T* gx = tape.grad_buffer(xid)) {
                                 for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
                               }
                             });
}

template <std::floating_point T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require_rank4(as, "concat_channels", "first input");
  require_rank4(bs, "concat_channels", "second input");
  if (as[0] != bs[0] || as[2] != bs[2] || as[3] != bs[3]) {
    throw ShapeError("concat_channels: " + shape_str(as) + " and " + shape_str(bs) +
                     " differ outside the channel axis");
  }
  const std::size_t n = as[0], ca = as[1], cb = bs[1], hw = as[2] * as[3];
  Tensor<T> y({n, ca + cb, as[2], as[3]});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.value().ptr() + i * ca * hw, ca * hw, y.ptr() + i * (ca + cb) * hw);
    std::copy_n(b.value().ptr() + i * cb * hw, cb * hw, y.ptr() + i * (ca + cb) * hw + ca * hw);
  }
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(std::move(y), {a, b}, [=](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& gy = tape.grad(self);
    T* ga = tape.grad_buffer(aid);
    T* gb = tape.grad_buffer(bid);
    for (std::size_t i = 0; i < n; ++i) {
      const T* src = gy.ptr() + i * (ca + cb) * hw;
      if (ga) {
        for (std::size_t k = 0; k < ca * hw; ++k) ga[i * ca * hw + k] += src[k];
      }
      if (gb) {
        for (std::size_t k = 0; k < cb * hw; ++k) gb[i * cb * hw + k] += src[ca * hw + k];
      }
    }
  });
}

template <std::floating_point T>
Var<T> slice_channels(const Var<T>& input, std::size_t begin, std::size_t count) {
  const Shape& xs = input.shape();
  require_rank4(xs, "slice_channels", "input");
  if (count == 0 || begin + count > xs[1]) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " + shape_str(xs));
  }
  const std::size_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
  Tensor<T> y({n, count, xs[2], xs[3]});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(input.value().ptr() + (i * c + begin) * hw, count * hw, y.ptr() + i * count * hw);
  }
  const std::size_t xid = input.id();
  return input.tape().record(std::move(y), {input}, [=](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& gy = tape.grad(self);
    if (T* gx = tape.grad_buffer(xid)) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < count * hw; ++k) gx[(i * c + begin) * hw + k] += gy[i * count * hw + k];
      }
    }
  });
}

template <std::floating_point T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(std::move(y), {a, b}, [aid, bid](Tape<T>& tape, std::size_t self) {
    tape.accumulate(aid, tape.grad(self).data());
    tape.accumulate(bid, tape.grad(self).data());
  });
}

template <std::floating_point T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(std::move(y), {a, b}, [aid, bid](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& gy = tape.grad(self);
    tape.accumulate(aid, gy.data());
    if (T* gb = tape.grad_buffer(bid)) {
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
    }
  });
}

template <std::floating_point T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(std::move(y), {a, b}, [aid, bid](Tape<T>& tape, std::size_t self) {
    const Tensor<T>& gy = tape.grad(self);
    const Tensor<T>& av = tape.value(aid);
    const Tensor<T>& bv = tape.value(bid);
    if (T* ga = tape.grad_buffer(aid)) {
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (T* gb = tape.grad_buffer(bid)) {
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

template <std::floating_point T>
Var<T> scale(const Var<T>& a, std::type_identity_t<T> factor) {
  return unary(a, [factor](T x) { return factor * x; }, [factor](T, T) { return factor; });
}

template <std::floating_point T>
Var<T> add_scalar(const Var<T>& a, std::type_identity_t<T> offset) {
  return unary(a, [offset](T x) { return x + offset; }, [](T, T) { return T{1}; });
}

template <std::floating_point T>
Var<T> abs(const Var<T>& a) {
  return unary(a, [](T x) { return std::abs(x); },
               [](T x, T) { return x > T{0} ? T{1} : (x < T{0} ? T{-1} : T{0}); });
}

template <std::floating_point T>
Var<T> log(const Var<T>& a) {
  for (T v : a.value().data()) {
    if (!(v > T{0})) throw NumericError("log: non-positive input");
  }
  return unary(a, [](T x) { return std::log(x); }, [](T x, T) { return T{1} / x; });
}

template <std::floating_point T>
Var<T> clamp(const Var<T>& a, std::type_identity_t<T> lo, std::type_identity_t<T> hi) {
  return unary(a, [lo, hi](T x) { return std::clamp(x, lo, hi); },
               [lo, hi](T x, T) { return (x >= lo && x <= hi) ? T{1} : T{0}; });
}

template <std::floating_point T>
Var<T> sum(const Var<T>& a) {
  double s = 0.0;
  for (T v : a.value().data()) s += v;
  const std::size_t aid = a.id();
  return a.tape().record(Tensor<T>({1}, static_cast<T>(s)), {a},
                         [aid](Tape<T>& tape, std::size_t self) {
                           const T g = tape.grad(self)[0];
                           if (T* ga = tape.grad_buffer(aid)) {
                             const std::size_t len = tape.value(aid).size();
                             for (std::size_t i = 0; i < len; ++i) ga[i] += g;
                           }
                         });
}

template <std::floating_point T>
Var<T> mean(const Var<T>& a) {
  double s = 0.0;
  for (T v : a.value().data()) s += v;
  const std::size_t len = a.value().size();
  const std::size_t aid = a.id();
  return a.tape().record(Tensor<T>({1}, static_cast<T>(s / static_cast<double>(len))), {a},
                         [aid, len](Tape<T>& tape, std::size_t self) {
                           const T g = tape.grad(self)[0] / static_cast<T>(len);
                           if (T* ga = tape.grad_buffer(aid)) {
                             for (std::size_t i = 0; i < len; ++i) ga[i] += g;
                           }
                         });
}

#define NTLGEN_INSTANTIATE_OPS(T)                                                            \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&,      \
                            ConvParams);                                                     \
  template Var<T> conv_transpose2d<T>(const Var<T>&, const Var<T>&,                          \
                                      const std::optional<Var<T>>&, ConvParams);             \
  template Var<T> batch_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&,                 \
                                const BatchNormParams&, RunningStats<T>*);                   \
  template Var<T> activation<T>(const Var<T>&, Activation);                                  \
  template Var<T> dropout<T>(const Var<T>&, const DropoutParams&);                           \
  template Var<T> concat_channels<T>(const Var<T>&, const Var<T>&);                          \
  template Var<T> slice_channels<T>(const Var<T>&, std::size_t, std::size_t);                \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                      \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                      \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                      \
  template Var<T> scale<T>(const Var<T>&, T);                                                \
  template Var<T> add_scalar<T>(const Var<T>&, T);                                           \
  template Var<T> abs<T>(const Var<T>&);                                                     \
  template Var<T> log<T>(const Var<T>&);                                                     \
  template Var<T> clamp<T>(const Var<T>&, T, T);                                             \
  template Var<T> sum<T>(const Var<T>&);                                                     \
  template Var<T> mean<T>(const Var<T>&);

NTLGEN_INSTANTIATE_OPS(float)
NTLGEN_INSTANTIATE_OPS(double)

#undef NTLGEN_INSTANTIATE_OPS

}  // namespace ntlgen::ad
