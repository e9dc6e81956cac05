#include "ttvos/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "ttvos/errors.hpp"
#include "ttvos/flop_counter.hpp"
#include "ttvos/tape.hpp"

namespace ttvos {

namespace {

thread_local KinkRecorder* g_kink_recorder = nullptr;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMatrix, Eigen::Unaligned, Eigen::OuterStride<>>;
using View = Eigen::Map<RowMatrix, Eigen::Unaligned, Eigen::OuterStride<>>;

// Row-major C = op(A) op(B) + beta C with beta in {0, 1}.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
  const auto im = static_cast<Eigen::Index>(m), in = static_cast<Eigen::Index>(n),
             ik = static_cast<Eigen::Index>(k);
  ConstView va(a, trans_a ? ik : im, trans_a ? im : ik, Eigen::OuterStride<>(lda));
  ConstView vb(b, trans_b ? in : ik, trans_b ? ik : in, Eigen::OuterStride<>(ldb));
  View vc(c, im, in, Eigen::OuterStride<>(ldc));
  auto run = [&](const auto& opa, const auto& opb) {
    if (beta == 0.0) {
      vc.noalias() = opa * opb;
    } else {
      vc.noalias() += opa * opb;
    }
  };
  if (trans_a && trans_b) run(va.transpose(), vb.transpose());
  else if (trans_a) run(va.transpose(), vb);
  else if (trans_b) run(va, vb.transpose());
  else run(va, vb);
}

struct ConvGeometry {
  std::size_t channels, height, width, kernel, stride, padding, out_h, out_w;
};

// cols[(c*k*k + ki*k + kj), oh*out_w + ow] = x[c, oh*s - p + ki, ow*s - p + kj]
void im2col(const double* x, const ConvGeometry& g, double* cols) {
  const std::size_t hw_out = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = x + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        double* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * hw_out;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          double* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(ih) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw =
                static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            dst[ow] = (iw < 0 || iw >= static_cast<long>(g.width)) ? 0.0 : src[iw];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates into x.
void col2im(const double* cols, const ConvGeometry& g, double* x) {
  const std::size_t hw_out = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = x + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        const double* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * hw_out;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.padding);
          if (ih < 0 || ih >= static_cast<long>(g.height)) continue;
          double* dst = plane + static_cast<std::size_t>(ih) * g.width;
          const double* src = row + oh * g.out_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw =
                static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.padding);
            if (iw >= 0 && iw < static_cast<long>(g.width)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) +
                         ", got shape " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != sb.size()) {
    throw DimensionError(std::string(op) + ": rank mismatch " + shape_str(sa) + " vs " +
                         shape_str(sb));
  }
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i] != sb[i]) {
      throw DimensionError(std::string(op) + ": extent mismatch on axis " + std::to_string(i) +
                           ": " + shape_str(sa) + " vs " + shape_str(sb));
    }
  }
}

void accumulate(Tensor& target, std::span<const double> delta) {
  auto g = target.mutable_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit a;
  for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
  a.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Convolutions

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding, std::size_t groups) {
  require_rank(input, 3, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  require_rank(bias, 1, "conv2d bias");
  if (stride == 0) throw ConfigError("conv2d stride must be >= 1");
  if (groups == 0) throw ConfigError("conv2d groups must be >= 1");
  const std::size_t c_in = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t c_out = weight.dim(0), k = weight.dim(2);
  if (weight.dim(3) != k) {
    throw DimensionError("conv2d weight axis 3: kernel must be square, got " +
                         shape_str(weight.shape()));
  }
  if (c_in % groups != 0 || c_out % groups != 0) {
    throw ConfigError("conv2d: channels " + std::to_string(c_in) + "->" +
                      std::to_string(c_out) + " not divisible by groups " +
                      std::to_string(groups));
  }
  const std::size_t cin_g = c_in / groups, cout_g = c_out / groups;
  if (weight.dim(1) != cin_g) {
    throw DimensionError("conv2d weight axis 1: expected C_in/groups = " + std::to_string(cin_g) +
                         ", got " + std::to_string(weight.dim(1)));
  }
  if (bias.dim(0) != c_out) {
    throw DimensionError("conv2d bias axis 0: expected " + std::to_string(c_out) + ", got " +
                         std::to_string(bias.dim(0)));
  }
  const long span_h = static_cast<long>(height + 2 * padding) - static_cast<long>(k);
  const long span_w = static_cast<long>(width + 2 * padding) - static_cast<long>(k);
  // A remainder is tolerated only while it drops trailing padding; skipping
  // real input rows or columns is a configuration error.
  const long pad = static_cast<long>(padding);
  const long st = static_cast<long>(stride);
  if (span_h < 0 || span_w < 0 || span_h % st > pad || span_w % st > pad) {
    throw ConfigError("conv2d: input " + shape_str(input.shape()) + " with k=" +
                      std::to_string(k) + " stride=" + std::to_string(stride) +
                      " padding=" + std::to_string(padding) +
                      " gives a non-integer output extent");
  }
  const std::size_t out_h = static_cast<std::size_t>(span_h) / stride + 1;
  const std::size_t out_w = static_cast<std::size_t>(span_w) / stride + 1;
  const std::size_t hw_out = out_h * out_w;
  const std::size_t patch = cin_g * k * k;
  const ConvGeometry geo{cin_g, height, width, k, stride, padding, out_h, out_w};
  const bool direct = (k == 1 && stride == 1 && padding == 0);

  // Column buffers per group; the pointwise case reads the input directly.
  auto cols = std::make_shared<std::vector<double>>();
  if (!direct) {
    cols->resize(groups * patch * hw_out);
    for (std::size_t g = 0; g < groups; ++g) {
      im2col(input.data().data() + g * cin_g * height * width, geo,
             cols->data() + g * patch * hw_out);
    }
  }
  auto group_cols = [cols, direct, input, patch, hw_out, cin_g](std::size_t g) {
    return direct ? input.data().data() + g * cin_g * hw_out : cols->data() + g * patch * hw_out;
  };

  Tensor out(Shape{c_out, out_h, out_w});
  double* o = out.mutable_data().data();
  const double* b = bias.data().data();
  for (std::size_t c = 0; c < c_out; ++c) std::fill(o + c * hw_out, o + (c + 1) * hw_out, b[c]);
  const double* w = weight.data().data();
  for (std::size_t g = 0; g < groups; ++g) {
    gemm(false, false, cout_g, hw_out, patch, w + g * cout_g * patch, patch, group_cols(g),
         hw_out, 1.0, o + g * cout_g * hw_out, hw_out);
  }
  count_flops(flops::conv2d(c_in, c_out, k, groups, out_h, out_w));

  if (Tape* tape = recording_tape({&input, &weight, &bias})) {
    tape->record("conv2d", {input, weight, bias}, out,
                 [=]() mutable {
                   const double* dout = out.grad().data();
                   if (weight.requires_grad()) {
                     double* dw = weight.mutable_grad().data();
                     for (std::size_t g = 0; g < groups; ++g) {
                       gemm(false, true, cout_g, patch, hw_out, dout + g * cout_g * hw_out,
                            hw_out, group_cols(g), hw_out, 1.0, dw + g * cout_g * patch, patch);
                     }
                   }
                   if (bias.requires_grad()) {
                     auto db = bias.mutable_grad();
                     for (std::size_t c = 0; c < c_out; ++c) {
                       double s = 0.0;
                       for (std::size_t i = 0; i < hw_out; ++i) s += dout[c * hw_out + i];
                       db[c] += s;
                     }
                   }
                   if (input.requires_grad()) {
                     double* dx = input.mutable_grad().data();
                     std::vector<double> dcols(direct ? 0 : patch * hw_out);
                     for (std::size_t g = 0; g < groups; ++g) {
                       double* dx_g = dx + g * cin_g * height * width;
                       if (direct) {
                         gemm(true, false, patch, hw_out, cout_g, w + g * cout_g * patch, patch,
                              dout + g * cout_g * hw_out, hw_out, 1.0, dx_g, hw_out);
                       } else {
                         gemm(true, false, patch, hw_out, cout_g, w + g * cout_g * patch, patch,
                              dout + g * cout_g * hw_out, hw_out, 0.0, dcols.data(), hw_out);
                         col2im(dcols.data(), geo, dx_g);
                       }
                     }
                   }
                 });
  }
  return out;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::size_t stride, std::size_t padding) {
  require_rank(input, 3, "conv_transpose2d input");
  require_rank(weight, 4, "conv_transpose2d weight");
  require_rank(bias, 1, "conv_transpose2d bias");
  if (stride == 0) throw ConfigError("conv_transpose2d stride must be >= 1");
  const std::size_t c_in = input.dim(0), height = input.dim(1), width = input.dim(2);
  if (weight.dim(0) != c_in) {
    throw DimensionError("conv_transpose2d weight axis 0: expected " + std::to_string(c_in) +
                         ", got " + std::to_string(weight.dim(0)));
  }
  const std::size_t c_out = weight.dim(1), k = weight.dim(2);
  if (weight.dim(3) != k) {
    throw DimensionError("conv_transpose2d weight axis 3: kernel must be square, got " +
                         shape_str(weight.shape()));
  }
  if (bias.dim(0) != c_out) {
    throw DimensionError("conv_transpose2d bias axis 0: expected " + std::to_string(c_out) +
                         ", got " + std::to_string(bias.dim(0)));
  }
  const long oh = static_cast<long>((height - 1) * stride + k) - 2 * static_cast<long>(padding);
  const long ow = static_cast<long>((width - 1) * stride + k) - 2 * static_cast<long>(padding);
  if (oh <= 0 || ow <= 0) {
    throw ConfigError("conv_transpose2d: non-positive output extent for input " +
                      shape_str(input.shape()));
  }
  const std::size_t out_h = static_cast<std::size_t>(oh), out_w = static_cast<std::size_t>(ow);
  const std::size_t hw_in = height * width, hw_out = out_h * out_w;
  const std::size_t patch = c_out * k * k;
  // Geometry of the forward convolution this op is the adjoint of.
  const ConvGeometry geo{c_out, out_h, out_w, k, stride, padding, height, width};

  std::vector<double> cols(patch * hw_in);
  gemm(true, false, patch, hw_in, c_in, weight.data().data(), patch, input.data().data(), hw_in,
       0.0, cols.data(), hw_in);
  Tensor out(Shape{c_out, out_h, out_w});
  double* o = out.mutable_data().data();
  const double* b = bias.data().data();
  for (std::size_t c = 0; c < c_out; ++c) std::fill(o + c * hw_out, o + (c + 1) * hw_out, b[c]);
  col2im(cols.data(), geo, o);
  count_flops(flops::conv_transpose2d(c_in, c_out, k, height, width, out_h, out_w));

  if (Tape* tape = recording_tape({&input, &weight, &bias})) {
    tape->record("conv_transpose2d", {input, weight, bias}, out,
                 [=]() mutable {
                   const double* dout = out.grad().data();
                   std::vector<double> dcols(patch * hw_in);
                   im2col(dout, geo, dcols.data());
                   if (input.requires_grad()) {
                     gemm(false, false, c_in, hw_in, patch, weight.data().data(), patch,
                          dcols.data(), hw_in, 1.0, input.mutable_grad().data(), hw_in);
                   }
                   if (weight.requires_grad()) {
                     gemm(false, true, c_in, patch, hw_in, input.data().data(), hw_in,
                          dcols.data(), hw_in, 1.0, weight.mutable_grad().data(), patch);
                   }
                   if (bias.requires_grad()) {
                     auto db = bias.mutable_grad();
                     for (std::size_t c = 0; c < c_out; ++c) {
                       double s = 0.0;
                       for (std::size_t i = 0; i < hw_out; ++i) s += dout[c * hw_out + i];
                       db[c] += s;
                     }
                   }
                 });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rearrangements

Tensor pixel_shuffle(const Tensor& input, std::size_t r) {
  require_rank(input, 3, "pixel_shuffle input");
  if (r == 0) throw ConfigError("pixel_shuffle factor must be >= 1");
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (cin % (r * r) != 0) {
    throw DimensionError("pixel_shuffle axis 0: " + std::to_string(cin) +
                         " channels not divisible by r^2 = " + std::to_string(r * r));
  }
  const std::size_t c_out = cin / (r * r), oh = h * r, ow = w * r;
  // index[dst] = src, shared with backward
  auto index = std::make_shared<std::vector<std::size_t>>(cin * h * w);
  for (std::size_t c = 0; c < c_out; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t x = 0; x < w; ++x)
          for (std::size_t j = 0; j < r; ++j) {
            const std::size_t dst = (c * oh + y * r + i) * ow + x * r + j;
            const std::size_t src = ((c * r * r + i * r + j) * h + y) * w + x;
            (*index)[dst] = src;
          }
  Tensor out(Shape{c_out, oh, ow});
  auto o = out.mutable_data();
  auto in = input.data();
  for (std::size_t d = 0; d < o.size(); ++d) o[d] = in[(*index)[d]];
  if (Tape* tape = recording_tape({&input})) {
    tape->record("pixel_shuffle", {input}, out, [=]() mutable {
      auto g = out.grad();
      auto dx = input.mutable_grad();
      for (std::size_t d = 0; d < g.size(); ++d) dx[(*index)[d]] += g[d];
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose input");
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor out(Shape{n, m});
  auto o = out.mutable_data();
  auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) o[j * m + i] = x[i * n + j];
  if (Tape* tape = recording_tape({&a})) {
    tape->record("transpose", {a}, out, [=]() mutable {
      auto g = out.grad();
      auto dx = a.mutable_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

Tensor reshape(const Tensor& input, Shape shape) {
  if (shape_numel(shape) != input.numel()) {
    throw DimensionError("reshape " + shape_str(input.shape()) + " -> " + shape_str(shape) +
                         " changes the element count");
  }
  Tensor out(std::move(shape), std::vector<double>(input.data().begin(), input.data().end()));
  if (Tape* tape = recording_tape({&input})) {
    tape->record("reshape", {input}, out, [=]() mutable {
      Tensor in = input;
      accumulate(in, out.grad());
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw UsageError("concat of an empty list");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw DimensionError("concat axis " + std::to_string(axis) + " out of range for " +
                         shape_str(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) {
      throw DimensionError("concat: rank mismatch " + shape_str(first) + " vs " + shape_str(s));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) {
        throw DimensionError("concat: extent mismatch on axis " + std::to_string(i) + ": " +
                             shape_str(first) + " vs " + shape_str(s));
      }
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit os = split_axis(out_shape, axis);
  Tensor out(out_shape);
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const AxisSplit ps = split_axis(p.shape(), axis);
    auto src = p.data();
    const std::size_t block = ps.extent * ps.inner;
    for (std::size_t i = 0; i < ps.outer; ++i) {
      std::copy_n(src.data() + i * block, block,
                  o.data() + i * os.extent * os.inner + offset * os.inner);
    }
    offset += ps.extent;
  }
  if (Tape* tape = recording_tape(parts)) {
    tape->record("concat", parts, out, [=]() mutable {
      auto g = out.grad();
      std::size_t off = 0;
      for (Tensor p : parts) {
        const AxisSplit ps = split_axis(p.shape(), axis);
        const std::size_t block = ps.extent * ps.inner;
        if (p.requires_grad()) {
          auto dx = p.mutable_grad();
          for (std::size_t i = 0; i < ps.outer; ++i) {
            const double* s = g.data() + i * os.extent * os.inner + off * os.inner;
            for (std::size_t j = 0; j < block; ++j) dx[i * block + j] += s[j];
          }
        }
        off += ps.extent;
      }
    });
  }
  return out;
}

Tensor narrow(const Tensor& input, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = input.shape();
  if (axis >= s.size()) {
    throw DimensionError("narrow axis " + std::to_string(axis) + " out of range for " +
                         shape_str(s));
  }
  if (length == 0 || start + length > s[axis]) {
    throw DimensionError("narrow on axis " + std::to_string(axis) + ": range [" +
                         std::to_string(start) + "," + std::to_string(start + length) +
                         ") exceeds extent " + std::to_string(s[axis]));
  }
  Shape out_shape = s;
  out_shape[axis] = length;
  const AxisSplit is = split_axis(s, axis);
  const std::size_t block = length * is.inner;
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto x = input.data();
  for (std::size_t i = 0; i < is.outer; ++i) {
    std::copy_n(x.data() + i * is.extent * is.inner + start * is.inner, block,
                o.data() + i * block);
  }
  if (Tape* tape = recording_tape({&input})) {
    tape->record("narrow", {input}, out, [=]() mutable {
      auto g = out.grad();
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < is.outer; ++i) {
        double* d = dx.data() + i * is.extent * is.inner + start * is.inner;
        for (std::size_t j = 0; j < block; ++j) d[j] += g[i * block + j];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise and reductions

Tensor softmax(const Tensor& input, std::size_t axis) {
  const Shape& s = input.shape();
  if (axis >= s.size()) {
    throw DimensionError("softmax axis " + std::to_string(axis) + " out of range for " +
                         shape_str(s));
  }
  const AxisSplit a = split_axis(s, axis);
  Tensor out(s);
  auto o = out.mutable_data();
  auto x = input.data();
  for (std::size_t i = 0; i < a.outer; ++i) {
    for (std::size_t j = 0; j < a.inner; ++j) {
      const std::size_t base = i * a.extent * a.inner + j;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < a.extent; ++c) mx = std::max(mx, x[base + c * a.inner]);
      double total = 0.0;
      for (std::size_t c = 0; c < a.extent; ++c) {
        const double e = std::exp(x[base + c * a.inner] - mx);
        o[base + c * a.inner] = e;
        total += e;
      }
      for (std::size_t c = 0; c < a.extent; ++c) o[base + c * a.inner] /= total;
    }
  }
  count_flops(flops::softmax(input.numel()));
  if (Tape* tape = recording_tape({&input})) {
    tape->record("softmax", {input}, out, [=]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < a.outer; ++i) {
        for (std::size_t j = 0; j < a.inner; ++j) {
          const std::size_t base = i * a.extent * a.inner + j;
          double dot = 0.0;
          for (std::size_t c = 0; c < a.extent; ++c) {
            dot += g[base + c * a.inner] * y[base + c * a.inner];
          }
          for (std::size_t c = 0; c < a.extent; ++c) {
            const std::size_t idx = base + c * a.inner;
            dx[idx] += y[idx] * (g[idx] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor leaky_relu(const Tensor& input, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("leaky_relu alpha must lie in (0,1)");
  Tensor out(input.shape());
  auto o = out.mutable_data();
  auto x = input.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] >= 0.0 ? x[i] : alpha * x[i];
  if (g_kink_recorder) g_kink_recorder->append(x);
  count_flops(flops::elementwise(input.numel()));
  if (Tape* tape = recording_tape({&input})) {
    tape->record("leaky_relu", {input}, out, [=]() mutable {
      auto g = out.grad();
      auto xs = input.data();
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < xs.size(); ++i) dx[i] += xs[i] >= 0.0 ? g[i] : alpha * g[i];
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul inner extent mismatch: lhs axis 1 = " + std::to_string(k) +
                         ", rhs axis 0 = " + std::to_string(b.dim(0)));
  }
  Tensor out(Shape{m, n});
  gemm(false, false, m, n, k, a.data().data(), k, b.data().data(), n, 0.0,
       out.mutable_data().data(), n);
  count_flops(flops::matmul(m, k, n));
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record("matmul", {a, b}, out, [=]() mutable {
      const double* g = out.grad().data();
      if (a.requires_grad()) {
        gemm(false, true, m, k, n, g, n, b.data().data(), n, 1.0, a.mutable_grad().data(), k);
      }
      if (b.requires_grad()) {
        gemm(true, false, k, n, m, a.data().data(), k, g, n, 1.0, b.mutable_grad().data(), n);
      }
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename GradA, typename GradB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, GradA ga, GradB gb) {
  require_same_shape(a, b, name);
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(x[i], y[i]);
  count_flops(flops::elementwise(o.size()));
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(name, {a, b}, out, [=]() mutable {
      auto g = out.grad();
      auto xs = a.data();
      auto ys = b.data();
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += ga(g[i], xs[i], ys[i]);
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += gb(g[i], xs[i], ys[i]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = s * x[i];
  count_flops(flops::elementwise(o.size()));
  if (Tape* tape = recording_tape({&a})) {
    tape->record("scale", {a}, out, [=]() mutable {
      auto g = out.grad();
      auto dx = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += s * g[i];
    });
  }
  return out;
}

Tensor avg_pool2d(const Tensor& input, std::size_t k) {
  require_rank(input, 3, "avg_pool2d input");
  if (k == 0) throw ConfigError("avg_pool2d kernel must be >= 1");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h % k != 0) {
    throw DimensionError("avg_pool2d axis 1: extent " + std::to_string(h) +
                         " not divisible by " + std::to_string(k));
  }
  if (w % k != 0) {
    throw DimensionError("avg_pool2d axis 2: extent " + std::to_string(w) +
                         " not divisible by " + std::to_string(k));
  }
  const std::size_t oh = h / k, ow = w / k;
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor out(Shape{c, oh, ow});
  auto o = out.mutable_data();
  auto x = input.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xq = 0; xq < ow; ++xq) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) s += x[(ch * h + y * k + i) * w + xq * k + j];
        o[(ch * oh + y) * ow + xq] = s * inv;
      }
  count_flops(flops::avg_pool2d(k, out.numel()));
  if (Tape* tape = recording_tape({&input})) {
    tape->record("avg_pool2d", {input}, out, [=]() mutable {
      auto g = out.grad();
      auto dx = input.mutable_grad();
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t xq = 0; xq < ow; ++xq) {
            const double v = g[(ch * oh + y) * ow + xq] * inv;
            for (std::size_t i = 0; i < k; ++i)
              for (std::size_t j = 0; j < k; ++j) dx[(ch * h + y * k + i) * w + xq * k + j] += v;
          }
    });
  }
  return out;
}

namespace {

struct LinearTap {
  std::size_t lo, hi;
  double frac;
};

std::vector<LinearTap> linear_taps(std::size_t in, std::size_t out) {
  std::vector<LinearTap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    double src = ratio * (static_cast<double>(d) + 0.5) - 0.5;
    if (src < 0.0) src = 0.0;
    std::size_t lo = static_cast<std::size_t>(src);
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = lo < in - 1 ? lo + 1 : lo;
    taps[d] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  require_rank(input, 3, "bilinear_resize input");
  if (out_h == 0 || out_w == 0) throw ConfigError("bilinear_resize to an empty extent");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const auto ty = linear_taps(h, out_h);
  const auto tx = linear_taps(w, out_w);
  Tensor out(Shape{c, out_h, out_w});
  auto o = out.mutable_data();
  auto x = input.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* p = x.data() + ch * h * w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const auto& vy = ty[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const auto& vx = tx[ox];
        const double top = (1 - vx.frac) * p[vy.lo * w + vx.lo] + vx.frac * p[vy.lo * w + vx.hi];
        const double bot = (1 - vx.frac) * p[vy.hi * w + vx.lo] + vx.frac * p[vy.hi * w + vx.hi];
        o[(ch * out_h + oy) * out_w + ox] = (1 - vy.frac) * top + vy.frac * bot;
      }
    }
  }
  count_flops(flops::bilinear(out.numel()));
  if (Tape* tape = recording_tape({&input})) {
    tape->record("bilinear_resize", {input}, out, [=]() mutable {
      auto g = out.grad();
      auto dx = input.mutable_grad();
      for (std::size_t ch = 0; ch < c; ++ch) {
        double* p = dx.data() + ch * h * w;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const auto& vy = ty[oy];
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const auto& vx = tx[ox];
            const double v = g[(ch * out_h + oy) * out_w + ox];
            p[vy.lo * w + vx.lo] += (1 - vy.frac) * (1 - vx.frac) * v;
            p[vy.lo * w + vx.hi] += (1 - vy.frac) * vx.frac * v;
            p[vy.hi * w + vx.lo] += vy.frac * (1 - vx.frac) * v;
            p[vy.hi * w + vx.hi] += vy.frac * vx.frac * v;
          }
        }
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& input) {
  double s = 0.0;
  for (double v : input.data()) s += v;
  Tensor out = Tensor::scalar(s);
  count_flops(flops::elementwise(input.numel()));
  if (Tape* tape = recording_tape({&input})) {
    tape->record("sum", {input}, out, [=]() mutable {
      const double g = out.grad()[0];
      for (double& d : input.mutable_grad()) d += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& input) {
  return scale(sum(input), 1.0 / static_cast<double>(input.numel()));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require_rank(logits, 3, "cross_entropy logits");
  const std::size_t c = logits.dim(0), hw = logits.dim(1) * logits.dim(2);
  if (labels.size() != hw) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for a map of " + std::to_string(hw) + " pixels");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= c) {
      throw InputError("cross_entropy: label " + std::to_string(l) + " outside [0," +
                       std::to_string(c) + ")");
    }
  }
  auto x = logits.data();
  auto probs = std::make_shared<std::vector<double>>(c * hw);
  double total = 0.0;
  for (std::size_t p = 0; p < hw; ++p) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t ch = 0; ch < c; ++ch) mx = std::max(mx, x[ch * hw + p]);
    double z = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) z += std::exp(x[ch * hw + p] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t ch = 0; ch < c; ++ch) (*probs)[ch * hw + p] = std::exp(x[ch * hw + p] - lse);
    total += lse - x[static_cast<std::size_t>(labels[p]) * hw + p];
  }
  const double n = static_cast<double>(hw);
  Tensor out = Tensor::scalar(total / n);
  count_flops(flops::softmax(logits.numel()) + 2 * hw);
  if (Tape* tape = recording_tape({&logits})) {
    tape->record("cross_entropy", {logits}, out, [=]() mutable {
      const double g = out.grad()[0] / n;
      auto dx = logits.mutable_grad();
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t p = 0; p < hw; ++p) {
          const double target = static_cast<std::size_t>(labels[p]) == ch ? 1.0 : 0.0;
          dx[ch * hw + p] += g * ((*probs)[ch * hw + p] - target);
        }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------

KinkRecorder::KinkRecorder() : previous_(g_kink_recorder) { g_kink_recorder = this; }
KinkRecorder::~KinkRecorder() { g_kink_recorder = previous_; }

void KinkRecorder::append(std::span<const double> values) {
  for (double v : values) pattern_.push_back(v >= 0.0);
}

}  // namespace ttvos
