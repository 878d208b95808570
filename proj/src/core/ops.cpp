// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <stdexcept>

#include "core/autograd.hpp"
#include "kernels/kernels.hpp"

namespace tg::ops {

namespace k = tg::kernels;

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("ops: " + msg);
}

Shape bc_shape(const Shape& a, const Shape& b) {
  const size_t ra = a.size(), rb = b.size(), r = std::max(ra, rb);
  Shape out(r);
  for (size_t i = 0; i < r; ++i) {
    const i64 da = i < r - ra ? 1 : a[i - (r - ra)];
    const i64 db = i < r - rb ? 1 : b[i - (r - rb)];
    if (da != db && da != 1 && db != 1)
      fail("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// row-major strides aligned to rank r, with 0 stride on broadcast dims
std::vector<i64> bc_strides(const Shape& s, const Shape& out) {
  const size_t r = out.size(), rs = s.size();
  std::vector<i64> st(r, 0);
  i64 acc = 1;
  for (size_t i = rs; i-- > 0;) {
    st[i + (r - rs)] = (s[i] == 1 && out[i + (r - rs)] != 1) ? 0 : acc;
    acc *= s[i];
  }
  return st;
}

template <class F>
void bc_apply(const Tensor& a, const Tensor& b, Tensor& y, F&& f) {
  const Shape& os = y.shape();
  const auto sa = bc_strides(a.shape(), os);
  const auto sb = bc_strides(b.shape(), os);
  const size_t r = os.size();
  std::vector<i64> idx(r, 0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* py = y.data();
  const i64 n = y.numel();
  i64 oa = 0, ob = 0;
  for (i64 lin = 0; lin < n; ++lin) {
    py[lin] = f(pa[oa], pb[ob]);
    for (size_t d = r; d-- > 0;) {
      idx[d]++;
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < os[d]) break;
      oa -= sa[d] * os[d];
      ob -= sb[d] * os[d];
      idx[d] = 0;
    }
  }
}

enum class BinKind { Add, Sub, Mul, Div };

const char* bin_name(BinKind k) {
  switch (k) {
    case BinKind::Add: return "add";
    case BinKind::Sub: return "sub";
    case BinKind::Mul: return "mul";
    default: return "div";
  }
}

struct BinNode final : Node {
  BinKind kind;
  explicit BinNode(BinKind k) : kind(k) {}
  const char* name() const override { return bin_name(kind); }
  std::vector<Tensor> backward(const Tensor& gy) override {
    const Tensor& a = inputs[0];
    const Tensor& b = inputs[1];
    switch (kind) {
      case BinKind::Add:
        return {reduce_to(gy, a.shape()), reduce_to(gy, b.shape())};
      case BinKind::Sub:
        return {reduce_to(gy, a.shape()), neg(reduce_to(gy, b.shape()))};
      case BinKind::Mul:
        return {reduce_to(mul(gy, b), a.shape()),
                reduce_to(mul(gy, a), b.shape())};
      case BinKind::Div:
      default:
        return {reduce_to(div(gy, b), a.shape()),
                neg(reduce_to(div(mul(gy, a), mul(b, b)), b.shape()))};
    }
  }
};

Tensor bin_op(const Tensor& a, const Tensor& b, BinKind kind) {
  Tensor y;
  if (a.shape() == b.shape()) {
    y = make_tensor(a.shape());
    const i64 n = y.numel();
    const auto& t = k::active();
    switch (kind) {
      case BinKind::Add: t.vadd(a.data(), b.data(), y.data(), n); break;
      case BinKind::Sub: t.vsub(a.data(), b.data(), y.data(), n); break;
      case BinKind::Mul: t.vmul(a.data(), b.data(), y.data(), n); break;
      case BinKind::Div: {
        const double* pa = a.data();
        const double* pb = b.data();
        double* py = y.data();
        for (i64 i = 0; i < n; ++i) py[i] = pa[i] / pb[i];
        break;
      }
    }
  } else {
    y = make_tensor(bc_shape(a.shape(), b.shape()));
    switch (kind) {
      case BinKind::Add:
        bc_apply(a, b, y, [](double x, double z) { return x + z; });
        break;
      case BinKind::Sub:
        bc_apply(a, b, y, [](double x, double z) { return x - z; });
        break;
      case BinKind::Mul:
        bc_apply(a, b, y, [](double x, double z) { return x * z; });
        break;
      case BinKind::Div:
        bc_apply(a, b, y, [](double x, double z) { return x / z; });
        break;
    }
  }
  auto node = std::make_shared<BinNode>(kind);
  node->inputs = {a, b};
  record(node, y);
  return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return bin_op(a, b, BinKind::Add); }
Tensor sub(const Tensor& a, const Tensor& b) { return bin_op(a, b, BinKind::Sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return bin_op(a, b, BinKind::Mul); }
Tensor div(const Tensor& a, const Tensor& b) { return bin_op(a, b, BinKind::Div); }

namespace {

struct AddScalarNode final : Node {
  const char* name() const override { return "add_scalar"; }
  std::vector<Tensor> backward(const Tensor& gy) override { return {gy}; }
};

struct ScaleNode final : Node {
  double s;
  explicit ScaleNode(double v) : s(v) {}
  const char* name() const override { return "scale"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {scale(gy, s)};
  }
};

}  // namespace

Tensor add_scalar(const Tensor& x, double s) {
  Tensor y = make_tensor(x.shape());
  const double* px = x.data();
  double* py = y.data();
  const i64 n = x.numel();
  for (i64 i = 0; i < n; ++i) py[i] = px[i] + s;
  auto node = std::make_shared<AddScalarNode>();
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor scale(const Tensor& x, double s) {
  Tensor y = make_tensor(x.shape());
  k::active().vscale(x.data(), s, y.data(), x.numel());
  auto node = std::make_shared<ScaleNode>(s);
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

namespace {

// Unary elementwise node whose derivative only needs the input and/or the
// saved output; the backward builder runs under whatever grad mode the
// engine set, so higher-order terms are recorded automatically.
struct UnaryNode final : Node {
  const char* op_name;
  // backward(gy, x, y) -> grad x
  std::function<Tensor(const Tensor&, const Tensor&, const Tensor&)> bwd;
  UnaryNode(const char* n,
            std::function<Tensor(const Tensor&, const Tensor&, const Tensor&)>
                b)
      : op_name(n), bwd(std::move(b)) {}
  const char* name() const override { return op_name; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {bwd(gy, inputs[0], output())};
  }
};

template <class F>
Tensor unary_op(
    const Tensor& x, const char* name, F&& f,
    std::function<Tensor(const Tensor&, const Tensor&, const Tensor&)> bwd) {
  Tensor y = make_tensor(x.shape());
  const double* px = x.data();
  double* py = y.data();
  const i64 n = x.numel();
  for (i64 i = 0; i < n; ++i) py[i] = f(px[i]);
  auto node = std::make_shared<UnaryNode>(name, std::move(bwd));
  node->inputs = {x};
  record(node, y);
  return y;
}

// constant (non-differentiable) elementwise transform of x
template <class F>
Tensor const_map(const Tensor& x, F&& f) {
  Tensor y = make_tensor(x.shape());
  const double* px = x.data();
  double* py = y.data();
  const i64 n = x.numel();
  for (i64 i = 0; i < n; ++i) py[i] = f(px[i]);
  return y;
}

}  // namespace

Tensor exp_(const Tensor& x) {
  return unary_op(
      x, "exp", [](double v) { return std::exp(v); },
      [](const Tensor& gy, const Tensor&, const Tensor& y) {
        return mul(gy, y);
      });
}

Tensor log_(const Tensor& x) {
  return unary_op(
      x, "log", [](double v) { return std::log(v); },
      [](const Tensor& gy, const Tensor& xin, const Tensor&) {
        return div(gy, xin);
      });
}

Tensor sqrt_(const Tensor& x) {
  return unary_op(
      x, "sqrt", [](double v) { return std::sqrt(v); },
      [](const Tensor& gy, const Tensor&, const Tensor& y) {
        return div(scale(gy, 0.5), y);
      });
}

Tensor square(const Tensor& x) { return mul(x, x); }

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, "sigmoid",
      [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                        : std::exp(v) / (1.0 + std::exp(v));
      },
      [](const Tensor& gy, const Tensor&, const Tensor& y) {
        return mul(gy, mul(y, add_scalar(neg(y), 1.0)));
      });
}

Tensor softplus(const Tensor& x) {
  return unary_op(
      x, "softplus",
      [](double v) {
        // log(1+e^v) without overflow; exact linear tail for large v
        if (v > 36.0) return v;
        if (v < -36.0) return std::exp(v);
        return std::log1p(std::exp(v));
      },
      [](const Tensor& gy, const Tensor& xin, const Tensor&) {
        return mul(gy, sigmoid(xin));
      });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor y = make_tensor(x.shape());
  k::active().leaky_relu(x.data(), slope, y.data(), x.numel());
  auto node = std::make_shared<UnaryNode>(
      "leaky_relu",
      [slope](const Tensor& gy, const Tensor& xin, const Tensor&) {
        // derivative is piecewise constant; the mask is data, not graph
        Tensor m = make_tensor(xin.shape());
        k::active().leaky_mask(xin.data(), slope, m.data(), xin.numel());
        return mul(gy, m);
      });
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor clamp_min(const Tensor& x, double c) {
  return unary_op(
      x, "clamp_min", [c](double v) { return v < c ? c : v; },
      [c](const Tensor& gy, const Tensor& xin, const Tensor&) {
        Tensor m = const_map(xin, [c](double v) { return v > c ? 1.0 : 0.0; });
        return mul(gy, m);
      });
}

namespace {

struct SumAllNode final : Node {
  const char* name() const override { return "sum"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {broadcast_to(gy, inputs[0].shape())};
  }
};

struct SumDimsNode final : Node {
  std::vector<int> dims;
  Shape keep_shape;  // input shape with reduced dims set to 1
  const char* name() const override { return "sum_dims"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {broadcast_to(reshape(gy, keep_shape), inputs[0].shape())};
  }
};

}  // namespace

Tensor sum(const Tensor& x) {
  Tensor y = make_tensor({});
  y.data()[0] = k::active().vsum(x.data(), x.numel());
  auto node = std::make_shared<SumAllNode>();
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor sum(const Tensor& x, const std::vector<int>& dims, bool keepdims) {
  const Shape& xs = x.shape();
  std::vector<char> red(xs.size(), 0);
  for (int d : dims) {
    if (d < 0 || d >= static_cast<int>(xs.size())) fail("sum: bad dim");
    red[static_cast<size_t>(d)] = 1;
  }
  Shape keep(xs);
  Shape out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (red[i]) keep[i] = 1;
    else out.push_back(xs[i]);
  }

  Tensor acc = make_tensor(keep);
  std::fill_n(acc.data(), acc.numel(), 0.0);
  // walk the input once, bumping an output offset with 0 stride on reduced
  // dims; deterministic accumulation order (input linear order)
  const auto ost = bc_strides(keep, xs);
  const size_t r = xs.size();
  std::vector<i64> idx(r, 0);
  const double* px = x.data();
  double* pa = acc.data();
  i64 off = 0;
  const i64 n = x.numel();
  for (i64 lin = 0; lin < n; ++lin) {
    pa[off] += px[lin];
    for (size_t d = r; d-- > 0;) {
      idx[d]++;
      off += ost[d];
      if (idx[d] < xs[d]) break;
      off -= ost[d] * xs[d];
      idx[d] = 0;
    }
  }

  Tensor y = acc;
  if (!keepdims) {
    // reuse the buffer under the squeezed shape; acc has no graph yet so
    // this is not a recorded reshape
    auto impl = std::make_shared<TensorImpl>();
    impl->buf = acc.impl()->buf;
    impl->shape = out;
    y = Tensor(std::move(impl));
  }
  auto node = std::make_shared<SumDimsNode>();
  node->dims = dims;
  node->keep_shape = keep;
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor mean(const Tensor& x, const std::vector<int>& dims, bool keepdims) {
  i64 cnt = 1;
  for (int d : dims) cnt *= x.shape()[static_cast<size_t>(d)];
  return scale(sum(x, dims, keepdims), 1.0 / static_cast<double>(cnt));
}

namespace {

struct CumNode final : Node {
  bool reverse;
  explicit CumNode(bool rev) : reverse(rev) {}
  const char* name() const override {
    return reverse ? "sumrev_excl" : "cumsum_excl";
  }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {reverse ? cumsum_excl(gy) : sumrev_excl(gy)};
  }
};

Tensor cum_op(const Tensor& x, bool reverse) {
  if (x.ndim() < 1) fail("cumsum: needs at least 1 dim");
  const i64 cols = x.shape().back();
  const i64 rows = x.numel() / cols;
  Tensor y = make_tensor(x.shape());
  const double* px = x.data();
  double* py = y.data();
  for (i64 r = 0; r < rows; ++r) {
    const double* xr = px + r * cols;
    double* yr = py + r * cols;
    double acc = 0.0;
    if (!reverse) {
      for (i64 j = 0; j < cols; ++j) {
        yr[j] = acc;
        acc += xr[j];
      }
    } else {
      for (i64 j = cols; j-- > 0;) {
        yr[j] = acc;
        acc += xr[j];
      }
    }
  }
  auto node = std::make_shared<CumNode>(reverse);
  node->inputs = {x};
  record(node, y);
  return y;
}

}  // namespace

Tensor cumsum_excl(const Tensor& x) { return cum_op(x, false); }
Tensor sumrev_excl(const Tensor& x) { return cum_op(x, true); }

namespace {

struct ReshapeNode final : Node {
  const char* name() const override { return "reshape"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {reshape(gy, inputs[0].shape())};
  }
};

}  // namespace

Tensor reshape(const Tensor& x, const Shape& s) {
  if (shape_numel(s) != x.numel())
    fail("reshape " + shape_str(x.shape()) + " -> " + shape_str(s));
  auto impl = std::make_shared<TensorImpl>();
  impl->buf = x.impl()->buf;  // view
  impl->shape = s;
  Tensor y(std::move(impl));
  auto node = std::make_shared<ReshapeNode>();
  node->inputs = {x};
  record(node, y);
  return y;
}

namespace {

struct BroadcastNode final : Node {
  const char* name() const override { return "broadcast_to"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {reduce_to(gy, inputs[0].shape())};
  }
};

}  // namespace

Tensor broadcast_to(const Tensor& x, const Shape& s) {
  if (x.shape() == s) return x;
  // validate via bc_shape; the result must equal s exactly
  if (bc_shape(x.shape(), s) != s)
    fail("broadcast_to " + shape_str(x.shape()) + " -> " + shape_str(s));
  Tensor y = make_tensor(s);
  const auto st = bc_strides(x.shape(), s);
  const size_t r = s.size();
  std::vector<i64> idx(r, 0);
  const double* px = x.data();
  double* py = y.data();
  const i64 n = y.numel();
  i64 off = 0;
  for (i64 lin = 0; lin < n; ++lin) {
    py[lin] = px[off];
    for (size_t d = r; d-- > 0;) {
      idx[d]++;
      off += st[d];
      if (idx[d] < s[d]) break;
      off -= st[d] * s[d];
      idx[d] = 0;
    }
  }
  auto node = std::make_shared<BroadcastNode>();
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor reduce_to(const Tensor& x, const Shape& s) {
  if (x.shape() == s) return x;
  const size_t r = x.shape().size(), rt = s.size();
  if (rt > r) fail("reduce_to rank grows");
  std::vector<int> dims;
  for (size_t i = 0; i < r; ++i) {
    const i64 target = i < r - rt ? 1 : s[i - (r - rt)];
    if (x.shape()[i] != target) {
      if (target != 1)
        fail("reduce_to " + shape_str(x.shape()) + " -> " + shape_str(s));
      dims.push_back(static_cast<int>(i));
    }
  }
  Tensor y = dims.empty() ? x : sum(x, dims, true);
  if (y.shape() != s) y = reshape(y, s);
  return y;
}

namespace {

struct PermuteNode final : Node {
  std::vector<int> dims;
  const char* name() const override { return "permute"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    std::vector<int> inv(dims.size());
    for (size_t i = 0; i < dims.size(); ++i)
      inv[static_cast<size_t>(dims[i])] = static_cast<int>(i);
    return {permute(gy, inv)};
  }
};

}  // namespace

Tensor permute(const Tensor& x, const std::vector<int>& dims) {
  const size_t r = x.shape().size();
  if (dims.size() != r) fail("permute rank mismatch");
  Shape os(r);
  for (size_t i = 0; i < r; ++i) os[i] = x.shape()[static_cast<size_t>(dims[i])];
  Tensor y = make_tensor(os);

  // input strides permuted into output order
  std::vector<i64> xst(r);
  i64 acc = 1;
  for (size_t i = r; i-- > 0;) {
    xst[i] = acc;
    acc *= x.shape()[i];
  }
  std::vector<i64> st(r);
  for (size_t i = 0; i < r; ++i) st[i] = xst[static_cast<size_t>(dims[i])];

  std::vector<i64> idx(r, 0);
  const double* px = x.data();
  double* py = y.data();
  const i64 n = y.numel();
  i64 off = 0;
  for (i64 lin = 0; lin < n; ++lin) {
    py[lin] = px[off];
    for (size_t d = r; d-- > 0;) {
      idx[d]++;
      off += st[d];
      if (idx[d] < os[d]) break;
      off -= st[d] * os[d];
      idx[d] = 0;
    }
  }
  auto node = std::make_shared<PermuteNode>();
  node->dims = dims;
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor transpose2d(const Tensor& x) {
  if (x.ndim() != 2) fail("transpose2d needs rank 2");
  return permute(x, {1, 0});
}

namespace {

struct SliceNode final : Node {
  int dim;
  i64 start, len;
  const char* name() const override { return "slice"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    // embed gy into a zero tensor via cat, reusing recorded ops
    const Shape& xs = inputs[0].shape();
    std::vector<Tensor> parts;
    if (start > 0) {
      Shape s = xs;
      s[static_cast<size_t>(dim)] = start;
      parts.push_back(Tensor::zeros(s));
    }
    parts.push_back(gy);
    const i64 after = xs[static_cast<size_t>(dim)] - start - len;
    if (after > 0) {
      Shape s = xs;
      s[static_cast<size_t>(dim)] = after;
      parts.push_back(Tensor::zeros(s));
    }
    return {cat(parts, dim)};
  }
};

struct CatNode final : Node {
  int dim;
  const char* name() const override { return "cat"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    std::vector<Tensor> gs;
    i64 off = 0;
    for (const Tensor& in : inputs) {
      const i64 len = in.shape()[static_cast<size_t>(dim)];
      gs.push_back(slice(gy, dim, off, len));
      off += len;
    }
    return gs;
  }
};

// rows of contiguous memory: product of dims before `dim` selects a row
// group; copy length = extent at dim * inner
void split_extents(const Shape& s, int dim, i64* outer, i64* inner) {
  i64 o = 1, in = 1;
  for (int i = 0; i < dim; ++i) o *= s[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(dim) + 1; i < s.size(); ++i)
    in *= s[i];
  *outer = o;
  *inner = in;
}

}  // namespace

Tensor slice(const Tensor& x, int dim, i64 start, i64 len) {
  const Shape& xs = x.shape();
  if (dim < 0 || dim >= x.ndim()) fail("slice: bad dim");
  const i64 extent = xs[static_cast<size_t>(dim)];
  if (start < 0 || len < 0 || start + len > extent) fail("slice: bad range");
  Shape os = xs;
  os[static_cast<size_t>(dim)] = len;
  Tensor y = make_tensor(os);
  i64 outer, inner;
  split_extents(xs, dim, &outer, &inner);
  const double* px = x.data();
  double* py = y.data();
  for (i64 o = 0; o < outer; ++o)
    std::memcpy(py + o * len * inner, px + (o * extent + start) * inner,
                sizeof(double) * static_cast<size_t>(len * inner));
  auto node = std::make_shared<SliceNode>();
  node->dim = dim;
  node->start = start;
  node->len = len;
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor cat(const std::vector<Tensor>& xs, int dim) {
  if (xs.empty()) fail("cat: empty input");
  const Shape& ref = xs[0].shape();
  if (dim < 0 || dim >= static_cast<int>(ref.size())) fail("cat: bad dim");
  i64 total = 0;
  for (const Tensor& t : xs) {
    if (t.ndim() != static_cast<int>(ref.size())) fail("cat: rank mismatch");
    for (size_t i = 0; i < ref.size(); ++i)
      if (static_cast<int>(i) != dim && t.shape()[i] != ref[i])
        fail("cat: shape mismatch " + shape_str(t.shape()) + " vs " +
             shape_str(ref));
    total += t.shape()[static_cast<size_t>(dim)];
  }
  Shape os = ref;
  os[static_cast<size_t>(dim)] = total;
  Tensor y = make_tensor(os);
  i64 outer, inner;
  split_extents(os, dim, &outer, &inner);
  double* py = y.data();
  i64 off = 0;
  for (const Tensor& t : xs) {
    const i64 len = t.shape()[static_cast<size_t>(dim)];
    const double* px = t.data();
    for (i64 o = 0; o < outer; ++o)
      std::memcpy(py + (o * total + off) * inner, px + o * len * inner,
                  sizeof(double) * static_cast<size_t>(len * inner));
    off += len;
  }
  auto node = std::make_shared<CatNode>();
  node->dim = dim;
  node->inputs = xs;
  record(node, y);
  return y;
}

namespace {

struct MatMulNode final : Node {
  const char* name() const override { return "matmul"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    const Tensor& a = inputs[0];
    const Tensor& b = inputs[1];
    return {matmul(gy, transpose2d(b)), matmul(transpose2d(a), gy)};
  }
};

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    fail("matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor y = make_tensor({a.dim(0), b.dim(1)});
  k::active().matmul(a.data(), b.data(), y.data(), a.dim(0), a.dim(1),
                     b.dim(1), false);
  auto node = std::make_shared<MatMulNode>();
  node->inputs = {a, b};
  record(node, y);
  return y;
}

namespace {

// zero-pad H and W of an NCHW buffer
Tensor pad_hw(const Tensor& x, i64 p) {
  if (p == 0) return x;
  const i64 n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y = Tensor::zeros({n, c, h + 2 * p, w + 2 * p});
  const i64 wp = w + 2 * p;
  const double* px = x.data();
  double* py = y.data();
  for (i64 i = 0; i < n * c; ++i) {
    const double* src = px + i * h * w;
    double* dst = py + i * (h + 2 * p) * wp + p * wp + p;
    for (i64 r = 0; r < h; ++r)
      std::memcpy(dst + r * wp, src + r * w, sizeof(double) * w);
  }
  return y;
}

// w[co,ci,a,b] -> w'[ci,co,k-1-a,k-1-b]
Tensor flip_transpose_w(const Tensor& w) {
  const i64 co = w.dim(0), ci = w.dim(1), kk = w.dim(2);
  Tensor y = make_tensor({ci, co, kk, kk});
  const double* pw = w.data();
  double* py = y.data();
  for (i64 o = 0; o < co; ++o)
    for (i64 i = 0; i < ci; ++i)
      for (i64 a = 0; a < kk; ++a)
        for (i64 b = 0; b < kk; ++b)
          py[((i * co + o) * kk + (kk - 1 - a)) * kk + (kk - 1 - b)] =
              pw[((o * ci + i) * kk + a) * kk + b];
  return y;
}

struct ConvNode final : Node {
  int pad;
  const char* name() const override { return "conv2d"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {conv2d_grad_input(gy, inputs[1], pad),
            conv2d_grad_weight(inputs[0], gy, pad)};
  }
};

struct ConvGradInputNode final : Node {
  int pad;
  const char* name() const override { return "conv2d_grad_input"; }
  std::vector<Tensor> backward(const Tensor& u) override {
    // inputs: (gy, w); forward output is x-shaped
    return {conv2d(u, inputs[1], pad), conv2d_grad_weight(u, inputs[0], pad)};
  }
};

struct ConvGradWeightNode final : Node {
  int pad;
  const char* name() const override { return "conv2d_grad_weight"; }
  std::vector<Tensor> backward(const Tensor& u) override {
    // inputs: (x, gy); forward output is w-shaped
    return {conv2d_grad_input(inputs[1], u, pad), conv2d(inputs[0], u, pad)};
  }
};

void check_conv_args(const Tensor& x, const Tensor& w, int pad) {
  if (x.ndim() != 4 || w.ndim() != 4) fail("conv2d: rank");
  if (w.dim(2) != w.dim(3)) fail("conv2d: kernel must be square");
  if (x.dim(1) != w.dim(1))
    fail("conv2d: channel mismatch " + shape_str(x.shape()) + " vs " +
         shape_str(w.shape()));
  if (pad < 0 || pad > w.dim(2) - 1) fail("conv2d: bad pad");
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int pad) {
  check_conv_args(x, w, pad);
  const Tensor xp = pad_hw(x.detach(), pad);
  const k::ConvShape cs{x.dim(0), x.dim(1), xp.dim(2), xp.dim(3),
                        w.dim(0), w.dim(2)};
  if (cs.ho() <= 0 || cs.wo() <= 0) fail("conv2d: output would be empty");
  Tensor y = make_tensor({cs.n, cs.co, cs.ho(), cs.wo()});
  k::active().corr_valid(xp.data(), w.data(), y.data(), cs);
  auto node = std::make_shared<ConvNode>();
  node->pad = pad;
  node->inputs = {x, w};
  record(node, y);
  return y;
}

Tensor conv2d_grad_input(const Tensor& gy, const Tensor& w, int pad) {
  if (gy.ndim() != 4 || w.ndim() != 4) fail("conv2d_grad_input: rank");
  if (gy.dim(1) != w.dim(0)) fail("conv2d_grad_input: channel mismatch");
  const i64 kk = w.dim(2);
  // full correlation with the flipped, channel-transposed weights
  const Tensor gp = pad_hw(gy.detach(), kk - 1 - pad);
  const Tensor wf = flip_transpose_w(w.detach());
  const k::ConvShape cs{gy.dim(0), gy.dim(1), gp.dim(2), gp.dim(3),
                        w.dim(1), kk};
  Tensor y = make_tensor({cs.n, cs.co, cs.ho(), cs.wo()});
  k::active().corr_valid(gp.data(), wf.data(), y.data(), cs);
  auto node = std::make_shared<ConvGradInputNode>();
  node->pad = pad;
  node->inputs = {gy, w};
  record(node, y);
  return y;
}

Tensor conv2d_grad_weight(const Tensor& x, const Tensor& gy, int pad) {
  if (x.ndim() != 4 || gy.ndim() != 4) fail("conv2d_grad_weight: rank");
  if (x.dim(0) != gy.dim(0)) fail("conv2d_grad_weight: batch mismatch");
  const i64 kk = x.dim(2) + 2 * pad - gy.dim(2) + 1;
  if (kk <= 0 || x.dim(3) + 2 * pad - gy.dim(3) + 1 != kk)
    fail("conv2d_grad_weight: inconsistent shapes");
  const Tensor xp = pad_hw(x.detach(), pad);
  const k::ConvShape cs{x.dim(0), x.dim(1), xp.dim(2), xp.dim(3),
                        gy.dim(1), kk};
  Tensor y = make_tensor({gy.dim(1), x.dim(1), kk, kk});
  k::active().corr_gradw(xp.data(), gy.data(), y.data(), cs);
  auto node = std::make_shared<ConvGradWeightNode>();
  node->pad = pad;
  node->inputs = {x, gy};
  record(node, y);
  return y;
}

namespace {

struct AvgPoolNode final : Node {
  const char* name() const override { return "avg_pool2"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {scale(upsample2_nearest(gy), 0.25)};
  }
};

struct UpsampleNode final : Node {
  const char* name() const override { return "upsample2_nearest"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {scale(avg_pool2(gy), 4.0)};
  }
};

}  // namespace

Tensor avg_pool2(const Tensor& x) {
  if (x.ndim() != 4 || x.dim(2) % 2 || x.dim(3) % 2)
    fail("avg_pool2 needs even NCHW, got " + shape_str(x.shape()));
  const i64 nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y = make_tensor({x.dim(0), x.dim(1), h / 2, w / 2});
  const double* px = x.data();
  double* py = y.data();
  for (i64 i = 0; i < nc; ++i) {
    const double* xc = px + i * h * w;
    double* yc = py + i * (h / 2) * (w / 2);
    for (i64 r = 0; r < h / 2; ++r)
      for (i64 c = 0; c < w / 2; ++c) {
        const double* p0 = xc + (2 * r) * w + 2 * c;
        yc[r * (w / 2) + c] = 0.25 * (p0[0] + p0[1] + p0[w] + p0[w + 1]);
      }
  }
  auto node = std::make_shared<AvgPoolNode>();
  node->inputs = {x};
  record(node, y);
  return y;
}

Tensor upsample2_nearest(const Tensor& x) {
  if (x.ndim() != 4) fail("upsample2_nearest needs NCHW");
  const i64 nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y = make_tensor({x.dim(0), x.dim(1), h * 2, w * 2});
  const double* px = x.data();
  double* py = y.data();
  for (i64 i = 0; i < nc; ++i) {
    const double* xc = px + i * h * w;
    double* yc = py + i * 4 * h * w;
    for (i64 r = 0; r < h; ++r)
      for (i64 c = 0; c < w; ++c) {
        const double v = xc[r * w + c];
        double* d = yc + (2 * r) * (2 * w) + 2 * c;
        d[0] = v;
        d[1] = v;
        d[2 * w] = v;
        d[2 * w + 1] = v;
      }
  }
  auto node = std::make_shared<UpsampleNode>();
  node->inputs = {x};
  record(node, y);
  return y;
}

namespace {

void check_planes(const Tensor& planes) {
  if (planes.ndim() != 5 || planes.dim(0) != 3 || planes.dim(2) != planes.dim(3))
    fail("trigrid planes must be [3,d,r,r,c], got " +
         shape_str(planes.shape()));
}

struct TriGatherNode final : Node {
  const char* name() const override { return "trigrid_gather"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    const Tensor& planes = inputs[0];
    return {trigrid_scatter(gy, inputs[1], planes.dim(1), planes.dim(2)),
            Tensor()};
  }
};

struct TriScatterNode final : Node {
  const char* name() const override { return "trigrid_scatter"; }
  std::vector<Tensor> backward(const Tensor& gy) override {
    return {trigrid_gather(gy, inputs[1]), Tensor()};
  }
};

}  // namespace

Tensor trigrid_gather(const Tensor& planes, const Tensor& pts) {
  check_planes(planes);
  if (pts.ndim() != 2 || pts.dim(1) != 3) fail("trigrid: pts must be [n,3]");
  const i64 n = pts.dim(0), c = planes.dim(4);
  Tensor y = make_tensor({n, c});
  Tensor inside = make_tensor({n});
  k::active().trigrid_gather(planes.data(), planes.dim(1), planes.dim(2), c,
                             pts.data(), n, y.data(), inside.data());
  auto node = std::make_shared<TriGatherNode>();
  node->inputs = {planes, pts};
  record(node, y);
  return y;
}

Tensor trigrid_scatter(const Tensor& gfeats, const Tensor& pts, i64 d, i64 r) {
  if (gfeats.ndim() != 2 || pts.ndim() != 2 || pts.dim(1) != 3 ||
      gfeats.dim(0) != pts.dim(0))
    fail("trigrid_scatter: bad shapes");
  const i64 c = gfeats.dim(1);
  Tensor y = Tensor::zeros({3, d, r, r, c});
  k::active().trigrid_scatter(gfeats.data(), d, r, c, pts.data(), pts.dim(0),
                              y.data());
  auto node = std::make_shared<TriScatterNode>();
  node->inputs = {gfeats, pts};
  record(node, y);
  return y;
}

Tensor trigrid_inside(const Tensor& pts) {
  if (pts.ndim() != 2 || pts.dim(1) != 3) fail("trigrid_inside: pts [n,3]");
  const i64 n = pts.dim(0);
  Tensor y = make_tensor({n});
  const double* p = pts.data();
  double* py = y.data();
  for (i64 i = 0; i < n; ++i) {
    const double* q = p + i * 3;
    py[i] = (q[0] >= -1.0 && q[0] <= 1.0 && q[1] >= -1.0 && q[1] <= 1.0 &&
             q[2] >= -1.0 && q[2] <= 1.0)
                ? 1.0
                : 0.0;
  }
  return y;
}

}  // namespace tg::ops
