#include "stoic/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stoic/errors.hpp"

namespace stoic::ad {

namespace kernel {

void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ai[p];
      const double* __restrict bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += s * bp[j];
    }
  }
}

void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* __restrict bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ai[p];
      double* __restrict cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += s * bi[j];
    }
  }
}

Tensor transposed(const Tensor& x) {
  const std::size_t r = x.rows(), c = x.cols();
  Tensor t = Tensor::matrix(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t(j, i) = x(i, j);
  return t;
}

}  // namespace kernel

namespace {

Tape& tape_of(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw std::logic_error("operands recorded on different tapes");
  }
  return *a.tape();
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.value().size() != b.value().size()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.value().shape_string() +
                     " vs " + b.value().shape_string());
  }
}

Tensor like(const Tensor& x) { return Tensor(x.shape(), 0.0); }

template <class F, class D>
Var unary(std::string_view op, Var x, F f, D df) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  Tensor y = like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  const std::size_t xid = x.id();
  return t.record(op, std::move(y), {xid}, [df, xid](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& xv = t.value(xid);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ " + a.value().shape_string() + " * " +
                     b.value().shape_string());
  }
  Tensor c = Tensor::matrix(m, n);
  kernel::gemm_nn(a.value().data(), b.value().data(), c.data(), m, k, n);
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("matmul", std::move(c), {ai, bi}, [ai, bi, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) {
      const Tensor bt = kernel::transposed(t.value(bi));
      kernel::gemm_nn(g.data(), bt.data(), t.grad_buffer(ai).data(), m, n, k);
    }
    if (t.requires_grad(bi)) {
      kernel::gemm_tn(t.value(ai).data(), g.data(), t.grad_buffer(bi).data(), m, k, n);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw ShapeError("matmul_nt: inner dimensions differ " + a.value().shape_string() +
                     " * " + b.value().shape_string() + "^T");
  }
  Tensor c = Tensor::matrix(m, n);
  const Tensor bt = kernel::transposed(b.value());
  kernel::gemm_nn(a.value().data(), bt.data(), c.data(), m, k, n);
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("matmul_nt", std::move(c), {ai, bi},
                  [ai, bi, m, k, n](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    if (t.requires_grad(ai)) {
                      kernel::gemm_nn(g.data(), t.value(bi).data(), t.grad_buffer(ai).data(), m,
                                      n, k);
                    }
                    if (t.requires_grad(bi)) {
                      kernel::gemm_tn(g.data(), t.value(ai).data(), t.grad_buffer(bi).data(), m,
                                      n, k);
                    }
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("add", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("add", std::move(y), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    for (auto id : {ai, bi}) {
      if (!t.requires_grad(id)) continue;
      Tensor& gx = t.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("sub", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("sub", std::move(y), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad_buffer(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("mul", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record("mul", std::move(y), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ai)) {
      const Tensor& bv = t.value(bi);
      Tensor& ga = t.grad_buffer(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      const Tensor& av = t.value(ai);
      Tensor& gb = t.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_row(Var x, Var row) {
  Tape& t = tape_of(x, row);
  const std::size_t r = x.rows(), c = x.cols();
  if (row.value().size() != c) {
    throw ShapeError("add_row: row of size " + std::to_string(row.value().size()) +
                     " against " + std::to_string(c) + " columns");
  }
  Tensor y = x.value();
  const double* rv = row.value().data();
  for (std::size_t i = 0; i < r; ++i) {
    double* yi = y.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) yi[j] += rv[j];
  }
  const std::size_t xi = x.id(), ri = row.id();
  return t.record("add_row", std::move(y), {xi, ri}, [xi, ri, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(xi)) {
      Tensor& gx = t.grad_buffer(xi);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(ri)) {
      Tensor& gr = t.grad_buffer(ri);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gr[j] += g[i * c + j];
    }
  });
}

Var mul_col(Var x, Var col) {
  Tape& t = tape_of(x, col);
  const std::size_t r = x.rows(), c = x.cols();
  if (col.value().size() != r) {
    throw ShapeError("mul_col: column of size " + std::to_string(col.value().size()) +
                     " against " + std::to_string(r) + " rows");
  }
  Tensor y = x.value();
  const double* cv = col.value().data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[i * c + j] *= cv[i];
  const std::size_t xi = x.id(), ci = col.id();
  return t.record("mul_col", std::move(y), {xi, ci}, [xi, ci, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(xi)) {
      const Tensor& cv = t.value(ci);
      Tensor& gx = t.grad_buffer(xi);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * cv[i];
    }
    if (t.requires_grad(ci)) {
      const Tensor& xv = t.value(xi);
      Tensor& gc = t.grad_buffer(ci);
      for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += g[i * c + j] * xv[i * c + j];
        gc[i] += s;
      }
    }
  });
}

Var scale(Var x, double c) {
  return unary("scale", x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Var add_scalar(Var x, double c) {
  return unary("add_scalar", x, [c](double v) { return v + c; },
               [](double, double) { return 1.0; });
}

Var neg(Var x) {
  return unary("neg", x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Var tanh(Var x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var x) {
  return unary("sigmoid", x, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var x) {
  return unary("relu", x, [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var softplus(Var x) {
  return unary("softplus", x, softplus_value, [](double v, double) { return sigmoid_value(v); });
}

Var log_sigmoid(Var x) {
  return unary("log_sigmoid", x, [](double v) { return -softplus_value(-v); },
               [](double v, double) { return sigmoid_value(-v); });
}

Var exp(Var x) {
  return unary("exp", x, [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

Var log(Var x) {
  return unary("log", x, [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Var square(Var x) {
  return unary("square", x, [](double v) { return v * v; },
               [](double v, double) { return 2.0 * v; });
}

Var clamp(Var x, double lo, double hi) {
  return unary("clamp", x, [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
               [lo, hi](double v, double) { return (v < lo || v > hi) ? 0.0 : 1.0; });
}

Var sum(Var x) {
  Tape& t = *x.tape();
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t xi = x.id();
  return t.record("sum", Tensor::scalar(s), {xi}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0];
    Tensor& gx = t.grad_buffer(xi);
    for (auto& v : gx.values()) v += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var row_sum(Var x) {
  Tape& t = *x.tape();
  const std::size_t r = x.rows(), c = x.cols();
  Tensor y = Tensor::matrix(r, 1);
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += xv[i * c + j];
    y[i] = s;
  }
  const std::size_t xi = x.id();
  return t.record("row_sum", std::move(y), {xi}, [xi, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i];
  });
}

Var segment_mean_rows(Var x, std::size_t block) {
  Tape& t = *x.tape();
  const std::size_t r = x.rows(), c = x.cols();
  if (block == 0 || r % block != 0) {
    throw ShapeError("segment_mean_rows: " + std::to_string(r) + " rows not divisible by " +
                     std::to_string(block));
  }
  const std::size_t segs = r / block;
  const double inv = 1.0 / static_cast<double>(block);
  Tensor y = Tensor::matrix(segs, c);
  const Tensor& xv = x.value();
  for (std::size_t s = 0; s < segs; ++s) {
    for (std::size_t i = 0; i < block; ++i)
      for (std::size_t j = 0; j < c; ++j) y(s, j) += xv[(s * block + i) * c + j];
    for (std::size_t j = 0; j < c; ++j) y(s, j) *= inv;
  }
  const std::size_t xi = x.id();
  return t.record("segment_mean_rows", std::move(y), {xi},
                  [xi, segs, block, c, inv](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    Tensor& gx = t.grad_buffer(xi);
                    for (std::size_t s = 0; s < segs; ++s)
                      for (std::size_t i = 0; i < block; ++i)
                        for (std::size_t j = 0; j < c; ++j)
                          gx[(s * block + i) * c + j] += g[s * c + j] * inv;
                  });
}

Var transpose(Var x) {
  Tape& t = *x.tape();
  const std::size_t xi = x.id();
  return t.record("transpose", kernel::transposed(x.value()), {xi},
                  [xi](Tape& t, std::size_t self) {
                    const Tensor gt = kernel::transposed(t.grad_buffer(self));
                    Tensor& gx = t.grad_buffer(xi);
                    for (std::size_t i = 0; i < gt.size(); ++i) gx[i] += gt[i];
                  });
}

Var reshape(Var x, std::vector<std::size_t> shape) {
  Tape& t = *x.tape();
  const std::size_t xi = x.id();
  Tensor y = x.value().reshaped(std::move(shape));
  return t.record("reshape", std::move(y), {xi}, [xi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = *parts.front().tape();
  const std::size_t r = parts.front().rows();
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::logic_error("concat_cols: operands on different tapes");
    if (p.rows() != r) throw ShapeError("concat_cols: row count mismatch");
    ids.push_back(p.id());
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor y = Tensor::matrix(r, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const std::size_t w = pv.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) y(i, off + j) = pv[i * w + j];
    off += w;
  }
  return t.record("concat_cols", std::move(y), ids,
                  [ids, widths, r, total](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      const std::size_t w = widths[k];
                      if (t.requires_grad(ids[k])) {
                        Tensor& gp = t.grad_buffer(ids[k]);
                        for (std::size_t i = 0; i < r; ++i)
                          for (std::size_t j = 0; j < w; ++j)
                            gp[i * w + j] += g[i * total + off + j];
                      }
                      off += w;
                    }
                  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  Tape& t = *x.tape();
  const std::size_t r = x.rows(), c = x.cols();
  if (begin + count > c) throw ShapeError("slice_cols: range exceeds columns");
  Tensor y = Tensor::matrix(r, count);
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) y(i, j) = xv[i * c + begin + j];
  const std::size_t xi = x.id();
  return t.record("slice_cols", std::move(y), {xi},
                  [xi, r, c, begin, count](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    Tensor& gx = t.grad_buffer(xi);
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < count; ++j)
                        gx[i * c + begin + j] += g[i * count + j];
                  });
}

Var gather_rows(Var x, std::vector<std::size_t> index) {
  Tape& t = *x.tape();
  const std::size_t r = x.rows(), c = x.cols();
  Tensor y = Tensor::matrix(index.size(), c);
  const Tensor& xv = x.value();
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= r) throw ShapeError("gather_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) y(k, j) = xv[index[k] * c + j];
  }
  const std::size_t xi = x.id();
  return t.record("gather_rows", std::move(y), {xi},
                  [xi, c, index = std::move(index)](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    Tensor& gx = t.grad_buffer(xi);
                    for (std::size_t k = 0; k < index.size(); ++k)
                      for (std::size_t j = 0; j < c; ++j) gx[index[k] * c + j] += g[k * c + j];
                  });
}

Var gather_elems(Var x, std::vector<long> index, std::vector<std::size_t> shape) {
  Tape& t = *x.tape();
  if (shape_product(shape) != index.size()) throw ShapeError("gather_elems: shape/index mismatch");
  const Tensor& xv = x.value();
  Tensor y(std::move(shape), 0.0);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0) continue;
    if (static_cast<std::size_t>(index[k]) >= xv.size()) {
      throw ShapeError("gather_elems: index out of range");
    }
    y[k] = xv[static_cast<std::size_t>(index[k])];
  }
  const std::size_t xi = x.id();
  return t.record("gather_elems", std::move(y), {xi},
                  [xi, index = std::move(index)](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    Tensor& gx = t.grad_buffer(xi);
                    for (std::size_t k = 0; k < index.size(); ++k)
                      if (index[k] >= 0) gx[static_cast<std::size_t>(index[k])] += g[k];
                  });
}

Var softmax_rows(Var x) {
  Tape& t = *x.tape();
  const std::size_t r = x.rows(), c = x.cols();
  Tensor y = x.value();
  for (std::size_t i = 0; i < r; ++i) {
    double* yi = y.data() + i * c;
    double mx = yi[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, yi[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      yi[j] = std::exp(yi[j] - mx);
      s += yi[j];
    }
    for (std::size_t j = 0; j < c; ++j) yi[j] /= s;
  }
  const std::size_t xi = x.id();
  return t.record("softmax_rows", std::move(y), {xi}, [xi, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad_buffer(xi);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * yv[i * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += yv[i * c + j] * (g[i * c + j] - dot);
    }
  });
}

Var block_matmul(Var a, Var h, std::size_t block) {
  Tape& t = tape_of(a, h);
  const std::size_t r = a.rows(), d = h.cols();
  if (block == 0 || a.cols() != block || r % block != 0 || h.rows() != r) {
    throw ShapeError("block_matmul: expected a[B*n x n] and h[B*n x d], got " +
                     a.value().shape_string() + " and " + h.value().shape_string());
  }
  Tensor y = Tensor::matrix(r, d);
  const Tensor& av = a.value();
  const Tensor& hv = h.value();
  for (std::size_t row = 0; row < r; ++row) {
    const std::size_t base = row - row % block;
    double* yr = y.data() + row * d;
    for (std::size_t j = 0; j < block; ++j) {
      const double w = av[row * block + j];
      const double* hj = hv.data() + (base + j) * d;
      for (std::size_t k = 0; k < d; ++k) yr[k] += w * hj[k];
    }
  }
  const std::size_t ai = a.id(), hi = h.id();
  return t.record("block_matmul", std::move(y), {ai, hi},
                  [ai, hi, r, d, block](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    const Tensor& av = t.value(ai);
                    const Tensor& hv = t.value(hi);
                    const bool need_a = t.requires_grad(ai), need_h = t.requires_grad(hi);
                    Tensor* ga = need_a ? &t.grad_buffer(ai) : nullptr;
                    Tensor* gh = need_h ? &t.grad_buffer(hi) : nullptr;
                    for (std::size_t row = 0; row < r; ++row) {
                      const std::size_t base = row - row % block;
                      const double* gr = g.data() + row * d;
                      for (std::size_t j = 0; j < block; ++j) {
                        if (need_a) {
                          const double* hj = hv.data() + (base + j) * d;
                          double s = 0.0;
                          for (std::size_t k = 0; k < d; ++k) s += gr[k] * hj[k];
                          (*ga)[row * block + j] += s;
                        }
                        if (need_h) {
                          const double w = av[row * block + j];
                          double* ghj = gh->data() + (base + j) * d;
                          for (std::size_t k = 0; k < d; ++k) ghj[k] += w * gr[k];
                        }
                      }
                    }
                  });
}

Var gcn_normalize(Var a, std::size_t block) {
  Tape& t = *a.tape();
  const std::size_t r = a.rows();
  if (block == 0 || a.cols() != block || r % block != 0) {
    throw ShapeError("gcn_normalize: expected [B*n x n], got " + a.value().shape_string());
  }
  const Tensor& av = a.value();
  for (std::size_t k = 0; k < av.size(); ++k) {
    if (av[k] < 0.0) {
      throw std::invalid_argument("gcn_normalize: negative adjacency entry " +
                                  std::to_string(av[k]));
    }
  }
  // s_i = (1 + sum_j a_ij)^-1/2
  std::vector<double> s(r);
  for (std::size_t row = 0; row < r; ++row) {
    double deg = 1.0;
    for (std::size_t j = 0; j < block; ++j) deg += av[row * block + j];
    s[row] = 1.0 / std::sqrt(deg);
  }
  Tensor y = Tensor::matrix(r, block);
  for (std::size_t row = 0; row < r; ++row) {
    const std::size_t base = row - row % block, i = row % block;
    for (std::size_t j = 0; j < block; ++j) {
      const double m = av[row * block + j] + (i == j ? 1.0 : 0.0);
      y[row * block + j] = m * s[row] * s[base + j];
    }
  }
  const std::size_t ai = a.id();
  return t.record("gcn_normalize", std::move(y), {ai},
                  [ai, r, block, s = std::move(s)](Tape& t, std::size_t self) {
                    const Tensor& g = t.grad_buffer(self);
                    const Tensor& av = t.value(ai);
                    Tensor& ga = t.grad_buffer(ai);
                    // dL/ds_row collects the row-factor and column-factor uses.
                    std::vector<double> ds(r, 0.0);
                    for (std::size_t row = 0; row < r; ++row) {
                      const std::size_t base = row - row % block, i = row % block;
                      for (std::size_t j = 0; j < block; ++j) {
                        const double m = av[row * block + j] + (i == j ? 1.0 : 0.0);
                        const double gm = g[row * block + j] * m;
                        ds[row] += gm * s[base + j];
                        ds[base + j] += gm * s[row];
                      }
                    }
                    for (std::size_t row = 0; row < r; ++row) {
                      const std::size_t base = row - row % block;
                      // ds/ddeg = -1/2 deg^-3/2 = -1/2 s^3
                      const double ddeg = -0.5 * s[row] * s[row] * s[row] * ds[row];
                      for (std::size_t j = 0; j < block; ++j) {
                        ga[row * block + j] += g[row * block + j] * s[row] * s[base + j] + ddeg;
                      }
                    }
                  });
}

Var straight_through(Var x, double threshold) {
  return unary("straight_through", x, [threshold](double v) { return v > threshold ? 1.0 : 0.0; },
               [](double, double) { return 1.0; });
}

Var stop_gradient(Var x) { return x.tape()->constant(x.value()); }

}  // namespace stoic::ad
