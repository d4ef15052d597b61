#include "igbeat/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "igbeat/errors.hpp"

namespace igbeat::ad {
namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw TapeError("operation on an empty value handle");
  return *a.tape();
}

Tape& common_tape(Var a, Var b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw TapeError("operands recorded on different tapes");
  return t;
}

std::size_t cols_of(const Shape& s) { return s.empty() ? 1 : s.back(); }

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) shape_mismatch(op, a.shape(), b.shape());
}

// y = f(x) elementwise; dy/dx = deriv(x, y).
template <class F, class D>
Var unary(Var a, F f, D deriv) {
  Tape& t = tape_of(a);
  auto x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return t.record(a.shape(), std::move(y), {a}, [a, deriv](Tape& tp, Var out) {
    auto gy = tp.grad_if_any(out);
    auto x = tp.value(a);
    auto y = tp.value(out);
    auto gx = tp.grad(a);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * deriv(x[i], y[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Taylor series of exprel and its derivative, used for |x| < 0.5:
//   f(x) = sum x^n / (n+1)!,  f'(x) = sum n x^(n-1) / (n+1)!.
void exprel_series(double x, double& f, double& df) {
  double fact = 1.0;  // (n+1)!
  double pw = 1.0;    // x^n
  f = 0.0;
  df = 0.0;
  double pw_prev = 0.0;  // x^(n-1)
  for (int n = 0; n <= 18; ++n) {
    fact *= (n + 1);
    f += pw / fact;
    if (n > 0) df += n * pw_prev / fact;
    pw_prev = pw;
    pw *= x;
  }
}

double exprel_value(double x) {
  if (std::fabs(x) < 0.5) {
    double f, df;
    exprel_series(x, f, df);
    return f;
  }
  return std::expm1(x) / x;
}

double exprel_deriv(double x) {
  if (std::fabs(x) < 0.5) {
    double f, df;
    exprel_series(x, f, df);
    return df;
  }
  const double e = std::exp(x);
  return ((x - 1.0) * e + 1.0) / (x * x);
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape("add", a, b);
  auto x = a.values();
  auto y = b.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return t.record(a.shape(), std::move(out), {a, b}, [a, b](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    for (Var in : {a, b}) {
      if (!tp.needs_grad(in)) continue;
      auto gi = tp.grad(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape("sub", a, b);
  auto x = a.values();
  auto y = b.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return t.record(a.shape(), std::move(out), {a, b}, [a, b](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    if (tp.needs_grad(a)) {
      auto ga = tp.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape("mul", a, b);
  auto x = a.values();
  auto y = b.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return t.record(a.shape(), std::move(out), {a, b}, [a, b](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    auto x = tp.value(a);
    auto y = tp.value(b);
    if (tp.needs_grad(a)) {
      auto ga = tp.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var add_row(Var x, Var row) {
  Tape& t = common_tape(x, row);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (row.size() != c) shape_mismatch("add_row", x.shape(), row.shape());
  auto xv = x.values();
  auto bv = row.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] + bv[j];
  return t.record(x.shape(), std::move(out), {x, row}, [x, row, r, c](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    if (tp.needs_grad(x)) {
      auto gx = tp.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (tp.needs_grad(row)) {
      auto gb = tp.grad(row);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
    }
  });
}

Var mul_row(Var x, Var row) {
  Tape& t = common_tape(x, row);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (row.size() != c) shape_mismatch("mul_row", x.shape(), row.shape());
  auto xv = x.values();
  auto wv = row.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] * wv[j];
  return t.record(x.shape(), std::move(out), {x, row}, [x, row, r, c](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    auto xv = tp.value(x);
    auto wv = tp.value(row);
    if (tp.needs_grad(x)) {
      auto gx = tp.grad(x);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * wv[j];
    }
    if (tp.needs_grad(row)) {
      auto gw = tp.grad(row);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gw[j] += g[i * c + j] * xv[i * c + j];
    }
  });
}

Var mul_col(Var x, Var col) {
  Tape& t = common_tape(x, col);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (col.size() != r) shape_mismatch("mul_col", x.shape(), col.shape());
  auto xv = x.values();
  auto wv = col.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] * wv[i];
  return t.record(x.shape(), std::move(out), {x, col}, [x, col, r, c](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    auto xv = tp.value(x);
    auto wv = tp.value(col);
    if (tp.needs_grad(x)) {
      auto gx = tp.grad(x);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * wv[i];
    }
    if (tp.needs_grad(col)) {
      auto gw = tp.grad(col);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gw[i] += g[i * c + j] * xv[i * c + j];
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  if (b.rows() != k) shape_mismatch("matmul", a.shape(), b.shape());
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    const double* arow = av.data() + i * k;
    std::size_t p = 0;
    // four rows of b per sweep so each output row is loaded and stored k/4 times
    for (; p + 4 <= k; p += 4) {
      const double a0 = arow[p], a1 = arow[p + 1], a2 = arow[p + 2], a3 = arow[p + 3];
      const double* b0 = bv.data() + p * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
      }
    }
    for (; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return t.record({m, n}, std::move(out), {a, b}, [a, b, m, k, n](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    auto av = tp.value(a);
    auto bv = tp.value(b);
    if (tp.needs_grad(a)) {
      auto ga = tp.grad(a);
      if (m >= 8) {
        // ga += g b^T swept over rows of b^T, which vectorizes; the
        // transpose only pays off when there are several rows
        std::vector<double> bt(k * n);
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = bv[p * n + j];
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g.data() + i * n;
          double* garow = ga.data() + i * k;
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = grow[j];
            const double* btrow = bt.data() + j * k;
            for (std::size_t p = 0; p < k; ++p) garow[p] += gij * btrow[p];
          }
        }
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g.data() + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = bv.data() + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga[i * k + p] += acc;
          }
        }
      }
    }
    if (tp.needs_grad(b)) {
      auto gb = tp.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          if (aip == 0.0) continue;
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double x : a.values()) {
    if (!(x > 0.0)) throw DomainError("log of a non-positive value " + std::to_string(x));
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary(a, stable_softplus, [](double x, double) { return stable_sigmoid(x); });
}

Var exprel(Var a) {
  return unary(a, exprel_value, [](double x, double) { return exprel_deriv(x); });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (begin >= end || end > r) {
    throw ShapeError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for shape " + shape_str(x.shape()));
  }
  auto xv = x.values();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(begin * c),
                          xv.begin() + static_cast<std::ptrdiff_t>(end * c));
  return t.record({end - begin, c}, std::move(out), {x}, [x, begin, c](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    auto gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * c + i] += g[i];
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (begin >= end || end > c) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for shape " + shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  auto xv = x.values();
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = xv[i * c + begin + j];
  return t.record({r, w}, std::move(out), {x}, [x, begin, r, c, w](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    auto gx = tp.grad(x);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) gx[i * c + begin + j] += g[i * w + j];
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  Tape& t = tape_of(parts[0]);
  const std::size_t c = parts[0].cols();
  std::size_t total = 0;
  for (Var p : parts) {
    if (p.tape() != &t) throw TapeError("operands recorded on different tapes");
    if (p.cols() != c) shape_mismatch("concat_rows", parts[0].shape(), p.shape());
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * c);
  for (Var p : parts) {
    auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record({total, c}, std::move(out), parts, [inputs](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    std::size_t off = 0;
    for (Var p : inputs) {
      const std::size_t len = shape_size(tp.shape(p));
      if (tp.needs_grad(p)) {
        auto gp = tp.grad(p);
        for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
      }
      off += len;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  Tape& t = tape_of(parts[0]);
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  for (Var p : parts) {
    if (p.tape() != &t) throw TapeError("operands recorded on different tapes");
    if (p.rows() != r) shape_mismatch("concat_cols", parts[0].shape(), p.shape());
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::size_t off = 0;
  for (Var p : parts) {
    auto v = p.values();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + off + j] = v[i * w + j];
    off += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record({r, total}, std::move(out), parts, [inputs, r, total](Tape& tp, Var o) {
    auto g = tp.grad_if_any(o);
    std::size_t off = 0;
    for (Var p : inputs) {
      const std::size_t w = cols_of(tp.shape(p));
      if (tp.needs_grad(p)) {
        auto gp = tp.grad(p);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * total + off + j];
      }
      off += w;
    }
  });
}

Var reduce_sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.values()) s += v;
  return t.record({}, {s}, {a}, [a](Tape& tp, Var o) {
    const double g = tp.grad_if_any(o)[0];
    for (double& gi : tp.grad(a)) gi += g;
  });
}

Var layer_norm(Var x, double eps) {
  Tape& t = tape_of(x);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  auto xv = x.values();
  std::vector<double> out(xv.size());
  std::vector<double> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = xv.data() + i * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = (row[j] - mean) * is;
  }
  return t.record(x.shape(), std::move(out), {x},
                  [x, r, c, inv_std = std::move(inv_std)](Tape& tp, Var o) {
                    auto g = tp.grad_if_any(o);
                    auto y = tp.value(o);
                    auto gx = tp.grad(x);
                    const double inv_c = 1.0 / static_cast<double>(c);
                    for (std::size_t i = 0; i < r; ++i) {
                      const double* gr = g.data() + i * c;
                      const double* yr = y.data() + i * c;
                      double mg = 0.0;
                      double mgy = 0.0;
                      for (std::size_t j = 0; j < c; ++j) {
                        mg += gr[j];
                        mgy += gr[j] * yr[j];
                      }
                      mg *= inv_c;
                      mgy *= inv_c;
                      for (std::size_t j = 0; j < c; ++j)
                        gx[i * c + j] += inv_std[i] * (gr[j] - mg - yr[j] * mgy);
                    }
                  });
}

Var clip_with_straight_through(Var x, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("clip bounds need lo < hi");
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

}  // namespace igbeat::ad
