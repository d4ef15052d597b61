#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "igbeat/errors.hpp"
#include "igbeat/ops.hpp"

namespace igbeat::ad {
namespace {

void expect_shape(const char* op, const char* what, Var v, std::size_t rows,
                  std::size_t cols) {
  if (v.rows() != rows || v.cols() != cols) {
    throw ShapeError(std::string(op) + ": " + what + " has shape " + shape_str(v.shape()) +
                     ", expected " + shape_str({rows, cols}));
  }
}

void expect_same_tape(std::initializer_list<Var> vars) {
  Tape* t = vars.begin()->tape();
  for (Var v : vars) {
    if (!v.valid() || v.tape() != t) throw TapeError("scan operands on different tapes");
  }
}

}  // namespace

Var diag_ssm_scan(Var u, Var a_bar, Var b_bar, Var c_proj, Var skip) {
  expect_same_tape({u, a_bar, b_bar, c_proj, skip});
  const std::size_t T = u.rows();
  const std::size_t d = u.cols();
  const std::size_t n = a_bar.cols();
  expect_shape("diag_ssm_scan", "a_bar", a_bar, d, n);
  expect_shape("diag_ssm_scan", "b_bar", b_bar, d, n);
  expect_shape("diag_ssm_scan", "c_proj", c_proj, d, n);
  if (skip.size() != d) {
    throw ShapeError("diag_ssm_scan: skip has shape " + shape_str(skip.shape()) +
                     ", expected " + std::to_string(d) + " entries");
  }

  auto uv = u.values();
  auto av = a_bar.values();
  auto bv = b_bar.values();
  auto cv = c_proj.values();
  auto dv = skip.values();
  const std::size_t dn = d * n;

  Tape& tape = *u.tape();
  // per-step states are only needed by the backward pass
  const bool keep = tape.needs_grad(u) || tape.needs_grad(a_bar) || tape.needs_grad(b_bar) ||
                    tape.needs_grad(c_proj) || tape.needs_grad(skip);
  std::vector<double> states(keep ? T * dn : 0);
  std::vector<double> y(T * d);
  std::vector<double> s(dn, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      const double uc = uv[t * d + c];
      double acc = dv[c] * uc;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t ck = c * n + k;
        s[ck] = av[ck] * s[ck] + bv[ck] * uc;
        acc += cv[ck] * s[ck];
      }
      y[t * d + c] = acc;
    }
    if (keep) std::copy(s.begin(), s.end(), states.begin() + static_cast<std::ptrdiff_t>(t * dn));
  }

  return tape.record(
      {T, d}, std::move(y), {u, a_bar, b_bar, c_proj, skip},
      [u, a_bar, b_bar, c_proj, skip, T, d, n, states = std::move(states)](Tape& tp, Var o) {
        auto g = tp.grad_if_any(o);
        auto uv = tp.value(u);
        auto av = tp.value(a_bar);
        auto bv = tp.value(b_bar);
        auto cv = tp.value(c_proj);
        auto dv = tp.value(skip);
        const std::size_t dn = d * n;
        std::vector<double> gu(T * d, 0.0), ga(dn, 0.0), gb(dn, 0.0), gc(dn, 0.0), gd(d, 0.0);
        std::vector<double> lam(dn, 0.0);  // d loss / d s_{t+1} on entry
        for (std::size_t t = T; t-- > 0;) {
          const double* st = states.data() + t * dn;
          const double* sp = t > 0 ? states.data() + (t - 1) * dn : nullptr;
          for (std::size_t c = 0; c < d; ++c) {
            const double gy = g[t * d + c];
            const double uc = uv[t * d + c];
            gd[c] += gy * uc;
            double gu_tc = gy * dv[c];
            for (std::size_t k = 0; k < n; ++k) {
              const std::size_t ck = c * n + k;
              gc[ck] += gy * st[ck];
              const double l = gy * cv[ck] + av[ck] * lam[ck];
              lam[ck] = l;
              gb[ck] += l * uc;
              gu_tc += l * bv[ck];
              if (sp) ga[ck] += l * sp[ck];
            }
            gu[t * d + c] += gu_tc;
          }
        }
        auto accumulate = [&tp](Var v, const std::vector<double>& src) {
          if (!tp.needs_grad(v)) return;
          auto dst = tp.grad(v);
          for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        };
        accumulate(u, gu);
        accumulate(a_bar, ga);
        accumulate(b_bar, gb);
        accumulate(c_proj, gc);
        accumulate(skip, gd);
      });
}

Var selective_scan(Var u, Var delta, Var a, Var b, Var c, Var skip) {
  expect_same_tape({u, delta, a, b, c, skip});
  const std::size_t T = u.rows();
  const std::size_t d = u.cols();
  const std::size_t n = a.cols();
  expect_shape("selective_scan", "delta", delta, T, d);
  expect_shape("selective_scan", "a", a, d, n);
  expect_shape("selective_scan", "b", b, T, n);
  expect_shape("selective_scan", "c", c, T, n);
  if (skip.size() != d) {
    throw ShapeError("selective_scan: skip has shape " + shape_str(skip.shape()) +
                     ", expected " + std::to_string(d) + " entries");
  }

  auto uv = u.values();
  auto dtv = delta.values();
  auto av = a.values();
  auto bv = b.values();
  auto cv = c.values();
  auto dv = skip.values();
  const std::size_t dn = d * n;

  Tape& tape = *u.tape();
  const bool keep = tape.needs_grad(u) || tape.needs_grad(delta) || tape.needs_grad(a) ||
                    tape.needs_grad(b) || tape.needs_grad(c) || tape.needs_grad(skip);
  std::vector<double> states(keep ? T * dn : 0);
  std::vector<double> decay(keep ? T * dn : dn);
  std::vector<double> y(T * d);
  std::vector<double> s(dn, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* bt = bv.data() + t * n;
    const double* ct = cv.data() + t * n;
    double* dec = decay.data() + (keep ? t * dn : 0);
    for (std::size_t ch = 0; ch < d; ++ch) {
      const double uc = uv[t * d + ch];
      const double dt = dtv[t * d + ch];
      double acc = dv[ch] * uc;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t ck = ch * n + k;
        const double da = std::exp(dt * av[ck]);
        dec[ck] = da;
        s[ck] = da * s[ck] + dt * bt[k] * uc;
        acc += ct[k] * s[ck];
      }
      y[t * d + ch] = acc;
    }
    if (keep) std::copy(s.begin(), s.end(), states.begin() + static_cast<std::ptrdiff_t>(t * dn));
  }

  return tape.record(
      {T, d}, std::move(y), {u, delta, a, b, c, skip},
      [u, delta, a, b, c, skip, T, d, n, states = std::move(states),
       decay = std::move(decay)](Tape& tp, Var o) {
        auto g = tp.grad_if_any(o);
        auto uv = tp.value(u);
        auto dtv = tp.value(delta);
        auto av = tp.value(a);
        auto bv = tp.value(b);
        auto cv = tp.value(c);
        auto dv = tp.value(skip);
        const std::size_t dn = d * n;
        std::vector<double> gu(T * d, 0.0), gdt(T * d, 0.0), ga(dn, 0.0), gb(T * n, 0.0),
            gc(T * n, 0.0), gd(d, 0.0);
        std::vector<double> lam(dn, 0.0);
        for (std::size_t t = T; t-- > 0;) {
          const double* st = states.data() + t * dn;
          const double* sp = t > 0 ? states.data() + (t - 1) * dn : nullptr;
          const double* dec = decay.data() + t * dn;
          const double* dec_next = t + 1 < T ? decay.data() + (t + 1) * dn : nullptr;
          const double* bt = bv.data() + t * n;
          const double* ct = cv.data() + t * n;
          double* gbt = gb.data() + t * n;
          double* gct = gc.data() + t * n;
          for (std::size_t ch = 0; ch < d; ++ch) {
            const double gy = g[t * d + ch];
            const double uc = uv[t * d + ch];
            const double dt = dtv[t * d + ch];
            gd[ch] += gy * uc;
            double gu_tc = gy * dv[ch];
            double gdt_tc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
              const std::size_t ck = ch * n + k;
              gct[k] += gy * st[ck];
              double l = gy * ct[k];
              if (dec_next) l += dec_next[ck] * lam[ck];
              lam[ck] = l;
              // input term dt * b_t[k] * u_t[c]
              gdt_tc += l * bt[k] * uc;
              gbt[k] += l * dt * uc;
              gu_tc += l * dt * bt[k];
              // decay term exp(dt * a) * s_{t-1}
              if (sp) {
                const double g_decay = l * sp[ck] * dec[ck];
                gdt_tc += g_decay * av[ck];
                ga[ck] += g_decay * dt;
              }
            }
            gu[t * d + ch] += gu_tc;
            gdt[t * d + ch] += gdt_tc;
          }
        }
        auto accumulate = [&tp](Var v, const std::vector<double>& src) {
          if (!tp.needs_grad(v)) return;
          auto dst = tp.grad(v);
          for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        };
        accumulate(u, gu);
        accumulate(delta, gdt);
        accumulate(a, ga);
        accumulate(b, gb);
        accumulate(c, gc);
        accumulate(skip, gd);
      });
}

Var gru_scan(Var xw, Var u_rz, Var u_n) {
  expect_same_tape({xw, u_rz, u_n});
  const std::size_t T = xw.rows();
  const std::size_t d = u_n.rows();
  expect_shape("gru_scan", "xw", xw, T, 3 * d);
  expect_shape("gru_scan", "u_rz", u_rz, d, 2 * d);
  expect_shape("gru_scan", "u_n", u_n, d, d);

  auto xv = xw.values();
  auto urz = u_rz.values();
  auto un = u_n.values();
  // per step: r, z, n and the gated previous state r * h_{t-1}
  std::vector<double> gates(T * 3 * d);
  std::vector<double> rh(T * d);
  std::vector<double> h((T + 1) * d, 0.0);  // h[0] is the zero initial state
  std::vector<double> pre(2 * d), pre_n(d);
  for (std::size_t t = 0; t < T; ++t) {
    const double* hp = h.data() + t * d;
    const double* xt = xv.data() + t * 3 * d;
    std::copy(xt, xt + 2 * d, pre.begin());
    for (std::size_t p = 0; p < d; ++p) {
      const double hv = hp[p];
      if (hv == 0.0) continue;
      const double* row = urz.data() + p * 2 * d;
      for (std::size_t j = 0; j < 2 * d; ++j) pre[j] += hv * row[j];
    }
    double* gt = gates.data() + t * 3 * d;
    for (std::size_t j = 0; j < 2 * d; ++j) gt[j] = 1.0 / (1.0 + std::exp(-pre[j]));
    double* rht = rh.data() + t * d;
    for (std::size_t p = 0; p < d; ++p) rht[p] = gt[p] * hp[p];
    std::copy(xt + 2 * d, xt + 3 * d, pre_n.begin());
    for (std::size_t p = 0; p < d; ++p) {
      const double v = rht[p];
      if (v == 0.0) continue;
      const double* row = un.data() + p * d;
      for (std::size_t j = 0; j < d; ++j) pre_n[j] += v * row[j];
    }
    double* ht = h.data() + (t + 1) * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double n = std::tanh(pre_n[j]);
      gt[2 * d + j] = n;
      const double z = gt[d + j];
      ht[j] = n + z * (hp[j] - n);
    }
  }
  std::vector<double> out(h.begin() + static_cast<std::ptrdiff_t>(d), h.end());

  Tape& tape = *xw.tape();
  return tape.record(
      {T, d}, std::move(out), {xw, u_rz, u_n},
      [xw, u_rz, u_n, T, d, gates = std::move(gates), rh = std::move(rh),
       h = std::move(h)](Tape& tp, Var o) {
        auto g = tp.grad_if_any(o);
        auto urz = tp.value(u_rz);
        auto un = tp.value(u_n);
        std::vector<double> gx(T * 3 * d, 0.0), gurz(2 * d * d, 0.0), gun(d * d, 0.0);
        std::vector<double> dh(d, 0.0), dh_prev(d), da_n(d), drh(d);
        // transposed recurrent weights so the back-projections are row sweeps
        std::vector<double> un_t(d * d), urz_t(2 * d * d);
        for (std::size_t p = 0; p < d; ++p) {
          for (std::size_t j = 0; j < d; ++j) un_t[j * d + p] = un[p * d + j];
          for (std::size_t j = 0; j < 2 * d; ++j) urz_t[j * d + p] = urz[p * 2 * d + j];
        }
        for (std::size_t t = T; t-- > 0;) {
          const double* hp = h.data() + t * d;
          const double* gt = gates.data() + t * 3 * d;
          const double* rht = rh.data() + t * d;
          double* gxt = gx.data() + t * 3 * d;
          for (std::size_t j = 0; j < d; ++j) dh[j] += g[t * d + j];
          for (std::size_t j = 0; j < d; ++j) {
            const double z = gt[d + j];
            const double n = gt[2 * d + j];
            dh_prev[j] = dh[j] * z;
            da_n[j] = dh[j] * (1.0 - z) * (1.0 - n * n);
            gxt[d + j] = dh[j] * (hp[j] - n) * z * (1.0 - z);
            gxt[2 * d + j] = da_n[j];
          }
          std::fill(drh.begin(), drh.end(), 0.0);
          for (std::size_t j = 0; j < d; ++j) {
            const double gj = da_n[j];
            const double* row = un_t.data() + j * d;
            for (std::size_t p = 0; p < d; ++p) drh[p] += gj * row[p];
          }
          for (std::size_t p = 0; p < d; ++p) {
            const double v = rht[p];
            double* grow = gun.data() + p * d;
            for (std::size_t j = 0; j < d; ++j) grow[j] += v * da_n[j];
          }
          for (std::size_t p = 0; p < d; ++p) {
            const double r = gt[p];
            gxt[p] = drh[p] * hp[p] * r * (1.0 - r);
            dh_prev[p] += drh[p] * r;
          }
          for (std::size_t j = 0; j < 2 * d; ++j) {
            const double gj = gxt[j];
            const double* row = urz_t.data() + j * d;
            for (std::size_t p = 0; p < d; ++p) dh_prev[p] += gj * row[p];
          }
          for (std::size_t p = 0; p < d; ++p) {
            const double hv = hp[p];
            if (hv == 0.0) continue;
            double* grow = gurz.data() + p * 2 * d;
            for (std::size_t j = 0; j < 2 * d; ++j) grow[j] += hv * gxt[j];
          }
          dh.swap(dh_prev);
        }
        auto accumulate = [&tp](Var v, const std::vector<double>& src) {
          if (!tp.needs_grad(v)) return;
          auto dst = tp.grad(v);
          for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        };
        accumulate(xw, gx);
        accumulate(u_rz, gurz);
        accumulate(u_n, gun);
      });
}

}  // namespace igbeat::ad
