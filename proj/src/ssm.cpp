// Copyright 2026 The ftmssm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ftmssm/ssm.hpp"

#include <string>

#include "ftmssm/error.hpp"
#include "ftmssm/kernels.hpp"

namespace ftm {

namespace {

std::string idx2(std::size_t i, std::size_t j) { return "[" + std::to_string(i) + "," + std::to_string(j) + "]"; }

void require_shape(const Tensor& t, const Shape& want, const char* what) {
  FTM_REQUIRE(t.shape() == want, std::string(what) + ": expected shape " + shape_str(want) + ", got " +
                                     shape_str(t.shape()));
}

}  // namespace

void validate(const SelectiveSSMParams& p) {
  FTM_REQUIRE(p.a.rank() == 2, "SelectiveSSMParams: A must be (D, N)");
  FTM_REQUIRE(p.delta.rank() == 2, "SelectiveSSMParams: delta must be (L, D)");
  const std::size_t d = p.a.dim(0), n = p.a.dim(1), l = p.delta.dim(0);
  require_shape(p.delta, {l, d}, "SelectiveSSMParams.delta");
  require_shape(p.b_seq, {l, n}, "SelectiveSSMParams.b_seq");
  require_shape(p.c_seq, {l, n}, "SelectiveSSMParams.c_seq");
  require_shape(p.d_skip, {d}, "SelectiveSSMParams.d_skip");
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      FTM_REQUIRE(p.a[i * n + j] < 0.0, "SelectiveSSMParams: A" + idx2(i, j) + " must be negative");
    }
  }
  for (std::size_t t = 0; t < l; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      FTM_REQUIRE(p.delta[t * d + i] > 0.0, "SelectiveSSMParams: delta" + idx2(t, i) + " must be positive");
    }
  }
}

DiscreteSSMParams discretize_zoh(const SelectiveSSMParams& params) {
  validate(params);
  const std::size_t l = params.length(), d = params.channels(), n = params.states();
  DiscreteSSMParams out{Tensor({l, d, n}), Tensor({l, d, n})};
  for (std::size_t t = 0; t < l; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dt = params.delta[t * d + c];
      for (std::size_t s = 0; s < n; ++s) {
        const double z = dt * params.a[c * n + s];
        const std::size_t i = (t * d + c) * n + s;
        out.a_bar[i] = std::exp(z);
        out.b_bar[i] = dt * zoh::phi(z) * params.b_seq[t * n + s];
      }
    }
  }
  return out;
}

ScanResult scan_recurrent(const DiscreteSSMParams& disc, const Tensor& c_seq, const Tensor& d_skip, const Tensor& x,
                          const std::optional<HiddenState>& h0) {
  FTM_REQUIRE(disc.a_bar.rank() == 3, "scan_recurrent: A_bar must be (L, D, N)");
  const std::size_t l = disc.a_bar.dim(0), d = disc.a_bar.dim(1), n = disc.a_bar.dim(2);
  require_shape(disc.b_bar, {l, d, n}, "scan_recurrent: B_bar");
  require_shape(c_seq, {l, n}, "scan_recurrent: C");
  require_shape(d_skip, {d}, "scan_recurrent: D_skip");
  require_shape(x, {l, d}, "scan_recurrent: x");
  ScanResult r{Tensor({l, d}), HiddenState{Tensor({d, n})}};
  if (h0) {
    require_shape(h0->h, {d, n}, "scan_recurrent: h0");
    r.h_final.h = h0->h;
  }
  const auto& kt = kernels::active();
  double* h = r.h_final.h.ptr();
  for (std::size_t t = 0; t < l; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t off = (t * d + c) * n;
      const double xv = x[t * d + c];
      r.y[t * d + c] = kt.scan_step(h + c * n, disc.a_bar.ptr() + off, disc.b_bar.ptr() + off, xv,
                                    c_seq.ptr() + t * n, n) +
                       d_skip[c] * xv;
    }
  }
  return r;
}

ScanResult scan(const SelectiveSSMParams& params, const Tensor& x) {
  return scan_recurrent(discretize_zoh(params), params.c_seq, params.d_skip, x);
}

Tensor kernel_convolution(const SelectiveSSMParams& lti, const Tensor& x) {
  validate(lti);
  const std::size_t l = lti.length(), d = lti.channels(), n = lti.states();
  require_shape(x, {l, d}, "kernel_convolution: x");
  auto row_constant = [l](const Tensor& t, const char* what) {
    const std::size_t w = t.dim(1);
    for (std::size_t s = 1; s < l; ++s) {
      for (std::size_t j = 0; j < w; ++j) {
        FTM_REQUIRE(t[s * w + j] == t[j], std::string("kernel_convolution: ") + what + " varies over time at " +
                                              idx2(s, j) + "; the convolutional form needs LTI parameters");
      }
    }
  };
  row_constant(lti.b_seq, "B");
  row_constant(lti.c_seq, "C");
  row_constant(lti.delta, "delta");

  // kernel[k, c] = sum_n C[n] A_bar[c,n]^k B_bar[c,n]
  Tensor kernel({l, d});
  std::vector<double> power(n);
  for (std::size_t c = 0; c < d; ++c) {
    const double dt = lti.delta[c];
    std::vector<double> a_bar(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double z = dt * lti.a[c * n + s];
      a_bar[s] = std::exp(z);
      power[s] = dt * zoh::phi(z) * lti.b_seq[s];
    }
    for (std::size_t k = 0; k < l; ++k) {
      double acc = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        acc += lti.c_seq[s] * power[s];
        power[s] *= a_bar[s];
      }
      kernel[k * d + c] = acc;
    }
  }
  Tensor y({l, d});
  for (std::size_t t = 0; t < l; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      double acc = lti.d_skip[c] * x[t * d + c];
      for (std::size_t k = 0; k <= t; ++k) acc += kernel[k * d + c] * x[(t - k) * d + c];
      y[t * d + c] = acc;
    }
  }
  return y;
}

Tensor reverse_time(const Tensor& x) {
  FTM_REQUIRE(x.rank() >= 1, "reverse_time: rank must be >= 1");
  const std::size_t l = x.dim(0);
  const std::size_t row = l ? x.size() / l : 0;
  Tensor out(x.shape());
  for (std::size_t t = 0; t < l; ++t) {
    std::copy_n(x.ptr() + (l - 1 - t) * row, row, out.ptr() + t * row);
  }
  return out;
}

Tensor scan_bidirectional(const SelectiveSSMParams& fwd, const SelectiveSSMParams& bwd, const Tensor& x) {
  FTM_REQUIRE(fwd.length() == bwd.length() && fwd.channels() == bwd.channels(),
              "scan_bidirectional: forward and backward parameters must share L and D");
  Tensor y = scan(fwd, x).y;
  const Tensor back = reverse_time(scan(bwd, reverse_time(x)).y);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += back[i];
  return y;
}

// --- fused differentiable scan --------------------------------------------

namespace {

struct ScanTape {
  std::size_t batch, length, channels, states;
  bool modulated;
  std::vector<double> z;      // clamped discretization argument
  std::vector<unsigned char> clamped;
  std::vector<double> phi;
  std::vector<double> a_bar;
  std::vector<double> b_bar;
  std::vector<double> h;      // state after each step
};

}  // namespace

Var selective_scan(const ScanInputs& in) {
  FTM_REQUIRE(in.x.value().rank() == 3, "selective_scan: x must be (B, L, D), got " + shape_str(in.x.shape()));
  const std::size_t bsz = in.x.dim(0), l = in.x.dim(1), d = in.x.dim(2);
  FTM_REQUIRE(in.a.value().rank() == 2 && in.a.dim(0) == d, "selective_scan: A must be (D, N)");
  const std::size_t n = in.a.dim(1);
  require_shape(in.delta.value(), {bsz, l, d}, "selective_scan: delta");
  require_shape(in.b.value(), {bsz, l, n}, "selective_scan: B");
  require_shape(in.c.value(), {bsz, l, n}, "selective_scan: C");
  if (in.a_mod) require_shape(in.a_mod->value(), {bsz, l, d}, "selective_scan: A modulation");
  if (in.d_skip) require_shape(in.d_skip->value(), {d}, "selective_scan: D_skip");

  const Tensor& av = in.a.value();
  const Tensor& dv = in.delta.value();
  const Tensor& xv = in.x.value();
  const Tensor& bv = in.b.value();
  const Tensor& cv = in.c.value();
  if (!in.a_mod) {
    for (std::size_t i = 0; i < av.size(); ++i) {
      // A = -exp(a_log) reaches exactly zero only by underflow, i.e. a diverged parameter.
      if (av[i] == 0.0) throw NumericError("selective_scan: A" + idx2(i / n, i % n) + " underflowed to zero");
      FTM_REQUIRE(av[i] < 0.0, "selective_scan: A" + idx2(i / n, i % n) + " must be negative");
    }
  }
  for (std::size_t i = 0; i < dv.size(); ++i) {
    FTM_REQUIRE(dv[i] > 0.0, "selective_scan: delta at flat index " + std::to_string(i) + " must be positive");
  }

  auto tape = std::make_shared<ScanTape>();
  tape->batch = bsz;
  tape->length = l;
  tape->channels = d;
  tape->states = n;
  tape->modulated = static_cast<bool>(in.a_mod);
  const std::size_t total = bsz * l * d * n;
  tape->z.resize(total);
  tape->clamped.assign(total, 0);
  tape->phi.resize(total);
  tape->a_bar.resize(total);
  tape->b_bar.resize(total);
  tape->h.resize(total);

  const auto& kt = kernels::active();
  Tensor y({bsz, l, d});
  std::vector<double> h(n);
  for (std::size_t b = 0; b < bsz; ++b) {
    for (std::size_t c = 0; c < d; ++c) {
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t t = 0; t < l; ++t) {
        const std::size_t row = (b * l + t) * d + c;
        const double dt = dv[row];
        const double mod = in.a_mod ? in.a_mod->value()[row] : 0.0;
        const std::size_t off = row * n;
        const double* bn = bv.ptr() + (b * l + t) * n;
        for (std::size_t s = 0; s < n; ++s) {
          double z = dt * (av[c * n + s] + mod);
          if (tape->modulated && z > kModulatedClamp) {
            z = kModulatedClamp;
            tape->clamped[off + s] = 1;
          }
          // one expm1 serves both factors
          const double em = std::expm1(z);
          const double ph = std::abs(z) < zoh::kSeriesThreshold ? zoh::phi(z) : em / z;
          tape->z[off + s] = z;
          tape->phi[off + s] = ph;
          tape->a_bar[off + s] = em + 1.0;
          tape->b_bar[off + s] = dt * ph * bn[s];
        }
        double out = kt.scan_step(h.data(), tape->a_bar.data() + off, tape->b_bar.data() + off, xv[row],
                                  cv.ptr() + (b * l + t) * n, n);
        std::copy(h.begin(), h.end(), tape->h.begin() + static_cast<std::ptrdiff_t>(off));
        if (in.d_skip) out += in.d_skip->value()[c] * xv[row];
        y[row] = out;
      }
    }
  }

  std::vector<Var> parents{in.x, in.delta, in.a, in.b, in.c};
  if (in.a_mod) parents.push_back(*in.a_mod);
  if (in.d_skip) parents.push_back(*in.d_skip);
  auto px = in.x.node_ptr();
  auto pdelta = in.delta.node_ptr();
  auto pa = in.a.node_ptr();
  auto pb = in.b.node_ptr();
  auto pc = in.c.node_ptr();
  std::shared_ptr<Node> pmod = in.a_mod ? in.a_mod->node_ptr() : nullptr;
  std::shared_ptr<Node> pskip = in.d_skip ? in.d_skip->node_ptr() : nullptr;

  return make_op("selective_scan", std::move(y), std::move(parents),
                 [tape, px, pdelta, pa, pb, pc, pmod, pskip](Node& node) {
                   const auto& kt = kernels::active();
                   const std::size_t bsz = tape->batch, l = tape->length, d = tape->channels, n = tape->states;
                   const Tensor& gy = node.grad;
                   const Tensor& xv = px->value;
                   const Tensor& dv = pdelta->value;
                   const Tensor& av = pa->value;
                   const Tensor& bv = pb->value;
                   double* gx = px->requires_grad ? px->grad_buffer().ptr() : nullptr;
                   double* gdelta = pdelta->requires_grad ? pdelta->grad_buffer().ptr() : nullptr;
                   double* ga = pa->requires_grad ? pa->grad_buffer().ptr() : nullptr;
                   double* gb = pb->requires_grad ? pb->grad_buffer().ptr() : nullptr;
                   double* gc = pc->requires_grad ? pc->grad_buffer().ptr() : nullptr;
                   double* gmod = (pmod && pmod->requires_grad) ? pmod->grad_buffer().ptr() : nullptr;
                   double* gskip = (pskip && pskip->requires_grad) ? pskip->grad_buffer().ptr() : nullptr;

                   std::vector<double> carry(n), dh(n), dabar(n), dbbar(n);
                   const std::vector<double> zeros(n, 0.0);
                   for (std::size_t b = 0; b < bsz; ++b) {
                     for (std::size_t c = 0; c < d; ++c) {
                       std::fill(carry.begin(), carry.end(), 0.0);
                       for (std::size_t t = l; t-- > 0;) {
                         const std::size_t row = (b * l + t) * d + c;
                         const std::size_t off = row * n;
                         const double dy = gy[row];
                         const double x = xv[row];
                         const double* h_prev = t > 0 ? tape->h.data() + off - d * n : zeros.data();
                         const double* cn = pc->value.ptr() + (b * l + t) * n;
                         const double dx = kt.scan_adjoint_step(carry.data(), dh.data(), dabar.data(), dbbar.data(),
                                                                tape->a_bar.data() + off, tape->b_bar.data() + off,
                                                                cn, h_prev, x, dy, n);
                         if (gc) kt.axpy(dy, tape->h.data() + off, gc + (b * l + t) * n, n);
                         if (gx) gx[row] += dx + (pskip ? dy * pskip->value[c] : 0.0);
                         if (gskip) gskip[c] += dy * x;
                         if (!(gdelta || ga || gb || gmod)) continue;
                         const double dt = dv[row];
                         const double* bn = bv.ptr() + (b * l + t) * n;
                         double g_delta = 0.0;
                         double g_mod = 0.0;
                         for (std::size_t s = 0; s < n; ++s) {
                           const double z = tape->z[off + s];
                           const double ph = tape->phi[off + s];
                           const double g_bbar = dbbar[s];
                           // b_bar = dt * phi(z) * B;  a_bar = exp(z)
                           const double dz = dabar[s] * tape->a_bar[off + s] + g_bbar * dt * zoh::phi_derivative(z, tape->a_bar[off + s], ph) * bn[s];
                           g_delta += g_bbar * ph * bn[s];
                           if (gb) gb[(b * l + t) * n + s] += g_bbar * dt * ph;
                           if (tape->clamped[off + s]) continue;
                           // z = dt * (A + mod)
                           const double a_n = av[c * n + s] + (pmod ? pmod->value[row] : 0.0);
                           g_delta += dz * a_n;
                           const double g_an = dz * dt;
                           if (ga) ga[c * n + s] += g_an;
                           g_mod += g_an;
                         }
                         if (gdelta) gdelta[row] += g_delta;
                         if (gmod) gmod[row] += g_mod;
                       }
                     }
                   }
                 });
}

}  // namespace ftm
