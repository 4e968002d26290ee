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

#include "ftmssm/ops.hpp"

#include <cmath>
#include <numbers>

#include "ftmssm/error.hpp"
#include "ftmssm/kernels.hpp"

namespace ftm {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  FTM_REQUIRE(a.shape() == b.shape(),
              std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Elementwise op with derivative expressed through input x and output y.
template <typename F, typename DF>
Var unary(const char* op, const Var& a, F f, DF df) {
  Tensor out(a.shape());
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  auto pa = a.node_ptr();
  return make_op(op, std::move(out), {a}, [pa, df](Node& n) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * df(pa->value[i], n.value[i]);
  });
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct SeqDims {
  std::size_t batch, length, channels;
};

SeqDims seq_dims(const Var& x, const char* op) {
  FTM_REQUIRE(x.value().rank() == 3, std::string(op) + ": expected (batch, time, channels), got " +
                                         shape_str(x.shape()));
  return {x.dim(0), x.dim(1), x.dim(2)};
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  auto pa = a.node_ptr();
  auto pb = b.node_ptr();
  return make_op("add", std::move(out), {a, b}, [pa, pb](Node& n) {
    for (auto* p : {pa.get(), pb.get()}) {
      if (!p->requires_grad) continue;
      Tensor& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  auto pa = a.node_ptr();
  auto pb = b.node_ptr();
  return make_op("sub", std::move(out), {a, b}, [pa, pb](Node& n) {
    if (pa->requires_grad) {
      Tensor& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  auto pa = a.node_ptr();
  auto pb = b.node_ptr();
  return make_op("mul", std::move(out), {a, b}, [pa, pb](Node& n) {
    if (pa->requires_grad) {
      Tensor& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * pa->value[i];
    }
  });
}

Var scale(const Var& a, double s) {
  return unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var neg(const Var& a) {
  return unary("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var exp(const Var& a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sigmoid(const Var& a) {
  return unary("sigmoid", a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& a) {
  return unary("softplus", a, softplus_value, [](double x, double) { return sigmoid_value(x); });
}

Var silu(const Var& a) {
  return unary(
      "silu", a, [](double x) { return x * sigmoid_value(x); },
      [](double x, double) {
        const double s = sigmoid_value(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var square(const Var& a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var square_with_wrong_adjoint(const Var& a) {
  return unary("square_with_wrong_adjoint", a, [](double x) { return x * x; },
               [](double x, double) { return 3.0 * x; });
}

Var scalar_mul(const Var& s, const Var& x) {
  FTM_REQUIRE(s.size() == 1, "scalar_mul: first operand must hold one element");
  const double sv = s.value()[0];
  Tensor out = x.value();
  for (double& v : out.data()) v *= sv;
  auto ps = s.node_ptr();
  auto px = x.node_ptr();
  return make_op("scalar_mul", std::move(out), {s, x}, [ps, px](Node& n) {
    if (ps->requires_grad) {
      ps->grad_buffer()[0] += kernels::active().dot(n.grad.ptr(), px->value.ptr(), n.grad.size());
    }
    if (px->requires_grad) kernels::active().axpy(ps->value[0], n.grad.ptr(), px->grad_buffer().ptr(), n.grad.size());
  });
}

Var linear(const Var& x, const Var& w, const std::optional<Var>& bias) {
  FTM_REQUIRE(w.value().rank() == 2, "linear: weight must be (in, out), got " + shape_str(w.shape()));
  FTM_REQUIRE(x.value().rank() >= 1 && x.shape().back() == w.dim(0),
              "linear: input " + shape_str(x.shape()) + " incompatible with weight " + shape_str(w.shape()));
  const std::size_t k = w.dim(0);
  const std::size_t n_out = w.dim(1);
  const std::size_t m = x.size() / k;
  Shape out_shape = x.shape();
  out_shape.back() = n_out;
  Tensor out(out_shape);
  const auto& kt = kernels::active();
  kt.gemm_nn(m, k, n_out, x.value().ptr(), w.value().ptr(), out.ptr(), false);
  std::vector<Var> parents{x, w};
  std::shared_ptr<Node> pb;
  if (bias) {
    FTM_REQUIRE(bias->value().rank() == 1 && bias->dim(0) == n_out, "linear: bias must be (out)");
    for (std::size_t r = 0; r < m; ++r) kt.axpy(1.0, bias->value().ptr(), out.ptr() + r * n_out, n_out);
    parents.push_back(*bias);
    pb = bias->node_ptr();
  }
  auto px = x.node_ptr();
  auto pw = w.node_ptr();
  return make_op("linear", std::move(out), std::move(parents), [px, pw, pb, m, k, n_out](Node& n) {
    const auto& kt = kernels::active();
    if (px->requires_grad) kt.gemm_nt(m, k, n_out, n.grad.ptr(), pw->value.ptr(), px->grad_buffer().ptr());
    if (pw->requires_grad) kt.gemm_tn(m, k, n_out, px->value.ptr(), n.grad.ptr(), pw->grad_buffer().ptr());
    if (pb && pb->requires_grad) {
      double* gb = pb->grad_buffer().ptr();
      for (std::size_t r = 0; r < m; ++r) kt.axpy(1.0, n.grad.ptr() + r * n_out, gb, n_out);
    }
  });
}

Var add_bias(const Var& x, const Var& b) {
  FTM_REQUIRE(b.value().rank() == 1 && x.value().rank() >= 1 && x.shape().back() == b.dim(0),
              "add_bias: bias " + shape_str(b.shape()) + " incompatible with " + shape_str(x.shape()));
  const std::size_t n = b.dim(0);
  const std::size_t rows = x.size() / n;
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += b.value()[j];
  }
  auto px = x.node_ptr();
  auto pb = b.node_ptr();
  return make_op("add_bias", std::move(out), {x, b}, [px, pb, rows, n](Node& n_) {
    if (px->requires_grad) {
      Tensor& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n_.grad[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) g[j] += n_.grad[r * n + j];
      }
    }
  });
}

Var add_over_time(const Var& x, const Var& v) {
  const auto [batch, length, ch] = seq_dims(x, "add_over_time");
  FTM_REQUIRE(v.value().rank() == 2 && v.dim(0) == batch && v.dim(1) == ch,
              "add_over_time: vector " + shape_str(v.shape()) + " incompatible with " + shape_str(x.shape()));
  Tensor out = x.value();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t c = 0; c < ch; ++c) out[(b * length + t) * ch + c] += v.value()[b * ch + c];
    }
  }
  auto px = x.node_ptr();
  auto pv = v.node_ptr();
  return make_op("add_over_time", std::move(out), {x, v}, [px, pv, batch, length, ch](Node& n) {
    if (px->requires_grad) {
      Tensor& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (pv->requires_grad) {
      Tensor& g = pv->grad_buffer();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < length; ++t) {
          for (std::size_t c = 0; c < ch; ++c) g[b * ch + c] += n.grad[(b * length + t) * ch + c];
        }
      }
    }
  });
}

Var depthwise_causal_conv(const Var& x, const Var& w, const Var& bias, std::size_t dilation) {
  const auto [batch, length, ch] = seq_dims(x, "depthwise_causal_conv");
  FTM_REQUIRE(w.value().rank() == 2 && w.dim(0) == ch, "depthwise_causal_conv: weight must be (channels, taps)");
  FTM_REQUIRE(bias.value().rank() == 1 && bias.dim(0) == ch, "depthwise_causal_conv: bias must be (channels)");
  FTM_REQUIRE(dilation >= 1, "depthwise_causal_conv: dilation must be >= 1");
  const std::size_t taps = w.dim(1);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  Tensor out(x.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < length; ++t) {
      double* o = out.ptr() + (b * length + t) * ch;
      for (std::size_t c = 0; c < ch; ++c) o[c] = bias.value()[c];
      for (std::size_t k = 0; k < taps && k * dilation <= t; ++k) {
        const double* xi = xv.ptr() + (b * length + t - k * dilation) * ch;
        for (std::size_t c = 0; c < ch; ++c) o[c] += wv[c * taps + k] * xi[c];
      }
    }
  }
  auto px = x.node_ptr();
  auto pw = w.node_ptr();
  auto pb = bias.node_ptr();
  return make_op("depthwise_causal_conv", std::move(out), {x, w, bias},
                 [px, pw, pb, batch, length, ch, taps, dilation](Node& n) {
                   const Tensor& g = n.grad;
                   for (std::size_t b = 0; b < batch; ++b) {
                     for (std::size_t t = 0; t < length; ++t) {
                       const double* go = g.ptr() + (b * length + t) * ch;
                       if (pb->requires_grad) {
                         Tensor& gb = pb->grad_buffer();
                         for (std::size_t c = 0; c < ch; ++c) gb[c] += go[c];
                       }
                       for (std::size_t k = 0; k < taps && k * dilation <= t; ++k) {
                         const std::size_t src = (b * length + t - k * dilation) * ch;
                         if (px->requires_grad) {
                           Tensor& gx = px->grad_buffer();
                           for (std::size_t c = 0; c < ch; ++c) gx[src + c] += pw->value[c * taps + k] * go[c];
                         }
                         if (pw->requires_grad) {
                           Tensor& gw = pw->grad_buffer();
                           for (std::size_t c = 0; c < ch; ++c) gw[c * taps + k] += px->value[src + c] * go[c];
                         }
                       }
                     }
                   }
                 });
}

Var conv1d_same(const Var& x, const Var& w, const Var& bias) {
  const auto [batch, length, cin] = seq_dims(x, "conv1d_same");
  FTM_REQUIRE(w.value().rank() == 3 && w.dim(0) == 3 && w.dim(1) == cin,
              "conv1d_same: weight must be (3, in, out), got " + shape_str(w.shape()));
  const std::size_t cout = w.dim(2);
  FTM_REQUIRE(bias.value().rank() == 1 && bias.dim(0) == cout, "conv1d_same: bias must be (out)");
  const auto& kt = kernels::active();
  Tensor out(Shape{batch, length, cout});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < length; ++t) {
      double* o = out.ptr() + (b * length + t) * cout;
      for (std::size_t c = 0; c < cout; ++c) o[c] = bias.value()[c];
      for (std::size_t k = 0; k < 3; ++k) {
        if (t + k < 1 || t + k - 1 >= length) continue;
        const double* xi = x.value().ptr() + (b * length + t + k - 1) * cin;
        kt.gemm_nn(1, cin, cout, xi, w.value().ptr() + k * cin * cout, o, true);
      }
    }
  }
  auto px = x.node_ptr();
  auto pw = w.node_ptr();
  auto pb = bias.node_ptr();
  return make_op("conv1d_same", std::move(out), {x, w, bias}, [px, pw, pb, batch, length, cin, cout](Node& n) {
    const auto& kt = kernels::active();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < length; ++t) {
        const double* go = n.grad.ptr() + (b * length + t) * cout;
        if (pb->requires_grad) kt.axpy(1.0, go, pb->grad_buffer().ptr(), cout);
        for (std::size_t k = 0; k < 3; ++k) {
          if (t + k < 1 || t + k - 1 >= length) continue;
          const std::size_t src = (b * length + t + k - 1) * cin;
          if (px->requires_grad) {
            kt.gemm_nt(1, cin, cout, go, pw->value.ptr() + k * cin * cout, px->grad_buffer().ptr() + src);
          }
          if (pw->requires_grad) {
            kt.gemm_tn(1, cin, cout, px->value.ptr() + src, go, pw->grad_buffer().ptr() + k * cin * cout);
          }
        }
      }
    }
  });
}

namespace {

Var haar_band(const Var& x, bool high) {
  const auto [batch, length, ch] = seq_dims(x, high ? "haar_high" : "haar_low");
  FTM_REQUIRE(length >= 2, "haar: sequence length must be >= 2, got " + std::to_string(length));
  const std::size_t half = (length + 1) / 2;
  const double s = 1.0 / std::numbers::sqrt2;
  const double sign = high ? -1.0 : 1.0;
  Tensor out(Shape{batch, half, ch});
  const Tensor& xv = x.value();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < half; ++k) {
      const std::size_t t0 = 2 * k;
      const std::size_t t1 = std::min(2 * k + 1, length - 1);
      for (std::size_t c = 0; c < ch; ++c) {
        out[(b * half + k) * ch + c] =
            s * (xv[(b * length + t0) * ch + c] + sign * xv[(b * length + t1) * ch + c]);
      }
    }
  }
  auto px = x.node_ptr();
  return make_op(high ? "haar_high" : "haar_low", std::move(out), {x},
                 [px, batch, length, ch, half, s, sign](Node& n) {
                   if (!px->requires_grad) return;
                   Tensor& g = px->grad_buffer();
                   for (std::size_t b = 0; b < batch; ++b) {
                     for (std::size_t k = 0; k < half; ++k) {
                       const std::size_t t0 = 2 * k;
                       const std::size_t t1 = std::min(2 * k + 1, length - 1);
                       for (std::size_t c = 0; c < ch; ++c) {
                         const double go = n.grad[(b * half + k) * ch + c];
                         g[(b * length + t0) * ch + c] += s * go;
                         g[(b * length + t1) * ch + c] += sign * s * go;
                       }
                     }
                   }
                 });
}

}  // namespace

Var haar_low(const Var& x) { return haar_band(x, false); }
Var haar_high(const Var& x) { return haar_band(x, true); }

Var haar_inverse(const Var& low, const Var& high, std::size_t length) {
  const auto [batch, half, ch] = seq_dims(low, "haar_inverse");
  require_same_shape(low, high, "haar_inverse");
  FTM_REQUIRE(length >= 1 && (length + 1) / 2 == half,
              "haar_inverse: length " + std::to_string(length) + " inconsistent with " + std::to_string(half) +
                  " coefficient frames");
  const double s = 1.0 / std::numbers::sqrt2;
  Tensor out(Shape{batch, length, ch});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t k = t / 2;
      const double sign = (t % 2 == 0) ? 1.0 : -1.0;
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t i = (b * half + k) * ch + c;
        out[(b * length + t) * ch + c] = s * (low.value()[i] + sign * high.value()[i]);
      }
    }
  }
  auto pl = low.node_ptr();
  auto ph = high.node_ptr();
  return make_op("haar_inverse", std::move(out), {low, high}, [pl, ph, batch, half, ch, length, s](Node& n) {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < length; ++t) {
        const std::size_t k = t / 2;
        const double sign = (t % 2 == 0) ? 1.0 : -1.0;
        for (std::size_t c = 0; c < ch; ++c) {
          const std::size_t i = (b * half + k) * ch + c;
          const double go = n.grad[(b * length + t) * ch + c];
          if (pl->requires_grad) pl->grad_buffer()[i] += s * go;
          if (ph->requires_grad) ph->grad_buffer()[i] += sign * s * go;
        }
      }
    }
  });
}

Var upsample_repeat(const Var& x, std::size_t length) {
  const auto [batch, half, ch] = seq_dims(x, "upsample_repeat");
  FTM_REQUIRE((length + 1) / 2 == half, "upsample_repeat: length " + std::to_string(length) +
                                            " inconsistent with " + std::to_string(half) + " frames");
  Tensor out(Shape{batch, length, ch});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t c = 0; c < ch; ++c) out[(b * length + t) * ch + c] = x.value()[(b * half + t / 2) * ch + c];
    }
  }
  auto px = x.node_ptr();
  return make_op("upsample_repeat", std::move(out), {x}, [px, batch, half, ch, length](Node& n) {
    if (!px->requires_grad) return;
    Tensor& g = px->grad_buffer();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t c = 0; c < ch; ++c) g[(b * half + t / 2) * ch + c] += n.grad[(b * length + t) * ch + c];
      }
    }
  });
}

Var time_reverse(const Var& x) {
  const auto [batch, length, ch] = seq_dims(x, "time_reverse");
  Tensor out(x.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        out[(b * length + t) * ch + c] = x.value()[(b * length + length - 1 - t) * ch + c];
      }
    }
  }
  auto px = x.node_ptr();
  return make_op("time_reverse", std::move(out), {x}, [px, batch, length, ch](Node& n) {
    if (!px->requires_grad) return;
    Tensor& g = px->grad_buffer();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t c = 0; c < ch; ++c) {
          g[(b * length + length - 1 - t) * ch + c] += n.grad[(b * length + t) * ch + c];
        }
      }
    }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  auto pa = a.node_ptr();
  return make_op("sum", Tensor::scalar(s), {a}, [pa](Node& n) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0];
  });
}

Var sum_squares(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v * v;
  auto pa = a.node_ptr();
  return make_op("sum_squares", Tensor::scalar(s), {a}, [pa](Node& n) {
    if (!pa->requires_grad) return;
    kernels::active().axpy(2.0 * n.grad[0], pa->value.ptr(), pa->grad_buffer().ptr(), pa->value.size());
  });
}

Var weighted_sum(const Var& a, const Tensor& weights) {
  FTM_REQUIRE(a.size() == weights.size(), "weighted_sum: size mismatch");
  const double s = kernels::active().dot(a.value().ptr(), weights.ptr(), weights.size());
  auto pa = a.node_ptr();
  return make_op("weighted_sum", Tensor::scalar(s), {a}, [pa, weights](Node& n) {
    if (!pa->requires_grad) return;
    kernels::active().axpy(n.grad[0], weights.ptr(), pa->grad_buffer().ptr(), weights.size());
  });
}

}  // namespace ftm
