/* Copyright 2026 The hetcond Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hetcond/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hetcond {

namespace {

void requireRank(const Tensor& t, std::size_t rank, const char* op,
                 const char* what) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": " + what + " must be rank " +
                                std::to_string(rank) + ", got " +
                                shapeString(t.shape));
  }
}

// Parent gradient accumulation helpers. Parents that do not require
// gradients are skipped.
Tensor* gradOf(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requiresGrad ? &p.gradBuffer() : nullptr;
}

} // namespace

Var conv1dSame(const Var& input, const Var& kernel, const Var& bias,
               int dilation) {
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  requireRank(x, 2, "conv1dSame", "input");
  requireRank(w, 3, "conv1dSame", "kernel");
  if (dilation < 1) {
    throw std::invalid_argument("conv1dSame: dilation must be >= 1");
  }
  const std::size_t T = x.shape[0];
  const std::size_t cin = x.shape[1];
  const std::size_t K = w.shape[0];
  const std::size_t cout = w.shape[2];
  if (w.shape[1] != cin) {
    throw std::invalid_argument(
        "conv1dSame: input has " + std::to_string(cin) +
        " channels but kernel expects " + std::to_string(w.shape[1]));
  }
  if (bias.value().numel() != cout) {
    throw std::invalid_argument("conv1dSame: bias size " +
                                std::to_string(bias.value().numel()) +
                                " != output channels " + std::to_string(cout));
  }
  const long padLeft = static_cast<long>((K - 1) * dilation / 2);
  const long d = dilation;
  const long len = static_cast<long>(T);

  Tensor out({T, cout});
  const double* b = bias.value().data.data();
  for (std::size_t t = 0; t < T; ++t) {
    double* o = &out.data[t * cout];
    std::copy(b, b + cout, o);
    for (std::size_t k = 0; k < K; ++k) {
      const long src = static_cast<long>(t) + static_cast<long>(k) * d - padLeft;
      if (src < 0 || src >= len) {
        continue;
      }
      const double* xr = &x.data[src * cin];
      for (std::size_t c = 0; c < cin; ++c) {
        const double xv = xr[c];
        const double* wr = &w.data[(k * cin + c) * cout];
        for (std::size_t j = 0; j < cout; ++j) {
          o[j] += xv * wr[j];
        }
      }
    }
  }

  return makeNode(
      std::move(out), {input, kernel, bias},
      [T, cin, cout, K, d, padLeft, len](Node& self) {
        const Tensor& g = self.grad;
        const Tensor& xv = self.parents[0]->value;
        const Tensor& wv = self.parents[1]->value;
        Tensor* gx = gradOf(self, 0);
        Tensor* gw = gradOf(self, 1);
        Tensor* gb = gradOf(self, 2);
        for (std::size_t t = 0; t < T; ++t) {
          const double* go = &g.data[t * cout];
          if (gb) {
            for (std::size_t j = 0; j < cout; ++j) {
              gb->data[j] += go[j];
            }
          }
          for (std::size_t k = 0; k < K; ++k) {
            const long src =
                static_cast<long>(t) + static_cast<long>(k) * d - padLeft;
            if (src < 0 || src >= len) {
              continue;
            }
            for (std::size_t c = 0; c < cin; ++c) {
              const std::size_t widx = (k * cin + c) * cout;
              const double* wr = &wv.data[widx];
              if (gx) {
                double acc = 0.0;
                for (std::size_t j = 0; j < cout; ++j) {
                  acc += go[j] * wr[j];
                }
                gx->data[src * cin + c] += acc;
              }
              if (gw) {
                const double xs = xv.data[src * cin + c];
                double* gwr = &gw->data[widx];
                for (std::size_t j = 0; j < cout; ++j) {
                  gwr[j] += xs * go[j];
                }
              }
            }
          }
        }
      });
}

Var convTranspose1d(const Var& input, const Var& kernel, const Var& bias,
                    int stride) {
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  requireRank(x, 2, "convTranspose1d", "input");
  requireRank(w, 3, "convTranspose1d", "kernel");
  if (stride < 1) {
    throw std::invalid_argument("convTranspose1d: stride must be >= 1");
  }
  const std::size_t L = x.shape[0];
  const std::size_t cin = x.shape[1];
  const std::size_t K = w.shape[0];
  const std::size_t cout = w.shape[2];
  if (w.shape[1] != cin) {
    throw std::invalid_argument(
        "convTranspose1d: input has " + std::to_string(cin) +
        " channels but kernel expects " + std::to_string(w.shape[1]));
  }
  if (bias.value().numel() != cout) {
    throw std::invalid_argument("convTranspose1d: bias size mismatch");
  }
  const std::size_t outLen = L * stride;
  const long pad = static_cast<long>((K - 1) / 2);
  const long s = stride;
  const long olen = static_cast<long>(outLen);

  Tensor out({outLen, cout});
  const double* b = bias.value().data.data();
  for (std::size_t t = 0; t < outLen; ++t) {
    std::copy(b, b + cout, &out.data[t * cout]);
  }
  for (std::size_t i = 0; i < L; ++i) {
    const double* xr = &x.data[i * cin];
    for (std::size_t k = 0; k < K; ++k) {
      const long dst = static_cast<long>(i) * s + static_cast<long>(k) - pad;
      if (dst < 0 || dst >= olen) {
        continue;
      }
      double* o = &out.data[dst * cout];
      for (std::size_t c = 0; c < cin; ++c) {
        const double xv = xr[c];
        const double* wr = &w.data[(k * cin + c) * cout];
        for (std::size_t j = 0; j < cout; ++j) {
          o[j] += xv * wr[j];
        }
      }
    }
  }

  return makeNode(
      std::move(out), {input, kernel, bias},
      [L, cin, cout, K, s, pad, olen](Node& self) {
        const Tensor& g = self.grad;
        const Tensor& xv = self.parents[0]->value;
        const Tensor& wv = self.parents[1]->value;
        Tensor* gx = gradOf(self, 0);
        Tensor* gw = gradOf(self, 1);
        Tensor* gb = gradOf(self, 2);
        if (gb) {
          for (long t = 0; t < olen; ++t) {
            for (std::size_t j = 0; j < cout; ++j) {
              gb->data[j] += g.data[t * cout + j];
            }
          }
        }
        for (std::size_t i = 0; i < L; ++i) {
          for (std::size_t k = 0; k < K; ++k) {
            const long dst = static_cast<long>(i) * s + static_cast<long>(k) - pad;
            if (dst < 0 || dst >= olen) {
              continue;
            }
            const double* go = &g.data[dst * cout];
            for (std::size_t c = 0; c < cin; ++c) {
              const std::size_t widx = (k * cin + c) * cout;
              if (gx) {
                const double* wr = &wv.data[widx];
                double acc = 0.0;
                for (std::size_t j = 0; j < cout; ++j) {
                  acc += go[j] * wr[j];
                }
                gx->data[i * cin + c] += acc;
              }
              if (gw) {
                const double xs = xv.data[i * cin + c];
                double* gwr = &gw->data[widx];
                for (std::size_t j = 0; j < cout; ++j) {
                  gwr[j] += xs * go[j];
                }
              }
            }
          }
        }
      });
}

Var maxPool1d(const Var& input, int pool, int stride) {
  const Tensor& x = input.value();
  requireRank(x, 2, "maxPool1d", "input");
  if (pool < 1 || stride < 1) {
    throw std::invalid_argument("maxPool1d: pool and stride must be >= 1");
  }
  const std::size_t T = x.shape[0];
  const std::size_t C = x.shape[1];
  const std::size_t outLen = (T + stride - 1) / stride;
  Tensor out({outLen, C});
  std::vector<std::size_t> argmax(outLen * C);
  for (std::size_t o = 0; o < outLen; ++o) {
    const std::size_t begin = o * stride;
    const std::size_t end = std::min(T, begin + static_cast<std::size_t>(pool));
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t best = begin;
      double bestVal = x.data[begin * C + c];
      for (std::size_t t = begin + 1; t < end; ++t) {
        const double v = x.data[t * C + c];
        if (v > bestVal) {
          bestVal = v;
          best = t;
        }
      }
      out.data[o * C + c] = bestVal;
      argmax[o * C + c] = best * C + c;
    }
  }
  return makeNode(std::move(out), {input},
                  [argmax = std::move(argmax)](Node& self) {
                    Tensor* gx = gradOf(self, 0);
                    for (std::size_t i = 0; i < argmax.size(); ++i) {
                      gx->data[argmax[i]] += self.grad.data[i];
                    }
                  });
}

Var dense(const Var& input, const Var& weights, const Var& bias) {
  const Tensor& x = input.value();
  const Tensor& w = weights.value();
  requireRank(x, 2, "dense", "input");
  requireRank(w, 2, "dense", "weights");
  const std::size_t N = x.shape[0];
  const std::size_t D = x.shape[1];
  const std::size_t U = w.shape[1];
  if (w.shape[0] != D) {
    throw std::invalid_argument("dense: input width " + std::to_string(D) +
                                " != weight rows " + std::to_string(w.shape[0]));
  }
  if (bias.value().numel() != U) {
    throw std::invalid_argument("dense: bias size " +
                                std::to_string(bias.value().numel()) +
                                " != units " + std::to_string(U));
  }
  Tensor out({N, U});
  for (std::size_t n = 0; n < N; ++n) {
    double* o = &out.data[n * U];
    std::copy(bias.value().data.begin(), bias.value().data.end(), o);
    for (std::size_t d = 0; d < D; ++d) {
      const double xv = x.data[n * D + d];
      const double* wr = &w.data[d * U];
      for (std::size_t u = 0; u < U; ++u) {
        o[u] += xv * wr[u];
      }
    }
  }
  return makeNode(std::move(out), {input, weights, bias}, [N, D, U](Node& self) {
    const Tensor& g = self.grad;
    const Tensor& xv = self.parents[0]->value;
    const Tensor& wv = self.parents[1]->value;
    Tensor* gx = gradOf(self, 0);
    Tensor* gw = gradOf(self, 1);
    Tensor* gb = gradOf(self, 2);
    for (std::size_t n = 0; n < N; ++n) {
      const double* go = &g.data[n * U];
      if (gb) {
        for (std::size_t u = 0; u < U; ++u) {
          gb->data[u] += go[u];
        }
      }
      for (std::size_t d = 0; d < D; ++d) {
        const double* wr = &wv.data[d * U];
        if (gx) {
          double acc = 0.0;
          for (std::size_t u = 0; u < U; ++u) {
            acc += go[u] * wr[u];
          }
          gx->data[n * D + d] += acc;
        }
        if (gw) {
          const double xs = xv.data[n * D + d];
          double* gwr = &gw->data[d * U];
          for (std::size_t u = 0; u < U; ++u) {
            gwr[u] += xs * go[u];
          }
        }
      }
    }
  });
}

Var relu(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.data) {
    v = v > 0.0 ? v : 0.0;
  }
  return makeNode(std::move(out), {x}, [](Node& self) {
    Tensor* gx = gradOf(self, 0);
    const Tensor& xv = self.parents[0]->value;
    for (std::size_t i = 0; i < xv.data.size(); ++i) {
      if (xv.data[i] > 0.0) {
        gx->data[i] += self.grad.data[i];
      }
    }
  });
}

Var gradReverse(const Var& x, double lambda) {
  if (lambda < 0.0) {
    throw std::invalid_argument("gradReverse: lambda must be nonnegative");
  }
  return makeNode(x.value(), {x}, [lambda](Node& self) {
    if (lambda == 0.0) {
      return;
    }
    Tensor* gx = gradOf(self, 0);
    for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
      gx->data[i] += -lambda * self.grad.data[i];
    }
  });
}

Var meanPoolTime(const Var& x) {
  const Tensor& xv = x.value();
  requireRank(xv, 2, "meanPoolTime", "input");
  const std::size_t T = xv.shape[0];
  const std::size_t C = xv.shape[1];
  Tensor out({1, C});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      out.data[c] += xv.data[t * C + c];
    }
  }
  const double inv = 1.0 / static_cast<double>(T);
  for (auto& v : out.data) {
    v *= inv;
  }
  return makeNode(std::move(out), {x}, [T, C, inv](Node& self) {
    Tensor* gx = gradOf(self, 0);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        gx->data[t * C + c] += self.grad.data[c] * inv;
      }
    }
  });
}

Var stackRows(std::span<const Var> rows) {
  if (rows.empty()) {
    throw std::invalid_argument("stackRows: no rows");
  }
  const std::size_t C = rows[0].value().numel();
  Tensor out({rows.size(), C});
  std::vector<Var> parents;
  parents.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = rows[r].value();
    if (v.numel() != C) {
      throw std::invalid_argument("stackRows: row " + std::to_string(r) +
                                  " has " + std::to_string(v.numel()) +
                                  " values, expected " + std::to_string(C));
    }
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + r * C);
    parents.push_back(rows[r]);
  }
  return makeNode(std::move(out), std::move(parents), [C](Node& self) {
    for (std::size_t r = 0; r < self.parents.size(); ++r) {
      if (Tensor* g = gradOf(self, r)) {
        for (std::size_t c = 0; c < C; ++c) {
          g->data[c] += self.grad.data[r * C + c];
        }
      }
    }
  });
}

Var concatCols(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  requireRank(av, 2, "concatCols", "a");
  requireRank(bv, 2, "concatCols", "b");
  if (av.shape[0] != bv.shape[0]) {
    throw std::invalid_argument("concatCols: row counts differ");
  }
  const std::size_t N = av.shape[0];
  const std::size_t ca = av.shape[1];
  const std::size_t cb = bv.shape[1];
  Tensor out({N, ca + cb});
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(&av.data[n * ca], ca, &out.data[n * (ca + cb)]);
    std::copy_n(&bv.data[n * cb], cb, &out.data[n * (ca + cb) + ca]);
  }
  return makeNode(std::move(out), {a, b}, [N, ca, cb](Node& self) {
    Tensor* ga = gradOf(self, 0);
    Tensor* gb = gradOf(self, 1);
    for (std::size_t n = 0; n < N; ++n) {
      const double* g = &self.grad.data[n * (ca + cb)];
      if (ga) {
        for (std::size_t c = 0; c < ca; ++c) {
          ga->data[n * ca + c] += g[c];
        }
      }
      if (gb) {
        for (std::size_t c = 0; c < cb; ++c) {
          gb->data[n * cb + c] += g[ca + c];
        }
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shapes " + shapeString(a.shape()) +
                                " and " + shapeString(b.shape()) + " differ");
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] += b.value().data[i];
  }
  return makeNode(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (Tensor* g = gradOf(self, p)) {
        for (std::size_t i = 0; i < g->data.size(); ++i) {
          g->data[i] += self.grad.data[i];
        }
      }
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.data) {
    v *= factor;
  }
  return makeNode(std::move(out), {x}, [factor](Node& self) {
    Tensor* g = gradOf(self, 0);
    for (std::size_t i = 0; i < g->data.size(); ++i) {
      g->data[i] += factor * self.grad.data[i];
    }
  });
}

Var weightedSum(std::span<const Var> scalars, std::span<const double> weights) {
  if (scalars.size() != weights.size() || scalars.empty()) {
    throw std::invalid_argument("weightedSum: need matching non-empty lists");
  }
  double total = 0.0;
  std::vector<Var> parents;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].value().numel() != 1) {
      throw std::invalid_argument("weightedSum: operands must be scalars");
    }
    total += weights[i] * scalars[i].value().data[0];
    parents.push_back(scalars[i]);
  }
  std::vector<double> w(weights.begin(), weights.end());
  return makeNode(Tensor::scalar(total), std::move(parents),
                  [w = std::move(w)](Node& self) {
                    for (std::size_t i = 0; i < w.size(); ++i) {
                      if (Tensor* g = gradOf(self, i)) {
                        g->data[0] += w[i] * self.grad.data[0];
                      }
                    }
                  });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  requireRank(av, 2, "matmul", "a");
  requireRank(bv, 2, "matmul", "b");
  const std::size_t M = av.shape[0];
  const std::size_t K = av.shape[1];
  const std::size_t N = bv.shape[1];
  if (bv.shape[0] != K) {
    throw std::invalid_argument("matmul: inner dimensions differ: " +
                                shapeString(av.shape) + " x " +
                                shapeString(bv.shape));
  }
  Tensor out({M, N});
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      const double x = av.data[i * K + k];
      for (std::size_t j = 0; j < N; ++j) {
        out.data[i * N + j] += x * bv.data[k * N + j];
      }
    }
  }
  return makeNode(std::move(out), {a, b}, [M, K, N](Node& self) {
    const Tensor& g = self.grad;
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    Tensor* ga = gradOf(self, 0);
    Tensor* gb = gradOf(self, 1);
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
          acc += g.data[i * N + j] * bv.data[k * N + j];
          if (gb) {
            gb->data[k * N + j] += av.data[i * K + k] * g.data[i * N + j];
          }
        }
        if (ga) {
          ga->data[i * K + k] += acc;
        }
      }
    }
  });
}

Var transpose(const Var& x) {
  const Tensor& xv = x.value();
  requireRank(xv, 2, "transpose", "input");
  const std::size_t R = xv.shape[0];
  const std::size_t C = xv.shape[1];
  Tensor out({C, R});
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      out.data[c * R + r] = xv.data[r * C + c];
    }
  }
  return makeNode(std::move(out), {x}, [R, C](Node& self) {
    Tensor* g = gradOf(self, 0);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        g->data[r * C + c] += self.grad.data[c * R + r];
      }
    }
  });
}

Var sumSquares(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data) {
    total += v * v;
  }
  return makeNode(Tensor::scalar(total), {x}, [](Node& self) {
    Tensor* g = gradOf(self, 0);
    const Tensor& xv = self.parents[0]->value;
    const double up = self.grad.data[0];
    for (std::size_t i = 0; i < xv.data.size(); ++i) {
      g->data[i] += 2.0 * xv.data[i] * up;
    }
  });
}

Var dotConstant(const Var& x, const Tensor& coeffs) {
  if (x.shape() != coeffs.shape) {
    throw std::invalid_argument("dotConstant: shapes differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < coeffs.data.size(); ++i) {
    total += x.value().data[i] * coeffs.data[i];
  }
  return makeNode(Tensor::scalar(total), {x}, [coeffs](Node& self) {
    Tensor* g = gradOf(self, 0);
    const double up = self.grad.data[0];
    for (std::size_t i = 0; i < coeffs.data.size(); ++i) {
      g->data[i] += coeffs.data[i] * up;
    }
  });
}

Var rowNormalize(const Var& x, double eps) {
  const Tensor& xv = x.value();
  requireRank(xv, 2, "rowNormalize", "input");
  const std::size_t R = xv.shape[0];
  const std::size_t C = xv.shape[1];
  Tensor out({R, C});
  std::vector<double> norms(R);
  for (std::size_t r = 0; r < R; ++r) {
    double ss = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      ss += xv.data[r * C + c] * xv.data[r * C + c];
    }
    norms[r] = std::max(std::sqrt(ss), eps);
    for (std::size_t c = 0; c < C; ++c) {
      out.data[r * C + c] = xv.data[r * C + c] / norms[r];
    }
  }
  return makeNode(
      out, {x}, [R, C, eps, norms = std::move(norms), y = out](Node& self) {
        Tensor* g = gradOf(self, 0);
        for (std::size_t r = 0; r < R; ++r) {
          const double* gy = &self.grad.data[r * C];
          const double* yr = &y.data[r * C];
          if (norms[r] <= eps) {
            for (std::size_t c = 0; c < C; ++c) {
              g->data[r * C + c] += gy[c] / eps;
            }
            continue;
          }
          double dot = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            dot += gy[c] * yr[c];
          }
          for (std::size_t c = 0; c < C; ++c) {
            g->data[r * C + c] += (gy[c] - yr[c] * dot) / norms[r];
          }
        }
      });
}

Var fitRows(const Var& x, std::size_t rows) {
  const Tensor& xv = x.value();
  requireRank(xv, 2, "fitRows", "input");
  if (rows == 0) {
    throw std::invalid_argument("fitRows: target must be positive");
  }
  const std::size_t R = xv.shape[0];
  const std::size_t C = xv.shape[1];
  const std::size_t keep = std::min(R, rows);
  Tensor out({rows, C});
  std::copy_n(xv.data.begin(), keep * C, out.data.begin());
  return makeNode(std::move(out), {x}, [keep, C](Node& self) {
    Tensor* g = gradOf(self, 0);
    for (std::size_t i = 0; i < keep * C; ++i) {
      g->data[i] += self.grad.data[i];
    }
  });
}

Tensor softmaxRows(const Tensor& logits) {
  const std::size_t N = logits.rows();
  const std::size_t B = logits.cols();
  Tensor out({N, B});
  for (std::size_t n = 0; n < N; ++n) {
    const double* l = &logits.data[n * B];
    const double m = *std::max_element(l, l + B);
    double z = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      out.data[n * B + b] = std::exp(l[b] - m);
      z += out.data[n * B + b];
    }
    for (std::size_t b = 0; b < B; ++b) {
      out.data[n * B + b] /= z;
    }
  }
  return out;
}

Var softmaxCrossEntropy(const Var& logits, const Tensor& target) {
  const Tensor& lv = logits.value();
  requireRank(lv, 2, "softmaxCrossEntropy", "logits");
  if (target.shape != lv.shape) {
    throw std::invalid_argument("softmaxCrossEntropy: target shape " +
                                shapeString(target.shape) +
                                " != logits shape " + shapeString(lv.shape));
  }
  const std::size_t N = lv.shape[0];
  const std::size_t B = lv.shape[1];
  for (std::size_t n = 0; n < N; ++n) {
    double s = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const double t = target.data[n * B + b];
      if (t < 0.0) {
        throw std::invalid_argument(
            "softmaxCrossEntropy: negative target entry in row " +
            std::to_string(n));
      }
      s += t;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw std::invalid_argument("softmaxCrossEntropy: target row " +
                                  std::to_string(n) + " sums to " +
                                  std::to_string(s));
    }
  }
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const double* l = &lv.data[n * B];
    const double m = *std::max_element(l, l + B);
    double z = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      z += std::exp(l[b] - m);
    }
    const double logZ = m + std::log(z);
    for (std::size_t b = 0; b < B; ++b) {
      loss -= target.data[n * B + b] * (l[b] - logZ);
    }
  }
  loss /= static_cast<double>(N);
  return makeNode(Tensor::scalar(loss), {logits},
                  [target, N, B](Node& self) {
                    Tensor* g = gradOf(self, 0);
                    const Tensor p = softmaxRows(self.parents[0]->value);
                    const double up = self.grad.data[0] / static_cast<double>(N);
                    for (std::size_t i = 0; i < N * B; ++i) {
                      g->data[i] += up * (p.data[i] - target.data[i]);
                    }
                  });
}

Var mse(const Var& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape) {
    throw std::invalid_argument("mse: prediction shape " +
                                shapeString(prediction.shape()) +
                                " != target shape " + shapeString(target.shape));
  }
  const Tensor& p = prediction.value();
  double total = 0.0;
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const double d = p.data[i] - target.data[i];
    total += d * d;
  }
  const double count = static_cast<double>(p.data.size());
  return makeNode(Tensor::scalar(total / count), {prediction},
                  [target, count](Node& self) {
                    Tensor* g = gradOf(self, 0);
                    const Tensor& pv = self.parents[0]->value;
                    const double up = self.grad.data[0];
                    for (std::size_t i = 0; i < pv.data.size(); ++i) {
                      g->data[i] +=
                          up * 2.0 * (pv.data[i] - target.data[i]) / count;
                    }
                  });
}

} // namespace hetcond
