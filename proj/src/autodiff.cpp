#include "m3fend/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "m3fend/kernels.hpp"

namespace m3fend::ad {

Var Tape::alloc(int rows, int cols) {
  Node n;
  n.val.assign(static_cast<size_t>(rows) * cols, 0.0);
  n.grad.assign(static_cast<size_t>(rows) * cols, 0.0);
  nodes.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes.size()) - 1, rows, cols};
}

Var Tape::constant(std::span<const double> data, int rows, int cols) {
  Var v = alloc(rows, cols);
  std::copy(data.begin(), data.end(), nodes[v.i].val.begin());
  return v;
}

Var Tape::scalar(double x) {
  Var v = alloc(1, 1);
  nodes[v.i].val[0] = x;
  return v;
}

Var Tape::param(Tensor& p) {
  Var v = alloc(p.rows(), p.cols());
  std::copy(p.v.begin(), p.v.end(), nodes[v.i].val.begin());
  nodes[v.i].param = &p;
  return v;
}

void Tape::backward(Var out, double seed) {
  for (Node& n : nodes) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  for (double& g : nodes[out.i].grad) g = seed;
  for (int i = static_cast<int>(nodes.size()) - 1; i >= 0; --i) {
    if (nodes[i].back) nodes[i].back(*this);
    if (nodes[i].param) {
      Tensor* p = nodes[i].param;
      for (size_t k = 0; k < nodes[i].grad.size(); ++k) p->g[k] += nodes[i].grad[k];
    }
  }
}

namespace {
void check_same(Var a, Var b) {
  if (a.size() != b.size()) throw std::invalid_argument("ad: size mismatch");
}
}  // namespace

Var add(Var a, Var b) {
  check_same(a, b);
  Tape& t = *a.t;
  Var out = t.alloc(a.rows, a.cols);
  for (int k = 0; k < a.size(); ++k) t.val(out)[k] = t.val(a)[k] + t.val(b)[k];
  int ai = a.i, bi = b.i, oi = out.i;
  t.nodes[oi].back = [ai, bi, oi](Tape& tp) {
    for (size_t k = 0; k < tp.nodes[oi].grad.size(); ++k) {
      tp.nodes[ai].grad[k] += tp.nodes[oi].grad[k];
      tp.nodes[bi].grad[k] += tp.nodes[oi].grad[k];
    }
  };
  return out;
}

Var sub(Var a, Var b) {
  check_same(a, b);
  Tape& t = *a.t;
  Var out = t.alloc(a.rows, a.cols);
  for (int k = 0; k < a.size(); ++k) t.val(out)[k] = t.val(a)[k] - t.val(b)[k];
  int ai = a.i, bi = b.i, oi = out.i;
  t.nodes[oi].back = [ai, bi, oi](Tape& tp) {
    for (size_t k = 0; k < tp.nodes[oi].grad.size(); ++k) {
      tp.nodes[ai].grad[k] += tp.nodes[oi].grad[k];
      tp.nodes[bi].grad[k] -= tp.nodes[oi].grad[k];
    }
  };
  return out;
}

Var mul(Var a, Var b) {
  check_same(a, b);
  Tape& t = *a.t;
  Var out = t.alloc(a.rows, a.cols);
  for (int k = 0; k < a.size(); ++k) t.val(out)[k] = t.val(a)[k] * t.val(b)[k];
  int ai = a.i, bi = b.i, oi = out.i;
  t.nodes[oi].back = [ai, bi, oi](Tape& tp) {
    for (size_t k = 0; k < tp.nodes[oi].grad.size(); ++k) {
      tp.nodes[ai].grad[k] += tp.nodes[oi].grad[k] * tp.nodes[bi].val[k];
      tp.nodes[bi].grad[k] += tp.nodes[oi].grad[k] * tp.nodes[ai].val[k];
    }
  };
  return out;
}

Var scale(Var a, double s) {
  Tape& t = *a.t;
  Var out = t.alloc(a.rows, a.cols);
  for (int k = 0; k < a.size(); ++k) t.val(out)[k] = t.val(a)[k] * s;
  int ai = a.i, oi = out.i;
  t.nodes[oi].back = [ai, oi, s](Tape& tp) {
    for (size_t k = 0; k < tp.nodes[oi].grad.size(); ++k)
      tp.nodes[ai].grad[k] += tp.nodes[oi].grad[k] * s;
  };
  return out;
}

Var concat(const std::vector<Var>& parts) {
  Tape& t = *parts.front().t;
  int total = 0;
  for (Var p : parts) total += p.size();
  Var out = t.alloc(total, 1);
  int off = 0;
  std::vector<std::pair<int, int>> spans;  // node idx, offset
  for (Var p : parts) {
    std::copy_n(t.val(p), p.size(), t.val(out) + off);
    spans.emplace_back(p.i, off);
    off += p.size();
  }
  int oi = out.i;
  t.nodes[oi].back = [spans, oi](Tape& tp) {
    for (auto [pi, o] : spans) {
      for (size_t k = 0; k < tp.nodes[pi].grad.size(); ++k)
        tp.nodes[pi].grad[k] += tp.nodes[oi].grad[o + k];
    }
  };
  return out;
}

Var dot(Var a, Var b) {
  check_same(a, b);
  Tape& t = *a.t;
  Var out = t.alloc(1, 1);
  double acc = 0.0;
  for (int k = 0; k < a.size(); ++k) acc += t.val(a)[k] * t.val(b)[k];
  t.val(out)[0] = acc;
  int ai = a.i, bi = b.i, oi = out.i;
  t.nodes[oi].back = [ai, bi, oi](Tape& tp) {
    double g = tp.nodes[oi].grad[0];
    for (size_t k = 0; k < tp.nodes[ai].grad.size(); ++k) {
      tp.nodes[ai].grad[k] += g * tp.nodes[bi].val[k];
      tp.nodes[bi].grad[k] += g * tp.nodes[ai].val[k];
    }
  };
  return out;
}

Var matvec(Var W, Var x) {
  Tape& t = *W.t;
  if (W.cols != x.size()) throw std::invalid_argument("matvec: shape mismatch");
  Var out = t.alloc(W.rows, 1);
  kernels::matvec(t.val(W), t.val(x), t.val(out), W.rows, W.cols);
  int wi = W.i, xi = x.i, oi = out.i;
  int rows = W.rows, cols = W.cols;
  t.nodes[oi].back = [wi, xi, oi, rows, cols](Tape& tp) {
    const double* g = tp.nodes[oi].grad.data();
    const double* xv = tp.nodes[xi].val.data();
    double* gw = tp.nodes[wi].grad.data();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) gw[static_cast<size_t>(r) * cols + c] += g[r] * xv[c];
    std::vector<double> gx(cols);
    kernels::matvec_t(tp.nodes[wi].val.data(), g, gx.data(), rows, cols);
    for (int c = 0; c < cols; ++c) tp.nodes[xi].grad[c] += gx[c];
  };
  return out;
}

Var matvec_t(Var W, Var x) {
  Tape& t = *W.t;
  if (W.rows != x.size()) throw std::invalid_argument("matvec_t: shape mismatch");
  Var out = t.alloc(W.cols, 1);
  kernels::matvec_t(t.val(W), t.val(x), t.val(out), W.rows, W.cols);
  int wi = W.i, xi = x.i, oi = out.i;
  int rows = W.rows, cols = W.cols;
  t.nodes[oi].back = [wi, xi, oi, rows, cols](Tape& tp) {
    const double* g = tp.nodes[oi].grad.data();
    const double* xv = tp.nodes[xi].val.data();
    double* gw = tp.nodes[wi].grad.data();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) gw[static_cast<size_t>(r) * cols + c] += xv[r] * g[c];
    std::vector<double> gx(rows);
    kernels::matvec(tp.nodes[wi].val.data(), g, gx.data(), rows, cols);
    for (int r = 0; r < rows; ++r) tp.nodes[xi].grad[r] += gx[r];
  };
  return out;
}

Var row(Var M, int r) {
  Tape& t = *M.t;
  if (r < 0 || r >= M.rows) throw std::out_of_range("row: index out of range");
  Var out = t.alloc(M.cols, 1);
  std::copy_n(t.val(M) + static_cast<size_t>(r) * M.cols, M.cols, t.val(out));
  int mi = M.i, oi = out.i, cols = M.cols;
  t.nodes[oi].back = [mi, oi, r, cols](Tape& tp) {
    for (int c = 0; c < cols; ++c)
      tp.nodes[mi].grad[static_cast<size_t>(r) * cols + c] += tp.nodes[oi].grad[c];
  };
  return out;
}

Var slice(Var a, int offset, int len) {
  Tape& t = *a.t;
  if (offset < 0 || offset + len > a.size())
    throw std::out_of_range("slice: range out of bounds");
  Var out = t.alloc(len, 1);
  std::copy_n(t.val(a) + offset, len, t.val(out));
  int ai = a.i, oi = out.i;
  t.nodes[oi].back = [ai, oi, offset, len](Tape& tp) {
    for (int k = 0; k < len; ++k)
      tp.nodes[ai].grad[offset + k] += tp.nodes[oi].grad[k];
  };
  return out;
}

namespace {
template <class F, class G>
Var unary(Var a, F f, G dfdx_from_in_out) {
  Tape& t = *a.t;
  Var out = t.alloc(a.rows, a.cols);
  for (int k = 0; k < a.size(); ++k) t.val(out)[k] = f(t.val(a)[k]);
  int ai = a.i, oi = out.i;
  t.nodes[oi].back = [ai, oi, dfdx_from_in_out](Tape& tp) {
    for (size_t k = 0; k < tp.nodes[oi].grad.size(); ++k)
      tp.nodes[ai].grad[k] +=
          tp.nodes[oi].grad[k] * dfdx_from_in_out(tp.nodes[ai].val[k], tp.nodes[oi].val[k]);
  };
  return out;
}
}  // namespace

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var softplus_eps(Var a, double eps) {
  return unary(
      a,
      [eps](double x) {
        // log1p(exp(x)) with overflow guard
        double sp = x > 30 ? x : std::log1p(std::exp(x));
        return sp + eps;
      },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var log_ew(Var a) {
  for (int k = 0; k < a.size(); ++k)
    if (a.t->val(a)[k] <= 0.0)
      throw std::domain_error("log_ew: nonpositive input");
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var exp_ew(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var softmax(Var x, double tau, const std::vector<char>* mask) {
  Tape& t = *x.t;
  int n = x.size();
  Var out = t.alloc(n, 1);
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k)
    if (!mask || (*mask)[k]) mx = std::max(mx, t.val(x)[k] / tau);
  if (mx == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("softmax: all positions masked");
  double z = 0.0;
  for (int k = 0; k < n; ++k) {
    double e = (!mask || (*mask)[k]) ? std::exp(t.val(x)[k] / tau - mx) : 0.0;
    t.val(out)[k] = e;
    z += e;
  }
  for (int k = 0; k < n; ++k) t.val(out)[k] /= z;
  int xi = x.i, oi = out.i;
  t.nodes[oi].back = [xi, oi, tau](Tape& tp) {
    const auto& y = tp.nodes[oi].val;
    const auto& g = tp.nodes[oi].grad;
    double gy = 0.0;
    for (size_t k = 0; k < y.size(); ++k) gy += g[k] * y[k];
    for (size_t k = 0; k < y.size(); ++k)
      tp.nodes[xi].grad[k] += y[k] * (g[k] - gy) / tau;
  };
  return out;
}

Var weighted_sum(const std::vector<Var>& zs, Var w) {
  Tape& t = *w.t;
  if (static_cast<int>(zs.size()) != w.size())
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  int n = zs.front().size();
  Var out = t.alloc(zs.front().rows, zs.front().cols);
  for (size_t i = 0; i < zs.size(); ++i) {
    double wi = t.val(w)[i];
    for (int k = 0; k < n; ++k) t.val(out)[k] += wi * t.val(zs[i])[k];
  }
  std::vector<int> zi;
  for (Var z : zs) zi.push_back(z.i);
  int wi_ = w.i, oi = out.i;
  t.nodes[oi].back = [zi, wi_, oi, n](Tape& tp) {
    const double* g = tp.nodes[oi].grad.data();
    for (size_t i = 0; i < zi.size(); ++i) {
      double wv = tp.nodes[wi_].val[i];
      double acc = 0.0;
      const double* zv = tp.nodes[zi[i]].val.data();
      double* zg = tp.nodes[zi[i]].grad.data();
      for (int k = 0; k < n; ++k) {
        zg[k] += wv * g[k];
        acc += zv[k] * g[k];
      }
      tp.nodes[wi_].grad[i] += acc;
    }
  };
  return out;
}

Var lookup(Var table, const std::vector<int>& ids) {
  Tape& t = *table.t;
  int O = table.cols;
  Var out = t.alloc(static_cast<int>(ids.size()), O);
  for (size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= table.rows)
      throw std::out_of_range("lookup: token id out of vocabulary");
    std::copy_n(t.val(table) + static_cast<size_t>(ids[r]) * O, O,
                t.val(out) + r * O);
  }
  int ti = table.i, oi = out.i;
  t.nodes[oi].back = [ti, oi, ids, O](Tape& tp) {
    for (size_t r = 0; r < ids.size(); ++r)
      for (int o = 0; o < O; ++o)
        tp.nodes[ti].grad[static_cast<size_t>(ids[r]) * O + o] +=
            tp.nodes[oi].grad[r * O + o];
  };
  return out;
}

Var conv_max(Var X, Var K, Var b, int width) {
  Tape& t = *X.t;
  int T = X.rows, O = X.cols, maps = K.rows;
  if (K.cols != width * O) throw std::invalid_argument("conv_max: kernel shape");
  int positions = std::max(1, T - width + 1);
  std::vector<double> scores(static_cast<size_t>(maps) * positions);
  kernels::conv_scores(t.val(X), T, O, t.val(K), t.val(b), maps, width, positions,
                       scores.data());
  Var out = t.alloc(maps, 1);
  std::vector<int> argmax(maps);
  for (int m = 0; m < maps; ++m) {
    int best = 0;
    for (int p = 1; p < positions; ++p)
      if (scores[static_cast<size_t>(m) * positions + p] >
          scores[static_cast<size_t>(m) * positions + best])
        best = p;
    argmax[m] = best;
    t.val(out)[m] = scores[static_cast<size_t>(m) * positions + best];
  }
  int xi = X.i, ki = K.i, bi = b.i, oi = out.i;
  t.nodes[oi].back = [xi, ki, bi, oi, argmax, width, T, O](Tape& tp) {
    for (size_t m = 0; m < argmax.size(); ++m) {
      double g = tp.nodes[oi].grad[m];
      if (g == 0.0) continue;
      tp.nodes[bi].grad[m] += g;
      int p = argmax[m];
      for (int dt = 0; dt < width; ++dt) {
        int tt = p + dt;
        if (tt >= T) break;
        for (int o = 0; o < O; ++o) {
          size_t kidx = m * static_cast<size_t>(width) * O + static_cast<size_t>(dt) * O + o;
          size_t xidx = static_cast<size_t>(tt) * O + o;
          tp.nodes[ki].grad[kidx] += g * tp.nodes[xi].val[xidx];
          tp.nodes[xi].grad[xidx] += g * tp.nodes[ki].val[kidx];
        }
      }
    }
  };
  return out;
}

Var bce_loss(Var p, double y) {
  Tape& t = *p.t;
  Var out = t.alloc(1, 1);
  constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
  double pv = std::clamp(t.val(p)[0], lo, hi);
  t.val(out)[0] = -y * std::log(pv) - (1.0 - y) * std::log(1.0 - pv);
  int pi = p.i, oi = out.i;
  t.nodes[oi].back = [pi, oi, y](Tape& tp) {
    double pr = tp.nodes[pi].val[0];
    if (pr <= 1e-7 || pr >= 1.0 - 1e-7) return;  // flat in the clamped region
    tp.nodes[pi].grad[0] += tp.nodes[oi].grad[0] * (-y / pr + (1.0 - y) / (1.0 - pr));
  };
  return out;
}

Var sum(Var a) {
  Tape& t = *a.t;
  Var out = t.alloc(1, 1);
  double acc = 0.0;
  for (int k = 0; k < a.size(); ++k) acc += t.val(a)[k];
  t.val(out)[0] = acc;
  int ai = a.i, oi = out.i;
  t.nodes[oi].back = [ai, oi](Tape& tp) {
    for (size_t k = 0; k < tp.nodes[ai].grad.size(); ++k)
      tp.nodes[ai].grad[k] += tp.nodes[oi].grad[0];
  };
  return out;
}

}  // namespace m3fend::ad
