#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "m3fend/tensor.hpp"

// Minimal reverse-mode tape over dense vectors/matrices. A Tape is built per
// forward pass; parameters enter as leaves that flush their gradient back
// into Tensor::g on backward().
namespace m3fend::ad {

struct Tape;

struct Var {
  Tape* t = nullptr;
  int i = -1;
  int rows = 0;
  int cols = 1;
  int size() const { return rows * cols; }
  bool valid() const { return t != nullptr; }
};

struct Node {
  std::vector<double> val;
  std::vector<double> grad;
  std::function<void(Tape&)> back;  // empty for leaves and constants
  Tensor* param = nullptr;
};

struct Tape {
  std::vector<Node> nodes;

  Var alloc(int rows, int cols = 1);
  Var constant(std::span<const double> data, int rows, int cols = 1);
  Var scalar(double x);
  Var param(Tensor& p);

  double* val(Var v) { return nodes[v.i].val.data(); }
  double* grad(Var v) { return nodes[v.i].grad.data(); }
  const double* val(Var v) const { return nodes[v.i].val.data(); }

  // Runs reverse sweep from `out` (seeded with `seed` in every coordinate)
  // and accumulates parameter gradients into Tensor::g.
  void backward(Var out, double seed = 1.0);
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var concat(const std::vector<Var>& parts);
Var dot(Var a, Var b);

// y = W x  (W is rows x cols, x has cols entries)
Var matvec(Var W, Var x);
// y = W^T x  (x has rows entries, y has cols entries)
Var matvec_t(Var W, Var x);
Var row(Var M, int r);
Var slice(Var a, int offset, int len);

Var relu(Var a);
Var softplus_eps(Var a, double eps);
Var sigmoid(Var a);
Var log_ew(Var a);   // elementwise natural log; input must be > 0
Var exp_ew(Var a);

// softmax(x / tau); entries with mask[i]==0 get weight exactly 0.
Var softmax(Var x, double tau = 1.0, const std::vector<char>* mask = nullptr);

// out = sum_i w[i] * zs[i]
Var weighted_sum(const std::vector<Var>& zs, Var w);

// Embedding lookup: rows of `table` selected by ids; result is |ids| x O.
Var lookup(Var table, const std::vector<int>& ids);

// TextCNN piece for one kernel width: conv scores over sliding positions
// followed by max-over-time. X is T x O; K is maps x (width*O); returns maps.
// Positions run over max(1, T-width+1) starts; rows past T read as zero.
Var conv_max(Var X, Var K, Var b, int width);

// -y ln p - (1-y) ln(1-p), with p clamped to [1e-7, 1-1e-7] inside the graph.
Var bce_loss(Var p, double y);

Var sum(Var a);

}  // namespace m3fend::ad
