#include "m3fend/views.hpp"

#include <cmath>
#include <stdexcept>

namespace m3fend::views {

Linear::Linear(const std::string& name, int in, int out, std::mt19937_64& rng)
    : W(name + ".W", {out, in}), b(name + ".b", {out}) {
  W.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(in)));
}

ad::Var Linear::fwd(ad::Tape& t, ad::Var x) const {
  return ad::add(ad::matvec(t.param(const_cast<Tensor&>(W)), x),
                 t.param(const_cast<Tensor&>(b)));
}

void Linear::collect(std::vector<Tensor*>& out) {
  out.push_back(&W);
  out.push_back(&b);
}

SemChannel::SemChannel(const std::string& name, int O, int D,
                       const std::vector<int>& ws, int maps, std::mt19937_64& rng)
    : widths(ws) {
  for (size_t i = 0; i < widths.size(); ++i) {
    kernels.emplace_back(name + ".conv" + std::to_string(widths[i]) + ".K",
                         std::vector<int>{maps, widths[i] * O});
    kernels.back().init_normal(rng, 1.0 / std::sqrt(static_cast<double>(widths[i] * O)));
    biases.emplace_back(name + ".conv" + std::to_string(widths[i]) + ".b",
                        std::vector<int>{maps});
  }
  proj = Linear(name + ".proj", maps * static_cast<int>(widths.size()), D, rng);
}

ad::Var SemChannel::fwd(ad::Tape& t, ad::Var X) const {
  if (X.rows < 1) throw std::invalid_argument("sem_forward: empty content");
  std::vector<ad::Var> pooled;
  for (size_t i = 0; i < widths.size(); ++i) {
    pooled.push_back(ad::conv_max(X, t.param(const_cast<Tensor&>(kernels[i])),
                                  t.param(const_cast<Tensor&>(biases[i])),
                                  widths[i]));
  }
  return ad::softplus_eps(proj.fwd(t, ad::concat(pooled)), kPositivityEps);
}

void SemChannel::collect(std::vector<Tensor*>& out) {
  for (auto& k : kernels) out.push_back(&k);
  for (auto& b : biases) out.push_back(&b);
  proj.collect(out);
}

MlpChannel::MlpChannel(const std::string& name, int in, int hidden, int D,
                       std::mt19937_64& rng)
    : l1(name + ".l1", in, hidden, rng), l2(name + ".l2", hidden, D, rng) {}

ad::Var MlpChannel::fwd(ad::Tape& t, ad::Var x) const {
  return ad::softplus_eps(l2.fwd(t, ad::relu(l1.fwd(t, x))), kPositivityEps);
}

void MlpChannel::collect(std::vector<Tensor*>& out) {
  l1.collect(out);
  l2.collect(out);
}

AttentionPool::AttentionPool(const std::string& name, int O, std::mt19937_64& rng)
    : query(name + ".query", {O}), scale(std::sqrt(static_cast<double>(O))) {
  query.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(O)));
}

ad::Var AttentionPool::fwd(ad::Tape& t, ad::Var X,
                           const std::vector<char>& mask) const {
  bool any = false;
  for (char m : mask) any |= m != 0;
  if (X.rows < 1 || !any)
    throw std::invalid_argument("attention_pool: no unmasked positions");
  ad::Var q = t.param(const_cast<Tensor&>(query));
  ad::Var scores = ad::scale(ad::matvec(X, q), 1.0 / scale);
  ad::Var alpha = ad::softmax(scores, 1.0, &mask);
  return ad::matvec_t(X, alpha);
}

void AttentionPool::collect(std::vector<Tensor*>& out) { out.push_back(&query); }

ad::Var news_representation(ad::Tape& t, ad::Var pooled, ad::Var emotion,
                            ad::Var style) {
  return ad::concat({pooled, emotion, style});
}

}  // namespace m3fend::views
