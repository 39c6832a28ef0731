#include "m3fend/interactor.hpp"

#include <cmath>
#include <stdexcept>

namespace m3fend::interactor {

HeadParams::HeadParams(const std::string& name, int k_sem, int k_emo, int k_sty,
                       std::mt19937_64& rng)
    : a_sem(name + ".a_sem", {k_sem}),
      a_emo(name + ".a_emo", {k_emo}),
      a_sty(name + ".a_sty", {k_sty}) {
  a_sem.init_normal(rng, 0.1);
  a_emo.init_normal(rng, 0.1);
  a_sty.init_normal(rng, 0.1);
}

void HeadParams::collect(std::vector<Tensor*>& out) {
  if (a_sem.size()) out.push_back(&a_sem);
  if (a_emo.size()) out.push_back(&a_emo);
  if (a_sty.size()) out.push_back(&a_sty);
}

InteractorParams::InteractorParams(int H, int k_sem, int k_emo, int k_sty,
                                   std::mt19937_64& rng) {
  if (H < 1) throw std::invalid_argument("interactor: H must be >= 1");
  for (int h = 0; h < H; ++h)
    heads.emplace_back("interactor.head" + std::to_string(h), k_sem, k_emo, k_sty,
                       rng);
}

void InteractorParams::collect(std::vector<Tensor*>& out) {
  for (auto& h : heads) h.collect(out);
}

ad::Var head_forward_log(ad::Tape& t, const std::vector<ad::Var>& sem,
                         const std::vector<ad::Var>& emo,
                         const std::vector<ad::Var>& sty, const HeadParams& head) {
  // sum of a_i * ln r_i per view group, then exp
  std::vector<ad::Var> terms;
  auto group = [&](const std::vector<ad::Var>& rs, const Tensor& a) {
    if (rs.empty()) return;
    std::vector<ad::Var> logs;
    for (ad::Var r : rs) logs.push_back(ad::log_ew(r));
    terms.push_back(ad::weighted_sum(logs, t.param(const_cast<Tensor&>(a))));
  };
  group(sem, head.a_sem);
  group(emo, head.a_emo);
  group(sty, head.a_sty);
  if (terms.empty()) throw std::invalid_argument("interactor: empty view bank");
  ad::Var acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = ad::add(acc, terms[i]);
  return ad::exp_ew(acc);
}

std::vector<double> head_forward_product(const ViewBankValues& bank,
                                         const std::vector<double>& a_sem,
                                         const std::vector<double>& a_emo,
                                         const std::vector<double>& a_sty,
                                         int k_sem, int k_emo, int k_sty) {
  if (bank.channels.empty()) throw std::invalid_argument("interactor: empty bank");
  size_t D = bank.channels.front().size();
  std::vector<double> z(D, 1.0);
  auto apply = [&](const std::vector<double>& a, int offset, int count) {
    for (int i = 0; i < count; ++i) {
      const auto& r = bank.channels[offset + i];
      for (size_t k = 0; k < D; ++k) {
        if (r[k] <= 0.0)
          throw std::domain_error("interactor: nonpositive bank entry");
        z[k] *= std::pow(r[k], a[i]);
      }
    }
  };
  apply(a_sem, 0, k_sem);
  apply(a_emo, k_sem, k_emo);
  apply(a_sty, k_sem + k_emo, k_sty);
  return z;
}

std::vector<ad::Var> interact(ad::Tape& t, const std::vector<ad::Var>& sem,
                              const std::vector<ad::Var>& emo,
                              const std::vector<ad::Var>& sty,
                              const InteractorParams& params) {
  std::vector<ad::Var> zs;
  for (const auto& head : params.heads)
    zs.push_back(head_forward_log(t, sem, emo, sty, head));
  return zs;
}

}  // namespace m3fend::interactor
