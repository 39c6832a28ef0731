#pragma once

#include <random>
#include <vector>

#include "m3fend/autodiff.hpp"
#include "m3fend/tensor.hpp"

namespace m3fend::interactor {

// All view channel outputs for one sample, strictly positive, width D each.
struct ViewBankValues {
  std::vector<std::vector<double>> channels;  // sem..., emo..., sty...
};

// One head's exponent vectors; exponents are unconstrained reals initialized
// near zero so a fresh head starts at the neutral all-ones product.
struct HeadParams {
  Tensor a_sem, a_emo, a_sty;
  HeadParams() = default;
  HeadParams(const std::string& name, int k_sem, int k_emo, int k_sty,
             std::mt19937_64& rng);
  void collect(std::vector<Tensor*>& out);
};

struct InteractorParams {
  std::vector<HeadParams> heads;
  InteractorParams() = default;
  InteractorParams(int H, int k_sem, int k_emo, int k_sty, std::mt19937_64& rng);
  void collect(std::vector<Tensor*>& out);
};

// z = exp(sum_i a_i ln r_i) over all channels of all three views. The bank
// vars must be strictly positive (log_ew throws otherwise).
ad::Var head_forward_log(ad::Tape& t, const std::vector<ad::Var>& sem,
                         const std::vector<ad::Var>& emo,
                         const std::vector<ad::Var>& sty, const HeadParams& head);

// Product-of-powers form, evaluated outside the tape. Test oracle for
// head_forward_log.
std::vector<double> head_forward_product(const ViewBankValues& bank,
                                         const std::vector<double>& a_sem,
                                         const std::vector<double>& a_emo,
                                         const std::vector<double>& a_sty,
                                         int k_sem, int k_emo, int k_sty);

std::vector<ad::Var> interact(ad::Tape& t, const std::vector<ad::Var>& sem,
                              const std::vector<ad::Var>& emo,
                              const std::vector<ad::Var>& sty,
                              const InteractorParams& params);

}  // namespace m3fend::interactor
