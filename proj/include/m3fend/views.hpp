#pragma once

#include <random>
#include <vector>

#include "m3fend/autodiff.hpp"
#include "m3fend/features.hpp"
#include "m3fend/tensor.hpp"

namespace m3fend::views {

inline constexpr double kPositivityEps = 1e-6;

struct Linear {
  Tensor W, b;
  Linear() = default;
  Linear(const std::string& name, int in, int out, std::mt19937_64& rng);
  ad::Var fwd(ad::Tape& t, ad::Var x) const;
  void collect(std::vector<Tensor*>& out);
};

// One SemNet channel: per kernel width a conv bank, masked max-over-time,
// concat, linear to D, softplus positivity.
struct SemChannel {
  std::vector<Tensor> kernels;  // maps x (width*O) each
  std::vector<Tensor> biases;
  std::vector<int> widths;
  Linear proj;
  SemChannel() = default;
  SemChannel(const std::string& name, int O, int D, const std::vector<int>& widths,
             int maps, std::mt19937_64& rng);
  // X: T x O embedding matrix on the tape. Throws on empty content.
  ad::Var fwd(ad::Tape& t, ad::Var X) const;
  void collect(std::vector<Tensor*>& out);
};

// EmoNet/StyNet channel: MLP in -> hidden (relu) -> D, softplus positivity.
struct MlpChannel {
  Linear l1, l2;
  MlpChannel() = default;
  MlpChannel(const std::string& name, int in, int hidden, int D,
             std::mt19937_64& rng);
  ad::Var fwd(ad::Tape& t, ad::Var x) const;
  void collect(std::vector<Tensor*>& out);
};

// Masked attention pool over embedding rows with a learned query.
struct AttentionPool {
  Tensor query;  // O
  double scale = 1.0;
  AttentionPool() = default;
  AttentionPool(const std::string& name, int O, std::mt19937_64& rng);
  ad::Var fwd(ad::Tape& t, ad::Var X, const std::vector<char>& mask) const;
  void collect(std::vector<Tensor*>& out);
};

// n = [pool; emotion; style]
ad::Var news_representation(ad::Tape& t, ad::Var pooled, ad::Var emotion,
                            ad::Var style);

}  // namespace m3fend::views
