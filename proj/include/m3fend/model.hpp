#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "m3fend/config.hpp"
#include "m3fend/corpus.hpp"
#include "m3fend/features.hpp"
#include "m3fend/interactor.hpp"
#include "m3fend/memory.hpp"
#include "m3fend/metrics.hpp"
#include "m3fend/views.hpp"

namespace m3fend::model {

using config::AblationFlags;
using config::ModelConfig;
using config::TrainConfig;

// Interpretability payload carried out of a forward pass.
struct ForwardTrace {
  std::vector<double> v;        // similarity distribution, size N
  std::vector<double> w;        // adapter weights, size H
  std::vector<double> n;        // news representation, size I
  double p_hat = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double val_acc = 0, val_macro_f1 = 0, val_auc = 0;
};

class Model {
 public:
  Model(const ModelConfig& cfg, const AblationFlags& flags, std::uint64_t seed);

  const ModelConfig& cfg() const { return cfg_; }
  const AblationFlags& flags() const { return flags_; }
  memory::DomainMemoryBank& bank() { return bank_; }
  const memory::DomainMemoryBank& bank() const { return bank_; }
  features::EmbeddingProvider& embeddings() { return embed_; }
  const interactor::InteractorParams& interactor_params() const { return inter_; }
  std::vector<Tensor*>& params() { return params_; }

  // Forward pass for one piece. When `tape_out` is given the graph is kept
  // so the caller can run backward on the returned loss var.
  ForwardTrace forward(const corpus::NewsPiece& piece,
                       ad::Tape* tape_out = nullptr,
                       ad::Var* loss_out = nullptr) const;

  // News representation n for memory operations (no gradients).
  std::vector<double> news_rep(const corpus::NewsPiece& piece) const;

  // K-means initialization of all event memories from the training split.
  void init_event_memories(const corpus::Corpus& train, std::uint64_t seed);

  std::string checkpoint_json(std::uint64_t seed) const;
  static Model from_checkpoint_json(const std::string& text);

  // |a| per (head, channel) across enabled view channels.
  std::vector<std::vector<double>> abs_exponents() const;
  std::vector<std::string> channel_labels() const;

  // Re-pins params_ at the current tensor addresses. Needed after the bank
  // is replaced wholesale (checkpoint load, best-epoch restore).
  void rebuild_registry();

 private:
  void build(std::uint64_t seed);

  ModelConfig cfg_;
  AblationFlags flags_;
  features::EmbeddingProvider embed_;
  std::vector<views::SemChannel> sem_;
  std::vector<views::MlpChannel> emo_;
  std::vector<views::MlpChannel> sty_;
  views::AttentionPool pool_;
  interactor::InteractorParams inter_;
  views::Linear no_inter_proj_;  // only used when flags.use_interactor == false
  views::Linear adapter_l1_, adapter_l2_;
  views::Linear pred_l1_, pred_l2_;
  memory::DomainMemoryBank bank_;
  std::vector<Tensor*> params_;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_f1 = 0;
  std::string history_json() const;
};

// Mini-batch Adam training with early stopping on validation macro-F1 and
// best-epoch restore. Memory writes happen on training batches only, in
// sample order, after the gradient step.
TrainResult train(Model& model, const corpus::Corpus& train_set,
                  const corpus::Corpus& val_set, const TrainConfig& tc);

struct EvalOutput {
  metrics::MetricsReport report;
  std::vector<std::vector<double>> mean_w_by_domain;  // N x H
};
EvalOutput evaluate(const Model& model, const corpus::Corpus& corpus);

}  // namespace m3fend::model
