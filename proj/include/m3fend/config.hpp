#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m3fend::config {

struct AblationFlags {
  bool use_sem = true;
  bool use_emo = true;
  bool use_sty = true;
  bool use_interactor = true;
  bool use_event_memory = true;
  bool use_adapter = true;
};

// Variant names accepted by the ablation surface; "full" keeps everything on.
AblationFlags flags_for_variant(const std::string& name);
const std::vector<std::string>& known_variants();

struct ModelConfig {
  int n_domains = 2;
  int vocab_size = 5000;
  int max_seq_len = 170;
  int embed_dim = 64;          // O
  int view_dim = 384;          // D
  int hidden_dim = 384;
  int char_dim = 64;           // D_c
  int k_sem = 1, k_emo = 1, k_sty = 1;
  int heads = 4;               // H
  int mem_units = 10;          // Q
  double tau = 0.01;
  double beta = 0.05;
  std::vector<int> kernel_widths = {1, 2, 3, 5, 10};
  int conv_maps = 64;
  int emo_dim = 0;  // 0 = take from corpus
  int sty_dim = 0;
  bool trainable_embedding = false;
};

struct TrainConfig {
  double learning_rate = 2e-3;
  int batch_size = 64;
  int max_epochs = 50;
  int patience = 5;
  std::uint64_t seed = 0;
  int n_runs = 10;  // runs averaged by evaluation
};

struct RunConfig {
  std::string corpus_path;
  std::string lexicon_dir;
  std::string out_dir = ".";
  std::string checkpoint_path;
  double train_ratio = 0.6, val_ratio = 0.2, test_ratio = 0.2;
  ModelConfig model;
  TrainConfig train;
  AblationFlags flags;

  // Throws std::invalid_argument listing every violated bound.
  void validate() const;
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

}  // namespace m3fend::config
