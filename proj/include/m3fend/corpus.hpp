#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace m3fend::corpus {

struct PieceMeta {
  bool has_image = false;
  bool has_video = false;
  bool has_tag = false;
  bool has_at = false;
  bool has_url = false;
  bool has_head = false;
};

// One sample. `tokens` holds content token ids only (already truncated to
// max_seq_len); padding is implicit, so mask(t) = t < tokens.size().
struct NewsPiece {
  std::string id;
  std::vector<int> tokens;
  std::vector<std::string> words;  // surface forms, empty if only ids were given
  std::vector<double> emotion;
  std::vector<double> style;
  int domain = 0;
  int label = 0;  // 0 real, 1 fake
  PieceMeta meta;
};

struct Corpus {
  std::vector<NewsPiece> pieces;
  int n_domains = 0;
  int vocab_size = 0;
  int emo_dim = 0;
  int sty_dim = 0;
  std::map<int, std::string> domain_names;
};

struct SynthRecipe {
  int domain = 0;
  std::string signal_view;  // "sem" | "emo" | "sty" | "none"
  double margin = 2.0;
};

struct SynthSpec {
  int n_domains = 2;
  int per_domain_per_class = 100;
  std::vector<SynthRecipe> recipes;
  int vocab_size = 200;
  int seq_len = 20;
  int emo_dim = 8;
  int sty_dim = 8;
  std::uint64_t seed = 0;
  void validate() const;
};

struct SplitReport {
  // domain -> (train, val, test) counts
  std::map<int, std::array<int, 3>> counts;
  std::vector<int> fallback_domains;  // < 3 samples, sent entirely to train
  std::string to_json() const;
};

struct SplitResult {
  Corpus train, val, test;
  SplitReport report;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSONL, one record per line: {id, text|tokens, domain, label, emotion?,
// style?, meta?}. An optional first line {"header":true, "n_domains":N, ...}
// pins the domain count and vocab size. Pieces come back sorted by id.
Corpus load_corpus(const std::string& path, const std::string& schema = "jsonl",
                   int max_seq_len = 170, int vocab_size = 5000);

// Stratified by domain, largest-remainder rounding per domain, seeded
// shuffle. Domains with fewer than 3 samples fall back to train entirely.
SplitResult split_corpus(const Corpus& corpus, double train_ratio, double val_ratio,
                         double test_ratio, std::uint64_t seed);

// Per the recipe, each domain's label is carried by exactly one view with the
// stated separation margin. Fully seeded and deterministic.
Corpus generate_synthetic_corpus(const SynthSpec& spec);

SynthSpec synth_spec_from_json(const std::string& json_text);
void save_corpus_jsonl(const Corpus& corpus, const std::string& path);

// Deterministic token id for a surface word: fnv1a(word) % vocab_size.
int word_to_id(const std::string& word, int vocab_size);
std::vector<std::string> tokenize(const std::string& text);

}  // namespace m3fend::corpus
