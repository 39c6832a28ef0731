#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "m3fend/corpus.hpp"
#include "m3fend/tensor.hpp"

namespace m3fend::features {

// Bump when the flattened feature ordering changes.
inline constexpr const char* kFeatureOrderVersion = "m3fend-features-v1";

inline constexpr std::array<const char*, 7> kEmotionCategories = {
    "Anger", "Disgust", "Fear", "Sadness", "Surprise", "Like", "Joy"};

// Flattened emotion vector: 7 category probabilities, 7 lexicon scores,
// 7 intensity scores, 1 sentiment score, 5 auxiliary frequencies.
inline constexpr int kEmotionDim = 7 + 7 + 7 + 1 + 5;

struct EmbeddingProvider {
  Tensor table;  // vocab_size x O
  std::string provenance = "random-seeded";
  bool trainable = false;

  static EmbeddingProvider random(int vocab_size, int dim, std::uint64_t seed);
  static EmbeddingProvider from_file(const std::string& path);
  int vocab_size() const { return table.rows(); }
  int dim() const { return table.cols(); }
};

// Rows of the embedding matrix for the piece's content tokens, plus the
// content mask. Out-of-vocabulary ids throw.
struct EmbeddedPiece {
  std::vector<double> rows;  // T x O row-major
  std::vector<char> mask;    // size T, all 1 for content
  int T = 0;
  int O = 0;
};
EmbeddedPiece embed_tokens(const corpus::NewsPiece& piece,
                           const EmbeddingProvider& provider);

struct EmotionWord {
  std::map<std::string, double> category_scores;  // category name -> score
  double intensity = 0.0;
  int polarity = 0;  // -1, 0, +1
  bool emoticon = false;
  bool sentimental = false;
  bool pronoun = false;
};

struct EmotionLexicon {
  std::unordered_map<std::string, EmotionWord> words;
  static EmotionLexicon load_tsv(const std::string& path);
};

struct StyleLexicon {
  // word -> set of class tags (conjunction, noun, verb, ...)
  std::unordered_map<std::string, std::set<std::string>> classes;
  static StyleLexicon load_tsv(const std::string& path);
  bool has(const std::string& word, const std::string& cls) const {
    auto it = classes.find(word);
    return it != classes.end() && it->second.count(cls) > 0;
  }
};

struct EmotionFlags {
  bool empty_text = false;
};

std::vector<double> extract_emotion(const std::vector<std::string>& words,
                                    const EmotionLexicon& lexicon,
                                    EmotionFlags* flags = nullptr);

// Fixed order of the low-level style counters; high-level sums come first in
// the final style vector.
const std::vector<std::string>& low_level_style_names();
const std::vector<std::string>& style_feature_names();  // 8 + low-level
int style_dim();

std::map<std::string, double> count_low_level_style(
    const std::vector<std::string>& words, const corpus::PieceMeta& meta,
    const StyleLexicon& lexicon);

// The eight signed sums over the counters, followed by the counters in order.
std::vector<double> compose_style(const std::map<std::string, double>& counters);

// Per-feature min-max to [0,1]; constant features map to 0. Fit on the train
// split only.
class MinMaxNormalizer {
 public:
  void fit(const std::vector<std::vector<double>>& rows);
  std::vector<double> apply(const std::vector<double>& row) const;
  bool fitted() const { return !lo_.empty(); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  void set(std::vector<double> lo, std::vector<double> hi) {
    lo_ = std::move(lo);
    hi_ = std::move(hi);
  }

 private:
  std::vector<double> lo_, hi_;
};

// Fills piece.emotion / piece.style for every piece with surface words.
void extract_features(corpus::Corpus& corpus, const EmotionLexicon& emo,
                      const StyleLexicon& sty);

}  // namespace m3fend::features
