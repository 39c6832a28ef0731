#include "m3fend/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "m3fend/kernels.hpp"

namespace m3fend::features {

EmbeddingProvider EmbeddingProvider::random(int vocab_size, int dim,
                                            std::uint64_t seed) {
  EmbeddingProvider p;
  p.table = Tensor("embedding.table", {vocab_size, dim});
  std::mt19937_64 rng(seed);
  p.table.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(dim)));
  p.provenance = "random-seeded";
  return p;
}

EmbeddingProvider EmbeddingProvider::from_file(const std::string& path) {
  // Plain text: first line "vocab dim", then vocab lines of dim doubles.
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  int vocab = 0, dim = 0;
  in >> vocab >> dim;
  if (vocab <= 0 || dim <= 0)
    throw std::runtime_error("bad embedding file header: " + path);
  EmbeddingProvider p;
  p.table = Tensor("embedding.table", {vocab, dim});
  for (double& x : p.table.v)
    if (!(in >> x)) throw std::runtime_error("truncated embedding file: " + path);
  p.provenance = "loaded-from-file";
  return p;
}

EmbeddedPiece embed_tokens(const corpus::NewsPiece& piece,
                           const EmbeddingProvider& provider) {
  EmbeddedPiece out;
  out.T = static_cast<int>(piece.tokens.size());
  out.O = provider.dim();
  out.rows.assign(static_cast<size_t>(out.T) * out.O, 0.0);
  out.mask.assign(out.T, 1);
  for (int t = 0; t < out.T; ++t) {
    int id = piece.tokens[t];
    if (id < 0 || id >= provider.vocab_size())
      throw std::out_of_range("embed_tokens: token id " + std::to_string(id) +
                              " out of vocabulary");
    std::copy_n(provider.table.v.data() + static_cast<size_t>(id) * out.O, out.O,
                out.rows.data() + static_cast<size_t>(t) * out.O);
  }
  return out;
}

EmotionLexicon EmotionLexicon::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open emotion lexicon: " + path);
  EmotionLexicon lex;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string word, field, value;
    if (!std::getline(ss, word, '\t') || !std::getline(ss, field, '\t'))
      throw std::runtime_error(path + ": malformed line " + std::to_string(line_no));
    std::getline(ss, value, '\t');
    EmotionWord& w = lex.words[word];
    if (field.rfind("category:", 0) == 0) {
      std::string cat = field.substr(9);
      bool known = false;
      for (const char* c : kEmotionCategories) known |= cat == c;
      if (!known)
        throw std::runtime_error(path + ": unknown emotion category " + cat);
      w.category_scores[cat] = value.empty() ? 1.0 : std::stod(value);
    } else if (field == "intensity") {
      w.intensity = std::stod(value);
    } else if (field == "polarity") {
      w.polarity = std::stoi(value);
    } else if (field == "emoticon") {
      w.emoticon = true;
    } else if (field == "sentimental") {
      w.sentimental = true;
    } else if (field == "pronoun") {
      w.pronoun = true;
    } else {
      throw std::runtime_error(path + ": unknown field " + field);
    }
  }
  return lex;
}

StyleLexicon StyleLexicon::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open style lexicon: " + path);
  StyleLexicon lex;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string word, cls;
    if (!std::getline(ss, word, '\t') || !std::getline(ss, cls, '\t'))
      throw std::runtime_error(path + ": malformed line " + std::to_string(line_no));
    lex.classes[word].insert(cls);
  }
  return lex;
}

namespace {
// Maps a token that is a single punctuation mark (ASCII or the common
// fullwidth CJK forms) to its ASCII equivalent, or 0.
char punct_char(const std::string& w) {
  if (w.size() == 1 && std::ispunct(static_cast<unsigned char>(w[0]))) return w[0];
  static const std::unordered_map<std::string, char> fullwidth = {
      {"！", '!'}, {"？", '?'}, {"。", '.'}, {"，", ','},
      {"；", ';'}, {"：", ':'}, {"＠", '@'}};
  auto it = fullwidth.find(w);
  return it != fullwidth.end() ? it->second : 0;
}
bool is_punct_token(const std::string& w) { return punct_char(w) != 0; }
int uppercase_letters(const std::string& w) {
  int n = 0;
  for (unsigned char c : w)
    if (c < 0x80 && std::isupper(c)) ++n;
  return n;
}
bool is_numeral(const std::string& w) {
  bool digit = false;
  for (unsigned char c : w) {
    if (std::isdigit(c))
      digit = true;
    else if (c != '.' && c != ',' && c != '%')
      return false;
  }
  return digit;
}
}  // namespace

std::vector<double> extract_emotion(const std::vector<std::string>& words,
                                    const EmotionLexicon& lexicon,
                                    EmotionFlags* flags) {
  std::vector<double> out(kEmotionDim, 0.0);
  if (words.empty()) {
    if (flags) flags->empty_text = true;
    return out;
  }
  if (flags) flags->empty_text = false;
  const int n_cat = static_cast<int>(kEmotionCategories.size());
  double n_tokens = static_cast<double>(words.size());

  std::vector<double> hit_count(n_cat, 0.0), score_sum(n_cat, 0.0),
      intensity_sum(n_cat, 0.0);
  double pos = 0, neg = 0;
  double emoticons = 0, punct = 0, sentimental = 0, pronouns = 0, upper = 0;

  for (const auto& w : words) {
    if (is_punct_token(w)) punct += 1;
    upper += uppercase_letters(w);
    auto it = lexicon.words.find(w);
    if (it == lexicon.words.end()) continue;
    const EmotionWord& e = it->second;
    for (int c = 0; c < n_cat; ++c) {
      auto sit = e.category_scores.find(kEmotionCategories[c]);
      if (sit != e.category_scores.end()) {
        hit_count[c] += 1;
        score_sum[c] += sit->second;
        intensity_sum[c] += sit->second * e.intensity;
      }
    }
    if (e.polarity > 0) pos += 1;
    if (e.polarity < 0) neg += 1;
    if (e.emoticon) emoticons += 1;
    if (e.sentimental) sentimental += 1;
    if (e.pronoun) pronouns += 1;
  }

  double total_hits = 0;
  for (double h : hit_count) total_hits += h;
  int k = 0;
  // (a) emotional category: normalized hit mass per category
  for (int c = 0; c < n_cat; ++c) out[k++] = total_hits > 0 ? hit_count[c] / total_hits : 0.0;
  // (b) emotional lexicon: per-category score sum / token count
  for (int c = 0; c < n_cat; ++c) out[k++] = score_sum[c] / n_tokens;
  // (c) emotional intensity
  for (int c = 0; c < n_cat; ++c) out[k++] = intensity_sum[c] / n_tokens;
  // (d) sentiment score
  out[k++] = (pos - neg) / (pos + neg + 1.0);
  // (e) auxiliary per-token frequencies
  out[k++] = emoticons / n_tokens;
  out[k++] = punct / n_tokens;
  out[k++] = sentimental / n_tokens;
  out[k++] = pronouns / n_tokens;
  out[k++] = upper / n_tokens;
  return out;
}

const std::vector<std::string>& low_level_style_names() {
  static const std::vector<std::string> names = {
      "Sentence_broken", "Characters",  "Words",          "Sentences",
      "Clauses",         "Average_word_length", "Professional_words", "LW",
      "RIX",             "LIX",         "Forward_reference", "Conjs",
      "At",              "Numerals",    "Official_speech", "Time",
      "Place",           "Object",      "Uncertainty",    "Image",
      "Noun",            "Adj",         "Prep",           "Pron",
      "Verb",            "Adv",         "Question_mark",  "First_pron",
      "Second_pron",     "Interrogative_pron", "Rhetoric", "Exclamation_mark",
      "Face",            "Idiom",       "Adversative",    "Sentiment_score",
      "Adv_of_degree",   "Modal_particle", "HasHead",     "HasImage",
      "HasVideo",        "HasTag",      "HasAt",          "HasUrl"};
  return names;
}

const std::vector<std::string>& style_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {"Readability",   "Logic",      "Credibility",
                                  "Formality",     "Interactivity", "Interestingness",
                                  "Sensation",     "Integrity"};
    for (const auto& n : low_level_style_names()) v.push_back(n);
    return v;
  }();
  return names;
}

int style_dim() { return static_cast<int>(style_feature_names().size()); }

std::map<std::string, double> count_low_level_style(
    const std::vector<std::string>& words, const corpus::PieceMeta& meta,
    const StyleLexicon& lexicon) {
  std::map<std::string, double> c;
  for (const auto& n : low_level_style_names()) c[n] = 0.0;

  double n_tokens = static_cast<double>(words.size());
  double characters = 0, word_count = 0, long_words = 0;
  double sentences = 0, clause_breaks = 0;
  double pos_hits = 0, neg_hits = 0;

  // class tag -> counter name for the plain frequency counters
  static const std::vector<std::pair<std::string, std::string>> class_map = {
      {"professional", "Professional_words"},
      {"demonstrative", "Forward_reference"},
      {"conjunction", "Conjs"},
      {"official", "Official_speech"},
      {"time", "Time"},
      {"place", "Place"},
      {"object", "Object"},
      {"uncertainty", "Uncertainty"},
      {"noun", "Noun"},
      {"adj", "Adj"},
      {"prep", "Prep"},
      {"pron", "Pron"},
      {"verb", "Verb"},
      {"adv", "Adv"},
      {"first_pron", "First_pron"},
      {"second_pron", "Second_pron"},
      {"interrogative_pron", "Interrogative_pron"},
      {"rhetoric", "Rhetoric"},
      {"face", "Face"},
      {"idiom", "Idiom"},
      {"adversative", "Adversative"},
      {"degree_adverb", "Adv_of_degree"},
      {"modal_particle", "Modal_particle"},
      {"numeral", "Numerals"}};

  for (const auto& w : words) {
    characters += static_cast<double>(w.size());
    if (char p = punct_char(w)) {
      if (p == '.' || p == '!' || p == '?') sentences += 1;
      if (p == ',' || p == ';' || p == ':') clause_breaks += 1;
      if (p == '?') c["Question_mark"] += 1;
      if (p == '!') c["Exclamation_mark"] += 1;
      if (p == '@') c["At"] += 1;
      continue;
    }
    word_count += 1;
    if (w.size() >= 7) long_words += 1;
    if (is_numeral(w)) c["Numerals"] += 1;
    auto it = lexicon.classes.find(w);
    if (it != lexicon.classes.end()) {
      for (const auto& [cls, name] : class_map)
        if (it->second.count(cls)) c[name] += 1;
      if (it->second.count("positive")) pos_hits += 1;
      if (it->second.count("negative")) neg_hits += 1;
    }
  }

  c["HasHead"] = meta.has_head ? 1.0 : 0.0;
  c["HasImage"] = meta.has_image ? 1.0 : 0.0;
  c["HasVideo"] = meta.has_video ? 1.0 : 0.0;
  c["HasTag"] = meta.has_tag ? 1.0 : 0.0;
  c["HasAt"] = meta.has_at ? 1.0 : 0.0;
  c["HasUrl"] = meta.has_url ? 1.0 : 0.0;
  c["Image"] = c["HasImage"];

  if (n_tokens == 0) return c;  // text counters stay 0

  if (sentences == 0) sentences = 1;
  double clauses = sentences + clause_breaks;

  // frequency normalization for the occurrence counters
  for (auto& [name, v] : c) v /= n_tokens;

  // raw-count and ratio features overwrite the normalized defaults
  c["Characters"] = characters;
  c["Words"] = word_count;
  c["Sentences"] = sentences;
  c["Clauses"] = clauses;
  c["Average_word_length"] = word_count > 0 ? characters / word_count : 0.0;
  c["LW"] = word_count > 0 ? long_words / word_count : 0.0;
  c["RIX"] = long_words / sentences;
  c["LIX"] = (word_count > 0)
                 ? word_count / sentences + 100.0 * long_words / word_count
                 : 0.0;
  c["Sentence_broken"] = clauses / sentences - 1.0;
  c["Sentiment_score"] = (pos_hits - neg_hits) / (pos_hits + neg_hits + 1.0);
  c["HasHead"] = meta.has_head ? 1.0 : 0.0;
  c["HasImage"] = meta.has_image ? 1.0 : 0.0;
  c["HasVideo"] = meta.has_video ? 1.0 : 0.0;
  c["HasTag"] = meta.has_tag ? 1.0 : 0.0;
  c["HasAt"] = meta.has_at ? 1.0 : 0.0;
  c["HasUrl"] = meta.has_url ? 1.0 : 0.0;
  c["Image"] = c["HasImage"];
  return c;
}

std::vector<double> compose_style(const std::map<std::string, double>& counters) {
  auto get = [&](const std::string& name) {
    auto it = counters.find(name);
    if (it == counters.end())
      throw std::invalid_argument("compose_style: missing counter " + name);
    return it->second;
  };
  double readability =
      -(get("Sentence_broken") + get("Characters") + get("Words") + get("Sentences") +
        get("Clauses") + get("Average_word_length") + get("Professional_words") +
        get("LW") + get("RIX") + get("LIX"));
  double logic = get("Forward_reference") + get("Conjs");
  double credibility = get("At") + get("Numerals") + get("Official_speech") +
                       get("Time") + get("Place") + get("Object") -
                       get("Uncertainty") + get("Image");
  double formality = get("Noun") + get("Adj") + get("Prep") - get("Pron") -
                     get("Verb") - get("Adv") - get("Sentence_broken");
  double interactivity = get("Question_mark") + get("First_pron") +
                         get("Second_pron") + get("Interrogative_pron");
  double interestingness = get("Rhetoric") + get("Exclamation_mark") + get("Face") +
                           get("Idiom") + get("Adversative") + get("Adj") +
                           get("Image");
  double sensation = get("Sentiment_score") + get("Adv_of_degree") +
                     get("Modal_particle") + get("First_pron") + get("Second_pron") +
                     get("Exclamation_mark") + get("Question_mark");
  double integrity = 2 * get("HasHead") + 2 * get("HasImage") + 2 * get("HasVideo") +
                     2 * get("HasTag") + get("HasAt") + get("HasUrl");

  std::vector<double> out = {readability,   logic,     credibility,    formality,
                             interactivity, interestingness, sensation, integrity};
  for (const auto& name : low_level_style_names()) out.push_back(get(name));
  return out;
}

void MinMaxNormalizer::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("normalizer: no rows");
  size_t dim = rows.front().size();
  lo_.assign(dim, std::numeric_limits<double>::infinity());
  hi_.assign(dim, -std::numeric_limits<double>::infinity());
  for (const auto& r : rows) {
    if (r.size() != dim) throw std::invalid_argument("normalizer: ragged rows");
    for (size_t k = 0; k < dim; ++k) {
      lo_[k] = std::min(lo_[k], r[k]);
      hi_[k] = std::max(hi_[k], r[k]);
    }
  }
}

std::vector<double> MinMaxNormalizer::apply(const std::vector<double>& row) const {
  std::vector<double> out(row.size());
  for (size_t k = 0; k < row.size(); ++k) {
    double span = hi_[k] - lo_[k];
    out[k] = span > 0 ? std::clamp((row[k] - lo_[k]) / span, 0.0, 1.0) : 0.0;
  }
  return out;
}

void extract_features(corpus::Corpus& corpus, const EmotionLexicon& emo,
                      const StyleLexicon& sty) {
  auto& pieces = corpus.pieces;
  int n = static_cast<int>(pieces.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    auto& p = pieces[i];
    if (p.words.empty()) continue;
    p.emotion = extract_emotion(p.words, emo);
    p.style = compose_style(count_low_level_style(p.words, p.meta, sty));
  }
  corpus.emo_dim = kEmotionDim;
  corpus.sty_dim = style_dim();
}

}  // namespace m3fend::features
