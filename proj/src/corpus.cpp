#include "m3fend/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

using nlohmann::json;

namespace m3fend::corpus {

void SynthSpec::validate() const {
  if (n_domains <= 0) throw std::invalid_argument("synth: n_domains must be > 0");
  if (per_domain_per_class <= 0)
    throw std::invalid_argument("synth: per_domain_per_class must be > 0");
  if (vocab_size <= 10) throw std::invalid_argument("synth: vocab too small");
  for (const auto& r : recipes) {
    if (r.domain < 0 || r.domain >= n_domains)
      throw std::invalid_argument("synth: recipe domain out of range");
    if (r.margin < 0) throw std::invalid_argument("synth: margin must be >= 0");
    if (r.signal_view != "sem" && r.signal_view != "emo" && r.signal_view != "sty" &&
        r.signal_view != "none")
      throw std::invalid_argument("synth: unknown signal view " + r.signal_view);
  }
}

std::string SplitReport::to_json() const {
  json j;
  for (const auto& [d, c] : counts)
    j["domains"][std::to_string(d)] = {{"train", c[0]}, {"val", c[1]}, {"test", c[2]}};
  j["fallback_domains"] = fallback_domains;
  return j.dump();
}

int word_to_id(const std::string& word, int vocab_size) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : word) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return static_cast<int>(h % static_cast<std::uint64_t>(vocab_size));
}

std::vector<std::string> tokenize(const std::string& text) {
  // Whitespace split; punctuation runs become their own tokens.
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  auto is_punct = [](unsigned char c) {
    return std::ispunct(c) && c != '\'' && c != '-';
  };
  for (size_t i = 0; i < text.size(); ++i) {
    unsigned char c = text[i];
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && is_punct(c)) {
      flush();
      out.push_back(std::string(1, static_cast<char>(c)));
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  flush();
  return out;
}

namespace {

NewsPiece parse_record(const json& j, int line_no, int max_seq_len, int vocab_size) {
  NewsPiece p;
  auto require = [&](const char* field) {
    if (!j.contains(field))
      throw ParseError("line " + std::to_string(line_no) + ": missing field '" +
                       field + "'");
  };
  require("id");
  require("domain");
  require("label");
  if (!j.contains("text") && !j.contains("tokens"))
    throw ParseError("line " + std::to_string(line_no) +
                     ": record needs 'text' or 'tokens'");
  try {
    p.id = j.at("id").is_string() ? j.at("id").get<std::string>()
                                  : j.at("id").dump();
    p.domain = j.at("domain").get<int>();
    p.label = j.at("label").get<int>();
    if (j.contains("tokens"))
      p.tokens = j.at("tokens").get<std::vector<int>>();
    if (j.contains("text")) {
      p.words = tokenize(j.at("text").get<std::string>());
      if (p.tokens.empty())
        for (const auto& w : p.words) p.tokens.push_back(word_to_id(w, vocab_size));
    }
    if (j.contains("emotion")) p.emotion = j.at("emotion").get<std::vector<double>>();
    if (j.contains("style")) p.style = j.at("style").get<std::vector<double>>();
    if (j.contains("meta")) {
      const json& m = j.at("meta");
      p.meta.has_image = m.value("has_image", false);
      p.meta.has_video = m.value("has_video", false);
      p.meta.has_tag = m.value("has_tag", false);
      p.meta.has_at = m.value("has_at", false);
      p.meta.has_url = m.value("has_url", false);
      p.meta.has_head = m.value("has_head", false);
    }
  } catch (const json::exception& e) {
    throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (p.label != 0 && p.label != 1)
    throw SchemaError("line " + std::to_string(line_no) + ": label must be 0 or 1");
  if (p.domain < 0)
    throw SchemaError("line " + std::to_string(line_no) + ": negative domain id");
  if (static_cast<int>(p.tokens.size()) > max_seq_len) {
    p.tokens.resize(max_seq_len);
    if (static_cast<int>(p.words.size()) > max_seq_len) p.words.resize(max_seq_len);
  }
  return p;
}

}  // namespace

Corpus load_corpus(const std::string& path, const std::string& schema,
                   int max_seq_len, int vocab_size) {
  if (schema != "jsonl") throw SchemaError("unknown corpus schema: " + schema);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  Corpus c;
  c.vocab_size = vocab_size;
  int declared_n = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1 && j.value("header", false)) {
      declared_n = j.value("n_domains", -1);
      if (j.contains("vocab_size")) c.vocab_size = j.at("vocab_size").get<int>();
      if (j.contains("emo_dim")) c.emo_dim = j.at("emo_dim").get<int>();
      if (j.contains("sty_dim")) c.sty_dim = j.at("sty_dim").get<int>();
      if (j.contains("domain_names"))
        for (const auto& [k, v] : j.at("domain_names").items())
          c.domain_names[std::stoi(k)] = v.get<std::string>();
      continue;
    }
    NewsPiece p = parse_record(j, line_no, max_seq_len, c.vocab_size);
    if (declared_n >= 0 && p.domain >= declared_n)
      throw SchemaError("line " + std::to_string(line_no) + ": domain id " +
                        std::to_string(p.domain) + " >= declared n_domains " +
                        std::to_string(declared_n));
    for (int tok : p.tokens)
      if (tok < 0 || tok >= c.vocab_size)
        throw SchemaError("line " + std::to_string(line_no) +
                          ": token id out of vocabulary");
    c.pieces.push_back(std::move(p));
  }
  std::sort(c.pieces.begin(), c.pieces.end(),
            [](const NewsPiece& a, const NewsPiece& b) { return a.id < b.id; });
  for (size_t i = 1; i < c.pieces.size(); ++i)
    if (c.pieces[i].id == c.pieces[i - 1].id)
      throw SchemaError("duplicate piece id: " + c.pieces[i].id);
  int max_d = -1;
  for (const auto& p : c.pieces) max_d = std::max(max_d, p.domain);
  c.n_domains = declared_n >= 0 ? declared_n : max_d + 1;
  for (const auto& p : c.pieces) {
    if (!p.emotion.empty()) {
      if (c.emo_dim == 0) c.emo_dim = static_cast<int>(p.emotion.size());
      if (static_cast<int>(p.emotion.size()) != c.emo_dim)
        throw SchemaError("piece " + p.id + ": emotion width mismatch");
    }
    if (!p.style.empty()) {
      if (c.sty_dim == 0) c.sty_dim = static_cast<int>(p.style.size());
      if (static_cast<int>(p.style.size()) != c.sty_dim)
        throw SchemaError("piece " + p.id + ": style width mismatch");
    }
  }
  return c;
}

SplitResult split_corpus(const Corpus& corpus, double train_ratio, double val_ratio,
                         double test_ratio, std::uint64_t seed) {
  double ratios[3] = {train_ratio, val_ratio, test_ratio};
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 ||
      std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must be positive and sum to 1");

  SplitResult res;
  for (Corpus* part : {&res.train, &res.val, &res.test}) {
    part->n_domains = corpus.n_domains;
    part->vocab_size = corpus.vocab_size;
    part->emo_dim = corpus.emo_dim;
    part->sty_dim = corpus.sty_dim;
    part->domain_names = corpus.domain_names;
  }

  std::map<int, std::vector<int>> by_domain;
  for (size_t i = 0; i < corpus.pieces.size(); ++i)
    by_domain[corpus.pieces[i].domain].push_back(static_cast<int>(i));

  for (auto& [d, idx] : by_domain) {
    int n = static_cast<int>(idx.size());
    if (n < 3) {
      for (int i : idx) res.train.pieces.push_back(corpus.pieces[i]);
      res.report.counts[d] = {n, 0, 0};
      res.report.fallback_domains.push_back(d);
      continue;
    }
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (d + 1)));
    std::shuffle(idx.begin(), idx.end(), rng);

    // largest-remainder apportionment
    int floors[3];
    double rema[3];
    int assigned = 0;
    for (int k = 0; k < 3; ++k) {
      double q = ratios[k] * n;
      floors[k] = static_cast<int>(std::floor(q + 1e-12));
      rema[k] = q - floors[k];
      assigned += floors[k];
    }
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) {
      if (rema[a] != rema[b]) return rema[a] > rema[b];
      return a < b;
    });
    for (int k = 0; assigned < n; ++k, ++assigned) floors[order[k % 3]]++;

    int pos = 0;
    Corpus* parts[3] = {&res.train, &res.val, &res.test};
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < floors[k]; ++j) parts[k]->pieces.push_back(corpus.pieces[idx[pos++]]);
    res.report.counts[d] = {floors[0], floors[1], floors[2]};
  }
  for (Corpus* part : {&res.train, &res.val, &res.test})
    std::sort(part->pieces.begin(), part->pieces.end(),
              [](const NewsPiece& a, const NewsPiece& b) { return a.id < b.id; });
  return res;
}

Corpus generate_synthetic_corpus(const SynthSpec& spec) {
  spec.validate();
  Corpus c;
  c.n_domains = spec.n_domains;
  c.vocab_size = spec.vocab_size;
  c.emo_dim = spec.emo_dim;
  c.sty_dim = spec.sty_dim;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 0.25);
  std::uniform_int_distribution<int> any_tok(20, spec.vocab_size - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto recipe_for = [&](int d) -> SynthRecipe {
    for (const auto& r : spec.recipes)
      if (r.domain == d) return r;
    return SynthRecipe{d, "none", 0.0};
  };

  int counter = 0;
  for (int d = 0; d < spec.n_domains; ++d) {
    SynthRecipe rec = recipe_for(d);
    for (int label = 0; label <= 1; ++label) {
      for (int i = 0; i < spec.per_domain_per_class; ++i) {
        NewsPiece p;
        {
          std::ostringstream oss;
          oss << "synth-" << std::setw(6) << std::setfill('0') << counter++;
          p.id = oss.str();
        }
        p.domain = d;
        p.label = label;
        // Token ids >= 20 are neutral; ids [0,10) mark real, [10,20) fake
        // when the domain's signal is semantic.
        double p_signal =
            rec.signal_view == "sem" ? std::min(0.9, rec.margin / 4.0) : 0.0;
        for (int t = 0; t < spec.seq_len; ++t) {
          if (unif(rng) < p_signal)
            p.tokens.push_back(label == 1 ? 10 + (t % 10) : t % 10);
          else
            p.tokens.push_back(any_tok(rng));
        }
        p.emotion.resize(spec.emo_dim);
        p.style.resize(spec.sty_dim);
        for (double& x : p.emotion) x = noise(rng);
        for (double& x : p.style) x = noise(rng);
        double shift = (label == 1 ? 0.5 : -0.5) * rec.margin;
        if (rec.signal_view == "emo") p.emotion[0] += shift;
        if (rec.signal_view == "sty") p.style[0] += shift;
        c.pieces.push_back(std::move(p));
      }
    }
  }
  return c;
}

SynthSpec synth_spec_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  SynthSpec s;
  s.n_domains = j.value("n_domains", s.n_domains);
  s.per_domain_per_class = j.value("per_domain_per_class", s.per_domain_per_class);
  s.vocab_size = j.value("vocab_size", s.vocab_size);
  s.seq_len = j.value("seq_len", s.seq_len);
  s.emo_dim = j.value("emo_dim", s.emo_dim);
  s.sty_dim = j.value("sty_dim", s.sty_dim);
  s.seed = j.value("seed", s.seed);
  if (j.contains("recipes"))
    for (const auto& r : j.at("recipes"))
      s.recipes.push_back({r.value("domain", 0), r.value("signal_view", "none"),
                           r.value("margin", 2.0)});
  s.validate();
  return s;
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  json header = {{"header", true},
                 {"n_domains", corpus.n_domains},
                 {"vocab_size", corpus.vocab_size},
                 {"emo_dim", corpus.emo_dim},
                 {"sty_dim", corpus.sty_dim}};
  if (!corpus.domain_names.empty()) {
    json names;
    for (const auto& [d, n] : corpus.domain_names) names[std::to_string(d)] = n;
    header["domain_names"] = names;
  }
  out << header.dump() << "\n";
  for (const auto& p : corpus.pieces) {
    json j = {{"id", p.id}, {"domain", p.domain}, {"label", p.label},
              {"tokens", p.tokens}};
    if (!p.words.empty()) {
      std::string text;
      for (size_t i = 0; i < p.words.size(); ++i) {
        if (i) text += ' ';
        text += p.words[i];
      }
      j["text"] = text;
    }
    if (!p.emotion.empty()) j["emotion"] = p.emotion;
    if (!p.style.empty()) j["style"] = p.style;
    j["meta"] = {{"has_image", p.meta.has_image}, {"has_video", p.meta.has_video},
                 {"has_tag", p.meta.has_tag},     {"has_at", p.meta.has_at},
                 {"has_url", p.meta.has_url},     {"has_head", p.meta.has_head}};
    out << j.dump() << "\n";
  }
}

}  // namespace m3fend::corpus
