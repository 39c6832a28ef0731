// Command-line surface for the pipeline: feature extraction, synthesis,
// training, evaluation, ablation sweeps, memory inspection.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "m3fend/config.hpp"
#include "m3fend/corpus.hpp"
#include "m3fend/features.hpp"
#include "m3fend/kernels.hpp"
#include "m3fend/memory.hpp"
#include "m3fend/metrics.hpp"
#include "m3fend/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace m3fend;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw std::invalid_argument(what + " not found: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Timestamps go only here, never into result JSON.
void append_log(const std::string& out_dir, const std::string& line) {
  fs::create_directories(out_dir);
  std::ofstream log(out_dir + "/run.log", std::ios::app);
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%F %T", std::localtime(&now));
  log << "[" << buf << "] " << line << "\n";
}

std::vector<std::string> emotion_feature_names() {
  std::vector<std::string> names;
  for (const char* c : features::kEmotionCategories)
    names.push_back(std::string("category:") + c);
  for (const char* c : features::kEmotionCategories)
    names.push_back(std::string("lexicon:") + c);
  for (const char* c : features::kEmotionCategories)
    names.push_back(std::string("intensity:") + c);
  names.push_back("sentiment_score");
  for (const char* a : {"emoticon_freq", "punct_freq", "sentimental_freq",
                        "pronoun_freq", "uppercase_freq"})
    names.push_back(a);
  return names;
}

struct Normalizers {
  features::MinMaxNormalizer emotion, style;
};

Normalizers fit_normalizers(const corpus::Corpus& train) {
  std::vector<std::vector<double>> emo, sty;
  for (const auto& p : train.pieces) {
    emo.push_back(p.emotion);
    sty.push_back(p.style);
  }
  Normalizers n;
  n.emotion.fit(emo);
  n.style.fit(sty);
  return n;
}

void apply_normalizers(corpus::Corpus& c, const Normalizers& n) {
  for (auto& p : c.pieces) {
    p.emotion = n.emotion.apply(p.emotion);
    p.style = n.style.apply(p.style);
  }
}

json normalizers_to_json(const Normalizers& n) {
  return {{"emotion", {{"lo", n.emotion.lo()}, {"hi", n.emotion.hi()}}},
          {"style", {{"lo", n.style.lo()}, {"hi", n.style.hi()}}}};
}

Normalizers normalizers_from_json(const json& j) {
  Normalizers n;
  n.emotion.set(j.at("emotion").at("lo").get<std::vector<double>>(),
                j.at("emotion").at("hi").get<std::vector<double>>());
  n.style.set(j.at("style").at("lo").get<std::vector<double>>(),
              j.at("style").at("hi").get<std::vector<double>>());
  return n;
}

config::RunConfig load_run_config(const std::string& path, std::uint64_t* seed_override) {
  require_file(path, "config file");
  auto rc = config::RunConfig::from_json_file(path);
  if (seed_override) rc.train.seed = *seed_override;
  rc.validate();
  return rc;
}

corpus::Corpus load_with_features(const config::RunConfig& rc) {
  require_file(rc.corpus_path, "corpus file");
  auto c = corpus::load_corpus(rc.corpus_path, "jsonl", rc.model.max_seq_len,
                               rc.model.vocab_size);
  bool need_features = false;
  for (const auto& p : c.pieces)
    if (p.emotion.empty() || p.style.empty()) need_features = true;
  if (need_features) {
    if (rc.lexicon_dir.empty())
      throw std::invalid_argument(
          "corpus has raw text without features; --lexicon-dir (or lexicon_dir "
          "in the config) is required");
    require_file(rc.lexicon_dir + "/emotion.tsv", "emotion lexicon");
    require_file(rc.lexicon_dir + "/style.tsv", "style lexicon");
    auto emo = features::EmotionLexicon::load_tsv(rc.lexicon_dir + "/emotion.tsv");
    auto sty = features::StyleLexicon::load_tsv(rc.lexicon_dir + "/style.tsv");
    features::extract_features(c, emo, sty);
  }
  return c;
}

int cmd_extract(const std::string& corpus_path, const std::string& lexicon_dir,
                const std::string& out_path) {
  require_file(corpus_path, "corpus file");
  require_file(lexicon_dir + "/emotion.tsv", "emotion lexicon");
  require_file(lexicon_dir + "/style.tsv", "style lexicon");
  auto c = corpus::load_corpus(corpus_path);
  auto emo = features::EmotionLexicon::load_tsv(lexicon_dir + "/emotion.tsv");
  auto sty = features::StyleLexicon::load_tsv(lexicon_dir + "/style.tsv");
  features::extract_features(c, emo, sty);

  std::ostringstream out;
  json header = {{"header", true},
                 {"feature_order_version", features::kFeatureOrderVersion},
                 {"emotion_dim", features::kEmotionDim},
                 {"style_dim", features::style_dim()},
                 {"emotion_names", emotion_feature_names()},
                 {"style_names", features::style_feature_names()}};
  out << header.dump() << "\n";
  for (const auto& p : c.pieces) {
    json rec = {{"id", p.id},
                {"domain", p.domain},
                {"label", p.label},
                {"emotion", p.emotion},
                {"style", p.style}};
    out << rec.dump() << "\n";
  }
  write_text(out_path, out.str());
  std::cout << "wrote " << c.pieces.size() << " feature records to " << out_path
            << "\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path) {
  require_file(spec_path, "synthesis spec");
  std::ifstream in(spec_path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto spec = corpus::synth_spec_from_json(buf.str());
  spec.validate();
  auto c = corpus::generate_synthetic_corpus(spec);
  corpus::save_corpus_jsonl(c, out_path);
  std::cout << "wrote " << c.pieces.size() << " pieces to " << out_path << "\n";
  return 0;
}

struct TrainArtifacts {
  model::TrainResult result;
  model::EvalOutput test_eval;
  std::string checkpoint;  // model checkpoint json + normalizers
  corpus::SplitReport split_report;
};

TrainArtifacts run_training(config::RunConfig rc) {
  auto c = load_with_features(rc);
  if (rc.model.emo_dim == 0) rc.model.emo_dim = c.emo_dim;
  if (rc.model.sty_dim == 0) rc.model.sty_dim = c.sty_dim;
  if (rc.model.n_domains < c.n_domains) rc.model.n_domains = c.n_domains;
  rc.validate();

  auto split = corpus::split_corpus(c, rc.train_ratio, rc.val_ratio, rc.test_ratio,
                                    rc.train.seed);
  auto norms = fit_normalizers(split.train);
  apply_normalizers(split.train, norms);
  apply_normalizers(split.val, norms);
  apply_normalizers(split.test, norms);

  model::Model m(rc.model, rc.flags, rc.train.seed);
  if (rc.flags.use_event_memory) m.init_event_memories(split.train, rc.train.seed);
  TrainArtifacts art;
  art.split_report = split.report;
  art.result = model::train(m, split.train, split.val, rc.train);
  art.test_eval = model::evaluate(m, split.test);

  json ckpt = json::parse(m.checkpoint_json(rc.train.seed));
  ckpt["normalizers"] = normalizers_to_json(norms);
  art.checkpoint = ckpt.dump();
  return art;
}

int cmd_train(const std::string& config_path, std::uint64_t* seed_override,
              const std::string& out_dir_flag) {
  auto rc = load_run_config(config_path, seed_override);
  if (!out_dir_flag.empty()) rc.out_dir = out_dir_flag;
  append_log(rc.out_dir, "train start, config " + config_path);

  auto art = run_training(rc);
  write_text(rc.out_dir + "/split_report.json", art.split_report.to_json());
  write_text(rc.out_dir + "/history.json", art.result.history_json());
  write_text(rc.out_dir + "/metrics.json", art.test_eval.report.to_json());
  write_text(rc.out_dir + "/checkpoint.json", art.checkpoint);

  append_log(rc.out_dir, "train done, best epoch " +
                             std::to_string(art.result.best_epoch));
  std::cout << "best epoch " << art.result.best_epoch << ", val macro-F1 "
            << art.result.best_val_f1 << ", test macro-F1 "
            << art.test_eval.report.macro_f1 << "\n";
  return 0;
}

model::Model load_checkpoint(const std::string& path, Normalizers* norms) {
  require_file(path, "checkpoint");
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str());
  if (norms && j.contains("normalizers"))
    *norms = normalizers_from_json(j.at("normalizers"));
  return model::Model::from_checkpoint_json(buf.str());
}

int cmd_eval(const std::string& checkpoint_path, const std::string& corpus_path,
             const std::string& lexicon_dir, const std::string& out_path) {
  Normalizers norms;
  auto m = load_checkpoint(checkpoint_path, &norms);
  config::RunConfig rc;
  rc.corpus_path = corpus_path;
  rc.lexicon_dir = lexicon_dir;
  rc.model = m.cfg();
  auto c = load_with_features(rc);
  if (c.n_domains > m.cfg().n_domains)
    throw std::invalid_argument(
        "domain count mismatch: corpus has " + std::to_string(c.n_domains) +
        " domains but the checkpoint was trained with " +
        std::to_string(m.cfg().n_domains));
  if (c.emo_dim != m.cfg().emo_dim || c.sty_dim != m.cfg().sty_dim)
    throw std::invalid_argument("feature width mismatch between corpus and checkpoint");
  if (norms.emotion.fitted()) apply_normalizers(c, norms);
  auto out = model::evaluate(m, c);
  std::string text = out.report.to_json();
  if (out_path.empty())
    std::cout << text << "\n";
  else {
    write_text(out_path, text);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_ablate(const std::string& config_path, std::vector<std::string> variants,
               std::uint64_t* seed_override, const std::string& out_dir_flag) {
  auto rc = load_run_config(config_path, seed_override);
  if (!out_dir_flag.empty()) rc.out_dir = out_dir_flag;
  // full model row always present, listed first
  if (std::find(variants.begin(), variants.end(), "full") == variants.end())
    variants.insert(variants.begin(), "full");
  for (const auto& v : variants) config::flags_for_variant(v);  // reject unknowns

  json table = json::array();
  for (const auto& v : variants) {
    config::RunConfig run = rc;
    run.flags = config::flags_for_variant(v);
    append_log(rc.out_dir, "ablate variant " + v);
    auto art = run_training(run);
    json row = {{"variant", v},
                {"macro_f1", art.test_eval.report.macro_f1},
                {"auc", art.test_eval.report.auc},
                {"spauc", art.test_eval.report.spauc}};
    json pd;
    for (const auto& [d, f1] : art.test_eval.report.per_domain_f1)
      pd[std::to_string(d)] = f1;
    row["per_domain_f1"] = pd;
    table.push_back(row);
    std::cout << v << ": macro-F1 " << art.test_eval.report.macro_f1 << "\n";
  }
  json out = {{"schema", "m3fend-ablation-v1"},
              {"seed", rc.train.seed},
              {"rows", table}};
  write_text(rc.out_dir + "/ablation.json", out.dump(2));
  std::cout << "wrote " << rc.out_dir << "/ablation.json\n";
  return 0;
}

int cmd_inspect_memory(const std::string& checkpoint_path,
                       const std::string& corpus_path, const std::string& piece_id,
                       const std::string& text, const std::string& out_path) {
  Normalizers norms;
  auto m = load_checkpoint(checkpoint_path, &norms);

  corpus::NewsPiece piece;
  if (!piece_id.empty()) {
    require_file(corpus_path, "corpus file");
    auto c = corpus::load_corpus(corpus_path, "jsonl", m.cfg().max_seq_len,
                                 m.cfg().vocab_size);
    bool found = false;
    for (auto& p : c.pieces)
      if (p.id == piece_id) {
        piece = p;
        found = true;
      }
    if (!found) throw std::invalid_argument("piece id not found: " + piece_id);
    if (norms.emotion.fitted()) {
      piece.emotion = norms.emotion.apply(piece.emotion);
      piece.style = norms.style.apply(piece.style);
    }
  } else if (!text.empty()) {
    piece.id = "(inline)";
    piece.words = corpus::tokenize(text);
    for (const auto& w : piece.words)
      piece.tokens.push_back(corpus::word_to_id(w, m.cfg().vocab_size));
    if (static_cast<int>(piece.tokens.size()) > m.cfg().max_seq_len)
      piece.tokens.resize(m.cfg().max_seq_len);
    piece.emotion.assign(m.cfg().emo_dim, 0.0);
    piece.style.assign(m.cfg().sty_dim, 0.0);
  } else {
    throw std::invalid_argument("inspect-memory needs --id (with --corpus) or --text");
  }

  auto n = m.news_rep(piece);
  const auto& bank = m.bank();
  std::vector<std::vector<double>> reads;
  for (int d = 0; d < bank.n_domains; ++d)
    reads.push_back(memory::read_event_memory(n, bank, d));
  auto v = memory::domain_similarity(n, reads, bank);

  json rows = json::array();
  for (int d = 0; d < bank.n_domains; ++d) {
    auto sim = memory::read_similarity(n, bank, d);
    int best = 0;
    for (size_t q = 1; q < sim.size(); ++q)
      if (sim[q] > sim[best]) best = static_cast<int>(q);
    std::vector<std::string> exemplars;
    const auto& ring = bank.exemplars[d][best].ids;
    for (auto it = ring.rbegin(); it != ring.rend() && exemplars.size() < 3; ++it)
      exemplars.push_back(*it);
    rows.push_back({{"domain", d},
                    {"similarity", v[d]},
                    {"nearest_unit", best},
                    {"exemplars", exemplars}});
  }
  json report = {{"schema", "m3fend-case-v1"},
                 {"piece", piece.id},
                 {"n_domains", bank.n_domains},
                 {"rows", rows}};
  std::string out_text = report.dump(2);
  if (out_path.empty())
    std::cout << out_text << "\n";
  else {
    write_text(out_path, out_text);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_print_config(const std::string& config_path) {
  if (config_path.empty()) {
    config::RunConfig rc;
    std::cout << rc.to_json() << "\n";
  } else {
    std::cout << load_run_config(config_path, nullptr).to_json() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::configure_threads();
  CLI::App app{"multi-view multi-domain fake news detection pipeline"};
  app.require_subcommand(1);

  std::string config_path, corpus_path, lexicon_dir, checkpoint_path;
  std::string out_path, piece_id, inline_text, spec_path;
  std::vector<std::string> variants;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* extract = app.add_subcommand("extract", "dump emotion/style features");
  extract->add_option("--corpus", corpus_path)->required();
  extract->add_option("--lexicon-dir", lexicon_dir)->required();
  extract->add_option("--out", out_path)->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--spec", spec_path)->required();
  synth->add_option("--out", out_path)->required();

  auto* train = app.add_subcommand("train", "split, train, evaluate, checkpoint");
  train->add_option("--config", config_path)->required();
  train->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
  train->add_option("--out", out_path);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  eval->add_option("--checkpoint", checkpoint_path)->required();
  eval->add_option("--corpus", corpus_path)->required();
  eval->add_option("--lexicon-dir", lexicon_dir);
  eval->add_option("--out", out_path);

  auto* ablate = app.add_subcommand("ablate", "run ablation variants");
  ablate->add_option("--config", config_path)->required();
  ablate->add_option("--variant", variants, "repeatable; paper names accepted");
  ablate->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
  ablate->add_option("--out", out_path);

  auto* inspect = app.add_subcommand("inspect-memory", "per-domain case report");
  inspect->add_option("--checkpoint", checkpoint_path)->required();
  inspect->add_option("--corpus", corpus_path);
  inspect->add_option("--id", piece_id);
  inspect->add_option("--text", inline_text);
  inspect->add_option("--out", out_path);

  auto* printc = app.add_subcommand("print-config", "print defaults or a parsed config");
  printc->add_option("--config", config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::uint64_t* seed_ptr = seed_set ? &seed : nullptr;
    if (*extract) return cmd_extract(corpus_path, lexicon_dir, out_path);
    if (*synth) return cmd_synth(spec_path, out_path);
    if (*train) return cmd_train(config_path, seed_ptr, out_path);
    if (*eval) return cmd_eval(checkpoint_path, corpus_path, lexicon_dir, out_path);
    if (*ablate) return cmd_ablate(config_path, variants, seed_ptr, out_path);
    if (*inspect)
      return cmd_inspect_memory(checkpoint_path, corpus_path, piece_id, inline_text,
                                out_path);
    if (*printc) return cmd_print_config(config_path);
  } catch (const corpus::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const corpus::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
