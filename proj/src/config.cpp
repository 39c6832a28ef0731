#include "m3fend/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace m3fend::config {

const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> v = {
      "full",           "w/o SemView", "w/o EmoView", "w/o StyView",
      "w/o Interactor", "w/o Memory",  "w/o Adapter"};
  return v;
}

AblationFlags flags_for_variant(const std::string& name) {
  AblationFlags f;
  if (name == "full") return f;
  if (name == "w/o SemView") {
    f.use_sem = false;
  } else if (name == "w/o EmoView") {
    f.use_emo = false;
  } else if (name == "w/o StyView") {
    f.use_sty = false;
  } else if (name == "w/o Interactor") {
    f.use_interactor = false;
  } else if (name == "w/o Memory") {
    f.use_event_memory = false;
  } else if (name == "w/o Adapter") {
    f.use_adapter = false;
  } else {
    throw std::invalid_argument("unknown ablation variant: " + name);
  }
  return f;
}

void RunConfig::validate() const {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  check(model.tau > 0, "model.tau must be > 0");
  check(model.beta > 0 && model.beta < 1, "model.beta must be in (0,1)");
  check(model.k_sem >= 1 && model.k_sem <= 10, "model.k_sem must be in [1,10]");
  check(model.k_emo >= 1 && model.k_emo <= 10, "model.k_emo must be in [1,10]");
  check(model.k_sty >= 1 && model.k_sty <= 10, "model.k_sty must be in [1,10]");
  check(model.heads >= 1 && model.heads <= 10, "model.heads must be in [1,10]");
  check(model.mem_units >= 1 && model.mem_units <= 64,
        "model.mem_units must be in [1,64]");
  check(model.n_domains >= 1, "model.n_domains must be >= 1");
  check(model.view_dim >= 1, "model.view_dim must be >= 1");
  check(model.char_dim >= 1, "model.char_dim must be >= 1");
  check(model.embed_dim >= 1, "model.embed_dim must be >= 1");
  check(model.conv_maps >= 1, "model.conv_maps must be >= 1");
  check(!model.kernel_widths.empty(), "model.kernel_widths must be non-empty");
  check(train.learning_rate > 0, "train.learning_rate must be > 0");
  check(train.batch_size >= 1, "train.batch_size must be >= 1");
  check(train.max_epochs >= 1, "train.max_epochs must be >= 1");
  check(train.patience >= 1, "train.patience must be >= 1");
  check(train.n_runs >= 1, "train.n_runs must be >= 1");
  check(flags.use_sem || flags.use_emo || flags.use_sty,
        "at least one view must be enabled");
  double rsum = train_ratio + val_ratio + test_ratio;
  check(train_ratio > 0 && val_ratio > 0 && test_ratio > 0 &&
            std::abs(rsum - 1.0) <= 1e-9,
        "split ratios must be positive and sum to 1");
  if (!errs.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
  }
}

namespace {
void parse_model(const json& j, ModelConfig& m) {
  m.n_domains = j.value("n_domains", m.n_domains);
  m.vocab_size = j.value("vocab_size", m.vocab_size);
  m.max_seq_len = j.value("max_seq_len", m.max_seq_len);
  m.embed_dim = j.value("embed_dim", m.embed_dim);
  m.view_dim = j.value("view_dim", m.view_dim);
  m.hidden_dim = j.value("hidden_dim", m.hidden_dim);
  m.char_dim = j.value("char_dim", m.char_dim);
  m.k_sem = j.value("k_sem", m.k_sem);
  m.k_emo = j.value("k_emo", m.k_emo);
  m.k_sty = j.value("k_sty", m.k_sty);
  m.heads = j.value("heads", m.heads);
  m.mem_units = j.value("mem_units", m.mem_units);
  m.tau = j.value("tau", m.tau);
  m.beta = j.value("beta", m.beta);
  if (j.contains("kernel_widths"))
    m.kernel_widths = j.at("kernel_widths").get<std::vector<int>>();
  m.conv_maps = j.value("conv_maps", m.conv_maps);
  m.emo_dim = j.value("emo_dim", m.emo_dim);
  m.sty_dim = j.value("sty_dim", m.sty_dim);
  m.trainable_embedding = j.value("trainable_embedding", m.trainable_embedding);
}
}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  RunConfig c;
  c.corpus_path = j.value("corpus", c.corpus_path);
  c.lexicon_dir = j.value("lexicon_dir", c.lexicon_dir);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.checkpoint_path = j.value("checkpoint", c.checkpoint_path);
  if (j.contains("ratios")) {
    auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw std::invalid_argument("ratios must have 3 entries");
    c.train_ratio = r[0];
    c.val_ratio = r[1];
    c.test_ratio = r[2];
  }
  if (j.contains("model")) parse_model(j.at("model"), c.model);
  if (j.contains("train")) {
    const json& t = j.at("train");
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
    c.train.patience = t.value("patience", c.train.patience);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.n_runs = t.value("n_runs", c.train.n_runs);
  }
  if (j.contains("variant")) c.flags = flags_for_variant(j.at("variant"));
  if (j.contains("flags")) {
    const json& f = j.at("flags");
    c.flags.use_sem = f.value("use_sem", c.flags.use_sem);
    c.flags.use_emo = f.value("use_emo", c.flags.use_emo);
    c.flags.use_sty = f.value("use_sty", c.flags.use_sty);
    c.flags.use_interactor = f.value("use_interactor", c.flags.use_interactor);
    c.flags.use_event_memory = f.value("use_event_memory", c.flags.use_event_memory);
    c.flags.use_adapter = f.value("use_adapter", c.flags.use_adapter);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string RunConfig::to_json() const {
  json j;
  j["corpus"] = corpus_path;
  j["lexicon_dir"] = lexicon_dir;
  j["out_dir"] = out_dir;
  j["checkpoint"] = checkpoint_path;
  j["ratios"] = {train_ratio, val_ratio, test_ratio};
  j["model"] = {{"n_domains", model.n_domains},
                {"vocab_size", model.vocab_size},
                {"max_seq_len", model.max_seq_len},
                {"embed_dim", model.embed_dim},
                {"view_dim", model.view_dim},
                {"hidden_dim", model.hidden_dim},
                {"char_dim", model.char_dim},
                {"k_sem", model.k_sem},
                {"k_emo", model.k_emo},
                {"k_sty", model.k_sty},
                {"heads", model.heads},
                {"mem_units", model.mem_units},
                {"tau", model.tau},
                {"beta", model.beta},
                {"kernel_widths", model.kernel_widths},
                {"conv_maps", model.conv_maps},
                {"emo_dim", model.emo_dim},
                {"sty_dim", model.sty_dim},
                {"trainable_embedding", model.trainable_embedding}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"seed", train.seed},
                {"n_runs", train.n_runs}};
  j["flags"] = {{"use_sem", flags.use_sem},
                {"use_emo", flags.use_emo},
                {"use_sty", flags.use_sty},
                {"use_interactor", flags.use_interactor},
                {"use_event_memory", flags.use_event_memory},
                {"use_adapter", flags.use_adapter}};
  return j.dump(2);
}

}  // namespace m3fend::config
