#include "m3fend/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace m3fend::model {

Model::Model(const ModelConfig& cfg, const AblationFlags& flags, std::uint64_t seed)
    : cfg_(cfg), flags_(flags) {
  if (!flags.use_sem && !flags.use_emo && !flags.use_sty)
    throw std::invalid_argument("model: at least one view must be enabled");
  if (cfg_.emo_dim <= 0 || cfg_.sty_dim <= 0)
    throw std::invalid_argument("model: emo_dim and sty_dim must be set");
  build(seed);
}

void Model::build(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& c = cfg_;
  embed_ = features::EmbeddingProvider::random(c.vocab_size, c.embed_dim,
                                               rng());
  embed_.trainable = c.trainable_embedding;

  int k_sem = flags_.use_sem ? c.k_sem : 0;
  int k_emo = flags_.use_emo ? c.k_emo : 0;
  int k_sty = flags_.use_sty ? c.k_sty : 0;
  for (int i = 0; i < k_sem; ++i)
    sem_.emplace_back("sem" + std::to_string(i), c.embed_dim, c.view_dim,
                      c.kernel_widths, c.conv_maps, rng);
  for (int i = 0; i < k_emo; ++i)
    emo_.emplace_back("emo" + std::to_string(i), c.emo_dim, c.hidden_dim,
                      c.view_dim, rng);
  for (int i = 0; i < k_sty; ++i)
    sty_.emplace_back("sty" + std::to_string(i), c.sty_dim, c.hidden_dim,
                      c.view_dim, rng);
  pool_ = views::AttentionPool("pool", c.embed_dim, rng);

  if (flags_.use_interactor) {
    inter_ = interactor::InteractorParams(c.heads, k_sem, k_emo, k_sty, rng);
  } else {
    int k_total = k_sem + k_emo + k_sty;
    no_inter_proj_ =
        views::Linear("no_inter_proj", k_total * c.view_dim, c.heads * c.view_dim, rng);
  }

  int I = c.embed_dim + c.emo_dim + c.sty_dim;
  bank_ = memory::DomainMemoryBank(c.n_domains, c.mem_units, I, c.char_dim, c.tau,
                                   c.beta, rng);

  adapter_l1_ = views::Linear("adapter.l1", 2 * c.char_dim, c.hidden_dim, rng);
  adapter_l2_ = views::Linear("adapter.l2", c.hidden_dim, c.heads, rng);
  pred_l1_ = views::Linear("predictor.l1", c.view_dim, c.hidden_dim, rng);
  pred_l2_ = views::Linear("predictor.l2", c.hidden_dim, 1, rng);

  params_.clear();
  if (embed_.trainable) params_.push_back(&embed_.table);
  for (auto& ch : sem_) ch.collect(params_);
  for (auto& ch : emo_) ch.collect(params_);
  for (auto& ch : sty_) ch.collect(params_);
  pool_.collect(params_);
  if (flags_.use_interactor)
    inter_.collect(params_);
  else
    no_inter_proj_.collect(params_);
  bank_.collect(params_);
  if (flags_.use_adapter) {
    adapter_l1_.collect(params_);
    adapter_l2_.collect(params_);
  }
  pred_l1_.collect(params_);
  pred_l2_.collect(params_);
}

namespace {
ad::Var feature_var(ad::Tape& t, const std::vector<double>& x, int want,
                    const char* what) {
  if (static_cast<int>(x.size()) != want)
    throw std::invalid_argument(std::string("model: ") + what +
                                " width mismatch: got " + std::to_string(x.size()) +
                                ", expected " + std::to_string(want));
  return t.constant(x, static_cast<int>(x.size()));
}
}  // namespace

ForwardTrace Model::forward(const corpus::NewsPiece& piece, ad::Tape* tape_out,
                            ad::Var* loss_out) const {
  ad::Tape local;
  ad::Tape& t = tape_out ? *tape_out : local;
  const auto& c = cfg_;
  auto* self = const_cast<Model*>(this);

  if (piece.domain < 0 || piece.domain >= c.n_domains)
    throw std::out_of_range("model: piece domain out of range");
  if (piece.tokens.empty())
    throw std::invalid_argument("model: empty content for piece " + piece.id);

  // token embeddings
  ad::Var X;
  if (embed_.trainable) {
    X = ad::lookup(t.param(self->embed_.table), piece.tokens);
  } else {
    auto emb = features::embed_tokens(piece, embed_);
    X = t.constant(emb.rows, emb.T, emb.O);
  }
  std::vector<char> mask(piece.tokens.size(), 1);

  ad::Var emo_in = feature_var(t, piece.emotion, c.emo_dim, "emotion");
  ad::Var sty_in = feature_var(t, piece.style, c.sty_dim, "style");

  // view bank
  std::vector<ad::Var> r_sem, r_emo, r_sty;
  for (const auto& ch : sem_) r_sem.push_back(ch.fwd(t, X));
  for (const auto& ch : emo_) r_emo.push_back(ch.fwd(t, emo_in));
  for (const auto& ch : sty_) r_sty.push_back(ch.fwd(t, sty_in));

  // cross-view representations
  std::vector<ad::Var> zs;
  if (flags_.use_interactor) {
    zs = interactor::interact(t, r_sem, r_emo, r_sty, inter_);
  } else {
    std::vector<ad::Var> all;
    for (auto v : r_sem) all.push_back(v);
    for (auto v : r_emo) all.push_back(v);
    for (auto v : r_sty) all.push_back(v);
    ad::Var flat = no_inter_proj_.fwd(t, ad::concat(all));
    for (int h = 0; h < c.heads; ++h)
      zs.push_back(ad::slice(flat, h * c.view_dim, c.view_dim));
  }

  // news representation n for the memory bank
  ad::Var pooled = pool_.fwd(t, X, mask);
  ad::Var n = views::news_representation(t, pooled, emo_in, sty_in);

  ForwardTrace trace;
  trace.n.assign(t.val(n), t.val(n) + n.size());

  // domain information
  ad::Var C = t.param(const_cast<Tensor&>(bank_.C));
  ad::Var c_d = ad::row(C, piece.domain);
  ad::Var u;
  if (flags_.use_event_memory) {
    ad::Var W = t.param(const_cast<Tensor&>(bank_.W));
    ad::Var V = t.param(const_cast<Tensor&>(bank_.V));
    ad::Var nW = ad::matvec_t(W, n);
    std::vector<ad::Var> reads;
    for (int j = 0; j < c.n_domains; ++j) {
      ad::Var Mj = t.constant(bank_.M[j], bank_.units, bank_.rep_dim);
      ad::Var scores = ad::matvec(Mj, nW);
      ad::Var sim = ad::softmax(scores, bank_.tau);
      reads.push_back(ad::matvec_t(Mj, sim));
    }
    ad::Var nV = ad::matvec_t(V, n);
    std::vector<ad::Var> dscore;
    for (int j = 0; j < c.n_domains; ++j) dscore.push_back(ad::dot(nV, reads[j]));
    ad::Var v = ad::softmax(ad::concat(dscore));
    trace.v.assign(t.val(v), t.val(v) + v.size());
    u = ad::matvec_t(C, v);
  } else {
    std::vector<double> zeros(c.char_dim, 0.0);
    u = t.constant(zeros, c.char_dim);
    trace.v.assign(c.n_domains, 0.0);
  }

  // adapter
  ad::Var r;
  if (flags_.use_adapter) {
    ad::Var gate_in = ad::concat({c_d, u});
    ad::Var logits = adapter_l2_.fwd(t, ad::relu(adapter_l1_.fwd(t, gate_in)));
    ad::Var w = ad::softmax(logits);
    trace.w.assign(t.val(w), t.val(w) + w.size());
    r = ad::weighted_sum(zs, w);
  } else {
    std::vector<double> uniform(zs.size(), 1.0 / zs.size());
    ad::Var w = t.constant(uniform, static_cast<int>(zs.size()));
    trace.w = uniform;
    r = ad::weighted_sum(zs, w);
  }

  ad::Var p_hat = ad::sigmoid(pred_l2_.fwd(t, ad::relu(pred_l1_.fwd(t, r))));
  trace.p_hat = t.val(p_hat)[0];
  if (!std::isfinite(trace.p_hat))
    throw std::runtime_error("model: non-finite prediction for piece " + piece.id);

  if (loss_out) *loss_out = ad::bce_loss(p_hat, static_cast<double>(piece.label));
  return trace;
}

std::vector<double> Model::news_rep(const corpus::NewsPiece& piece) const {
  ad::Tape t;
  auto emb = features::embed_tokens(piece, embed_);
  if (emb.T == 0)
    throw std::invalid_argument("model: empty content for piece " + piece.id);
  ad::Var X = t.constant(emb.rows, emb.T, emb.O);
  std::vector<char> mask(emb.T, 1);
  ad::Var pooled = pool_.fwd(t, X, mask);
  ad::Var emo_in = feature_var(t, piece.emotion, cfg_.emo_dim, "emotion");
  ad::Var sty_in = feature_var(t, piece.style, cfg_.sty_dim, "style");
  ad::Var n = views::news_representation(t, pooled, emo_in, sty_in);
  return {t.val(n), t.val(n) + n.size()};
}

void Model::init_event_memories(const corpus::Corpus& train, std::uint64_t seed) {
  std::vector<std::vector<std::vector<double>>> by_domain(cfg_.n_domains);
  for (const auto& p : train.pieces) by_domain[p.domain].push_back(news_rep(p));
  for (int d = 0; d < cfg_.n_domains; ++d) {
    if (by_domain[d].empty())
      throw std::runtime_error("init_event_memories: no training pieces for domain " +
                               std::to_string(d));
    auto centers = memory::kmeans(by_domain[d], cfg_.mem_units,
                                  seed ^ (0xc2b2ae3d27d4eb4full * (d + 1)));
    auto& M = bank_.M[d];
    for (int i = 0; i < cfg_.mem_units; ++i)
      std::copy(centers[i].begin(), centers[i].end(),
                M.begin() + static_cast<size_t>(i) * bank_.rep_dim);
  }
}

std::vector<std::vector<double>> Model::abs_exponents() const {
  std::vector<std::vector<double>> out;
  if (!flags_.use_interactor) return out;
  for (const auto& h : inter_.heads) {
    std::vector<double> rowv;
    for (const Tensor* a : {&h.a_sem, &h.a_emo, &h.a_sty})
      for (double x : a->v) rowv.push_back(std::abs(x));
    out.push_back(std::move(rowv));
  }
  return out;
}

std::vector<std::string> Model::channel_labels() const {
  std::vector<std::string> labels;
  for (size_t i = 0; i < sem_.size(); ++i) labels.push_back("sem" + std::to_string(i));
  for (size_t i = 0; i < emo_.size(); ++i) labels.push_back("emo" + std::to_string(i));
  for (size_t i = 0; i < sty_.size(); ++i) labels.push_back("sty" + std::to_string(i));
  return labels;
}

std::string Model::checkpoint_json(std::uint64_t seed) const {
  json j;
  j["schema"] = "m3fend-checkpoint-v1";
  j["seed"] = seed;
  const auto& c = cfg_;
  j["model"] = {{"n_domains", c.n_domains},   {"vocab_size", c.vocab_size},
                {"max_seq_len", c.max_seq_len}, {"embed_dim", c.embed_dim},
                {"view_dim", c.view_dim},     {"hidden_dim", c.hidden_dim},
                {"char_dim", c.char_dim},     {"k_sem", c.k_sem},
                {"k_emo", c.k_emo},           {"k_sty", c.k_sty},
                {"heads", c.heads},           {"mem_units", c.mem_units},
                {"tau", c.tau},               {"beta", c.beta},
                {"kernel_widths", c.kernel_widths}, {"conv_maps", c.conv_maps},
                {"emo_dim", c.emo_dim},       {"sty_dim", c.sty_dim},
                {"trainable_embedding", c.trainable_embedding}};
  j["flags"] = {{"use_sem", flags_.use_sem},
                {"use_emo", flags_.use_emo},
                {"use_sty", flags_.use_sty},
                {"use_interactor", flags_.use_interactor},
                {"use_event_memory", flags_.use_event_memory},
                {"use_adapter", flags_.use_adapter}};
  json tensors;
  auto dump_tensor = [&](const Tensor& p) {
    tensors[p.name] = {{"shape", p.shape}, {"data", p.v}};
  };
  for (const Tensor* p : params_) dump_tensor(*p);
  dump_tensor(embed_.table);
  j["tensors"] = tensors;
  j["memory"] = json::parse(memory::snapshot_to_json(bank_));
  return j.dump();
}

Model Model::from_checkpoint_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("schema", "") != "m3fend-checkpoint-v1")
    throw std::runtime_error("checkpoint: unknown schema");
  ModelConfig c;
  const json& m = j.at("model");
  c.n_domains = m.at("n_domains");
  c.vocab_size = m.at("vocab_size");
  c.max_seq_len = m.at("max_seq_len");
  c.embed_dim = m.at("embed_dim");
  c.view_dim = m.at("view_dim");
  c.hidden_dim = m.at("hidden_dim");
  c.char_dim = m.at("char_dim");
  c.k_sem = m.at("k_sem");
  c.k_emo = m.at("k_emo");
  c.k_sty = m.at("k_sty");
  c.heads = m.at("heads");
  c.mem_units = m.at("mem_units");
  c.tau = m.at("tau");
  c.beta = m.at("beta");
  c.kernel_widths = m.at("kernel_widths").get<std::vector<int>>();
  c.conv_maps = m.at("conv_maps");
  c.emo_dim = m.at("emo_dim");
  c.sty_dim = m.at("sty_dim");
  c.trainable_embedding = m.at("trainable_embedding");
  AblationFlags f;
  const json& jf = j.at("flags");
  f.use_sem = jf.at("use_sem");
  f.use_emo = jf.at("use_emo");
  f.use_sty = jf.at("use_sty");
  f.use_interactor = jf.at("use_interactor");
  f.use_event_memory = jf.at("use_event_memory");
  f.use_adapter = jf.at("use_adapter");

  Model model(c, f, j.value("seed", 0ull));
  const json& tensors = j.at("tensors");
  auto load_tensor = [&](Tensor& p) {
    if (!tensors.contains(p.name))
      throw std::runtime_error("checkpoint: missing tensor " + p.name);
    auto data = tensors.at(p.name).at("data").get<std::vector<double>>();
    if (static_cast<int>(data.size()) != p.size())
      throw std::runtime_error("checkpoint: shape mismatch for " + p.name);
    p.v = std::move(data);
  };
  for (Tensor* p : model.params_) load_tensor(*p);
  load_tensor(model.embed_.table);
  model.bank_ = memory::snapshot_from_json(j.at("memory").dump());
  model.rebuild_registry();
  return model;
}

void Model::rebuild_registry() {
  params_.clear();
  if (embed_.trainable) params_.push_back(&embed_.table);
  for (auto& ch : sem_) ch.collect(params_);
  for (auto& ch : emo_) ch.collect(params_);
  for (auto& ch : sty_) ch.collect(params_);
  pool_.collect(params_);
  if (flags_.use_interactor)
    inter_.collect(params_);
  else
    no_inter_proj_.collect(params_);
  bank_.collect(params_);
  if (flags_.use_adapter) {
    adapter_l1_.collect(params_);
    adapter_l2_.collect(params_);
  }
  pred_l1_.collect(params_);
  pred_l2_.collect(params_);
}

std::string TrainResult::history_json() const {
  json j = json::array();
  for (const auto& e : history)
    j.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"val_acc", e.val_acc},
                 {"val_macro_f1", e.val_macro_f1},
                 {"val_auc", e.val_auc}});
  json out = {{"history", j}, {"best_epoch", best_epoch}, {"best_val_f1", best_val_f1}};
  return out.dump(2);
}

namespace {

struct AdamState {
  std::vector<std::vector<double>> m, v;
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;
  explicit AdamState(const std::vector<Tensor*>& params) {
    for (const Tensor* p : params) {
      m.emplace_back(p->size(), 0.0);
      v.emplace_back(p->size(), 0.0);
    }
  }
  void step(std::vector<Tensor*>& params, double lr) {
    ++t;
    double bc1 = 1.0 - std::pow(b1, t);
    double bc2 = 1.0 - std::pow(b2, t);
    for (size_t i = 0; i < params.size(); ++i) {
      Tensor& p = *params[i];
      for (int k = 0; k < p.size(); ++k) {
        double g = p.g[k];
        m[i][k] = b1 * m[i][k] + (1 - b1) * g;
        v[i][k] = b2 * v[i][k] + (1 - b2) * g * g;
        p.v[k] -= lr * (m[i][k] / bc1) / (std::sqrt(v[i][k] / bc2) + eps);
      }
    }
  }
};

struct Snapshot {
  std::vector<std::vector<double>> values;
  std::string memory_json;
};

Snapshot take_snapshot(Model& model) {
  Snapshot s;
  for (Tensor* p : model.params()) s.values.push_back(p->v);
  s.memory_json = memory::snapshot_to_json(model.bank());
  return s;
}

void restore_snapshot(Model& model, const Snapshot& s) {
  auto& params = model.params();
  for (size_t i = 0; i < params.size(); ++i) params[i]->v = s.values[i];
  model.bank() = memory::snapshot_from_json(s.memory_json);
  model.rebuild_registry();
}

}  // namespace

TrainResult train(Model& model, const corpus::Corpus& train_set,
                  const corpus::Corpus& val_set, const TrainConfig& tc) {
  if (train_set.pieces.empty() || val_set.pieces.empty())
    throw std::invalid_argument("train: empty corpus");
  TrainResult result;
  AdamState adam(model.params());
  std::mt19937_64 shuffle_rng(tc.seed ^ 0x6a09e667f3bcc908ull);

  Snapshot best;
  int stale = 0;

  std::vector<int> order(train_set.pieces.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0;
    long loss_count = 0;

    for (size_t start = 0; start < order.size(); start += tc.batch_size) {
      size_t end = std::min(order.size(), start + tc.batch_size);
      int bsz = static_cast<int>(end - start);
      for (Tensor* p : model.params()) p->zero_grad();

      std::vector<std::pair<int, std::vector<double>>> writes;  // piece idx, n
      for (size_t s = start; s < end; ++s) {
        const auto& piece = train_set.pieces[order[s]];
        ad::Tape tape;
        ad::Var loss;
        ForwardTrace tr = model.forward(piece, &tape, &loss);
        double lv = tape.val(loss)[0];
        if (!std::isfinite(lv))
          throw std::runtime_error("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", piece " + piece.id);
        loss_sum += lv;
        ++loss_count;
        tape.backward(loss, 1.0 / bsz);
        writes.emplace_back(order[s], std::move(tr.n));
      }

      adam.step(model.params(), tc.learning_rate);

      if (model.flags().use_event_memory) {
        for (auto& [idx, n] : writes)
          memory::write_event_memory(n, train_set.pieces[idx].domain, model.bank(),
                                     train_set.pieces[idx].id);
      }
    }

    // validation
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& p : val_set.pieces) {
      scores.push_back(model.forward(p).p_hat);
      labels.push_back(p.label);
    }
    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_sum / std::max(1l, loss_count);
    es.val_acc = metrics::accuracy(scores, labels);
    es.val_macro_f1 = metrics::macro_f1(scores, labels);
    bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                std::count(labels.begin(), labels.end(), 0) > 0;
    es.val_auc = both ? metrics::auc(scores, labels) : 0.0;
    result.history.push_back(es);

    if (es.val_macro_f1 > result.best_val_f1 || result.best_epoch < 0) {
      result.best_val_f1 = es.val_macro_f1;
      result.best_epoch = epoch;
      best = take_snapshot(model);
      stale = 0;
    } else {
      ++stale;
      if (stale >= tc.patience) break;
    }
  }
  if (result.best_epoch >= 0) restore_snapshot(model, best);
  return result;
}

EvalOutput evaluate(const Model& model, const corpus::Corpus& corpus) {
  if (corpus.pieces.empty()) throw std::invalid_argument("evaluate: empty corpus");
  EvalOutput out;
  std::vector<double> scores;
  std::vector<int> labels, domains;
  int H = model.cfg().heads;
  std::vector<std::vector<double>> w_sum(model.cfg().n_domains,
                                         std::vector<double>(H, 0.0));
  std::vector<int> w_count(model.cfg().n_domains, 0);
  for (const auto& p : corpus.pieces) {
    ForwardTrace tr = model.forward(p);
    scores.push_back(tr.p_hat);
    labels.push_back(p.label);
    domains.push_back(p.domain);
    for (int h = 0; h < H; ++h) w_sum[p.domain][h] += tr.w[h];
    w_count[p.domain]++;
  }
  out.report = metrics::build_report(scores, labels, domains);
  for (int d = 0; d < model.cfg().n_domains; ++d) {
    if (w_count[d] > 0)
      for (int h = 0; h < H; ++h) w_sum[d][h] /= w_count[d];
  }
  out.mean_w_by_domain = std::move(w_sum);
  return out;
}

}  // namespace m3fend::model
