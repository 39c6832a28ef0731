#include <doctest.h>

#include <cmath>
#include <random>

#include "m3fend/model.hpp"

using namespace m3fend;

namespace {

config::ModelConfig tiny_config() {
  config::ModelConfig c;
  c.n_domains = 2;
  c.vocab_size = 60;
  c.max_seq_len = 10;
  c.embed_dim = 8;
  c.view_dim = 6;
  c.hidden_dim = 10;
  c.char_dim = 5;
  c.heads = 2;
  c.mem_units = 2;
  c.kernel_widths = {1, 2};
  c.conv_maps = 3;
  c.emo_dim = 4;
  c.sty_dim = 4;
  return c;
}

corpus::Corpus tiny_corpus(int per_class = 20, std::uint64_t seed = 3) {
  corpus::SynthSpec spec;
  spec.n_domains = 2;
  spec.per_domain_per_class = per_class;
  spec.recipes = {{0, "emo", 2.0}, {1, "sty", 2.0}};
  spec.vocab_size = 60;
  spec.seq_len = 8;
  spec.emo_dim = 4;
  spec.sty_dim = 4;
  spec.seed = seed;
  return corpus::generate_synthetic_corpus(spec);
}

Tensor* find_param(model::Model& m, const std::string& name) {
  for (Tensor* p : m.params())
    if (p->name == name) return p;
  return nullptr;
}

}  // namespace

TEST_CASE("forward produces a valid probability and simplex traces") {
  auto c = tiny_corpus();
  model::Model m(tiny_config(), {}, 17);
  m.init_event_memories(c, 17);
  for (int i = 0; i < 10; ++i) {
    auto tr = m.forward(c.pieces[i]);
    CHECK(tr.p_hat > 0.0);
    CHECK(tr.p_hat < 1.0);
    double vs = 0, ws = 0;
    for (double x : tr.v) {
      CHECK(x >= 0);
      vs += x;
    }
    for (double x : tr.w) {
      CHECK(x >= 0);
      ws += x;
    }
    CHECK(vs == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ws == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tr.w.size() == 2);
    CHECK(tr.v.size() == 2);
    CHECK(tr.n.size() == 8 + 4 + 4);
  }
  // determinism
  auto t1 = m.forward(c.pieces[0]);
  auto t2 = m.forward(c.pieces[0]);
  CHECK(t1.p_hat == t2.p_hat);
}

TEST_CASE("forward validates its input") {
  auto c = tiny_corpus();
  model::Model m(tiny_config(), {}, 1);
  corpus::NewsPiece empty = c.pieces[0];
  empty.tokens.clear();
  CHECK_THROWS(m.forward(empty));
  corpus::NewsPiece bad_domain = c.pieces[0];
  bad_domain.domain = 7;
  CHECK_THROWS(m.forward(bad_domain));
  corpus::NewsPiece bad_width = c.pieces[0];
  bad_width.emotion.pop_back();
  CHECK_THROWS(m.forward(bad_width));
}

TEST_CASE("every ablation variant yields a working forward pass") {
  auto c = tiny_corpus();
  for (const auto& name : config::known_variants()) {
    auto flags = config::flags_for_variant(name);
    model::Model m(tiny_config(), flags, 23);
    if (flags.use_event_memory) m.init_event_memories(c, 23);
    auto tr = m.forward(c.pieces[3]);
    CHECK(std::isfinite(tr.p_hat));
    CHECK(tr.p_hat > 0.0);
    CHECK(tr.p_hat < 1.0);
  }
  CHECK_THROWS(config::flags_for_variant("w/o Everything"));
}

TEST_CASE("disabling all views is rejected") {
  config::AblationFlags flags;
  flags.use_sem = flags.use_emo = flags.use_sty = false;
  CHECK_THROWS(model::Model(tiny_config(), flags, 1));
}

TEST_CASE("memory ablation zeroes the similarity trace") {
  auto c = tiny_corpus();
  auto flags = config::flags_for_variant("w/o Memory");
  model::Model m(tiny_config(), flags, 5);
  auto tr = m.forward(c.pieces[0]);
  for (double x : tr.v) CHECK(x == 0.0);
}

TEST_CASE("adapter ablation and zeroed gate both give uniform weights") {
  auto c = tiny_corpus();
  {
    model::Model m(tiny_config(), config::flags_for_variant("w/o Adapter"), 5);
    m.init_event_memories(c, 5);
    auto tr = m.forward(c.pieces[0]);
    for (double x : tr.w) CHECK(x == doctest::Approx(0.5));
  }
  {
    model::Model m(tiny_config(), {}, 5);
    m.init_event_memories(c, 5);
    find_param(m, "adapter.l2.W")->fill(0.0);
    find_param(m, "adapter.l2.b")->fill(0.0);
    auto tr = m.forward(c.pieces[0]);
    for (double x : tr.w) CHECK(x == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("zeroed predictor head answers one half") {
  auto c = tiny_corpus();
  model::Model m(tiny_config(), {}, 8);
  m.init_event_memories(c, 8);
  find_param(m, "predictor.l2.W")->fill(0.0);
  find_param(m, "predictor.l2.b")->fill(0.0);
  auto tr = m.forward(c.pieces[0]);
  CHECK(tr.p_hat == doctest::Approx(0.5).epsilon(1e-12));
  // prediction is monotone in the final bias
  find_param(m, "predictor.l2.b")->fill(10.0);
  CHECK(m.forward(c.pieces[0]).p_hat > 0.99);
  find_param(m, "predictor.l2.b")->fill(-10.0);
  CHECK(m.forward(c.pieces[0]).p_hat < 0.01);
}

TEST_CASE("init_event_memories requires every domain populated") {
  auto c = tiny_corpus();
  corpus::Corpus only0 = c;
  only0.pieces.erase(
      std::remove_if(only0.pieces.begin(), only0.pieces.end(),
                     [](const corpus::NewsPiece& p) { return p.domain == 1; }),
      only0.pieces.end());
  model::Model m(tiny_config(), {}, 2);
  CHECK_THROWS(m.init_event_memories(only0, 2));
}

TEST_CASE("checkpoint roundtrip reproduces the forward pass exactly") {
  auto c = tiny_corpus();
  model::Model m(tiny_config(), {}, 31);
  m.init_event_memories(c, 31);
  memory::write_event_memory(m.news_rep(c.pieces[0]), c.pieces[0].domain, m.bank(),
                             c.pieces[0].id);
  auto text = m.checkpoint_json(31);
  auto back = model::Model::from_checkpoint_json(text);
  for (int i = 0; i < 8; ++i) {
    auto a = m.forward(c.pieces[i]);
    auto b = back.forward(c.pieces[i]);
    CHECK(a.p_hat == b.p_hat);
    CHECK(a.v == b.v);
    CHECK(a.w == b.w);
  }
  CHECK_THROWS(model::Model::from_checkpoint_json("{\"schema\":\"nope\"}"));
}

TEST_CASE("full-model gradients match central differences") {
  auto c = tiny_corpus();
  model::Model m(tiny_config(), {}, 41);
  m.init_event_memories(c, 41);
  const auto& piece = c.pieces[1];

  auto loss_at = [&]() {
    ad::Tape t;
    ad::Var loss;
    m.forward(piece, &t, &loss);
    return t.val(loss)[0];
  };
  for (Tensor* p : m.params()) p->zero_grad();
  {
    ad::Tape t;
    ad::Var loss;
    m.forward(piece, &t, &loss);
    t.backward(loss);
  }
  std::mt19937_64 rng(1);
  double h = 1e-5;
  for (Tensor* p : m.params()) {
    // spot-check a few coordinates per tensor
    int checks = std::min(3, p->size());
    for (int k = 0; k < checks; ++k) {
      int i = static_cast<int>(rng() % p->size());
      double keep = p->v[i];
      p->v[i] = keep + h;
      double fp = loss_at();
      p->v[i] = keep - h;
      double fm = loss_at();
      p->v[i] = keep;
      double num = (fp - fm) / (2 * h);
      double ana = p->g[i];
      double scale = std::max({1e-4, std::fabs(num), std::fabs(ana)});
      INFO(p->name, "[", i, "] analytic=", ana, " numeric=", num);
      CHECK(std::fabs(num - ana) / scale <= 1e-3);
    }
  }
}

TEST_CASE("training is deterministic and early stopping honors patience") {
  auto c = tiny_corpus(30, 9);
  auto split = corpus::split_corpus(c, 0.6, 0.2, 0.2, 9);
  config::TrainConfig tc;
  tc.learning_rate = 5e-3;
  tc.batch_size = 16;
  tc.max_epochs = 12;
  tc.patience = 3;
  tc.seed = 9;

  model::Model m1(tiny_config(), {}, 9);
  m1.init_event_memories(split.train, 9);
  auto r1 = model::train(m1, split.train, split.val, tc);

  model::Model m2(tiny_config(), {}, 9);
  m2.init_event_memories(split.train, 9);
  auto r2 = model::train(m2, split.train, split.val, tc);

  REQUIRE(r1.history.size() == r2.history.size());
  for (size_t e = 0; e < r1.history.size(); ++e) {
    CHECK(r1.history[e].train_loss == r2.history[e].train_loss);
    CHECK(r1.history[e].val_macro_f1 == r2.history[e].val_macro_f1);
  }
  CHECK(r1.best_epoch >= 0);
  if (r1.history.size() < static_cast<size_t>(tc.max_epochs)) {
    CHECK(static_cast<int>(r1.history.size()) - 1 - r1.best_epoch == tc.patience);
  }
  // best-epoch restore: evaluating val again reproduces the recorded best F1
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : split.val.pieces) {
    scores.push_back(m1.forward(p).p_hat);
    labels.push_back(p.label);
  }
  CHECK(metrics::macro_f1(scores, labels) ==
        doctest::Approx(r1.best_val_f1).epsilon(1e-12));
}

TEST_CASE("evaluate assembles a report and per-domain adapter weights") {
  auto c = tiny_corpus();
  model::Model m(tiny_config(), {}, 13);
  m.init_event_memories(c, 13);
  auto out = model::evaluate(m, c);
  CHECK(out.report.count == static_cast<int>(c.pieces.size()));
  CHECK(out.report.per_domain_f1.size() == 2);
  REQUIRE(out.mean_w_by_domain.size() == 2);
  for (const auto& row : out.mean_w_by_domain) {
    double s = 0;
    for (double x : row) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(m.channel_labels() ==
        std::vector<std::string>{"sem0", "emo0", "sty0"});
  auto abs_a = m.abs_exponents();
  REQUIRE(abs_a.size() == 2);  // one row per head
  for (const auto& row : abs_a) {
    CHECK(row.size() == 3);
    for (double x : row) CHECK(x >= 0.0);
  }
}
