// End-to-end acceptance suite. Each criterion prints one pass/fail line;
// the exit code is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "m3fend/config.hpp"
#include "m3fend/corpus.hpp"
#include "m3fend/interactor.hpp"
#include "m3fend/memory.hpp"
#include "m3fend/metrics.hpp"
#include "m3fend/model.hpp"

using namespace m3fend;
using nlohmann::json;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int g_failures = 0;

struct Criterion {
  const char* name;
  clk::time_point t0 = clk::now();
  bool ok = true;
  std::string detail;
  explicit Criterion(const char* n) : name(n) {}
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
  ~Criterion() {
    double secs = std::chrono::duration<double>(clk::now() - t0).count();
    std::printf("[%s] %s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", name, secs,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor vec_tensor(const std::string& name, const std::vector<double>& v) {
  Tensor t;
  t.name = name;
  t.shape = {static_cast<int>(v.size())};
  t.v = v;
  t.g.assign(v.size(), 0.0);
  return t;
}

// ------------------------------------------------------------------
void criterion_interactor_oracle() {
  Criterion c("1 interactor log-form matches product-form oracle");
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> rv(0.05, 5.0), av(-2.0, 2.0);
  const int D = 16, k = 2, H = 3;
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    interactor::ViewBankValues bank;
    for (int i = 0; i < 3 * k; ++i) {
      std::vector<double> r(D);
      for (auto& x : r) x = rv(rng);
      bank.channels.push_back(std::move(r));
    }
    for (int h = 0; h < H; ++h) {
      std::vector<double> a_sem(k), a_emo(k), a_sty(k);
      for (auto* a : {&a_sem, &a_emo, &a_sty})
        for (auto& x : *a) x = av(rng);
      auto oracle =
          interactor::head_forward_product(bank, a_sem, a_emo, a_sty, k, k, k);
      interactor::HeadParams head;
      head.a_sem = vec_tensor("a_sem", a_sem);
      head.a_emo = vec_tensor("a_emo", a_emo);
      head.a_sty = vec_tensor("a_sty", a_sty);
      ad::Tape t;
      std::vector<ad::Var> sem, emo, sty;
      for (int i = 0; i < k; ++i) {
        sem.push_back(t.constant(bank.channels[i], D));
        emo.push_back(t.constant(bank.channels[k + i], D));
        sty.push_back(t.constant(bank.channels[2 * k + i], D));
      }
      auto z = interactor::head_forward_log(t, sem, emo, sty, head);
      for (int i = 0; i < D; ++i)
        worst = std::max(worst,
                         std::fabs(t.val(z)[i] - oracle[i]) / std::fabs(oracle[i]));
    }
  }
  c.expect(worst <= 1e-6, "max relative deviation " + std::to_string(worst));
}

// ------------------------------------------------------------------
void criterion_gradient_audit() {
  Criterion c("2 gradient audit on the reduced model");
  config::ModelConfig mc;
  mc.n_domains = 2;
  mc.vocab_size = 50;
  mc.max_seq_len = 10;
  mc.embed_dim = 12;   // O
  mc.view_dim = 8;     // D
  mc.hidden_dim = 12;
  mc.char_dim = 6;
  mc.heads = 2;
  mc.mem_units = 2;
  mc.kernel_widths = {1, 2, 3};
  mc.conv_maps = 4;
  mc.emo_dim = 6;
  mc.sty_dim = 6;

  corpus::SynthSpec spec;
  spec.n_domains = 2;
  spec.per_domain_per_class = 4;
  spec.recipes = {{0, "emo", 2.0}, {1, "sty", 2.0}};
  spec.vocab_size = 50;
  spec.seq_len = 8;
  spec.emo_dim = 6;
  spec.sty_dim = 6;
  spec.seed = 7;
  auto corpus = corpus::generate_synthetic_corpus(spec);

  model::Model m(mc, {}, 55);
  m.init_event_memories(corpus, 55);
  std::vector<corpus::NewsPiece> batch(corpus.pieces.begin(),
                                       corpus.pieces.begin() + 4);

  auto batch_loss = [&]() {
    double total = 0;
    for (const auto& p : batch) {
      ad::Tape t;
      ad::Var loss;
      m.forward(p, &t, &loss);
      total += t.val(loss)[0];
    }
    return total / batch.size();
  };
  for (Tensor* p : m.params()) p->zero_grad();
  for (const auto& p : batch) {
    ad::Tape t;
    ad::Var loss;
    m.forward(p, &t, &loss);
    t.backward(loss, 1.0 / batch.size());
  }

  const double h = 1e-4;
  double worst = 0;
  std::string worst_at;
  for (Tensor* p : m.params()) {
    for (int i = 0; i < p->size(); ++i) {
      double keep = p->v[i];
      p->v[i] = keep + h;
      double fp = batch_loss();
      p->v[i] = keep - h;
      double fm = batch_loss();
      p->v[i] = keep;
      double num = (fp - fm) / (2 * h);
      double ana = p->g[i];
      double rel = std::fabs(num - ana) / std::max({1e-4, std::fabs(num), std::fabs(ana)});
      if (rel > worst) {
        worst = rel;
        worst_at = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  c.expect(worst <= 1e-3,
           "worst relative error " + std::to_string(worst) + " at " + worst_at);

  // view extractors in isolation at the tighter tolerance
  std::mt19937_64 rng(77);
  views::MlpChannel ch("iso", 6, 12, 8, rng);
  std::vector<Tensor*> params;
  ch.collect(params);
  std::vector<double> xv(6);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& x : xv) x = nd(rng);
  auto iso_loss = [&]() {
    ad::Tape t;
    auto out = ad::sum(ch.fwd(t, t.constant(xv, 6)));
    return t.val(out)[0];
  };
  for (Tensor* p : params) p->zero_grad();
  {
    ad::Tape t;
    auto out = ad::sum(ch.fwd(t, t.constant(xv, 6)));
    t.backward(out);
  }
  double worst_iso = 0;
  for (Tensor* p : params) {
    for (int i = 0; i < p->size(); ++i) {
      double keep = p->v[i];
      p->v[i] = keep + h;
      double fp = iso_loss();
      p->v[i] = keep - h;
      double fm = iso_loss();
      p->v[i] = keep;
      double num = (fp - fm) / (2 * h);
      double rel = std::fabs(num - p->g[i]) /
                   std::max({1e-4, std::fabs(num), std::fabs(p->g[i])});
      worst_iso = std::max(worst_iso, rel);
    }
  }
  c.expect(worst_iso <= 1e-4,
           "isolated view extractor worst error " + std::to_string(worst_iso));
}

// ------------------------------------------------------------------
void criterion_memory_laws() {
  Criterion c("3 memory bank laws");
  std::mt19937_64 rng(31);
  memory::DomainMemoryBank bank(3, 4, 6, 5, 0.01, 0.05, rng);

  // (a) simplex sums
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> n(6);
    for (auto& x : n) x = nd(rng);
    std::vector<std::vector<double>> reads;
    for (int d = 0; d < 3; ++d) {
      auto sim = memory::read_similarity(n, bank, d);
      double s = 0;
      for (double x : sim) s += x;
      c.expect(std::fabs(s - 1.0) <= 1e-6, "read sim sum off");
      reads.push_back(memory::read_event_memory(n, bank, d));
    }
    auto v = memory::domain_similarity(n, reads, bank);
    double s = 0;
    for (double x : v) s += x;
    c.expect(std::fabs(s - 1.0) <= 1e-6, "v sum off");
  }

  // (b) write fixed point at 1e-12
  std::mt19937_64 rng2(32);
  memory::DomainMemoryBank fixed(1, 3, 2, 2, 0.01, 0.05, rng2);
  fixed.W.fill(0.0);
  fixed.W.v[0] = 1.0;
  fixed.W.v[3] = 1.0;
  fixed.M[0] = {5.0, 1.0, -40.0, 0.0, -40.0, 0.0};
  std::vector<double> n0 = {5.0, 1.0};
  auto before = fixed.M[0];
  memory::write_event_memory(n0, 0, fixed);
  for (size_t i = 0; i < before.size(); ++i)
    c.expect(std::fabs(fixed.M[0][i] - before[i]) <= 1e-12, "fixed point violated");

  // (c) geometric convergence at (1-beta) over 50 steps
  fixed.M[0] = {5.0, 1.0, -40.0, 0.0, -40.0, 0.0};
  std::vector<double> target = {5.0, -9.0};
  double prev = std::fabs(fixed.M[0][1] - target[1]);
  for (int step = 0; step < 50; ++step) {
    memory::write_event_memory(target, 0, fixed);
    double cur = std::fabs(fixed.M[0][1] - target[1]);
    c.expect(std::fabs(cur - prev * 0.95) <= 1e-9 * std::max(1.0, prev),
             "convergence ratio off at step " + std::to_string(step));
    prev = cur;
  }

  // (d) reads mutate nothing, bit compare
  auto M_copy = bank.M;
  auto C_copy = bank.C.v;
  auto W_copy = bank.W.v;
  auto V_copy = bank.V.v;
  std::vector<double> probe = {1, -2, 0.5, 3, 0, 1};
  std::vector<std::vector<double>> reads;
  for (int d = 0; d < 3; ++d) {
    memory::read_similarity(probe, bank, d);
    reads.push_back(memory::read_event_memory(probe, bank, d));
  }
  memory::domain_similarity(probe, reads, bank);
  memory::implicit_domain_rep({0.2, 0.3, 0.5}, bank);
  c.expect(bank.M == M_copy && bank.C.v == C_copy && bank.W.v == W_copy &&
               bank.V.v == V_copy,
           "a read mutated bank state");
}

// ------------------------------------------------------------------
void criterion_sharpening() {
  Criterion c("4 tau=0.01 read sharpening");
  for (int Q = 2; Q <= 50; ++Q) {
    std::mt19937_64 rng(40 + Q);
    memory::DomainMemoryBank bank(1, Q, 2, 2, 0.01, 0.05, rng);
    bank.W.fill(0.0);
    bank.W.v[0] = 1.0;
    bank.W.v[3] = 1.0;
    // raw scores: top unit 0.0, all others at gap 0.1 or worse
    for (int u = 0; u < Q; ++u) {
      bank.M[0][u * 2] = u == 0 ? 0.0 : -0.1 - 0.01 * u;
      bank.M[0][u * 2 + 1] = 0.0;
    }
    auto sim = memory::read_similarity({1.0, 0.0}, bank, 0);
    c.expect(sim[0] >= 0.999,
             "Q=" + std::to_string(Q) + " top weight " + std::to_string(sim[0]));
  }
}

// ------------------------------------------------------------------
void criterion_kmeans() {
  Criterion c("5 k-means recovers separated blobs");
  std::vector<std::vector<double>> means = {{0, 0}, {10, 0}, {5, 8.66}};
  std::mt19937_64 rng(50);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<std::vector<double>> pts;
  for (const auto& mu : means)
    for (int i = 0; i < 100; ++i)
      pts.push_back({mu[0] + noise(rng), mu[1] + noise(rng)});

  auto first = memory::kmeans(pts, 3, 777);
  for (int rerun = 0; rerun < 5; ++rerun)
    c.expect(memory::kmeans(pts, 3, 777) == first, "rerun differs");
  for (const auto& mu : means) {
    double best = 1e300;
    for (const auto& ctr : first)
      best = std::min(best, std::hypot(ctr[0] - mu[0], ctr[1] - mu[1]));
    c.expect(best <= 0.3, "blob mean missed by " + std::to_string(best));
  }
}

// ------------------------------------------------------------------
void criterion_metric_oracles() {
  Criterion c("6 metric oracles");
  std::mt19937_64 rng(60);
  std::uniform_real_distribution<double> sd(0.0, 1.0);
  std::uniform_int_distribution<int> nd(2, 200), qd(2, 12);
  for (int trial = 0; trial < 100; ++trial) {
    int n = nd(rng);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    int quant = qd(rng);
    for (int i = 0; i < n; ++i) {
      scores[i] = std::floor(sd(rng) * quant) / quant;
      labels[i] = sd(rng) < 0.5;
    }
    labels[0] = 1;
    labels[1] = 0;
    double wins = 0;
    long pairs = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (labels[i] != 1 || labels[j] != 0) continue;
        ++pairs;
        wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
    double oracle = wins / pairs;
    c.expect(std::fabs(metrics::auc(scores, labels) - oracle) <= 1e-12,
             "rank AUC != pair-count oracle");
    c.expect(std::fabs(metrics::spauc(scores, labels, 1.0) - oracle) <= 1e-9,
             "spauc(t=1) != auc");
  }
  c.expect(std::fabs(metrics::spauc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, 0.1) - 1.0) <=
               1e-9,
           "perfect classifier anchor");
  c.expect(std::fabs(metrics::spauc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}, 0.1) - 0.5) <=
               1e-9,
           "random diagonal anchor");
}

// ------------------------------------------------------------------
config::RunConfig e2e_config(const std::string& corpus_path) {
  config::RunConfig rc;
  rc.corpus_path = corpus_path;
  config::ModelConfig& m = rc.model;
  m.n_domains = 3;
  m.vocab_size = 300;
  m.max_seq_len = 20;
  m.embed_dim = 16;
  m.view_dim = 24;
  m.hidden_dim = 32;
  m.char_dim = 12;
  m.heads = 3;
  m.mem_units = 4;
  m.kernel_widths = {1, 2, 3};
  m.conv_maps = 8;
  m.emo_dim = 8;
  m.sty_dim = 8;
  rc.train.learning_rate = 2e-3;
  rc.train.batch_size = 32;
  rc.train.max_epochs = 60;
  rc.train.patience = 10;
  rc.train.seed = 5;
  return rc;
}

corpus::Corpus e2e_corpus() {
  corpus::SynthSpec spec;
  spec.n_domains = 3;
  spec.per_domain_per_class = 200;  // 400 pieces per domain
  spec.recipes = {{0, "sem", 2.0}, {1, "emo", 2.0}, {2, "sty", 2.0}};
  spec.vocab_size = 300;
  spec.seq_len = 20;
  spec.emo_dim = 8;
  spec.sty_dim = 8;
  spec.seed = 11;
  return corpus::generate_synthetic_corpus(spec);
}

double run_e2e(const config::AblationFlags& flags, metrics::MetricsReport* out) {
  auto c = e2e_corpus();
  auto rc = e2e_config("");
  auto split = corpus::split_corpus(c, 0.6, 0.2, 0.2, rc.train.seed);
  model::Model m(rc.model, flags, rc.train.seed);
  if (flags.use_event_memory) m.init_event_memories(split.train, rc.train.seed);
  model::train(m, split.train, split.val, rc.train);
  auto eval = model::evaluate(m, split.test);
  if (out) *out = eval.report;
  return eval.report.macro_f1;
}

void criterion_end_to_end() {
  Criterion c("7 synthetic end-to-end training and ablation direction");
  metrics::MetricsReport full, nosem;
  double f1 = run_e2e({}, &full);
  c.expect(f1 >= 0.90, "full-model test macro-F1 " + std::to_string(f1));
  run_e2e(config::flags_for_variant("w/o SemView"), &nosem);
  double drop = full.per_domain_f1.at(0) - nosem.per_domain_f1.at(0);
  c.expect(drop >= 0.05, "sem-domain F1 drop " + std::to_string(drop));
  double secs = std::chrono::duration<double>(clk::now() - c.t0).count();
  c.expect(secs < 120.0, "overran the 120 s budget");
}

// ------------------------------------------------------------------
std::string cli_path() {
#ifdef M3FEND_CLI_PATH
  return M3FEND_CLI_PATH;
#else
  return "./m3fend";
#endif
}

int run_cli(const std::string& args) {
  return std::system((cli_path() + " " + args + " > /dev/null 2>&1").c_str());
}

void criterion_cli_determinism() {
  Criterion c("8 train command is byte-deterministic");
  fs::path dir = fs::temp_directory_path() / "m3fend_accept8";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto corpus_path = (dir / "corpus.jsonl").string();
  corpus::save_corpus_jsonl(e2e_corpus(), corpus_path);
  auto rc = e2e_config(corpus_path);
  rc.train.max_epochs = 6;  // short but real
  {
    std::ofstream out(dir / "config.json");
    out << rc.to_json();
  }
  std::string cfg = (dir / "config.json").string();
  int r1 = run_cli("train --config " + cfg + " --out " + (dir / "a").string());
  int r2 = run_cli("train --config " + cfg + " --out " + (dir / "b").string());
  c.expect(r1 == 0 && r2 == 0, "train command failed");
  for (const char* f : {"history.json", "metrics.json", "checkpoint.json"}) {
    c.expect(read_file((dir / "a" / f).string()) ==
                 read_file((dir / "b" / f).string()),
             std::string(f) + " differs between runs");
    c.expect(!read_file((dir / "a" / f).string()).empty(),
             std::string(f) + " missing");
  }
  fs::remove_all(dir);
}

void criterion_inspect_memory() {
  Criterion c("9 nine-domain memory inspection report");
  fs::path dir = fs::temp_directory_path() / "m3fend_accept9";
  fs::remove_all(dir);
  fs::create_directories(dir);

  corpus::SynthSpec spec;
  spec.n_domains = 9;
  spec.per_domain_per_class = 10;
  for (int d = 0; d < 9; ++d)
    spec.recipes.push_back({d, d % 3 == 0 ? "sem" : (d % 3 == 1 ? "emo" : "sty"), 2.0});
  spec.vocab_size = 300;
  spec.seq_len = 12;
  spec.emo_dim = 8;
  spec.sty_dim = 8;
  spec.seed = 21;
  auto corpus9 = corpus::generate_synthetic_corpus(spec);
  auto corpus_path = (dir / "corpus.jsonl").string();
  corpus::save_corpus_jsonl(corpus9, corpus_path);

  auto rc = e2e_config(corpus_path);
  rc.model.n_domains = 9;
  rc.train.max_epochs = 2;
  rc.train.batch_size = 64;
  {
    std::ofstream out(dir / "config.json");
    out << rc.to_json();
  }
  int tr = run_cli("train --config " + (dir / "config.json").string() + " --out " +
                   (dir / "out").string());
  c.expect(tr == 0, "training run failed");

  std::string report_path = (dir / "case.json").string();
  int ins = run_cli("inspect-memory --checkpoint " +
                    (dir / "out" / "checkpoint.json").string() + " --corpus " +
                    corpus_path + " --id " + corpus9.pieces[0].id + " --out " +
                    report_path);
  c.expect(ins == 0, "inspect-memory failed");
  if (ins == 0) {
    json rep = json::parse(read_file(report_path));
    c.expect(rep.at("n_domains") == 9, "wrong domain count");
    c.expect(rep.at("rows").size() == 9, "report must have 9 rows");
    double vsum = 0;
    for (const auto& row : rep.at("rows")) {
      vsum += row.at("similarity").get<double>();
      c.expect(row.at("similarity").get<double>() >= 0.0, "negative similarity");
      c.expect(row.contains("nearest_unit") && row.contains("exemplars"),
               "row missing nearest unit or exemplars");
      c.expect(row.at("exemplars").size() <= 3, "too many exemplars");
    }
    c.expect(std::fabs(vsum - 1.0) <= 1e-6, "similarity distribution off simplex");
  }
  fs::remove_all(dir);
}

}  // namespace

int main() {
  criterion_interactor_oracle();
  criterion_gradient_audit();
  criterion_memory_laws();
  criterion_sharpening();
  criterion_kmeans();
  criterion_metric_oracles();
  criterion_end_to_end();
  criterion_cli_determinism();
  criterion_inspect_memory();
  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures;
}
