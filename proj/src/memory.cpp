#include "m3fend/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "m3fend/kernels.hpp"

using nlohmann::json;

namespace m3fend::memory {

std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points,
                                        int q, std::uint64_t seed, int max_iters,
                                        double tol) {
  if (points.empty()) throw std::invalid_argument("kmeans: empty point set");
  if (q < 1) throw std::invalid_argument("kmeans: q must be >= 1");
  int n = static_cast<int>(points.size());
  int dim = static_cast<int>(points.front().size());

  std::vector<std::vector<double>> centers;
  if (n <= q) {
    // every point its own cluster; surplus duplicated round-robin by index
    for (int i = 0; i < q; ++i) centers.push_back(points[i % n]);
    return centers;
  }

  std::mt19937_64 rng(seed);
  std::vector<double> flat(static_cast<size_t>(n) * dim);
  for (int i = 0; i < n; ++i)
    std::copy(points[i].begin(), points[i].end(), flat.begin() + static_cast<size_t>(i) * dim);

  // k-means++ seeding
  std::uniform_int_distribution<int> first(0, n - 1);
  centers.push_back(points[first(rng)]);
  std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < q) {
    const auto& c = centers.back();
    for (int i = 0; i < n; ++i) {
      double d = 0;
      for (int k = 0; k < dim; ++k) {
        double diff = points[i][k] - c[k];
        d += diff * diff;
      }
      dist2[i] = std::min(dist2[i], d);
    }
    double total = 0;
    for (double d : dist2) total += d;
    if (total <= 0) {
      centers.push_back(points[first(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng), acc = 0;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      acc += dist2[i];
      if (acc >= r) {
        pick = i;
        break;
      }
    }
    centers.push_back(points[pick]);
  }

  std::vector<int> assign(n);
  std::vector<double> cflat(static_cast<size_t>(q) * dim);
  for (int it = 0; it < max_iters; ++it) {
    for (int j = 0; j < q; ++j)
      std::copy(centers[j].begin(), centers[j].end(), cflat.begin() + static_cast<size_t>(j) * dim);
    kernels::assign_centers(flat.data(), n, dim, cflat.data(), q, assign.data(),
                            nullptr);
    std::vector<std::vector<double>> sums(q, std::vector<double>(dim, 0.0));
    std::vector<int> counts(q, 0);
    for (int i = 0; i < n; ++i) {
      counts[assign[i]]++;
      for (int k = 0; k < dim; ++k) sums[assign[i]][k] += points[i][k];
    }
    double shift = 0, norm = 0;
    for (int j = 0; j < q; ++j) {
      if (counts[j] == 0) continue;  // keep an empty cluster's center
      for (int k = 0; k < dim; ++k) {
        double next = sums[j][k] / counts[j];
        double diff = next - centers[j][k];
        shift += diff * diff;
        norm += next * next;
        centers[j][k] = next;
      }
    }
    if (shift <= tol * tol * std::max(norm, 1e-30)) break;
  }
  return centers;
}

void ExemplarRing::push(const std::string& id, size_t cap) {
  ids.push_back(id);
  while (ids.size() > cap) ids.pop_front();
}

DomainMemoryBank::DomainMemoryBank(int n, int q, int I, int Dc, double tau_,
                                   double beta_, std::mt19937_64& rng)
    : C("memory.C", {n, Dc}),
      W("memory.W", {I, I}),
      V("memory.V", {I, I}),
      n_domains(n),
      units(q),
      rep_dim(I),
      char_dim(Dc),
      tau(tau_),
      beta(beta_) {
  if (n < 1) throw std::invalid_argument("memory: N must be >= 1");
  if (q < 1) throw std::invalid_argument("memory: Q must be >= 1");
  if (tau <= 0) throw std::invalid_argument("memory: tau must be > 0");
  if (beta <= 0 || beta >= 1) throw std::invalid_argument("memory: beta in (0,1)");
  C.init_normal(rng, 0.1);
  W.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(I)));
  V.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(I)));
  M.assign(n, std::vector<double>(static_cast<size_t>(q) * I, 0.0));
  exemplars.assign(n, std::vector<ExemplarRing>(q));
}

void DomainMemoryBank::collect(std::vector<Tensor*>& out) {
  out.push_back(&C);
  out.push_back(&W);
  out.push_back(&V);
}

namespace {
std::vector<double> softmax_vec(std::vector<double> s, double tau) {
  double mx = *std::max_element(s.begin(), s.end());
  double z = 0;
  for (double& x : s) {
    x = std::exp((x - mx) / tau);
    z += x;
  }
  for (double& x : s) x /= z;
  return s;
}

// scores_i = (n W) . m_i
std::vector<double> unit_scores(const std::vector<double>& n, const Tensor& W,
                                const std::vector<double>& M, int q, int I) {
  std::vector<double> nw(I);
  // row vector times matrix: nW = W^T n
  kernels::matvec_t(W.v.data(), n.data(), nw.data(), I, I);
  std::vector<double> s(q);
  kernels::matvec(M.data(), nw.data(), s.data(), q, I);
  return s;
}
}  // namespace

std::vector<double> read_similarity(const std::vector<double>& n,
                                    const DomainMemoryBank& bank, int domain) {
  if (domain < 0 || domain >= bank.n_domains)
    throw std::out_of_range("memory: domain out of range");
  if (static_cast<int>(n.size()) != bank.rep_dim)
    throw std::invalid_argument("memory: representation width mismatch");
  auto s = unit_scores(n, bank.W, bank.M[domain], bank.units, bank.rep_dim);
  return softmax_vec(std::move(s), bank.tau);
}

std::vector<double> read_event_memory(const std::vector<double>& n,
                                      const DomainMemoryBank& bank, int domain) {
  auto sim = read_similarity(n, bank, domain);
  std::vector<double> o(bank.rep_dim, 0.0);
  const auto& M = bank.M[domain];
  for (int i = 0; i < bank.units; ++i)
    for (int k = 0; k < bank.rep_dim; ++k)
      o[k] += sim[i] * M[static_cast<size_t>(i) * bank.rep_dim + k];
  return o;
}

std::vector<double> domain_similarity(const std::vector<double>& n,
                                      const std::vector<std::vector<double>>& reads,
                                      const DomainMemoryBank& bank) {
  int I = bank.rep_dim;
  std::vector<double> nv(I);
  kernels::matvec_t(bank.V.v.data(), n.data(), nv.data(), I, I);
  std::vector<double> s(reads.size());
  for (size_t j = 0; j < reads.size(); ++j) {
    double acc = 0;
    for (int k = 0; k < I; ++k) acc += nv[k] * reads[j][k];
    s[j] = acc;
  }
  return softmax_vec(std::move(s), 1.0);
}

std::vector<double> implicit_domain_rep(const std::vector<double>& v,
                                        const DomainMemoryBank& bank) {
  if (static_cast<int>(v.size()) != bank.n_domains)
    throw std::invalid_argument("memory: similarity width mismatch");
  std::vector<double> u(bank.char_dim, 0.0);
  for (int i = 0; i < bank.n_domains; ++i)
    for (int k = 0; k < bank.char_dim; ++k)
      u[k] += v[i] * bank.C.v[static_cast<size_t>(i) * bank.char_dim + k];
  return u;
}

std::vector<double> lookup_characteristics(int domain, const DomainMemoryBank& bank) {
  if (domain < 0 || domain >= bank.n_domains)
    throw std::out_of_range("memory: domain out of range");
  return {bank.C.v.begin() + static_cast<size_t>(domain) * bank.char_dim,
          bank.C.v.begin() + static_cast<size_t>(domain + 1) * bank.char_dim};
}

void write_event_memory(const std::vector<double>& n, int domain,
                        DomainMemoryBank& bank, const std::string& piece_id) {
  auto sim = read_similarity(n, bank, domain);
  auto& M = bank.M[domain];
  for (int i = 0; i < bank.units; ++i) {
    double bs = bank.beta * sim[i];
    for (int k = 0; k < bank.rep_dim; ++k) {
      double& m = M[static_cast<size_t>(i) * bank.rep_dim + k];
      m = m - bs * m + bs * n[k];
    }
  }
  if (!piece_id.empty()) {
    int arg = static_cast<int>(std::max_element(sim.begin(), sim.end()) - sim.begin());
    bank.exemplars[domain][arg].push(piece_id);
  }
}

std::string snapshot_to_json(const DomainMemoryBank& bank) {
  json j;
  j["n_domains"] = bank.n_domains;
  j["units"] = bank.units;
  j["rep_dim"] = bank.rep_dim;
  j["char_dim"] = bank.char_dim;
  j["tau"] = bank.tau;
  j["beta"] = bank.beta;
  j["C"] = bank.C.v;
  j["W"] = bank.W.v;
  j["V"] = bank.V.v;
  j["M"] = bank.M;
  json ex = json::array();
  for (const auto& dom : bank.exemplars) {
    json units = json::array();
    for (const auto& ring : dom)
      units.push_back(std::vector<std::string>(ring.ids.begin(), ring.ids.end()));
    ex.push_back(units);
  }
  j["exemplars"] = ex;
  return j.dump();
}

DomainMemoryBank snapshot_from_json(const std::string& text) {
  json j = json::parse(text);
  std::mt19937_64 rng(0);
  DomainMemoryBank bank(j.at("n_domains").get<int>(), j.at("units").get<int>(),
                        j.at("rep_dim").get<int>(), j.at("char_dim").get<int>(),
                        j.at("tau").get<double>(), j.at("beta").get<double>(), rng);
  bank.C.v = j.at("C").get<std::vector<double>>();
  bank.W.v = j.at("W").get<std::vector<double>>();
  bank.V.v = j.at("V").get<std::vector<double>>();
  bank.M = j.at("M").get<std::vector<std::vector<double>>>();
  if (j.contains("exemplars")) {
    const json& ex = j.at("exemplars");
    for (int d = 0; d < bank.n_domains && d < static_cast<int>(ex.size()); ++d)
      for (int u = 0; u < bank.units && u < static_cast<int>(ex[d].size()); ++u)
        for (const auto& id : ex[d][u])
          bank.exemplars[d][u].ids.push_back(id.get<std::string>());
  }
  return bank;
}

}  // namespace m3fend::memory
