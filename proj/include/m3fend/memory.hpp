#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "m3fend/tensor.hpp"

namespace m3fend::memory {

// Lloyd's algorithm with k-means++ seeding. If there are fewer points than
// centers, surplus centers duplicate points round-robin by index.
std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points,
                                        int q, std::uint64_t seed,
                                        int max_iters = 100, double tol = 1e-6);

struct ExemplarRing {
  std::deque<std::string> ids;  // most recent last, capped
  void push(const std::string& id, size_t cap = 32);
};

// Domain Memory Bank: trainable C (N x D_c), W and V (I x I), and per-domain
// event matrices M_j (Q x I) that are non-gradient state mutated by writes.
struct DomainMemoryBank {
  Tensor C, W, V;
  std::vector<std::vector<double>> M;  // N matrices, Q*I row-major each
  int n_domains = 0, units = 0, rep_dim = 0, char_dim = 0;
  double tau = 0.01;
  double beta = 0.05;
  std::vector<std::vector<ExemplarRing>> exemplars;  // [domain][unit]

  DomainMemoryBank() = default;
  DomainMemoryBank(int n_domains, int units, int rep_dim, int char_dim, double tau,
                   double beta, std::mt19937_64& rng);
  void collect(std::vector<Tensor*>& out);
};

// sim = softmax(n W M_j^T / tau); read returns o_j = sim * M_j.
std::vector<double> read_similarity(const std::vector<double>& n,
                                    const DomainMemoryBank& bank, int domain);
std::vector<double> read_event_memory(const std::vector<double>& n,
                                      const DomainMemoryBank& bank, int domain);

// v = softmax(n V D^T) with D rows = per-domain reads.
std::vector<double> domain_similarity(const std::vector<double>& n,
                                      const std::vector<std::vector<double>>& reads,
                                      const DomainMemoryBank& bank);

// u = v^T C
std::vector<double> implicit_domain_rep(const std::vector<double>& v,
                                        const DomainMemoryBank& bank);

std::vector<double> lookup_characteristics(int domain, const DomainMemoryBank& bank);

// m_i <- m_i - beta sim_i m_i + beta sim_i n, for every unit of M_d; tracks
// the argmax unit's exemplar ring when `piece_id` is given.
void write_event_memory(const std::vector<double>& n, int domain,
                        DomainMemoryBank& bank, const std::string& piece_id = {});

std::string snapshot_to_json(const DomainMemoryBank& bank);
DomainMemoryBank snapshot_from_json(const std::string& text);

}  // namespace m3fend::memory
