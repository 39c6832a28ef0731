#pragma once

#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace m3fend {

// A named parameter tensor with its gradient accumulator. Shapes are
// row-major; a vector is {n}.
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  Tensor(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    v.assign(size(), 0.0);
    g.assign(size(), 0.0);
  }

  int size() const {
    int s = 1;
    for (int d : shape) s *= d;
    return s;
  }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() > 1 ? shape[1] : 1; }

  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }

  void init_normal(std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& x : v) x = dist(rng);
  }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

}  // namespace m3fend
