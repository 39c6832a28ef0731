#include "m3fend/kernels.hpp"

#include <cstdlib>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace m3fend::kernels {

namespace serial {

void matvec(const double* W, const double* x, double* y, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = W + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const double* W, const double* x, double* y, int rows, int cols) {
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += W[static_cast<size_t>(r) * cols + c] * x[r];
    y[c] = acc;
  }
}

void conv_scores(const double* X, int T, int O, const double* K, const double* b,
                 int maps, int width, int positions, double* scores) {
  for (int m = 0; m < maps; ++m) {
    const double* km = K + static_cast<size_t>(m) * width * O;
    for (int p = 0; p < positions; ++p) {
      double acc = b[m];
      for (int dt = 0; dt < width; ++dt) {
        int t = p + dt;
        if (t >= T) break;  // zero rows past the content
        const double* xr = X + static_cast<size_t>(t) * O;
        const double* kr = km + static_cast<size_t>(dt) * O;
        for (int o = 0; o < O; ++o) acc += kr[o] * xr[o];
      }
      scores[static_cast<size_t>(m) * positions + p] = acc;
    }
  }
}

void assign_centers(const double* pts, int n, int dim, const double* centers,
                    int q, int* assign, double* dist2) {
  for (int i = 0; i < n; ++i) {
    const double* p = pts + static_cast<size_t>(i) * dim;
    double best = std::numeric_limits<double>::infinity();
    int bj = 0;
    for (int j = 0; j < q; ++j) {
      const double* c = centers + static_cast<size_t>(j) * dim;
      double d = 0.0;
      for (int k = 0; k < dim; ++k) {
        double diff = p[k] - c[k];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        bj = j;
      }
    }
    assign[i] = bj;
    if (dist2) dist2[i] = best;
  }
}

}  // namespace serial

namespace omp {

// Each output element is produced by exactly one thread with the same inner
// summation order as the serial kernel, so results match bitwise.

void matvec(const double* W, const double* x, double* y, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = W + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const double* W, const double* x, double* y, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += W[static_cast<size_t>(r) * cols + c] * x[r];
    y[c] = acc;
  }
}

void conv_scores(const double* X, int T, int O, const double* K, const double* b,
                 int maps, int width, int positions, double* scores) {
#pragma omp parallel for schedule(static)
  for (int m = 0; m < maps; ++m) {
    const double* km = K + static_cast<size_t>(m) * width * O;
    for (int p = 0; p < positions; ++p) {
      double acc = b[m];
      for (int dt = 0; dt < width; ++dt) {
        int t = p + dt;
        if (t >= T) break;
        const double* xr = X + static_cast<size_t>(t) * O;
        const double* kr = km + static_cast<size_t>(dt) * O;
        for (int o = 0; o < O; ++o) acc += kr[o] * xr[o];
      }
      scores[static_cast<size_t>(m) * positions + p] = acc;
    }
  }
}

void assign_centers(const double* pts, int n, int dim, const double* centers,
                    int q, int* assign, double* dist2) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    serial::assign_centers(pts + static_cast<size_t>(i) * dim, 1, dim, centers, q,
                           assign + i, dist2 ? dist2 + i : nullptr);
  }
}

}  // namespace omp

void configure_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("M3FEND_NUM_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

int effective_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Problem-size thresholds below which the fork/join overhead dominates.
namespace {
constexpr int kMatvecMinOps = 1 << 14;
constexpr int kAssignMinPts = 256;
}  // namespace

void matvec(const double* W, const double* x, double* y, int rows, int cols) {
  if (static_cast<long>(rows) * cols >= kMatvecMinOps)
    omp::matvec(W, x, y, rows, cols);
  else
    serial::matvec(W, x, y, rows, cols);
}

void matvec_t(const double* W, const double* x, double* y, int rows, int cols) {
  if (static_cast<long>(rows) * cols >= kMatvecMinOps)
    omp::matvec_t(W, x, y, rows, cols);
  else
    serial::matvec_t(W, x, y, rows, cols);
}

void conv_scores(const double* X, int T, int O, const double* K, const double* b,
                 int maps, int width, int positions, double* scores) {
  long ops = static_cast<long>(maps) * positions * width * O;
  if (ops >= kMatvecMinOps)
    omp::conv_scores(X, T, O, K, b, maps, width, positions, scores);
  else
    serial::conv_scores(X, T, O, K, b, maps, width, positions, scores);
}

void assign_centers(const double* pts, int n, int dim, const double* centers,
                    int q, int* assign, double* dist2) {
  if (n >= kAssignMinPts)
    omp::assign_centers(pts, n, dim, centers, q, assign, dist2);
  else
    serial::assign_centers(pts, n, dim, centers, q, assign, dist2);
}

}  // namespace m3fend::kernels
