#pragma once

#include <cstddef>
#include <vector>

// Low-level numeric kernels. Every kernel exists twice: a serial reference
// in kernels::serial and an OpenMP version in kernels::omp that parallelizes
// over independent output elements only, so both produce bitwise-identical
// results. The unqualified entry points dispatch by problem size.
namespace m3fend::kernels {

// y = W x, W row-major (rows x cols), y has `rows` entries.
// yt = W^T x, x has `rows` entries, yt has `cols` entries.
namespace serial {
void matvec(const double* W, const double* x, double* y, int rows, int cols);
void matvec_t(const double* W, const double* x, double* y, int rows, int cols);
// Convolution scores for one kernel width: X is T x O (rows beyond T read as
// zero), K is maps x (width*O), scores is maps x positions.
void conv_scores(const double* X, int T, int O, const double* K, const double* b,
                 int maps, int width, int positions, double* scores);
// Nearest-center assignment for K-means; dist2 may be null.
void assign_centers(const double* pts, int n, int dim, const double* centers,
                    int q, int* assign, double* dist2);
}  // namespace serial

namespace omp {
void matvec(const double* W, const double* x, double* y, int rows, int cols);
void matvec_t(const double* W, const double* x, double* y, int rows, int cols);
void conv_scores(const double* X, int T, int O, const double* K, const double* b,
                 int maps, int width, int positions, double* scores);
void assign_centers(const double* pts, int n, int dim, const double* centers,
                    int q, int* assign, double* dist2);
}  // namespace omp

// Honors M3FEND_NUM_THREADS; call once at startup.
void configure_threads();
int effective_threads();

void matvec(const double* W, const double* x, double* y, int rows, int cols);
void matvec_t(const double* W, const double* x, double* y, int rows, int cols);
void conv_scores(const double* X, int T, int O, const double* K, const double* b,
                 int maps, int width, int positions, double* scores);
void assign_centers(const double* pts, int n, int dim, const double* centers,
                    int q, int* assign, double* dist2);

}  // namespace m3fend::kernels
