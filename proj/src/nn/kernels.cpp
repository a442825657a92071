#include "cyberdial/nn/kernels.hpp"

#include <atomic>

#include <omp.h>

namespace cyberdial::nn::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::Parallel};

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kParallelThreshold = 1L << 16;

inline void row_nn(int n, int k, const double* a_row, const double* b, double* c_row)
{
    for (int p = 0; p < k; ++p) {
        const double a = a_row[p];
        if (a == 0.0) continue;
        const double* b_row = b + static_cast<long>(p) * n;
#pragma omp simd
        for (int j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
}

inline void row_nt(int n, int k, const double* a_row, const double* b, double* c_row)
{
    for (int p = 0; p < k; ++p) {
        const double* b_row = b + static_cast<long>(p) * n;
        double sum = 0.0;
#pragma omp simd reduction(+ : sum)
        for (int j = 0; j < n; ++j) sum += a_row[j] * b_row[j];
        c_row[p] += sum;
    }
}

// One output row p of C = A^T B: C[p,:] += sum_i A[i,p] B[i,:].
inline void row_tn(int m, int n, int k, int p, const double* a, const double* b, double* c_row)
{
    for (int i = 0; i < m; ++i) {
        const double s = a[static_cast<long>(i) * k + p];
        if (s == 0.0) continue;
        const double* b_row = b + static_cast<long>(i) * n;
#pragma omp simd
        for (int j = 0; j < n; ++j) c_row[j] += s * b_row[j];
    }
}

bool worth_parallel(int m, int n, int k)
{
    return omp_get_max_threads() > 1 && static_cast<long>(m) * n * k >= kParallelThreshold;
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

namespace serial {

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c)
{
    for (int i = 0; i < m; ++i) row_nn(n, k, a + static_cast<long>(i) * k, b, c + static_cast<long>(i) * n);
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c)
{
    for (int i = 0; i < m; ++i) row_nt(n, k, a + static_cast<long>(i) * n, b, c + static_cast<long>(i) * k);
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c)
{
    for (int p = 0; p < k; ++p) row_tn(m, n, k, p, a, b, c + static_cast<long>(p) * n);
}

}  // namespace serial

namespace parallel {

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c)
{
#pragma omp parallel for schedule(static) if (worth_parallel(m, n, k))
    for (int i = 0; i < m; ++i) row_nn(n, k, a + static_cast<long>(i) * k, b, c + static_cast<long>(i) * n);
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c)
{
#pragma omp parallel for schedule(static) if (worth_parallel(m, n, k))
    for (int i = 0; i < m; ++i) row_nt(n, k, a + static_cast<long>(i) * n, b, c + static_cast<long>(i) * k);
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c)
{
#pragma omp parallel for schedule(static) if (worth_parallel(m, n, k))
    for (int p = 0; p < k; ++p) row_tn(m, n, k, p, a, b, c + static_cast<long>(p) * n);
}

}  // namespace parallel

namespace reference {

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c)
{
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] += s;
        }
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c)
{
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += a[i * n + j] * b[p * n + j];
            c[i * k + p] += s;
        }
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c)
{
    for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += a[i * k + p] * b[i * n + j];
            c[p * n + j] += s;
        }
}

}  // namespace reference

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c)
{
    if (backend() == Backend::Parallel) parallel::gemm_nn(m, n, k, a, b, c);
    else serial::gemm_nn(m, n, k, a, b, c);
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c)
{
    if (backend() == Backend::Parallel) parallel::gemm_nt(m, n, k, a, b, c);
    else serial::gemm_nt(m, n, k, a, b, c);
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c)
{
    if (backend() == Backend::Parallel) parallel::gemm_tn(m, n, k, a, b, c);
    else serial::gemm_tn(m, n, k, a, b, c);
}

}  // namespace cyberdial::nn::kernels
