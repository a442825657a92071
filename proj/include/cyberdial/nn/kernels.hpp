#pragma once

// Dense row-major kernels behind every affine map and GRU gate. Each kernel
// accumulates into its output. The parallel versions split output rows across
// OpenMP threads and keep the serial per-element summation order, so both
// backends produce identical bits.

namespace cyberdial::nn::kernels {

enum class Backend { Serial, Parallel };

void set_backend(Backend backend);
Backend backend();

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c);
// C[m,k] += A[m,n] * B[k,n]^T
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);
// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c);

namespace serial {
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c);
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c);
}  // namespace serial

namespace parallel {
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c);
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c);
}  // namespace parallel

// Textbook triple loops; test oracle only.
namespace reference {
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c);
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c);
}  // namespace reference

}  // namespace cyberdial::nn::kernels
