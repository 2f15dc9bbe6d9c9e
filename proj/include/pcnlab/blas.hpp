#pragma once

namespace pcnlab::blas {

// Row-major C = alpha * op(A) * op(B) + beta * C.
// Backed by OpenBLAS (single-threaded, loaded at first use) when available,
// otherwise by a builtin loop. Either way the operation is deterministic for
// fixed shapes; the two backends differ in summation order, so they are not
// bit-interchangeable.
void dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
           int lda, const double* b, int ldb, double beta, double* c, int ldc);

// "openblas:<corename>" or "builtin"
const char* backend();

}  // namespace pcnlab::blas
