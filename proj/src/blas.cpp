#include "pcnlab/blas.hpp"

#include <dlfcn.h>

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

namespace pcnlab::blas {

namespace {

using CblasDgemmFn = void (*)(int order, int trans_a, int trans_b, int m, int n, int k,
                              double alpha, const double* a, int lda, const double* b, int ldb,
                              double beta, double* c, int ldc);

CblasDgemmFn g_cblas_dgemm = nullptr;
std::string g_backend = "builtin";
std::once_flag g_init_once;

void init_backend() {
  // OpenBLAS's runtime CPU detection sees a generic core on many VMs and
  // silently falls back to slow kernels. The core type can only be forced
  // through the environment, and only before the library initializes, which
  // is why it is dlopen'd here instead of linked.
  if (!std::getenv("OPENBLAS_CORETYPE")) {
    if (__builtin_cpu_supports("avx512f"))
      setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);
    else if (__builtin_cpu_supports("avx2"))
      setenv("OPENBLAS_CORETYPE", "HASWELL", 1);
  }
  void* handle = nullptr;
  for (const char* name : {"libopenblas.so.0", "libopenblas.so"}) {
    handle = dlopen(name, RTLD_NOW | RTLD_LOCAL);
    if (handle) break;
  }
  if (!handle) return;

  auto dgemm_fn = reinterpret_cast<CblasDgemmFn>(dlsym(handle, "cblas_dgemm"));
  if (!dgemm_fn) return;

  // The engine owns all parallelism (it splits work into fixed chunks);
  // threaded BLAS underneath would make results depend on the thread count.
  using SetThreadsFn = void (*)(int);
  if (auto set_threads = reinterpret_cast<SetThreadsFn>(dlsym(handle, "openblas_set_num_threads")))
    set_threads(1);

  g_cblas_dgemm = dgemm_fn;
  g_backend = "openblas";
  using CoreNameFn = char* (*)();
  if (auto corename = reinterpret_cast<CoreNameFn>(dlsym(handle, "openblas_get_corename")))
    g_backend += std::string(":") + corename();
}

// Reference kernel, also the fallback: plain loops, fixed accumulation order.
void builtin_dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                   const double* a, int lda, const double* b, int ldb, double beta, double* c,
                   int ldc) {
  auto at = [&](int i, int l) { return trans_a ? a[static_cast<size_t>(l) * lda + i]
                                               : a[static_cast<size_t>(i) * lda + l]; };
  auto bt = [&](int l, int j) { return trans_b ? b[static_cast<size_t>(j) * ldb + l]
                                               : b[static_cast<size_t>(l) * ldb + j]; };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += at(i, l) * bt(l, j);
      double* out = &c[static_cast<size_t>(i) * ldc + j];
      *out = alpha * acc + (beta == 0.0 ? 0.0 : beta * *out);
    }
  }
}

}  // namespace

void dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
           int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  std::call_once(g_init_once, init_backend);
  if (g_cblas_dgemm) {
    constexpr int kRowMajor = 101, kNoTrans = 111, kTrans = 112;
    g_cblas_dgemm(kRowMajor, trans_a ? kTrans : kNoTrans, trans_b ? kTrans : kNoTrans, m, n, k,
                  alpha, a, lda, b, ldb, beta, c, ldc);
  } else {
    builtin_dgemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  }
}

const char* backend() {
  std::call_once(g_init_once, init_backend);
  return g_backend.c_str();
}

}  // namespace pcnlab::blas
