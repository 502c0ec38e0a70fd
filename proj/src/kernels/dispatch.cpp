#include <atomic>

#include "staykit/common.hpp"
#include "staykit/kernels.hpp"

namespace staykit::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const OpsTable*> g_active{nullptr};
std::atomic<Isa> g_active_isa{Isa::scalar};

const OpsTable* init_dispatch() {
  const OpsTable* table = &scalar_table();
  Isa isa = Isa::scalar;
  if (cpu_has_avx2_fma()) {
    table = &avx2_table();
    isa = Isa::avx2;
  }
  g_active_isa.store(isa, std::memory_order_relaxed);
  g_active.store(table, std::memory_order_release);
  return table;
}

inline const OpsTable& ops() {
  const OpsTable* table = g_active.load(std::memory_order_acquire);
  if (!table) table = init_dispatch();
  return *table;
}

}  // namespace

Isa best_supported_isa() { return cpu_has_avx2_fma() ? Isa::avx2 : Isa::scalar; }

Isa active_isa() {
  ops();
  return g_active_isa.load(std::memory_order_relaxed);
}

void set_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2_fma())
    throw input_error("kernels: avx2 requested but not supported by this CPU");
  g_active_isa.store(isa, std::memory_order_relaxed);
  g_active.store(isa == Isa::avx2 ? &avx2_table() : &scalar_table(), std::memory_order_release);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  ops().matmul_nn(a, b, c, m, k, n, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  ops().matmul_nt(a, b, c, m, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  ops().matmul_tn(a, b, c, m, k, n, accumulate);
}

double dot(const double* a, const double* b, std::size_t len) { return ops().dot(a, b, len); }

void axpy(double alpha, const double* x, double* y, std::size_t len) {
  ops().axpy(alpha, x, y, len);
}

void add(const double* a, const double* b, double* out, std::size_t len) {
  ops().add(a, b, out, len);
}

void sub(const double* a, const double* b, double* out, std::size_t len) {
  ops().sub(a, b, out, len);
}

void mul(const double* a, const double* b, double* out, std::size_t len) {
  ops().mul(a, b, out, len);
}

void scale(const double* a, double s, double* out, std::size_t len) {
  ops().scale(a, s, out, len);
}

double sum(const double* a, std::size_t len) { return ops().sum(a, len); }

}  // namespace staykit::kernels
