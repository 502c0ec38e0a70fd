#pragma once

#include <cstddef>

// Dense double-precision kernels behind the numeric hot paths (encoder
// matmuls, loss reductions, feature math). A scalar reference implementation
// always exists; an AVX2+FMA variant is selected at runtime when the CPU
// supports it. The two are equivalence-tested against each other.
//
// All matrices are row-major and may alias nothing.
namespace staykit::kernels {

enum class Isa { scalar, avx2 };

// Best ISA the running CPU supports.
Isa best_supported_isa();

// Currently dispatched ISA.
Isa active_isa();

// Overrides dispatch. Selecting an unsupported ISA throws.
void set_isa(Isa isa);

const char* isa_name(Isa isa);

// c[m x n] (+)= a[m x k] * b[k x n]
void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);

// c[m x n] (+)= a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);

// c[m x n] (+)= a[k x m]^T * b[k x n]
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);

double dot(const double* a, const double* b, std::size_t len);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t len);

void add(const double* a, const double* b, double* out, std::size_t len);
void sub(const double* a, const double* b, double* out, std::size_t len);
void mul(const double* a, const double* b, double* out, std::size_t len);
void scale(const double* a, double s, double* out, std::size_t len);
double sum(const double* a, std::size_t len);

// Function-pointer table; one instance per ISA.
struct OpsTable {
  void (*matmul_nn)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t,
                    bool);
  void (*matmul_nt)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t,
                    bool);
  void (*matmul_tn)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t,
                    bool);
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*scale)(const double*, double, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
};

const OpsTable& scalar_table();
const OpsTable& avx2_table();

}  // namespace staykit::kernels
