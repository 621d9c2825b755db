#pragma once

#include <cstddef>

// Row kernels used by the dense eigensolver. Every routine has a scalar
// reference version; SIMD versions are chosen at runtime when the CPU has them.
namespace blowup::kernels {

struct Table {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // p = r0 + q r1 + r r2;  r0 -= p x;  r1 -= p y;  r2 -= p z   (elementwise)
    void (*reflect3)(double* r0, double* r1, double* r2, std::size_t n, double q, double r, double x,
                     double y, double z);
    // p = r0 + q r1;  r0 -= p x;  r1 -= p y
    void (*reflect2)(double* r0, double* r1, std::size_t n, double q, double x, double y);
};

const Table& scalar();

// nullptr when the build has no AVX2 variant or the CPU lacks AVX2/FMA.
const Table* avx2();

// AVX2 when available unless BLOWUP_KERNELS=scalar.
const Table& active();

}  // namespace blowup::kernels
