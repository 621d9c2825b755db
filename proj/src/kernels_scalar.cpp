#include "blowup/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace blowup::kernels {

namespace {

double dot(const double* a, const double* b, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void reflect3(double* r0, double* r1, double* r2, std::size_t n, double q, double r, double x, double y,
              double z)
{
    for (std::size_t j = 0; j < n; ++j) {
        const double p = r0[j] + q * r1[j] + r * r2[j];
        r0[j] -= p * x;
        r1[j] -= p * y;
        r2[j] -= p * z;
    }
}

void reflect2(double* r0, double* r1, std::size_t n, double q, double x, double y)
{
    for (std::size_t j = 0; j < n; ++j) {
        const double p = r0[j] + q * r1[j];
        r0[j] -= p * x;
        r1[j] -= p * y;
    }
}

const Table kScalar{"scalar", dot, axpy, reflect3, reflect2};

}  // namespace

const Table& scalar() { return kScalar; }

#if !defined(BLOWUP_HAVE_AVX2)
const Table* avx2() { return nullptr; }
#endif

const Table& active()
{
    static const Table* chosen = [] {
        const char* env = std::getenv("BLOWUP_KERNELS");
        if (env != nullptr && std::strcmp(env, "scalar") == 0) return &kScalar;
        const Table* v = avx2();
        return v != nullptr ? v : &kScalar;
    }();
    return *chosen;
}

}  // namespace blowup::kernels
