#include "blowup/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blowup/errors.hpp"
#include "blowup/kernels/kernels.hpp"

namespace blowup {

std::vector<cplx> Matrix::apply(std::span<const cplx> v) const
{
    if (v.size() != cols_) throw DomainError("matrix-vector size mismatch");
    std::vector<cplx> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = row(i);
        cplx s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += r[j] * v[j];
        out[i] = s;
    }
    return out;
}

std::vector<double> balance(Matrix& a)
{
    const std::size_t n = a.rows();
    constexpr double kRadix = 2.0;
    constexpr double kRadix2 = kRadix * kRadix;
    std::vector<double> scale(n, 1.0);
    bool done = false;
    for (int pass = 0; !done && pass < 1000; ++pass) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double c = 0.0;
            double r = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0;
            double g = r / kRadix;
            while (c < g) {
                f *= kRadix;
                c *= kRadix2;
            }
            g = r * kRadix;
            while (c > g) {
                f /= kRadix;
                c /= kRadix2;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                scale[i] *= f;
                const double inv = 1.0 / f;
                double* ri = a.row(i);
                for (std::size_t j = 0; j < n; ++j) ri[j] *= inv;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
    return scale;
}

void hessenberg(Matrix& a) { hessenberg(a, kernels::active()); }

void hessenberg(Matrix& a, const kernels::Table& k)
{
    const std::size_t n = a.rows();
    if (n < 3) return;
    std::vector<double> v(n);
    std::vector<double> w(n);
    for (std::size_t col = 0; col + 2 < n; ++col) {
        // reflector annihilating a(col+2 .. n-1, col)
        double alpha = 0.0;
        for (std::size_t i = col + 1; i < n; ++i) alpha = std::max(alpha, std::abs(a(i, col)));
        if (alpha == 0.0) continue;
        double norm2 = 0.0;
        for (std::size_t i = col + 1; i < n; ++i) {
            v[i] = a(i, col) / alpha;
            norm2 += v[i] * v[i];
        }
        const double nrm = std::sqrt(norm2);
        const double beta = v[col + 1] >= 0.0 ? -nrm : nrm;
        v[col + 1] -= beta;
        const double vtv = norm2 - 2.0 * beta * (v[col + 1] + beta) + beta * beta;
        if (vtv == 0.0) continue;
        const double tau = 2.0 / vtv;
        const std::size_t m = n - col - 1;  // reflector length

        // left: rows col+1.., columns col..n-1:  A -= tau v (v^T A)
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t i = col + 1; i < n; ++i) k.axpy(v[i], a.row(i) + col, w.data() + col, n - col);
        for (std::size_t i = col + 1; i < n; ++i) k.axpy(-tau * v[i], w.data() + col, a.row(i) + col, n - col);
        // right: all rows, columns col+1..:  A -= tau (A v) v^T
        for (std::size_t i = 0; i < n; ++i) {
            double* r = a.row(i) + col + 1;
            const double s = k.dot(r, v.data() + col + 1, m);
            k.axpy(-tau * s, v.data() + col + 1, r, m);
        }
        a(col + 1, col) = beta * alpha;
        for (std::size_t i = col + 2; i < n; ++i) a(i, col) = 0.0;
    }
}

std::vector<cplx> hessenberg_eigenvalues(Matrix a) { return hessenberg_eigenvalues(std::move(a), kernels::active()); }

std::vector<cplx> hessenberg_eigenvalues(Matrix a, const kernels::Table& k)
{
    const int n = static_cast<int>(a.rows());
    std::vector<cplx> wri(n);
    if (n == 0) return wri;
    constexpr double kEps = std::numeric_limits<double>::epsilon();
    double anorm = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
    }
    const long max_sweeps = 30L * n;
    long sweeps = 0;
    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l > 0; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= kEps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                wri[nn--] = x + t;
            } else {
                double y = a(nn - 1, nn - 1);
                double w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + std::copysign(z, p);
                        wri[nn - 1] = wri[nn] = x + z;
                        if (z != 0.0) wri[nn] = x - w / z;
                    } else {
                        wri[nn] = cplx(x + p, -z);
                        wri[nn - 1] = std::conj(wri[nn]);
                    }
                    nn -= 2;
                } else {
                    if (++sweeps > max_sweeps) throw ConvergenceError("QR iteration exceeded 30 n sweeps");
                    if (its > 0 && its % 10 == 0) {
                        // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m;
                    double p = 0.0, q = 0.0, r = 0.0, z;
                    for (m = nn - 2; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) +
                                                        std::abs(a(m + 1, m + 1)));
                        if (u <= kEps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a(i + 2, i) = 0.0;
                        if (i != m) a(i + 2, i - 1) = 0.0;
                    }
                    for (int kk = m; kk < nn; ++kk) {
                        if (kk != m) {
                            p = a(kk, kk - 1);
                            q = a(kk + 1, kk - 1);
                            r = 0.0;
                            if (kk + 1 != nn) r = a(kk + 2, kk - 1);
                            if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (kk == m) {
                            if (l != m) a(kk, kk - 1) = -a(kk, kk - 1);
                        } else {
                            a(kk, kk - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        const std::size_t len = static_cast<std::size_t>(nn - kk + 1);
                        if (kk + 1 != nn) {
                            k.reflect3(a.row(kk) + kk, a.row(kk + 1) + kk, a.row(kk + 2) + kk, len, q, r, x, y, z);
                        } else {
                            k.reflect2(a.row(kk) + kk, a.row(kk + 1) + kk, len, q, x, y);
                        }
                        const int mmin = nn < kk + 3 ? nn : kk + 3;
                        for (int i = l; i <= mmin; ++i) {
                            double pp = x * a(i, kk) + y * a(i, kk + 1);
                            if (kk + 1 != nn) {
                                pp += z * a(i, kk + 2);
                                a(i, kk + 2) -= pp * r;
                            }
                            a(i, kk + 1) -= pp * q;
                            a(i, kk) -= pp;
                        }
                    }
                }
            }
        } while (l + 1 < nn);
    }
    return wri;
}

std::vector<cplx> eigenvalues(Matrix a) { return eigenvalues(std::move(a), kernels::active()); }

std::vector<cplx> eigenvalues(Matrix a, const kernels::Table& k)
{
    if (a.rows() != a.cols()) throw DomainError("eigenvalues need a square matrix");
    balance(a);
    hessenberg(a, k);
    return hessenberg_eigenvalues(std::move(a), k);
}

std::vector<cplx> eigenvector(const Matrix& a, cplx lambda, int iterations)
{
    const std::size_t n = a.rows();
    // LU with partial pivoting of A - lambda I in complex arithmetic
    std::vector<cplx> lu(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) lu[i * n + j] = a(i, j);
        lu[i * n + i] -= lambda;
    }
    double scale = 0.0;
    for (const auto& v : lu) scale = std::max(scale, std::abs(v));
    const double tiny = std::max(scale, 1.0) * 1e-14;
    std::vector<std::size_t> piv(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(lu[r * n + c]) > std::abs(lu[p * n + c])) p = r;
        }
        piv[c] = p;
        if (p != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu[c * n + j], lu[p * n + j]);
        }
        if (std::abs(lu[c * n + c]) < tiny) lu[c * n + c] = tiny;
        const cplx d = lu[c * n + c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const cplx m = lu[r * n + c] / d;
            lu[r * n + c] = m;
            if (m == 0.0) continue;
            for (std::size_t j = c + 1; j < n; ++j) lu[r * n + j] -= m * lu[c * n + j];
        }
    }
    std::vector<cplx> x(n, 1.0);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t c = 0; c < n; ++c) {
            if (piv[c] != c) std::swap(x[c], x[piv[c]]);
        }
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < r; ++j) x[r] -= lu[r * n + j] * x[j];
        }
        for (std::size_t r = n; r-- > 0;) {
            for (std::size_t j = r + 1; j < n; ++j) x[r] -= lu[r * n + j] * x[j];
            x[r] /= lu[r * n + r];
        }
        double nrm = 0.0;
        for (const auto& v : x) nrm += std::norm(v);
        nrm = std::sqrt(nrm);
        for (auto& v : x) v /= nrm;
    }
    return x;
}

double mode_residual(const Matrix& m, std::span<const cplx> v, cplx lambda)
{
    double vn = 0.0;
    for (const auto& x : v) vn += std::norm(x);
    if (vn == 0.0) throw DomainError("mode_residual of a zero vector");
    const auto mv = m.apply(v);
    double rn = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) rn += std::norm(mv[i] - lambda * v[i]);
    return std::sqrt(rn / vn);
}

}  // namespace blowup
