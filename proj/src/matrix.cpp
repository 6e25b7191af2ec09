#include "rer/matrix.hpp"

#include <cmath>
#include <cstring>
#include <vector>

namespace rer {

namespace {

// Register-tiled kernel: 4 rows of C by a 16-wide column strip held in
// accumulators across the whole k loop. The fixed-width inner loops compile
// to FMA vector code.
constexpr std::size_t kTileCols = 16;

template <bool Accumulate>
void gemm_nn_impl(const double* __restrict a, std::size_t m, std::size_t k,
                  const double* __restrict b, std::size_t n, double* __restrict c) {
    std::size_t jt = 0;
    for (; jt + kTileCols <= n; jt += kTileCols) {
        std::size_t i = 0;
        for (; i + 4 <= m; i += 4) {
            double acc0[kTileCols], acc1[kTileCols], acc2[kTileCols], acc3[kTileCols];
            if (Accumulate) {
                for (std::size_t j = 0; j < kTileCols; ++j) {
                    acc0[j] = c[(i + 0) * n + jt + j];
                    acc1[j] = c[(i + 1) * n + jt + j];
                    acc2[j] = c[(i + 2) * n + jt + j];
                    acc3[j] = c[(i + 3) * n + jt + j];
                }
            } else {
                for (std::size_t j = 0; j < kTileCols; ++j)
                    acc0[j] = acc1[j] = acc2[j] = acc3[j] = 0.0;
            }
            const double* a0 = a + (i + 0) * k;
            const double* a1 = a + (i + 1) * k;
            const double* a2 = a + (i + 2) * k;
            const double* a3 = a + (i + 3) * k;
            for (std::size_t l = 0; l < k; ++l) {
                const double* br = b + l * n + jt;
                const double x0 = a0[l], x1 = a1[l], x2 = a2[l], x3 = a3[l];
                for (std::size_t j = 0; j < kTileCols; ++j) {
                    const double bv = br[j];
                    acc0[j] += x0 * bv;
                    acc1[j] += x1 * bv;
                    acc2[j] += x2 * bv;
                    acc3[j] += x3 * bv;
                }
            }
            for (std::size_t j = 0; j < kTileCols; ++j) {
                c[(i + 0) * n + jt + j] = acc0[j];
                c[(i + 1) * n + jt + j] = acc1[j];
                c[(i + 2) * n + jt + j] = acc2[j];
                c[(i + 3) * n + jt + j] = acc3[j];
            }
        }
        for (; i < m; ++i) {
            double acc[kTileCols];
            if (Accumulate) {
                for (std::size_t j = 0; j < kTileCols; ++j) acc[j] = c[i * n + jt + j];
            } else {
                for (std::size_t j = 0; j < kTileCols; ++j) acc[j] = 0.0;
            }
            const double* ar = a + i * k;
            for (std::size_t l = 0; l < k; ++l) {
                const double x = ar[l];
                const double* br = b + l * n + jt;
                for (std::size_t j = 0; j < kTileCols; ++j) acc[j] += x * br[j];
            }
            for (std::size_t j = 0; j < kTileCols; ++j) c[i * n + jt + j] = acc[j];
        }
    }
    if (jt < n) {
        const std::size_t rem = n - jt;
        for (std::size_t i = 0; i < m; ++i) {
            double acc[kTileCols] = {};
            if (Accumulate) {
                for (std::size_t j = 0; j < rem; ++j) acc[j] = c[i * n + jt + j];
            }
            const double* ar = a + i * k;
            for (std::size_t l = 0; l < k; ++l) {
                const double x = ar[l];
                const double* br = b + l * n + jt;
                for (std::size_t j = 0; j < rem; ++j) acc[j] += x * br[j];
            }
            for (std::size_t j = 0; j < rem; ++j) c[i * n + jt + j] = acc[j];
        }
    }
}

thread_local std::vector<double> transpose_scratch;

// rows x cols row-major -> cols x rows row-major, 8x8 blocked
const double* transpose_into_scratch(const double* src, std::size_t rows, std::size_t cols) {
    transpose_scratch.resize(rows * cols);
    double* dst = transpose_scratch.data();
    constexpr std::size_t kB = 8;
    for (std::size_t i0 = 0; i0 < rows; i0 += kB) {
        const std::size_t i1 = std::min(rows, i0 + kB);
        for (std::size_t j0 = 0; j0 < cols; j0 += kB) {
            const std::size_t j1 = std::min(cols, j0 + kB);
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
        }
    }
    return dst;
}

} // namespace

void gemm_nn(const double* a, std::size_t m, std::size_t k,
             const double* b, std::size_t n, double* c, bool accumulate) {
    if (accumulate)
        gemm_nn_impl<true>(a, m, k, b, n, c);
    else
        gemm_nn_impl<false>(a, m, k, b, n, c);
}

void gemm_nt(const double* a, std::size_t m, std::size_t k,
             const double* b, std::size_t n, double* c, bool accumulate) {
    const double* bt = transpose_into_scratch(b, n, k); // now k x n
    if (accumulate)
        gemm_nn_impl<true>(a, m, k, bt, n, c);
    else
        gemm_nn_impl<false>(a, m, k, bt, n, c);
}

void gemm_tn_acc(const double* a, std::size_t m, std::size_t k,
                 const double* b, std::size_t n, double* c) {
    const double* at = transpose_into_scratch(a, m, k); // now k x m
    gemm_nn_impl<true>(at, k, m, b, n, c);
}

double squared_distance(const double* x, const double* y, std::size_t n) {
    double s0 = 0.0, s1 = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const double d0 = x[i] - y[i];
        const double d1 = x[i + 1] - y[i + 1];
        s0 += d0 * d0;
        s1 += d1 * d1;
    }
    if (i < n) {
        const double d = x[i] - y[i];
        s0 += d * d;
    }
    return s0 + s1;
}

double euclidean_distance(const double* x, const double* y, std::size_t n) {
    return std::sqrt(squared_distance(x, y, n));
}

} // namespace rer
