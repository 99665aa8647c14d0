#pragma once

#include <cmath>
#include <cstddef>

namespace memoqcd {

namespace detail {

// Payne-Hanek style constants from fdlibm: pi/2 split into 33-bit chunks so
// that n * pio2_k is exact for |n| < 2^31.
inline constexpr double kPio2Hi  = 1.57079632673412561417e+00;
inline constexpr double kPio2Mid = 6.07710050630396597660e-11;
inline constexpr double kPio2Lo  = 2.02226624871116645580e-21;
inline constexpr double kTwoOverPi = 6.36619772367581382433e-01;

// Minimax polynomial coefficients (fdlibm k_sin / k_cos) on [-pi/4, pi/4].
inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 =  8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 =  2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 =  1.58969099521155010221e-10;

inline constexpr double kC1 =  4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 =  2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 =  2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;

} // namespace detail

/// Compute sin and cos for a block of angles.
///
/// Branch-free elementwise loop that the compiler can vectorize; on wide-SIMD
/// hardware this runs roughly an order of magnitude faster than per-element
/// libm calls, which matters because circuit evaluation over large pair sets
/// is dominated by trigonometry. Accurate to ~1 ulp for |a| up to ~1e8.
inline void sincos_block(const double* a, double* sin_out, double* cos_out,
                         std::size_t n) {
    using namespace detail;
    for (std::size_t i = 0; i < n; ++i) {
        double x = a[i];
        // Quadrant index and Cody-Waite reduction to r in [-pi/4, pi/4].
        double fn = std::nearbyint(x * kTwoOverPi);
        double r = x - fn * kPio2Hi;
        r -= fn * kPio2Mid;
        r -= fn * kPio2Lo;

        double z = r * r;
        double ks = r + r * z * (kS1 + z * (kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6)))));
        double kc = 1.0 - 0.5 * z + z * z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6)))));

        // sin(x) = ks*cos(q*pi/2) + kc*sin(q*pi/2) with q = fn mod 4.
        double h = fn - 4.0 * std::floor(fn * 0.25);
        double sq = (h == 1.0) ? 1.0 : ((h == 3.0) ? -1.0 : 0.0);
        double cq = (h == 0.0) ? 1.0 : ((h == 2.0) ? -1.0 : 0.0);
        sin_out[i] = ks * cq + kc * sq;
        cos_out[i] = kc * cq - ks * sq;
    }
}

/// Fixed-block compensated-order sum: accumulates in chunks of 64 and then
/// sums the chunk totals in order. The grouping is independent of how the
/// caller produced the data, which keeps reductions bit-stable.
inline double block_sum(const double* v, std::size_t n) {
    constexpr std::size_t kBlock = 64;
    double total = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t end = i + kBlock < n ? i + kBlock : n;
        double chunk = 0.0;
        for (; i < end; ++i) chunk += v[i];
        total += chunk;
    }
    return total;
}

} // namespace memoqcd
