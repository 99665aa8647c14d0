#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "memoqcd/data.hpp"
#include "memoqcd/dmkde.hpp"
#include "memoqcd/parallel.hpp"
#include "memoqcd/rng.hpp"

namespace memoqcd {

/// Normalized classical Gaussian KDE:
/// (1/N) (gamma/pi)^(d/2) sum_i exp(-gamma ||x - x_i||^2).
inline double gaussian_kde(const Dataset& dataset, double gamma, const std::vector<double>& x) {
    if (dataset.size() == 0) throw std::invalid_argument("dataset must be nonempty");
    if (static_cast<int>(x.size()) != dataset.d)
        throw std::invalid_argument("point dimension does not match dataset");
    if (!(gamma > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double* p = dataset.point(i);
        double d2 = 0.0;
        for (int j = 0; j < dataset.d; ++j) {
            double diff = x[static_cast<std::size_t>(j)] - p[j];
            d2 += diff * diff;
        }
        acc += std::exp(-gamma * d2);
    }
    const double pi = 3.14159265358979323846;
    return acc / static_cast<double>(dataset.size()) *
           std::pow(gamma / pi, 0.5 * static_cast<double>(dataset.d));
}

namespace detail {

/// Squared distance to the k-th nearest neighbor of `x` among the rows of
/// `samples`, skipping row `skip` (pass any out-of-range index to keep all).
inline double knn_dist2(const double* x, const Dataset& samples, int k, std::size_t skip,
                        std::vector<double>& scratch) {
    scratch.clear();
    for (std::size_t j = 0; j < samples.size(); ++j) {
        if (j == skip) continue;
        const double* p = samples.point(j);
        double d2 = 0.0;
        for (int c = 0; c < samples.d; ++c) {
            double diff = x[c] - p[c];
            d2 += diff * diff;
        }
        scratch.push_back(d2);
    }
    auto kth = scratch.begin() + (k - 1);
    std::nth_element(scratch.begin(), kth, scratch.end());
    return *kth;
}

inline Dataset jittered(const Dataset& ds, Rng& rng) {
    Dataset out = ds;
    for (double& v : out.values) v += 1e-12 * rng.normal();
    return out;
}

} // namespace detail

/// k-NN Kullback-Leibler divergence estimate D(T||P) from n samples of t and
/// m samples of p:  (d/n) sum_i log(s_k(x_i)/r_k(x_i)) + log(m/(n-1)), with
/// r_k the k-th-neighbor distance of x_i within the t-sample (excluding x_i)
/// and s_k within the p-sample.  Duplicate points that collapse a neighbor
/// distance to zero are jittered by 1e-12 with a warning.
inline double kld_knn(const Dataset& t_samples, const Dataset& p_samples, int k = 5,
                      int threads = 1) {
    t_samples.check_valid();
    p_samples.check_valid();
    if (t_samples.d != p_samples.d)
        throw std::invalid_argument("sample sets must share one dimension");
    if (k < 1) throw std::invalid_argument("neighbor count must be positive");
    const std::size_t n = t_samples.size(), m = p_samples.size();
    if (n <= static_cast<std::size_t>(k))
        throw std::invalid_argument("need more than k samples from the true density");
    if (m < static_cast<std::size_t>(k))
        throw std::invalid_argument("need at least k samples from the estimated density");

    const Dataset* t_set = &t_samples;
    const Dataset* p_set = &p_samples;
    Dataset t_jit, p_jit;
    Rng jitter_rng(0x6a69747465727321ULL);

    for (int attempt = 0;; ++attempt) {
        std::vector<double> terms(n, 0.0);
        std::vector<char> degenerate(n, 0);
        parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
            std::vector<double> scratch;
            for (std::size_t i = begin; i < end; ++i) {
                const double* x = t_set->point(i);
                double r2 = detail::knn_dist2(x, *t_set, k, i, scratch);
                double s2 = detail::knn_dist2(x, *p_set, k, p_set->size(), scratch);
                if (r2 <= 0.0 || s2 <= 0.0) {
                    degenerate[i] = 1;
                    continue;
                }
                terms[i] = 0.5 * (std::log(s2) - std::log(r2));
            }
        });
        if (std::find(degenerate.begin(), degenerate.end(), 1) == degenerate.end()) {
            double sum = 0.0;
            for (double t : terms) sum += t;
            return static_cast<double>(t_samples.d) / static_cast<double>(n) * sum +
                   std::log(static_cast<double>(m) / static_cast<double>(n - 1));
        }
        if (attempt >= 3)
            throw std::runtime_error("duplicate points persist after jitter; cannot estimate KLD");
        std::cerr << "warning: duplicate points collapse a neighbor distance to zero; "
                     "applying 1e-12 jitter\n";
        t_jit = detail::jittered(*t_set, jitter_rng);
        p_jit = detail::jittered(*p_set, jitter_rng);
        t_set = &t_jit;
        p_set = &p_jit;
    }
}

namespace detail {

inline Dataset rejection_sample_impl(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<std::pair<double, double>>& bounds,
                                     std::size_t count, std::uint64_t seed, double max_density) {
    if (count < 1) throw std::invalid_argument("sample count must be positive");
    if (bounds.empty()) throw std::invalid_argument("bounds must be nonempty");
    for (const auto& [lo, hi] : bounds)
        if (!(lo < hi)) throw std::invalid_argument("bounds must satisfy lo < hi");
    if (!(max_density > 0.0)) throw std::invalid_argument("maximum density must be positive");

    Dataset out;
    out.d = static_cast<int>(bounds.size());
    out.values.reserve(count * bounds.size());
    out.provenance = "rejection-sample seed=" + std::to_string(seed);

    Rng rng(seed);
    std::vector<double> x(bounds.size());
    const std::size_t max_proposals = 100000 * count + 1000000;
    std::size_t accepted = 0;
    for (std::size_t proposals = 0; accepted < count; ++proposals) {
        if (proposals >= max_proposals)
            throw std::runtime_error("rejection sampling acceptance rate too low");
        for (std::size_t j = 0; j < bounds.size(); ++j)
            x[j] = rng.uniform(bounds[j].first, bounds[j].second);
        const double u = rng.uniform(0.0, max_density);
        if (u < f(x)) {
            out.values.insert(out.values.end(), x.begin(), x.end());
            ++accepted;
        }
    }
    return out;
}

} // namespace detail

/// Draw `count` points from an explicit density function over a box, given a
/// bound on its maximum.  Deterministic under the seed.
inline Dataset rejection_sample(const std::function<double(const std::vector<double>&)>& density,
                                const std::vector<std::pair<double, double>>& bounds,
                                std::size_t count, std::uint64_t seed, double max_density) {
    return detail::rejection_sample_impl(density, bounds, count, seed, max_density);
}

/// Draw `count` points from a density grid (piecewise-constant over cells).
inline Dataset rejection_sample(const DensityGrid& grid, std::size_t count, std::uint64_t seed) {
    std::vector<std::pair<double, double>> bounds;
    for (const GridAxis& ax : grid.axes) bounds.emplace_back(ax.lo, ax.hi);
    const double max_density = *std::max_element(grid.values.begin(), grid.values.end());
    return detail::rejection_sample_impl(
        [&grid](const std::vector<double>& x) { return grid.value_at(x); }, bounds, count, seed,
        max_density);
}

struct KLDReport {
    double mean = 0.0;
    double std_dev = 0.0;
    std::vector<double> values;
    int k = 0;
    std::size_t n = 0;  // samples from the true density
    std::size_t m = 0;  // samples drawn per seed from the model
};

/// Padded sampling box: the kernel's trained interval extended by 3/sqrt(gamma)
/// per side in every dimension.
inline std::vector<std::pair<double, double>> padded_bounds(const KernelSpec& kernel, int dims) {
    const double pad = 3.0 / std::sqrt(kernel.gamma);
    return std::vector<std::pair<double, double>>(static_cast<std::size_t>(dims),
                                                  {kernel.a - pad, kernel.b + pad});
}

/// Average the k-NN KLD between the dataset and model-generated sample sets
/// over n_seeds generation seeds.
inline KLDReport evaluate_model_kld(DMKDEModel& model, const Dataset& dataset, int n_seeds = 50,
                                    int k = 5, int grid_resolution = 128, std::uint64_t seed = 0,
                                    int threads = 1) {
    if (n_seeds < 1) throw std::invalid_argument("seed count must be positive");
    dataset.check_valid();
    DensityGrid grid =
        density_grid(model, padded_bounds(model.kernel, model.layout.d), grid_resolution,
                     /*shots=*/0, /*seed=*/0, threads);

    KLDReport report;
    report.k = k;
    report.n = dataset.size();
    report.m = dataset.size();
    report.values.resize(static_cast<std::size_t>(n_seeds));
    for (int s = 0; s < n_seeds; ++s) {
        Dataset samples =
            rejection_sample(grid, report.m, derive_seed(seed, static_cast<std::uint64_t>(s)));
        report.values[static_cast<std::size_t>(s)] = kld_knn(dataset, samples, k, threads);
    }

    double sum = 0.0;
    for (double v : report.values) sum += v;
    report.mean = sum / static_cast<double>(n_seeds);
    double ss = 0.0;
    for (double v : report.values) ss += (v - report.mean) * (v - report.mean);
    report.std_dev = n_seeds > 1 ? std::sqrt(ss / static_cast<double>(n_seeds - 1)) : 0.0;
    return report;
}

inline void write_kld_csv(const KLDReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[32];
    out << "seed,kld\n";
    for (std::size_t s = 0; s < report.values.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g", report.values[s]);
        out << s << "," << buf << "\n";
    }
    out << "# mean=" << report.mean << " std=" << report.std_dev << " k=" << report.k
        << " n=" << report.n << " m=" << report.m << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Pearson correlation between two equal-length value arrays.
inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("need two equal-length arrays of at least two values");
    const double n = static_cast<double>(a.size());
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw std::domain_error("correlation undefined for a constant array");
    return sab / std::sqrt(saa * sbb);
}

} // namespace memoqcd
