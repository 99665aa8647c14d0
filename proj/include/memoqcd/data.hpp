#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "memoqcd/rng.hpp"

namespace memoqcd {

/// Per-dimension affine map scaled = offset + factor * raw.  A factor of zero
/// marks a dimension collapsed to a midpoint (no inverse).
struct ScaleTransform {
    std::vector<double> offset;
    std::vector<double> factor;

    int dims() const { return static_cast<int>(offset.size()); }

    std::vector<double> apply(const std::vector<double>& raw) const {
        std::vector<double> out(raw.size());
        for (std::size_t j = 0; j < raw.size(); ++j) out[j] = offset[j] + factor[j] * raw[j];
        return out;
    }

    std::vector<double> invert(const std::vector<double>& scaled) const {
        std::vector<double> out(scaled.size());
        for (std::size_t j = 0; j < scaled.size(); ++j) {
            if (factor[j] == 0.0)
                throw std::domain_error("scale transform collapsed this dimension; no inverse");
            out[j] = (scaled[j] - offset[j]) / factor[j];
        }
        return out;
    }
};

/// A set of d-dimensional points stored row-major.
struct Dataset {
    int d = 0;
    std::vector<double> values;
    std::string provenance;
    std::optional<ScaleTransform> scale;

    std::size_t size() const { return d == 0 ? 0 : values.size() / static_cast<std::size_t>(d); }
    const double* point(std::size_t i) const { return values.data() + i * static_cast<std::size_t>(d); }
    std::vector<double> point_vec(std::size_t i) const {
        return std::vector<double>(point(i), point(i) + d);
    }

    void check_valid() const {
        if (d < 1) throw std::invalid_argument("dataset dimension must be positive");
        if (values.size() % static_cast<std::size_t>(d) != 0)
            throw std::invalid_argument("dataset value count is not a multiple of the dimension");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("dataset contains a non-finite value");
    }
};

/// Per-dimension (min, max) over all points.
inline std::vector<std::pair<double, double>> bounding_box(const Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("empty dataset has no bounding box");
    std::vector<std::pair<double, double>> box(
        static_cast<std::size_t>(ds.d),
        {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (int j = 0; j < ds.d; ++j) {
            double v = ds.point(i)[j];
            box[static_cast<std::size_t>(j)].first = std::min(box[static_cast<std::size_t>(j)].first, v);
            box[static_cast<std::size_t>(j)].second = std::max(box[static_cast<std::size_t>(j)].second, v);
        }
    return box;
}

namespace detail {

inline void add_noise(Dataset& ds, double noise_sd, Rng& rng) {
    if (noise_sd == 0.0) return;
    for (double& v : ds.values) v += noise_sd * rng.normal();
}

inline std::string tag(const char* name, std::size_t n, std::uint64_t seed) {
    std::ostringstream os;
    os << name << " n=" << n << " seed=" << seed;
    return os.str();
}

} // namespace detail

/// Two interleaved unit half-circles, the second shifted by (1, 0.5), with
/// isotropic Gaussian noise.
inline Dataset two_moons(std::size_t n = 1000, double noise_sd = 0.1, std::uint64_t seed = 0) {
    if (n < 2) throw std::invalid_argument("need at least two points");
    const std::size_t n_outer = n - n / 2, n_inner = n / 2;
    Dataset ds;
    ds.d = 2;
    ds.values.reserve(2 * n);
    ds.provenance = detail::tag("two-moons", n, seed);
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < n_outer; ++i) {
        double t = n_outer > 1 ? pi * static_cast<double>(i) / static_cast<double>(n_outer - 1) : 0.0;
        ds.values.push_back(std::cos(t));
        ds.values.push_back(std::sin(t));
    }
    for (std::size_t i = 0; i < n_inner; ++i) {
        double t = n_inner > 1 ? pi * static_cast<double>(i) / static_cast<double>(n_inner - 1) : 0.0;
        ds.values.push_back(1.0 - std::cos(t));
        ds.values.push_back(0.5 - std::sin(t));
    }
    Rng rng(seed);
    detail::add_noise(ds, noise_sd, rng);
    return ds;
}

/// Two concentric circles of radius 2 (outer) and 1 (inner).
inline Dataset concentric_circles(std::size_t n = 2000, double noise_sd = 0.1,
                                  std::uint64_t seed = 0) {
    if (n < 2) throw std::invalid_argument("need at least two points");
    const std::size_t n_outer = n - n / 2, n_inner = n / 2;
    Dataset ds;
    ds.d = 2;
    ds.values.reserve(2 * n);
    ds.provenance = detail::tag("circles", n, seed);
    const double two_pi = 6.28318530717958647692;
    auto ring = [&](std::size_t count, double radius) {
        for (std::size_t i = 0; i < count; ++i) {
            double t = two_pi * static_cast<double>(i) / static_cast<double>(count);
            ds.values.push_back(radius * std::cos(t));
            ds.values.push_back(radius * std::sin(t));
        }
    };
    ring(n_outer, 2.0);
    ring(n_inner, 1.0);
    Rng rng(seed);
    detail::add_noise(ds, noise_sd, rng);
    return ds;
}

inline const std::vector<std::vector<double>>& default_blob_centers() {
    static const std::vector<std::vector<double>> centers{{-2.0, -2.0}, {2.0, -2.0}, {0.0, 2.0}};
    return centers;
}

/// Isotropic Gaussian clusters, points assigned to centers round-robin.
inline Dataset gaussian_blobs(std::size_t n = 2000,
                              const std::vector<std::vector<double>>& centers = default_blob_centers(),
                              double sd = 0.5, std::uint64_t seed = 0) {
    if (n < 1) throw std::invalid_argument("need at least one point");
    if (centers.empty()) throw std::invalid_argument("need at least one center");
    const std::size_t d = centers.front().size();
    if (d < 1) throw std::invalid_argument("centers must be nonempty vectors");
    for (const auto& c : centers)
        if (c.size() != d) throw std::invalid_argument("centers must share one dimension");
    Dataset ds;
    ds.d = static_cast<int>(d);
    ds.values.reserve(n * d);
    ds.provenance = detail::tag("blobs", n, seed);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double>& c = centers[i % centers.size()];
        for (std::size_t j = 0; j < d; ++j) ds.values.push_back(c[j] + sd * rng.normal());
    }
    return ds;
}

/// Two interleaved Archimedean spiral arms, radius 0.25 to 2 over 1.5 turns.
inline Dataset spirals(std::size_t n = 2000, double noise_sd = 0.1, std::uint64_t seed = 0) {
    if (n < 2) throw std::invalid_argument("need at least two points");
    const std::size_t n_a = n - n / 2, n_b = n / 2;
    Dataset ds;
    ds.d = 2;
    ds.values.reserve(2 * n);
    ds.provenance = detail::tag("spirals", n, seed);
    const double pi = 3.14159265358979323846;
    auto arm = [&](std::size_t count, double phase) {
        for (std::size_t i = 0; i < count; ++i) {
            double u = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
            double angle = phase + 3.0 * pi * u;
            double radius = 0.25 + 1.75 * u;
            ds.values.push_back(radius * std::cos(angle));
            ds.values.push_back(radius * std::sin(angle));
        }
    };
    arm(n_a, 0.0);
    arm(n_b, pi);
    Rng rng(seed);
    detail::add_noise(ds, noise_sd, rng);
    return ds;
}

/// Min-max map of every dimension onto [a,b]; the affine transform is stored
/// on the result for inverse mapping.  A zero-spread dimension collapses to
/// the midpoint with a warning.
inline Dataset scale_to_interval(const Dataset& ds, double a, double b) {
    ds.check_valid();
    if (!(a < b)) throw std::invalid_argument("interval must satisfy a < b");
    if (ds.size() == 0) throw std::invalid_argument("cannot scale an empty dataset");
    const auto box = bounding_box(ds);

    ScaleTransform tf;
    tf.offset.resize(static_cast<std::size_t>(ds.d));
    tf.factor.resize(static_cast<std::size_t>(ds.d));
    for (int j = 0; j < ds.d; ++j) {
        const auto [mn, mx] = box[static_cast<std::size_t>(j)];
        if (mx == mn) {
            std::cerr << "warning: dimension " << j
                      << " has zero spread; mapping it to the interval midpoint\n";
            tf.factor[static_cast<std::size_t>(j)] = 0.0;
            tf.offset[static_cast<std::size_t>(j)] = 0.5 * (a + b);
        } else {
            double f = (b - a) / (mx - mn);
            tf.factor[static_cast<std::size_t>(j)] = f;
            tf.offset[static_cast<std::size_t>(j)] = a - f * mn;
        }
    }

    Dataset out;
    out.d = ds.d;
    out.values.resize(ds.values.size());
    out.provenance = ds.provenance;
    out.scale = tf;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (int j = 0; j < ds.d; ++j) {
            const auto [mn, mx] = box[static_cast<std::size_t>(j)];
            double v = ds.point(i)[j];
            double s;
            if (mx == mn) s = 0.5 * (a + b);
            else if (v == mn) s = a;   // endpoints land exactly
            else if (v == mx) s = b;
            else s = tf.offset[static_cast<std::size_t>(j)] + tf.factor[static_cast<std::size_t>(j)] * v;
            out.values[i * static_cast<std::size_t>(ds.d) + static_cast<std::size_t>(j)] = s;
        }
    return out;
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    ds.check_valid();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# d=" << ds.d;
    if (!ds.provenance.empty()) out << " " << ds.provenance;
    out << "\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.point(i)[j]);
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    Dataset ds;
    ds.provenance = path;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::vector<double> fields;
        std::size_t pos = 0;
        int col = 0;
        while (true) {
            ++col;
            std::size_t comma = line.find(',', pos);
            std::string tok = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                          : comma - pos);
            std::size_t consumed = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &consumed);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ": row " + std::to_string(row) + ", column " +
                                         std::to_string(col) + ": not a number: '" + tok + "'");
            }
            while (consumed < tok.size() &&
                   (tok[consumed] == ' ' || tok[consumed] == '\t' || tok[consumed] == '\r'))
                ++consumed;
            if (consumed != tok.size())
                throw std::runtime_error(path + ": row " + std::to_string(row) + ", column " +
                                         std::to_string(col) + ": trailing junk in '" + tok + "'");
            fields.push_back(v);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (ds.d == 0) ds.d = static_cast<int>(fields.size());
        if (static_cast<int>(fields.size()) != ds.d)
            throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " values, expected " +
                                     std::to_string(ds.d));
        ds.values.insert(ds.values.end(), fields.begin(), fields.end());
    }
    if (ds.size() == 0) throw std::runtime_error(path + ": no data rows");
    ds.check_valid();
    return ds;
}

} // namespace memoqcd
