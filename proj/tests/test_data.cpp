#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "memoqcd/data.hpp"

using namespace memoqcd;
using Catch::Matchers::WithinAbs;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/memoqcd_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

double dist(const double* p, double x, double y) {
    return std::hypot(p[0] - x, p[1] - y);
}

} // namespace

TEST_CASE("generators are deterministic and sized") {
    for (auto make : {+[](std::uint64_t s) { return two_moons(500, 0.1, s); },
                      +[](std::uint64_t s) { return concentric_circles(500, 0.1, s); },
                      +[](std::uint64_t s) { return spirals(500, 0.1, s); },
                      +[](std::uint64_t s) { return gaussian_blobs(500, default_blob_centers(), 0.5, s); }}) {
        Dataset a = make(7), b = make(7), c = make(8);
        REQUIRE(a.size() == 500);
        REQUIRE(a.d == 2);
        REQUIRE(a.values == b.values);
        REQUIRE(a.values != c.values);
        a.check_valid();
    }
}

TEST_CASE("two_moons noiseless geometry") {
    Dataset ds = two_moons(100, 0.0, 3);
    REQUIRE(ds.size() == 100);
    // First arc: unit circle, upper half. Second: unit circle around (1, 0.5), lower half.
    for (std::size_t i = 0; i < 50; ++i) {
        const double* p = ds.point(i);
        REQUIRE_THAT(dist(p, 0.0, 0.0), WithinAbs(1.0, 1e-12));
        REQUIRE(p[1] >= -1e-12);
    }
    for (std::size_t i = 50; i < 100; ++i) {
        const double* p = ds.point(i);
        REQUIRE_THAT(dist(p, 1.0, 0.5), WithinAbs(1.0, 1e-12));
        REQUIRE(p[1] <= 0.5 + 1e-12);
    }
    // Arc endpoints.
    REQUIRE_THAT(ds.point(0)[0], WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(ds.point(49)[0], WithinAbs(-1.0, 1e-12));
}

TEST_CASE("concentric_circles noiseless radii") {
    Dataset ds = concentric_circles(80, 0.0, 0);
    for (std::size_t i = 0; i < 40; ++i)
        REQUIRE_THAT(dist(ds.point(i), 0, 0), WithinAbs(2.0, 1e-12));
    for (std::size_t i = 40; i < 80; ++i)
        REQUIRE_THAT(dist(ds.point(i), 0, 0), WithinAbs(1.0, 1e-12));
}

TEST_CASE("spirals noiseless radial range") {
    Dataset ds = spirals(80, 0.0, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double r = dist(ds.point(i), 0, 0);
        REQUIRE(r >= 0.25 - 1e-12);
        REQUIRE(r <= 2.0 + 1e-12);
    }
    // Arm starts sit at radius 0.25 on opposite sides.
    REQUIRE_THAT(ds.point(0)[0], WithinAbs(0.25, 1e-12));
    REQUIRE_THAT(ds.point(40)[0], WithinAbs(-0.25, 1e-12));
}

TEST_CASE("gaussian_blobs cluster assignment") {
    Dataset tight = gaussian_blobs(90, default_blob_centers(), 1e-9, 5);
    for (std::size_t i = 0; i < tight.size(); ++i) {
        const auto& c = default_blob_centers()[i % 3];
        REQUIRE_THAT(dist(tight.point(i), c[0], c[1]), WithinAbs(0.0, 1e-6));
    }
    REQUIRE_THROWS_AS(gaussian_blobs(10, {}, 0.5, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(gaussian_blobs(10, {{0.0, 0.0}, {1.0}}, 0.5, 0), std::invalid_argument);
}

TEST_CASE("scale_to_interval maps the bounding box onto [a,b]") {
    Dataset ds = two_moons(300, 0.1, 11);
    Dataset scaled = scale_to_interval(ds, -3.0, 3.0);
    REQUIRE(scaled.size() == ds.size());
    REQUIRE(scaled.scale.has_value());

    auto box = bounding_box(scaled);
    for (int j = 0; j < 2; ++j) {
        REQUIRE(box[static_cast<std::size_t>(j)].first == -3.0);   // endpoints land exactly
        REQUIRE(box[static_cast<std::size_t>(j)].second == 3.0);
    }

    SECTION("transform inverts back to the raw points") {
        for (std::size_t i = 0; i < ds.size(); i += 17) {
            auto raw = scaled.scale->invert(scaled.point_vec(i));
            REQUIRE_THAT(raw[0], WithinAbs(ds.point(i)[0], 1e-12));
            REQUIRE_THAT(raw[1], WithinAbs(ds.point(i)[1], 1e-12));
        }
    }
    SECTION("apply reproduces the scaled points") {
        for (std::size_t i = 0; i < ds.size(); i += 17) {
            auto s = scaled.scale->apply(ds.point_vec(i));
            REQUIRE_THAT(s[0], WithinAbs(scaled.point(i)[0], 1e-12));
            REQUIRE_THAT(s[1], WithinAbs(scaled.point(i)[1], 1e-12));
        }
    }
}

TEST_CASE("scale_to_interval collapses a zero-spread dimension to the midpoint") {
    Dataset ds;
    ds.d = 2;
    ds.values = {1.0, 5.0, 2.0, 5.0, 3.0, 5.0};
    Dataset scaled = scale_to_interval(ds, -3.0, 3.0);
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(scaled.point(i)[1] == 0.0);
    REQUIRE(scaled.scale->factor[1] == 0.0);
    REQUIRE_THROWS_AS(scaled.scale->invert({0.0, 0.0}), std::domain_error);
}

TEST_CASE("CSV round trip preserves values exactly") {
    TempFile f("roundtrip.csv");
    Dataset ds = spirals(64, 0.1, 21);
    write_csv(ds, f.path);
    Dataset back = read_csv(f.path);
    REQUIRE(back.d == ds.d);
    REQUIRE(back.values == ds.values);
}

TEST_CASE("read_csv rejects malformed input") {
    SECTION("ragged row") {
        TempFile f("ragged.csv");
        std::ofstream(f.path) << "1,2\n3\n";
        REQUIRE_THROWS_WITH(read_csv(f.path), Catch::Matchers::ContainsSubstring("row 2"));
    }
    SECTION("non-numeric field") {
        TempFile f("junk.csv");
        std::ofstream(f.path) << "1,two\n";
        REQUIRE_THROWS_WITH(read_csv(f.path), Catch::Matchers::ContainsSubstring("not a number"));
    }
    SECTION("trailing junk in a field") {
        TempFile f("trail.csv");
        std::ofstream(f.path) << "1,2x\n";
        REQUIRE_THROWS_WITH(read_csv(f.path), Catch::Matchers::ContainsSubstring("trailing junk"));
    }
    SECTION("comment-only file") {
        TempFile f("empty.csv");
        std::ofstream(f.path) << "# d=2 nothing\n";
        REQUIRE_THROWS_WITH(read_csv(f.path), Catch::Matchers::ContainsSubstring("no data rows"));
    }
    SECTION("missing file") {
        REQUIRE_THROWS_WITH(read_csv("/tmp/memoqcd_does_not_exist.csv"),
                            Catch::Matchers::ContainsSubstring("cannot open"));
    }
}

TEST_CASE("bounding_box and dataset validation") {
    Dataset ds;
    ds.d = 2;
    ds.values = {0.0, 1.0, -2.0, 4.0};
    auto box = bounding_box(ds);
    REQUIRE(box[0] == std::pair{-2.0, 0.0});
    REQUIRE(box[1] == std::pair{1.0, 4.0});

    Dataset bad;
    bad.d = 2;
    bad.values = {1.0, 2.0, 3.0};
    REQUIRE_THROWS_AS(bad.check_valid(), std::invalid_argument);
    bad.values = {1.0, std::nan("")};
    REQUIRE_THROWS_AS(bad.check_valid(), std::invalid_argument);
    REQUIRE_THROWS_AS(bounding_box(Dataset{}), std::invalid_argument);
}
