#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iarn/scale_encoding.hpp"
#include "iarn/selfcheck.hpp"

using namespace iarn;

namespace {

float raw_distance(const ScaleEncodingField& f, int channel, int y, int x) {
    // channels 2/3 are stored normalized; undo for raw comparisons
    double s = channel == 2 ? f.scale.h : f.scale.v;
    return static_cast<float>(
        f.field.values()[(static_cast<size_t>(channel) * f.height() + y) * f.width() + x] * s);
}

}  // namespace

TEST_CASE("scale 2 column pattern") {
    ScaleEncodingField f = encode(2, 4, {2.0, 2.0});
    // raw distances over columns: [0, 1, 0, 1]; normalized: [0, .5, 0, .5]
    for (int x = 0; x < 4; ++x) {
        CHECK(raw_distance(f, 2, 0, x) == doctest::Approx(x % 2 == 0 ? 0.0 : 1.0));
        float stored = f.field.values()[(2 * 2 + 0) * 4 + x];
        CHECK(stored == doctest::Approx(x % 2 == 0 ? 0.0 : 0.5));
    }
}

TEST_CASE("scale 1 has zero distances everywhere") {
    ScaleEncodingField f = encode(6, 6, {1.0, 1.0});
    auto v = f.field.values();
    size_t plane = 36;
    for (size_t i = 2 * plane; i < 4 * plane; ++i) CHECK(v[i] == 0.0f);
    // channels 0/1 carry the raw scale factors and are spatially constant
    for (size_t i = 0; i < 2 * plane; ++i) CHECK(v[i] == 1.0f);
}

TEST_CASE("scale 2.5 column distances") {
    ScaleEncodingField f = encode(1, 5, {2.5, 2.5});
    const float expected[] = {0.0f, 1.5f, 0.5f, 2.0f, 1.0f};
    for (int x = 0; x < 5; ++x) CHECK(raw_distance(f, 2, 0, x) == doctest::Approx(expected[x]));
}

TEST_CASE("matches the brute-force minimization exactly") {
    const double scales[] = {1.0, 1.1, 1.5, 2.0, 2.5, 3.3, 4.0};
    for (double sh : scales)
        for (double sv : scales) {
            ScaleEncodingField f = encode(64, 64, {sh, sv});
            for (int i = 0; i < 64; ++i) {
                float expect_h =
                    static_cast<float>(brute_force_encode_distance(i, sh, 64) / sh);
                float expect_v =
                    static_cast<float>(brute_force_encode_distance(i, sv, 64) / sv);
                CHECK(f.field.values()[(2 * 64 + 0) * 64 + i] == expect_h);
                CHECK(f.field.values()[(3 * 64 + i) * 64 + 0] == expect_v);
            }
        }
}

TEST_CASE("distance channels are valid and axis-aligned") {
    ScaleEncodingField f = encode(32, 48, {3.3, 1.7});
    auto v = f.field.values();
    const size_t plane = 32 * 48;
    for (size_t i = 2 * plane; i < 4 * plane; ++i) {
        CHECK(v[i] >= 0.0f);
        CHECK(v[i] < 1.0f);  // normalized by the resampled pixel size
    }
    // d_h depends only on the column, d_v only on the row
    for (int y = 1; y < 32; ++y)
        for (int x = 0; x < 48; ++x) {
            CHECK(v[2 * plane + static_cast<size_t>(y) * 48 + x] == v[2 * plane + x]);
            CHECK(v[3 * plane + static_cast<size_t>(y) * 48 + x] ==
                  v[3 * plane + static_cast<size_t>(y) * 48]);
        }
}

TEST_CASE("axis separability of asymmetric encodings") {
    ScaleEncodingField ab = encode(24, 24, {2.7, 1.3});
    ScaleEncodingField aa = encode(24, 24, {2.7, 2.7});
    ScaleEncodingField bb = encode(24, 24, {1.3, 1.3});
    const size_t plane = 24 * 24;
    for (size_t i = 0; i < plane; ++i) {
        CHECK(ab.field.values()[2 * plane + i] == aa.field.values()[2 * plane + i]);
        CHECK(ab.field.values()[3 * plane + i] == bb.field.values()[3 * plane + i]);
    }
}

TEST_CASE("crop consistency (size independence)") {
    CHECK(crop_consistency_check(encode(8, 8, {2.0, 2.0}), encode(4, 4, {2.0, 2.0})));
    CHECK(crop_consistency_check(encode(64, 64, {3.3, 3.3}), encode(16, 16, {3.3, 3.3})));
    for (double s : {1.1, 1.5, 2.5, 4.0})
        CHECK(crop_consistency_check(encode(48, 64, {s, s}), encode(17, 23, {s, s})));
    CHECK_THROWS_AS(
        crop_consistency_check(encode(8, 8, {2.0, 2.0}), encode(4, 4, {3.0, 3.0})),
        ShapeError);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(encode(0, 4, {2.0, 2.0}), ShapeError);
    CHECK_THROWS_AS(encode(4, 4, {0.0, 2.0}), ShapeError);
}
