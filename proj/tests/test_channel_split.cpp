#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iarn/channel_split.hpp"
#include "test_support.hpp"

using namespace iarn;

TEST_CASE("constant images split into (c, 0)") {
    Image c(3, 12, 9, 0.625f);
    for (ResampleMethod m :
         {ResampleMethod::nearest, ResampleMethod::bilinear, ResampleMethod::bicubic}) {
        SplitPair pair = split(c, {2.3, 1.6}, m);
        for (float v : pair.lf.data) CHECK(v == doctest::Approx(0.625f).epsilon(1e-6));
        for (float v : pair.hf.data) CHECK(std::abs(v) <= 1e-6f);
    }
}

TEST_CASE("NN split is idempotent on its own LF output") {
    Rng rng(31);
    const double scales[] = {1.5, 2.0, 2.5, 3.3};
    for (double sh : scales)
        for (double sv : {sh, 1.7}) {
            int h = 8 + static_cast<int>(rng.uniform_int(57));
            int w = 8 + static_cast<int>(rng.uniform_int(57));
            Image x = testsup::random_image(rng, 3, h, w);
            SplitPair first = split(x, {sh, sv}, ResampleMethod::nearest);
            SplitPair second = split(first.lf, {sh, sv}, ResampleMethod::nearest);
            CHECK(second.lf.data == first.lf.data);           // s(lf) == lf bit-exactly
            for (float v : second.hf.data) CHECK(v == 0.0f);  // zero residual, bit-exact
        }
}

TEST_CASE("merge(split(x)) returns x within 2^-20 per element") {
    Rng rng(37);
    const float tol = std::pow(2.0f, -20.0f);
    for (int trial = 0; trial < 100; ++trial) {
        int h = 8 + static_cast<int>(rng.uniform_int(25));
        int w = 8 + static_cast<int>(rng.uniform_int(25));
        Image x = testsup::random_image(rng, 3, h, w);
        ScalePair scale{rng.uniform(1.1, 4.0), rng.uniform(1.1, 4.0)};
        ResampleMethod m = trial % 3 == 0   ? ResampleMethod::nearest
                           : trial % 3 == 1 ? ResampleMethod::bilinear
                                            : ResampleMethod::bicubic;
        Image back = merge(split(x, scale, m));
        for (size_t i = 0; i < x.data.size(); ++i)
            CHECK(std::abs(back.data[i] - x.data[i]) <= tol);
    }
}

TEST_CASE("merge identities") {
    Rng rng(41);
    Image lf = testsup::random_image(rng, 3, 6, 6);
    Image zero(3, 6, 6, 0.0f);
    SplitPair a{lf, zero, {2, 2}, ResampleMethod::nearest};
    CHECK(merge(a).data == lf.data);
    SplitPair b{zero, lf, {2, 2}, ResampleMethod::nearest};
    CHECK(merge(b).data == lf.data);
}

TEST_CASE("merge shape mismatch is an error") {
    SplitPair bad{Image(3, 4, 4), Image(3, 4, 5), {2, 2}, ResampleMethod::nearest};
    CHECK_THROWS_AS(merge(bad), ShapeError);
}

TEST_CASE("disabled splitting feeds the raw image to LF and zeros to HF") {
    Rng rng(43);
    Image x = testsup::random_image(rng, 3, 10, 10);
    SplitPair pair = split_disabled(x, {2.0, 2.0}, ResampleMethod::nearest);
    CHECK(pair.lf.data == x.data);
    for (float v : pair.hf.data) CHECK(v == 0.0f);
    CHECK(merge(pair).data == x.data);
}

TEST_CASE("degenerate LR side") {
    // 1x1 stays valid (clamped); split still reconstructs
    Image tiny(3, 1, 1, 0.5f);
    SplitPair pair = split(tiny, {4.0, 4.0}, ResampleMethod::nearest);
    CHECK(pair.lf.data[0] == 0.5f);
}
