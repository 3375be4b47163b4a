#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iarn/resampler.hpp"
#include "test_support.hpp"

using namespace iarn;

TEST_CASE("output_size rounding rule") {
    CHECK(output_size(100, 100, {2.5, 2.5}, Direction::down) == SizeHW{40, 40});
    CHECK(output_size(101, 101, {2.5, 2.5}, Direction::down) == SizeHW{40, 40});  // round(40.4)
    CHECK(output_size(40, 40, {2.5, 2.5}, Direction::up) == SizeHW{100, 100});
    CHECK(output_size(3, 3, {8.0, 8.0}, Direction::down) == SizeHW{1, 1});  // clamped
    // asymmetric: s_h scales width, s_v scales height
    CHECK(output_size(90, 120, {2.0, 3.0}, Direction::down) == SizeHW{30, 60});
    ScalePair realized = realized_scale(90, 120, 30, 60);
    CHECK(realized.h == doctest::Approx(2.0));
    CHECK(realized.v == doctest::Approx(3.0));
}

TEST_CASE("bicubic kernel values") {
    CHECK(bicubic_kernel(0.0) == doctest::Approx(1.0));
    CHECK(bicubic_kernel(1.0) == doctest::Approx(0.0));
    CHECK(bicubic_kernel(0.5) == doctest::Approx(0.5625));
    CHECK(bicubic_kernel(2.0) == doctest::Approx(0.0));
    CHECK(bicubic_kernel(-0.5) == doctest::Approx(0.5625));
    CHECK(bicubic_kernel(1.5) == doctest::Approx(-0.0625));
}

TEST_CASE("nearest upscale x2 index map") {
    Image row(1, 1, 2);
    row.at(0, 0, 0) = 1.0f;
    row.at(0, 0, 1) = 2.0f;
    Image up = resample_to(row, 1, 4, ResampleMethod::nearest);
    CHECK(up.data == std::vector<float>{1, 1, 2, 2});
}

TEST_CASE("bilinear upscale x2 hand-evaluated weights") {
    Image row(1, 1, 2);
    row.at(0, 0, 0) = 0.0f;
    row.at(0, 0, 1) = 1.0f;
    Image up = resample_to(row, 1, 4, ResampleMethod::bilinear);
    REQUIRE(up.width == 4);
    CHECK(up.data[0] == doctest::Approx(0.0));
    CHECK(up.data[1] == doctest::Approx(0.25));
    CHECK(up.data[2] == doctest::Approx(0.75));
    CHECK(up.data[3] == doctest::Approx(1.0));
}

TEST_CASE("identity scale returns an identical image") {
    Rng rng(5);
    Image img = testsup::random_image(rng, 3, 13, 9);
    for (ResampleMethod m :
         {ResampleMethod::nearest, ResampleMethod::bilinear, ResampleMethod::bicubic}) {
        Image out = resample(img, {1.0, 1.0}, Direction::up, m);
        CHECK(out.data == img.data);
    }
}

TEST_CASE("NN down+up idempotence, bit-exact") {
    Rng rng(9);
    const double scales[] = {1.3, 1.5, 2.0, 2.5, 3.3, 4.0};
    for (double sh : scales) {
        for (double sv : {sh, 2.2}) {
            int h = 8 + static_cast<int>(rng.uniform_int(57));
            int w = 8 + static_cast<int>(rng.uniform_int(57));
            Image x = testsup::random_image(rng, 3, h, w);
            SizeHW lr = output_size(h, w, {sh, sv}, Direction::down);
            Image s1 = resample_to(resample_to(x, lr.h, lr.w, ResampleMethod::nearest), h, w,
                                   ResampleMethod::nearest);
            Image s2 = resample_to(resample_to(s1, lr.h, lr.w, ResampleMethod::nearest), h, w,
                                   ResampleMethod::nearest);
            CHECK(s1.data == s2.data);
        }
    }
}

TEST_CASE("constant images are fixed points") {
    Image c(3, 17, 11, 0.37f);
    for (ResampleMethod m :
         {ResampleMethod::nearest, ResampleMethod::bilinear, ResampleMethod::bicubic}) {
        Image down = resample(c, {2.7, 1.4}, Direction::down, m);
        Image up = resample_to(down, 17, 11, m);
        for (float v : down.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
        for (float v : up.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
    }
}

TEST_CASE("tap weights sum to one") {
    for (ResampleMethod m :
         {ResampleMethod::nearest, ResampleMethod::bilinear, ResampleMethod::bicubic}) {
        for (auto [n_in, n_out] : {std::pair{64, 19}, {19, 64}, {7, 23}, {64, 64}}) {
            AxisTaps taps = make_axis_taps(n_in, n_out, m);
            for (int j = 0; j < n_out; ++j) {
                double s = 0;
                for (int k = 0; k < taps.count; ++k)
                    s += taps.weight[static_cast<size_t>(j) * taps.count + k];
                CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("2-D resampling is separable") {
    // row pass then column pass equals the tensor-product evaluation
    Rng rng(13);
    Image img = testsup::random_image(rng, 1, 12, 10);
    for (ResampleMethod m :
         {ResampleMethod::nearest, ResampleMethod::bilinear, ResampleMethod::bicubic}) {
        int oh = 7, ow = 23;
        Image fast = resample_to(img, oh, ow, m);
        AxisTaps ht = make_axis_taps(img.width, ow, m);
        AxisTaps vt = make_axis_taps(img.height, oh, m);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = 0;
                for (int ky = 0; ky < vt.count; ++ky)
                    for (int kx = 0; kx < ht.count; ++kx)
                        acc += vt.weight[static_cast<size_t>(y) * vt.count + ky] *
                               ht.weight[static_cast<size_t>(x) * ht.count + kx] *
                               img.at(0, vt.index[static_cast<size_t>(y) * vt.count + ky],
                                      ht.index[static_cast<size_t>(x) * ht.count + kx]);
                CHECK(fast.at(0, y, x) == doctest::Approx(acc).epsilon(1e-6));
            }
    }
}

TEST_CASE("zero-size output is an error") {
    Image img(1, 4, 4);
    CHECK_THROWS_AS(resample_to(img, 0, 4, ResampleMethod::nearest), ShapeError);
    CHECK_THROWS_AS(make_axis_taps(4, 0, ResampleMethod::bilinear), ShapeError);
}

TEST_CASE("tensor resample matches image resample") {
    Rng rng(21);
    Image img = testsup::random_image(rng, 3, 14, 9);
    for (ResampleMethod m :
         {ResampleMethod::nearest, ResampleMethod::bilinear, ResampleMethod::bicubic}) {
        Image ref = resample_to(img, 6, 20, m);
        Tensor t = Tensor::from_values({1, 3, 14, 9}, img.data);
        Tensor out = resample2d(t, 6, 20, m);
        for (int64_t i = 0; i < out.size(); ++i) CHECK(out.values()[i] == ref.data[i]);
    }
}

TEST_CASE("method name round trip") {
    for (ResampleMethod m :
         {ResampleMethod::nearest, ResampleMethod::bilinear, ResampleMethod::bicubic})
        CHECK(resample_method_from_string(to_string(m)) == m);
    CHECK(resample_method_from_string("nn") == ResampleMethod::nearest);
    CHECK_THROWS_AS(resample_method_from_string("lanczos"), ConfigError);
}
