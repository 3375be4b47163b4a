#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iarn/selfcheck.hpp"
#include "iarn/tensor.hpp"
#include "test_support.hpp"

using namespace iarn;

namespace {

Tensor rand_tensor(Rng& rng, std::vector<int> shape, double lo, double hi,
                   bool requires_grad = false) {
    auto t = Tensor::zeros(std::move(shape), requires_grad);
    for (auto& v : t.mutable_values()) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

}  // namespace

TEST_CASE("conv2d constant input, all-ones kernel") {
    // 9 taps x 2.0 at the center
    auto input = Tensor::full({1, 1, 3, 3}, 2.0f);
    auto weight = Tensor::full({1, 1, 3, 3}, 1.0f);
    auto bias = Tensor::zeros({1});
    auto out = ops::conv2d(input, ConvSpec{1, 1, 1}, weight, bias);
    CHECK(out.values()[4] == doctest::Approx(18.0).epsilon(1e-6));
    // corners see only 4 taps
    CHECK(out.values()[0] == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("conv2d identity kernel passes input through") {
    Rng rng(3);
    auto input = rand_tensor(rng, {2, 3, 5, 4}, -1, 1);
    auto weight = Tensor::zeros({3, 3, 3, 3});
    {
        auto wv = weight.mutable_values();
        for (int c = 0; c < 3; ++c) wv[(c * 3 + c) * 9 + 4] = 1.0f;  // center tap, same channel
    }
    auto out = ops::conv2d(input, ConvSpec{3, 3, 1}, weight, Tensor::zeros({3}));
    auto iv = input.values();
    auto ov = out.values();
    for (int64_t i = 0; i < input.size(); ++i) CHECK(ov[i] == iv[i]);
}

TEST_CASE("conv2d dilation 2 matches the naive reference") {
    Rng rng(11);
    auto input = rand_tensor(rng, {1, 1, 5, 5}, -1, 1);
    auto weight = rand_tensor(rng, {1, 1, 3, 3}, -1, 1);
    auto bias = rand_tensor(rng, {1}, -1, 1);
    auto fast = ops::conv2d(input, ConvSpec{1, 1, 2}, weight, bias);
    auto ref = testsup::naive_conv2d(input, weight, bias, 2);
    for (int64_t i = 0; i < fast.size(); ++i)
        CHECK(fast.values()[i] == doctest::Approx(ref.values()[i]).epsilon(1e-5));
    // center output only involves taps at offsets {-2, 0, +2}
    double acc = bias.values()[0];
    for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
            acc += weight.values()[ky * 3 + kx] *
                   input.values()[(2 + (ky - 1) * 2) * 5 + 2 + (kx - 1) * 2];
    CHECK(fast.values()[2 * 5 + 2] == doctest::Approx(acc).epsilon(1e-5));
}

TEST_CASE("conv2d matches naive reference across sizes and dilations") {
    Rng rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        int n = 1 + static_cast<int>(rng.uniform_int(2));
        int ci = 1 + static_cast<int>(rng.uniform_int(4));
        int co = 1 + static_cast<int>(rng.uniform_int(4));
        int h = 3 + static_cast<int>(rng.uniform_int(8));
        int w = 3 + static_cast<int>(rng.uniform_int(8));
        int d = 1 + static_cast<int>(rng.uniform_int(3));
        auto input = rand_tensor(rng, {n, ci, h, w}, -1, 1);
        auto weight = rand_tensor(rng, {co, ci, 3, 3}, -0.5, 0.5);
        auto bias = rand_tensor(rng, {co}, -0.5, 0.5);
        auto fast = ops::conv2d(input, ConvSpec{ci, co, d}, weight, bias);
        auto ref = testsup::naive_conv2d(input, weight, bias, d);
        double max_abs = 0;
        for (int64_t i = 0; i < fast.size(); ++i)
            max_abs = std::max(max_abs, std::abs(static_cast<double>(fast.values()[i]) -
                                                 ref.values()[i]));
        CHECK(max_abs <= 1e-5);
    }
}

TEST_CASE("conv2d shape errors name the offending dimension") {
    auto input = Tensor::zeros({1, 2, 4, 4});
    auto weight = Tensor::zeros({3, 3, 3, 3});
    CHECK_THROWS_WITH_AS(ops::conv2d(input, ConvSpec{2, 3, 1}, weight, Tensor::zeros({3})),
                         doctest::Contains("weight dims"), ShapeError);
    auto weight_ok = Tensor::zeros({3, 2, 3, 3});
    CHECK_THROWS_WITH_AS(ops::conv2d(input, ConvSpec{2, 3, 1}, weight_ok, Tensor::zeros({4})),
                         doctest::Contains("bias"), ShapeError);
    CHECK_THROWS_AS(ops::conv2d(Tensor::zeros({1, 3, 4, 4}), ConvSpec{2, 3, 1}, weight_ok,
                                Tensor::zeros({3})),
                    ShapeError);
}

TEST_CASE("elementwise basics") {
    auto x = Tensor::from_values({3}, {1.0f, -2.0f, 0.5f});
    auto zero = ops::add(x, ops::neg(x));
    for (float v : zero.values()) CHECK(v == 0.0f);

    CHECK(ops::sigmoid(Tensor::scalar(0.0f)).item() == doctest::Approx(0.5));
    CHECK(ops::leaky_relu(Tensor::scalar(-1.0f), 0.2f).item() == doctest::Approx(-0.2));
    CHECK(ops::leaky_relu(Tensor::scalar(3.0f), 0.2f).item() == doctest::Approx(3.0));
    CHECK(ops::abs(Tensor::scalar(-0.75f)).item() == doctest::Approx(0.75));
    CHECK(ops::square(Tensor::scalar(-3.0f)).item() == doctest::Approx(9.0));
    CHECK(ops::exp(Tensor::scalar(0.0f)).item() == 1.0f);

    // scalar broadcast both ways
    auto b = ops::add(x, Tensor::scalar(1.0f));
    CHECK(b.values()[1] == doctest::Approx(-1.0));
    auto c = ops::mul(Tensor::scalar(2.0f), x);
    CHECK(c.values()[2] == doctest::Approx(1.0));

    CHECK_THROWS_AS(ops::add(x, Tensor::zeros({4})), ShapeError);
    CHECK_THROWS_AS(ops::mul(Tensor::zeros({2, 2}), Tensor::zeros({4})), ShapeError);
}

TEST_CASE("reductions and concat") {
    auto x = Tensor::from_values({2, 2}, {1, 2, 3, 4});
    CHECK(ops::sum(x).item() == doctest::Approx(10.0));
    CHECK(ops::mean(x).item() == doctest::Approx(2.5));

    auto a = Tensor::full({1, 2, 2, 2}, 1.0f);
    auto b = Tensor::full({1, 1, 2, 2}, 2.0f);
    auto cat = ops::concat_channels<float>({a, b});
    CHECK(cat.shape() == std::vector<int>{1, 3, 2, 2});
    CHECK(cat.values()[0] == 1.0f);
    CHECK(cat.values()[8] == 2.0f);
    CHECK_THROWS_AS(ops::concat_channels<float>({a, Tensor::full({1, 1, 3, 2}, 0.0f)}),
                    ShapeError);
}

TEST_CASE("backward: analytic gradient of sum of squares") {
    auto x = Tensor::from_values({2}, {1.0f, 2.0f}, true);
    auto loss = ops::sum(ops::square(x));
    backward(loss);
    REQUIRE(x.has_grad());
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward: gradients accumulate across uses") {
    auto x = Tensor::from_values({1}, {3.0f}, true);
    auto loss = ops::add(ops::square(x), ops::mul(x, 2.0f));  // x^2 + 2x
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(8.0));  // 2*3 + 2
}

TEST_CASE("backward contract errors") {
    auto x = Tensor::from_values({2}, {1.0f, 2.0f}, true);
    auto y = ops::square(x);
    CHECK_THROWS_AS(backward(y), ShapeError);  // non-scalar

    auto loss = ops::sum(y);
    backward(loss);
    CHECK_THROWS_AS(backward(loss), GraphError);  // consumed graph
    auto loss2 = ops::sum(y);  // reuses a consumed interior node
    CHECK_THROWS_AS(backward(loss2), GraphError);
}

TEST_CASE("constant leaves receive no gradient") {
    auto x = Tensor::from_values({2}, {1.0f, 2.0f}, true);
    auto c = Tensor::from_values({2}, {5.0f, 6.0f});
    auto loss = ops::sum(ops::mul(x, c));
    backward(loss);
    CHECK(x.has_grad());
    CHECK_FALSE(c.has_grad());
    CHECK(x.grad()[0] == doctest::Approx(5.0));
}

TEST_CASE("conv2d weight gradient matches finite differences") {
    Rng rng(5);
    auto input = rand_tensor(rng, {1, 2, 5, 5}, -1, 1);
    auto weight = rand_tensor(rng, {2, 2, 3, 3}, -0.5, 0.5, true);
    auto bias = rand_tensor(rng, {2}, -0.5, 0.5, true);
    auto loss_graph = [&]() {
        return ops::sum(ops::conv2d(input, ConvSpec{2, 2, 1}, weight, bias));
    };
    auto loss_value = [&]() {
        auto y = ops::conv2d(input, ConvSpec{2, 2, 1}, weight, bias);
        double total = 0;
        for (float v : y.values()) total += v;
        return total;
    };
    std::vector<Tensor> leaves{weight, bias};
    GradStats stats = grad_check<float>(loss_graph, loss_value, leaves, 1e-3, 1e-3);
    CHECK(stats.ok_fraction >= 0.95);
    CHECK(stats.max_rel <= 1e-2);
}

TEST_CASE("outputs are bitwise deterministic across repeated evaluation") {
    Rng rng(7);
    auto input = rand_tensor(rng, {2, 3, 9, 7}, -1, 1);
    auto weight = rand_tensor(rng, {4, 3, 3, 3}, -0.5, 0.5);
    auto bias = rand_tensor(rng, {4}, -0.5, 0.5);
    auto a = ops::conv2d(input, ConvSpec{3, 4, 2}, weight, bias);
    auto b = ops::conv2d(input, ConvSpec{3, 4, 2}, weight, bias);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST_CASE("ConvSpec parameter count") {
    CHECK(ConvSpec{7, 16, 1}.param_count() == 1024);  // 16*7*9 + 16
    CHECK(ConvSpec{7, 16, 1}.weight_size() == 1008);
}

TEST_CASE("64-bit ops mirror the 32-bit surface") {
    auto x = TensorF64::from_values({2}, {1.0, 2.0}, true);
    backward(ops::sum(ops::square(x)));
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
}
