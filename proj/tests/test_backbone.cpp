#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iarn/backbone.hpp"
#include "test_support.hpp"

using namespace iarn;

namespace {

template <class S>
BasicTensor<S> rand_tensor(Rng& rng, std::vector<int> shape, double lo = 0.0, double hi = 1.0) {
    auto t = BasicTensor<S>::zeros(std::move(shape));
    for (auto& v : t.mutable_values()) v = static_cast<S>(rng.uniform(lo, hi));
    return t;
}

template <class S>
void randomize(Backbone<S>& net, Rng& rng, double bound) {
    for (auto& p : net.params())
        for (auto& v : p.value.mutable_values()) v = static_cast<S>(rng.uniform(-bound, bound));
}

template <class S>
double roundtrip_error(const BackboneConfig& cfg, uint64_t seed) {
    Backbone<S> net(cfg);
    Rng rng(seed);
    randomize(net, rng, 0.05);
    auto lf = rand_tensor<S>(rng, {1, 3, 16, 16});
    auto hf = rand_tensor<S>(rng, {1, 3, 16, 16});
    auto p = encoding_batch<S>(encode(16, 16, {2.6, 1.4}), 1);
    auto [y, z] = net.forward(lf, hf, p);
    auto [lf2, hf2] = net.inverse(y, z, p);
    double err = 0;
    for (int64_t i = 0; i < lf.size(); ++i) {
        err = std::max(err, std::abs(static_cast<double>(lf.values()[i]) - lf2.values()[i]));
        err = std::max(err, std::abs(static_cast<double>(hf.values()[i]) - hf2.values()[i]));
    }
    return err;
}

}  // namespace

TEST_CASE("invertibility across block counts, encoding modes, precisions") {
    uint64_t seed = 50;
    for (int blocks : {1, 4, 8}) {
        for (EncodingMode mode : {EncodingMode::dual, EncodingMode::lf_only,
                                  EncodingMode::hf_only, EncodingMode::none}) {
            BackboneConfig cfg;
            cfg.num_blocks = blocks;
            cfg.feature_width = 8;
            cfg.encoding_mode = mode;
            CHECK(roundtrip_error<float>(cfg, seed) <= 1e-4);
            CHECK(roundtrip_error<double>(cfg, seed) <= 1e-10);
            ++seed;
        }
    }
}

TEST_CASE("zero parameters give the exact identity") {
    BackboneConfig cfg;
    cfg.num_blocks = 4;
    cfg.feature_width = 8;
    Backbone<float> net(cfg);
    Rng rng(3);
    auto lf = rand_tensor<float>(rng, {2, 3, 8, 8});
    auto hf = rand_tensor<float>(rng, {2, 3, 8, 8});
    auto p = encoding_batch<float>(encode(8, 8, {3.1, 3.1}), 2);
    auto [y, z] = net.forward(lf, hf, p);
    CHECK(std::equal(y.values().begin(), y.values().end(), lf.values().begin()));
    CHECK(std::equal(z.values().begin(), z.values().end(), hf.values().begin()));
    auto [lf2, hf2] = net.inverse(y, z, p);
    CHECK(std::equal(lf2.values().begin(), lf2.values().end(), lf.values().begin()));
    CHECK(std::equal(hf2.values().begin(), hf2.values().end(), hf.values().begin()));
}

TEST_CASE("identity start after init: projections stay zero") {
    BackboneConfig cfg;
    cfg.num_blocks = 2;
    cfg.feature_width = 8;
    Backbone<float> net(cfg);
    Rng rng(5);
    net.init_params(rng);
    auto lf = rand_tensor<float>(rng, {1, 3, 10, 10});
    auto hf = rand_tensor<float>(rng, {1, 3, 10, 10});
    auto p = encoding_batch<float>(encode(10, 10, {2.0, 2.0}), 1);
    auto [y, z] = net.forward(lf, hf, p);
    CHECK(std::equal(y.values().begin(), y.values().end(), lf.values().begin()));
    CHECK(std::equal(z.values().begin(), z.values().end(), hf.values().begin()));
}

TEST_CASE("constant phi shifts the LF branch exactly") {
    // single block, phi's projection bias forced to c, rho/eta zero
    BackboneConfig cfg;
    cfg.num_blocks = 1;
    cfg.feature_width = 4;
    Backbone<float> net(cfg);
    for (auto& p : net.params()) {
        if (p.name == "block0.phi.proj.bias")
            for (auto& v : p.value.mutable_values()) v = 0.25f;
    }
    Rng rng(7);
    auto lf = rand_tensor<float>(rng, {1, 3, 6, 6});
    auto hf = rand_tensor<float>(rng, {1, 3, 6, 6});
    auto p = encoding_batch<float>(encode(6, 6, {2.0, 2.0}), 1);
    auto [y, z] = net.forward(lf, hf, p);
    for (int64_t i = 0; i < lf.size(); ++i)
        CHECK(y.values()[i] == lf.values()[i] + 0.25f);
    // scale term is exp(0) = 1, eta = 0, so the HF branch is untouched
    CHECK(std::equal(z.values().begin(), z.values().end(), hf.values().begin()));
}

TEST_CASE("encoding_mode none ignores the conditioning field") {
    BackboneConfig cfg;
    cfg.num_blocks = 2;
    cfg.feature_width = 8;
    cfg.encoding_mode = EncodingMode::none;
    Backbone<float> net(cfg);
    Rng rng(11);
    randomize(net, rng, 0.05);
    auto lf = rand_tensor<float>(rng, {1, 3, 12, 12});
    auto hf = rand_tensor<float>(rng, {1, 3, 12, 12});
    auto p1 = encoding_batch<float>(encode(12, 12, {1.5, 1.5}), 1);
    auto p2 = encoding_batch<float>(encode(12, 12, {3.9, 2.2}), 1);
    auto [y1, z1] = net.forward(lf, hf, p1);
    auto [y2, z2] = net.forward(lf, hf, p2);
    CHECK(std::equal(y1.values().begin(), y1.values().end(), y2.values().begin()));
    CHECK(std::equal(z1.values().begin(), z1.values().end(), z2.values().begin()));
}

TEST_CASE("dual encoding mode responds to the conditioning field") {
    BackboneConfig cfg;
    cfg.num_blocks = 1;
    cfg.feature_width = 8;
    Backbone<float> net(cfg);
    Rng rng(13);
    randomize(net, rng, 0.05);
    auto lf = rand_tensor<float>(rng, {1, 3, 12, 12});
    auto hf = rand_tensor<float>(rng, {1, 3, 12, 12});
    auto p1 = encoding_batch<float>(encode(12, 12, {1.5, 1.5}), 1);
    auto p2 = encoding_batch<float>(encode(12, 12, {3.9, 2.2}), 1);
    auto [y1, z1] = net.forward(lf, hf, p1);
    auto [y2, z2] = net.forward(lf, hf, p2);
    bool any_diff = !std::equal(y1.values().begin(), y1.values().end(), y2.values().begin());
    CHECK(any_diff);
}

TEST_CASE("param_count") {
    BackboneConfig zero;
    zero.num_blocks = 0;
    CHECK(param_count(zero) == 0);

    BackboneConfig one;
    one.num_blocks = 1;
    one.atrous_layers = 4;
    one.feature_width = 32;
    BackboneConfig two = one;
    two.num_blocks = 2;
    CHECK(param_count(two) == 2 * param_count(one));

    // count matches the registered parameter tensors
    BackboneConfig cfg;
    cfg.num_blocks = 3;
    cfg.feature_width = 12;
    Backbone<float> net(cfg);
    int64_t total = 0;
    for (auto& p : net.params()) total += p.value.size();
    CHECK(total == param_count(cfg));
    CHECK(total == net.param_count());

    // encoding channels enlarge only the affected transforms
    BackboneConfig none = cfg;
    none.encoding_mode = EncodingMode::none;
    CHECK(param_count(none) < param_count(cfg));
}

TEST_CASE("NaN activations raise a divergence error") {
    BackboneConfig cfg;
    cfg.num_blocks = 1;
    cfg.feature_width = 4;
    Backbone<float> net(cfg);
    Rng rng(17);
    auto lf = rand_tensor<float>(rng, {1, 3, 6, 6});
    auto hf = rand_tensor<float>(rng, {1, 3, 6, 6});
    auto bad = BasicTensor<float>::full({1, 3, 6, 6}, std::numeric_limits<float>::quiet_NaN());
    auto p = encoding_batch<float>(encode(6, 6, {2.0, 2.0}), 1);
    CHECK_THROWS_AS((void)net.forward(bad, hf, p), DivergenceError);
    CHECK_THROWS_AS((void)net.forward(lf, bad, p), DivergenceError);
}

TEST_CASE("atrous toggle changes dilations, not the parameter count") {
    BackboneConfig on;
    on.num_blocks = 1;
    on.feature_width = 8;
    on.use_atrous = true;
    BackboneConfig off = on;
    off.use_atrous = false;
    CHECK(on.dilations() == std::vector<int>{1, 2, 3, 4});
    CHECK(off.dilations() == std::vector<int>{1, 1, 1, 1});
    CHECK(param_count(on) == param_count(off));
}
