#include "iarn/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "iarn/channel_split.hpp"
#include "iarn/checkpoint.hpp"
#include "iarn/losses.hpp"
#include "iarn/scale_encoding.hpp"

namespace iarn {

template <class S>
GradStats grad_check(const std::function<BasicTensor<S>()>& loss_graph,
                     const std::function<double()>& loss_value,
                     std::span<BasicTensor<S>> leaves, double eps, double rel_tol) {
    BasicTensor<S> loss = loss_graph();
    backward(loss);
    std::vector<std::vector<S>> ad_grads;
    for (auto& leaf : leaves) {
        if (leaf.has_grad()) {
            ad_grads.emplace_back(leaf.grad().begin(), leaf.grad().end());
        } else {
            ad_grads.emplace_back(static_cast<size_t>(leaf.size()), S(0));
        }
        leaf.zero_grad();
    }

    GradStats stats;
    int64_t ok = 0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto values = leaves[li].mutable_values();
        for (size_t j = 0; j < values.size(); ++j) {
            const S saved = values[j];
            values[j] = static_cast<S>(saved + eps);
            double f_plus = loss_value();
            values[j] = static_cast<S>(saved - eps);
            double f_minus = loss_value();
            values[j] = saved;

            double fd = (f_plus - f_minus) / (2.0 * eps);
            double ad = static_cast<double>(ad_grads[li][j]);
            double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1.0});
            stats.max_rel = std::max(stats.max_rel, rel);
            if (rel <= rel_tol) ++ok;
            ++stats.count;
        }
    }
    stats.ok_fraction =
        stats.count ? static_cast<double>(ok) / static_cast<double>(stats.count) : 1.0;
    return stats;
}

template GradStats grad_check(const std::function<BasicTensor<float>()>&,
                              const std::function<double()>&, std::span<BasicTensor<float>>,
                              double, double);
template GradStats grad_check(const std::function<BasicTensor<double>()>&,
                              const std::function<double()>&, std::span<BasicTensor<double>>,
                              double, double);

double brute_force_encode_distance(int index, double s, int extent) {
    double best = -1.0;
    const int limit = static_cast<int>(std::ceil(static_cast<double>(extent) / s)) + 1;
    for (int k = 0; k <= limit; ++k) {
        double d = static_cast<double>(k) * s - static_cast<double>(index);
        if (d >= 0.0 && (best < 0.0 || d < best)) best = d;
    }
    return best;
}

namespace {

Image random_image(Rng& rng, int channels, int h, int w) {
    Image img(channels, h, w);
    for (float& v : img.data) v = static_cast<float>(rng.next_unit());
    return img;
}

template <class S>
void randomize_params(Backbone<S>& net, Rng& rng, double bound) {
    for (auto& p : net.params())
        for (auto& v : p.value.mutable_values())
            v = static_cast<S>(rng.uniform(-bound, bound));
}

template <class S>
double invertibility_error(const BackboneConfig& cfg, uint64_t seed, int h, int w) {
    Backbone<S> net(cfg);
    Rng rng(seed);
    randomize_params(net, rng, 0.05);

    auto rand_tensor = [&](std::vector<int> shape) {
        auto t = BasicTensor<S>::zeros(shape);
        // leaf; fill directly
        for (auto& v : t.mutable_values()) v = static_cast<S>(rng.uniform(0.0, 1.0));
        return t;
    };
    auto lf = rand_tensor({1, cfg.channels, h, w});
    auto hf = rand_tensor({1, cfg.channels, h, w});
    auto p = encoding_batch<S>(encode(h, w, {2.3, 1.7}), 1);

    auto [y, z] = net.forward(lf, hf, p);
    auto [lf2, hf2] = net.inverse(y, z, p);

    double max_err = 0.0;
    for (int64_t i = 0; i < lf.size(); ++i) {
        max_err = std::max(max_err, std::abs(static_cast<double>(lf.values()[i]) -
                                             static_cast<double>(lf2.values()[i])));
        max_err = std::max(max_err, std::abs(static_cast<double>(hf.values()[i]) -
                                             static_cast<double>(hf2.values()[i])));
    }
    return max_err;
}

CheckResult check_invertibility(bool wide) {
    CheckResult result{"backbone invertibility", true, ""};
    const double tol = wide ? 1e-10 : 1e-4;
    double worst = 0.0;
    for (EncodingMode mode : {EncodingMode::dual, EncodingMode::lf_only, EncodingMode::hf_only,
                              EncodingMode::none}) {
        BackboneConfig cfg;
        cfg.num_blocks = 4;
        cfg.feature_width = 16;
        cfg.atrous_layers = 4;
        cfg.encoding_mode = mode;
        double err = wide ? invertibility_error<double>(cfg, 11, 16, 16)
                          : invertibility_error<float>(cfg, 11, 16, 16);
        worst = std::max(worst, err);
    }
    std::ostringstream os;
    os << "max |inverse(forward(x)) - x| = " << worst << " (tol " << tol << ")";
    result.detail = os.str();
    result.pass = worst <= tol;
    return result;
}

CheckResult check_identity_at_zero() {
    CheckResult result{"identity at zero parameters", true, ""};
    BackboneConfig cfg;
    cfg.num_blocks = 3;
    cfg.feature_width = 8;
    Backbone<float> net(cfg);  // all parameters zero
    Rng rng(7);
    Image a = random_image(rng, 3, 12, 10);
    Image b = random_image(rng, 3, 12, 10);
    Tensor lf = Tensor::from_values({1, 3, 12, 10}, a.data);
    Tensor hf = Tensor::from_values({1, 3, 12, 10}, b.data);
    Tensor p = encoding_batch<float>(encode(12, 10, {2.0, 2.0}), 1);
    auto [y, z] = net.forward(lf, hf, p);
    auto [lf2, hf2] = net.inverse(y, z, p);
    bool exact = std::equal(lf.values().begin(), lf.values().end(), y.values().begin()) &&
                 std::equal(hf.values().begin(), hf.values().end(), z.values().begin()) &&
                 std::equal(lf.values().begin(), lf.values().end(), lf2.values().begin()) &&
                 std::equal(hf.values().begin(), hf.values().end(), hf2.values().begin());
    result.pass = exact;
    result.detail = exact ? "forward and inverse are bitwise identity" : "mismatch";
    return result;
}

CheckResult check_idempotence() {
    CheckResult result{"NN rescaling idempotence", true, ""};
    Rng rng(23);
    const double scales[] = {1.3, 1.5, 2.0, 2.5, 3.3, 4.0};
    int failures = 0;
    int cases = 0;
    for (double sh : scales) {
        for (double sv : {sh, 1.9}) {
            int h = 8 + static_cast<int>(rng.uniform_int(57));
            int w = 8 + static_cast<int>(rng.uniform_int(57));
            Image x = random_image(rng, 3, h, w);
            SplitPair s1 = split(x, {sh, sv}, ResampleMethod::nearest);
            SplitPair s2 = split(s1.lf, {sh, sv}, ResampleMethod::nearest);
            ++cases;
            if (s1.lf.data != s2.lf.data) ++failures;
            for (float v : s2.hf.data)
                if (v != 0.0f) {
                    ++failures;
                    break;
                }
        }
    }
    result.pass = failures == 0;
    std::ostringstream os;
    os << cases << " scale/size cases, " << failures << " mismatches";
    result.detail = os.str();
    return result;
}

CheckResult check_split_merge() {
    CheckResult result{"channel split/merge round trip", true, ""};
    Rng rng(29);
    double worst = 0.0;
    for (int trial = 0; trial < 16; ++trial) {
        int h = 8 + static_cast<int>(rng.uniform_int(40));
        int w = 8 + static_cast<int>(rng.uniform_int(40));
        Image x = random_image(rng, 3, h, w);
        ScalePair scale{rng.uniform(1.1, 4.0), rng.uniform(1.1, 4.0)};
        ResampleMethod method = trial % 3 == 0   ? ResampleMethod::nearest
                                : trial % 3 == 1 ? ResampleMethod::bilinear
                                                 : ResampleMethod::bicubic;
        Image back = merge(split(x, scale, method));
        for (size_t i = 0; i < x.data.size(); ++i)
            worst = std::max(worst,
                             std::abs(static_cast<double>(back.data[i]) - x.data[i]));
    }
    const double tol = std::pow(2.0, -20.0);
    result.pass = worst <= tol;
    std::ostringstream os;
    os << "max |merge(split(x)) - x| = " << worst << " (tol 2^-20)";
    result.detail = os.str();
    return result;
}

CheckResult check_encoding_oracle() {
    CheckResult result{"scale encoding vs brute force", true, ""};
    const double scales[] = {1.0, 1.1, 1.5, 2.0, 2.5, 3.3, 4.0};
    int mismatches = 0;
    for (double sh : scales) {
        for (double sv : scales) {
            ScaleEncodingField field = encode(48, 64, {sh, sv});
            const auto v = field.field.values();
            const size_t plane = static_cast<size_t>(48) * 64;
            for (int i = 0; i < 64; ++i) {
                float expected =
                    static_cast<float>(brute_force_encode_distance(i, sh, 64) / sh);
                if (v[2 * plane + static_cast<size_t>(i)] != expected) ++mismatches;
            }
            for (int j = 0; j < 48; ++j) {
                float expected =
                    static_cast<float>(brute_force_encode_distance(j, sv, 48) / sv);
                if (v[3 * plane + static_cast<size_t>(j) * 64] != expected) ++mismatches;
            }
            // size independence
            if (!crop_consistency_check(field, encode(16, 24, {sh, sv}))) ++mismatches;
        }
    }
    result.pass = mismatches == 0;
    result.detail = std::to_string(mismatches) + " mismatches over 49 scale pairs";
    return result;
}

template <class S>
GradStats e2e_grad_stats(uint64_t seed, double eps, double rel_tol) {
    BackboneConfig bc;
    bc.num_blocks = 1;
    bc.atrous_layers = 2;
    bc.feature_width = 4;
    Backbone<S> net(bc);
    Rng rng(seed);
    randomize_params(net, rng, 0.05);

    const int h = 8, w = 8;
    auto x = BasicTensor<S>::zeros({1, 3, h, w});
    for (auto& v : x.mutable_values()) v = static_cast<S>(rng.uniform(0.05, 0.95));

    ScalePair nominal{1.7, 1.7};
    SizeHW lr = output_size(h, w, nominal, Direction::down);
    ScalePair realized = realized_scale(h, w, lr.h, lr.w);
    LossWeights weights;

    struct PipelineOut {
        BasicTensor<S> x_hat, y_l, y_bar, z, y_hat, y;
    };
    auto run_pipeline = [&]() {
        auto down = resample2d(x, lr.h, lr.w, ResampleMethod::nearest);
        auto lf = resample2d(down, h, w, ResampleMethod::nearest);
        auto hf = ops::sub(x, lf);
        auto p = encoding_batch<S>(encode(h, w, realized), 1);
        auto [y, z] = net.forward(lf, hf, p);
        auto y_l = resample2d(y, lr.h, lr.w, ResampleMethod::nearest);
        auto y_hat = resample2d(y_l, h, w, ResampleMethod::nearest);
        auto [xl, xh] = net.inverse(y_hat, BasicTensor<S>::zeros(z.shape()), p);
        auto x_hat = ops::add(xl, xh);
        auto y_bar = resample2d(x, lr.h, lr.w, ResampleMethod::bicubic);
        return PipelineOut{x_hat, y_l, y_bar, z, y_hat, y};
    };
    auto loss_graph = [&]() {
        PipelineOut o = run_pipeline();
        return weighted_total(weights, loss_r(o.x_hat, x), loss_g(o.y_l, o.y_bar),
                              loss_d(o.z), loss_i(o.y_hat, o.y));
    };
    auto mean_abs_diff = [](const BasicTensor<S>& a, const BasicTensor<S>& b) {
        double total = 0.0;
        for (int64_t i = 0; i < a.size(); ++i)
            total += std::abs(static_cast<double>(a.values()[i]) -
                              static_cast<double>(b.values()[i]));
        return total / static_cast<double>(a.size());
    };
    auto mean_sq_diff = [](const BasicTensor<S>& a, const BasicTensor<S>& b) {
        double total = 0.0;
        for (int64_t i = 0; i < a.size(); ++i) {
            double d = static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i]);
            total += d * d;
        }
        return total / static_cast<double>(a.size());
    };
    auto loss_value = [&]() {
        PipelineOut o = run_pipeline();
        double l_d = 0.0;
        for (int64_t i = 0; i < o.z.size(); ++i) {
            double v = static_cast<double>(o.z.values()[i]);
            l_d += v * v;
        }
        l_d /= static_cast<double>(o.z.size());
        return weights.r * mean_abs_diff(o.x_hat, x) + weights.g * mean_sq_diff(o.y_l, o.y_bar) +
               weights.d * l_d + weights.i * mean_sq_diff(o.y_hat, o.y);
    };

    std::vector<BasicTensor<S>> leaves;
    for (auto& p : net.params()) leaves.push_back(p.value);
    return grad_check<S>(loss_graph, loss_value, leaves, eps, rel_tol);
}

// One leaf wired through `build`, loss = sum(out * c) with a fixed
// non-uniform constant so output gradients are not all equal.
template <class S>
std::vector<double> fixed_weights(int64_t n) {
    Rng wrng(5);
    std::vector<double> w(static_cast<size_t>(n));
    for (auto& v : w) v = wrng.uniform(0.5, 1.5);
    return w;
}

template <class S>
GradStats op_grad_stats(
    const std::function<BasicTensor<S>(const BasicTensor<S>&)>& build,
    const std::vector<S>& input_values, std::vector<int> shape, double eps, double rel_tol) {
    auto x = BasicTensor<S>::from_values(std::move(shape), input_values, true);
    auto loss_graph = [&]() {
        auto out = build(x);
        auto w = fixed_weights<S>(out.size());
        std::vector<S> ws(w.begin(), w.end());
        return ops::sum(ops::mul(out, BasicTensor<S>::from_values(out.shape(), std::move(ws))));
    };
    auto loss_value = [&]() {
        auto out = build(x);
        auto w = fixed_weights<S>(out.size());
        double total = 0.0;
        for (int64_t i = 0; i < out.size(); ++i)
            total += static_cast<double>(out.values()[i]) * w[static_cast<size_t>(i)];
        return total;
    };
    std::vector<BasicTensor<S>> leaves{x};
    return grad_check<S>(loss_graph, loss_value, leaves, eps, rel_tol);
}

template <class S>
std::vector<std::pair<std::string, GradStats>> all_op_grad_stats(double eps, double rel_tol) {
    std::vector<std::pair<std::string, GradStats>> out;
    Rng rng(41);
    auto rand_values = [&rng](size_t n, double lo, double hi) {
        std::vector<S> v(n);
        for (auto& x : v) x = static_cast<S>(rng.uniform(lo, hi));
        return v;
    };
    // Inputs stay away from the kinks of abs/leaky_relu.
    std::vector<S> pos = rand_values(36, 0.2, 1.2);
    std::vector<int> shape{1, 1, 6, 6};

    auto other = BasicTensor<S>::from_values(shape, rand_values(36, 0.2, 1.2));
    auto scalar = BasicTensor<S>::scalar(S(0.7));

    using Fn = std::function<BasicTensor<S>(const BasicTensor<S>&)>;
    std::vector<std::pair<std::string, Fn>> cases = {
        {"add", [&](const BasicTensor<S>& x) { return ops::add(x, other); }},
        {"add_scalar", [&](const BasicTensor<S>& x) { return ops::add(x, scalar); }},
        {"sub", [&](const BasicTensor<S>& x) { return ops::sub(x, other); }},
        {"mul", [&](const BasicTensor<S>& x) { return ops::mul(x, other); }},
        {"mul_scalar", [&](const BasicTensor<S>& x) { return ops::mul(scalar, x); }},
        {"neg", [](const BasicTensor<S>& x) { return ops::neg(x); }},
        {"exp", [](const BasicTensor<S>& x) { return ops::exp(x); }},
        {"sigmoid", [](const BasicTensor<S>& x) { return ops::sigmoid(x); }},
        {"leaky_relu",
         [&](const BasicTensor<S>& x) {
             return ops::leaky_relu(ops::sub(x, scalar), S(0.2));
         }},
        {"abs", [&](const BasicTensor<S>& x) { return ops::abs(ops::sub(x, scalar)); }},
        {"square", [](const BasicTensor<S>& x) { return ops::square(x); }},
        {"mean", [](const BasicTensor<S>& x) { return ops::mean(x); }},
        {"concat",
         [&](const BasicTensor<S>& x) {
             return ops::concat_channels<S>({x, other});
         }},
        {"resample_nearest",
         [](const BasicTensor<S>& x) { return resample2d(x, 9, 4, ResampleMethod::nearest); }},
        {"resample_bilinear",
         [](const BasicTensor<S>& x) { return resample2d(x, 4, 9, ResampleMethod::bilinear); }},
        {"resample_bicubic",
         [](const BasicTensor<S>& x) { return resample2d(x, 10, 10, ResampleMethod::bicubic); }},
    };
    for (auto& [name, fn] : cases)
        out.emplace_back(name, op_grad_stats<S>(fn, pos, shape, eps, rel_tol));

    // conv2d: gradients w.r.t. input, weight and bias together.
    for (int dilation : {1, 2}) {
        ConvSpec spec{2, 3, dilation};
        auto input = BasicTensor<S>::from_values({1, 2, 6, 6}, rand_values(72, -1.0, 1.0), true);
        auto weight =
            BasicTensor<S>::from_values({3, 2, 3, 3}, rand_values(54, -0.5, 0.5), true);
        auto bias = BasicTensor<S>::from_values({3}, rand_values(3, -0.5, 0.5), true);
        auto conv = [&]() { return ops::conv2d(input, spec, weight, bias); };
        auto loss_graph = [&]() {
            auto y = conv();
            auto w = fixed_weights<S>(y.size());
            std::vector<S> ws(w.begin(), w.end());
            return ops::sum(
                ops::mul(y, BasicTensor<S>::from_values(y.shape(), std::move(ws))));
        };
        auto loss_value = [&]() {
            auto y = conv();
            auto w = fixed_weights<S>(y.size());
            double total = 0.0;
            for (int64_t i = 0; i < y.size(); ++i)
                total += static_cast<double>(y.values()[i]) * w[static_cast<size_t>(i)];
            return total;
        };
        std::vector<BasicTensor<S>> leaves{input, weight, bias};
        out.emplace_back("conv2d_d" + std::to_string(dilation),
                         grad_check<S>(loss_graph, loss_value, leaves, eps, rel_tol));
    }
    return out;
}

CheckResult check_op_gradients(bool wide) {
    CheckResult result{"gradient check (per-op)", true, ""};
    const double eps = wide ? 1e-6 : 1e-3;
    const double rel_tol = wide ? 1e-5 : 1e-3;
    const double max_tol = wide ? 1e-5 : 1e-2;
    const double min_ok = wide ? 1.0 : 0.95;
    auto stats = wide ? all_op_grad_stats<double>(eps, rel_tol)
                      : all_op_grad_stats<float>(eps, rel_tol);
    std::ostringstream os;
    int failures = 0;
    for (auto& [name, s] : stats) {
        if (!s.pass(rel_tol, min_ok, max_tol)) {
            ++failures;
            os << (failures == 1 ? "failing: " : ", ") << name << " (max rel " << s.max_rel
               << ")";
        }
    }
    result.pass = failures == 0;
    result.detail = failures ? os.str() : std::to_string(stats.size()) + " ops pass";
    return result;
}

CheckResult check_gradients(bool wide) {
    CheckResult result{"gradient check (end-to-end)", true, ""};
    const double eps = wide ? 1e-6 : 1e-3;
    const double rel_tol = wide ? 1e-5 : 1e-3;
    // The 32-bit end-to-end check is gated on the coordinate fraction; at
    // eps 1e-3 a few coordinates straddle the L1 kink and their difference
    // quotients are off by ~1e-2 even though the gradients are exact (the
    // 64-bit run passes in full at 1e-5).
    const double max_tol = wide ? 1e-5 : 0.1;
    const double min_ok = wide ? 1.0 : 0.95;
    GradStats stats = wide ? e2e_grad_stats<double>(17, eps, rel_tol)
                           : e2e_grad_stats<float>(17, eps, rel_tol);
    result.pass = stats.pass(rel_tol, min_ok, max_tol);
    std::ostringstream os;
    os << stats.count << " coords, " << 100.0 * stats.ok_fraction << "% within " << rel_tol
       << ", max rel " << stats.max_rel;
    result.detail = os.str();
    return result;
}

CheckResult check_checkpoint_roundtrip() {
    CheckResult result{"checkpoint round trip + CRC", true, ""};
    TrainConfig cfg;
    cfg.backbone.num_blocks = 1;
    cfg.backbone.feature_width = 4;
    cfg.backbone.atrous_layers = 2;
    cfg.seed = 99;
    Backbone<float> net(cfg.backbone);
    Rng rng(99);
    randomize_params(net, rng, 0.1);

    std::vector<uint8_t> bytes = serialize_checkpoint(cfg, net.params());
    LoadedCheckpoint loaded = deserialize_checkpoint(bytes);

    bool values_ok = loaded.config == cfg;
    auto orig = net.params();
    auto restored = loaded.net.params();
    for (size_t i = 0; i < orig.size() && values_ok; ++i) {
        if (orig[i].name != restored[i].name) values_ok = false;
        auto a = orig[i].value.values();
        auto b = restored[i].value.values();
        if (!std::equal(a.begin(), a.end(), b.begin())) values_ok = false;
    }

    bool crc_detected = false;
    std::vector<uint8_t> corrupted = bytes;
    corrupted[corrupted.size() / 2] ^= 0x40;
    try {
        deserialize_checkpoint(corrupted);
    } catch (const IoError&) {
        crc_detected = true;
    }

    result.pass = values_ok && crc_detected;
    result.detail = values_ok ? (crc_detected ? "bitwise round trip, corruption detected"
                                              : "CRC corruption was not detected")
                              : "round trip mismatch";
    return result;
}

}  // namespace

std::vector<CheckResult> run_selfcheck(bool wide) {
    std::vector<CheckResult> results;
    results.push_back(check_invertibility(wide));
    results.push_back(check_identity_at_zero());
    results.push_back(check_idempotence());
    results.push_back(check_split_merge());
    results.push_back(check_encoding_oracle());
    results.push_back(check_op_gradients(wide));
    results.push_back(check_gradients(wide));
    results.push_back(check_checkpoint_roundtrip());
    return results;
}

bool print_selfcheck(const std::vector<CheckResult>& results, std::ostream& out) {
    bool all = true;
    for (const auto& r : results) {
        out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
        all = all && r.pass;
    }
    out << (all ? "selfcheck: all checks passed\n" : "selfcheck: FAILURES detected\n");
    return all;
}

}  // namespace iarn
