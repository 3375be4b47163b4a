#include "iarn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace iarn {

double lr_at(int64_t iteration, const TrainConfig& cfg) {
    int64_t halvings = iteration / cfg.lr_halving_period;
    return cfg.base_lr * std::pow(0.5, static_cast<double>(halvings));
}

ScalePair sample_scale(Rng& rng, const TrainConfig& cfg) {
    double a = rng.uniform(cfg.scale_min, cfg.scale_max);
    if (!cfg.asymmetric) return {a, a};
    double b = rng.uniform(cfg.scale_min, cfg.scale_max);
    return {a, b};
}

AdamOptimizer::AdamOptimizer(std::vector<NamedParam<float>> params, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(static_cast<size_t>(params_[i].value.size()), 0.0f);
        v_[i].assign(static_cast<size_t>(params_[i].value.size()), 0.0f);
    }
}

void AdamOptimizer::clip_grad_norm(double max_norm) {
    double sq = 0.0;
    for (auto& p : params_) {
        if (!p.value.has_grad()) continue;
        for (float g : p.value.grad()) sq += static_cast<double>(g) * g;
    }
    double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    float k = static_cast<float>(max_norm / norm);
    for (auto& p : params_) {
        if (!p.value.has_grad()) continue;
        for (float& g : p.value.mutable_grad()) g *= k;
    }
}

void AdamOptimizer::step(double lr) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto values = params_[i].value.mutable_values();
        auto grad = params_[i].value.has_grad()
                        ? params_[i].value.grad()
                        : std::span<const float>();
        float* m = m_[i].data();
        float* v = v_[i].data();
        for (size_t j = 0; j < values.size(); ++j) {
            double g = grad.empty() ? 0.0 : static_cast<double>(grad[j]);
            double mj = beta1_ * m[j] + (1.0 - beta1_) * g;
            double vj = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            double update = lr * (mj / bc1) / (std::sqrt(vj / bc2) + eps_);
            values[j] = static_cast<float>(values[j] - update);
        }
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p.value.zero_grad();
}

StepResult build_step_graph(Backbone<float>& net, const TrainConfig& cfg,
                            const StepInputs& inputs, Rng* zhat_rng) {
    if (inputs.patches.empty()) throw ShapeError("train step: empty batch");
    const int n = static_cast<int>(inputs.patches.size());
    const int h = inputs.patches[0].height;
    const int w = inputs.patches[0].width;

    SizeHW lr = output_size(h, w, inputs.scale, Direction::down);
    ScalePair realized = realized_scale(h, w, lr.h, lr.w);

    std::vector<Image> lfs, hfs, refs;
    lfs.reserve(inputs.patches.size());
    hfs.reserve(inputs.patches.size());
    refs.reserve(inputs.patches.size());
    for (const Image& patch : inputs.patches) {
        SplitPair pair = cfg.channel_split ? split(patch, realized, cfg.method)
                                           : split_disabled(patch, realized, cfg.method);
        lfs.push_back(std::move(pair.lf));
        hfs.push_back(std::move(pair.hf));
        refs.push_back(resample_to(patch, lr.h, lr.w, ResampleMethod::bicubic));
    }

    Tensor x = stack_images(inputs.patches);
    Tensor lf = stack_images(lfs);
    Tensor hf = stack_images(hfs);
    Tensor y_bar_l = stack_images(refs);
    Tensor p = encoding_batch<float>(encode(h, w, realized), n);

    auto [y, z] = net.forward(lf, hf, p);
    Tensor y_l = resample2d(y, lr.h, lr.w, cfg.method);
    Tensor y_hat = resample2d(y_l, h, w, cfg.method);

    Tensor z_hat;
    if (cfg.zhat_gaussian) {
        if (!zhat_rng) throw UsageError("gaussian latent replacement requires an RNG");
        std::vector<float> zv(static_cast<size_t>(z.size()));
        for (auto& v : zv) v = static_cast<float>(zhat_rng->normal());
        z_hat = Tensor::from_values(z.shape(), std::move(zv));
    } else {
        z_hat = Tensor::zeros(z.shape());
    }

    auto [x_lf_hat, x_hf_hat] = net.inverse(y_hat, z_hat, p);
    Tensor x_hat = ops::add(x_lf_hat, x_hf_hat);

    Tensor r = loss_r(x_hat, x);
    Tensor g = loss_g(y_l, y_bar_l);
    Tensor d = loss_d(z);
    Tensor i = loss_i(y_hat, y);
    Tensor total = weighted_total(cfg.loss, r, g, d, i);

    StepResult result;
    result.total = total;
    result.report.l_r = r.item();
    result.report.l_g = g.item();
    result.report.l_d = d.item();
    result.report.l_i = i.item();
    result.report.total = total.item();
    return result;
}

Trainer::Trainer(TrainConfig cfg, std::vector<Image> images)
    : cfg_(cfg), net_(cfg.backbone), opt_(AdamOptimizer({})), rng_(cfg.seed) {
    if (cfg_.backbone.num_blocks < 1) throw ConfigError("training needs num_blocks >= 1");
    if (cfg_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    for (Image& img : images) {
        if (img.height >= cfg_.patch_size && img.width >= cfg_.patch_size)
            images_.push_back(std::move(img));
    }
    if (images_.empty())
        throw UsageError("no training images of at least patch_size " +
                         std::to_string(cfg_.patch_size));
    net_.init_params(rng_);
    opt_ = AdamOptimizer(net_.params());
}

LossReport Trainer::step() {
    // Scale first; redraw when the whole batch's LR side would degenerate.
    ScalePair scale{};
    SizeHW lr{};
    const int p = cfg_.patch_size;
    int attempts = 0;
    for (;;) {
        scale = sample_scale(rng_, cfg_);
        lr = output_size(p, p, scale, Direction::down);
        if (std::min(lr.h, lr.w) >= cfg_.min_lr_side) break;
        if (++attempts > 100)
            throw ConfigError("cannot sample a scale keeping the LR side >= " +
                              std::to_string(cfg_.min_lr_side));
    }

    StepInputs inputs;
    inputs.scale = scale;
    for (int b = 0; b < cfg_.batch_size; ++b) {
        const Image& src = images_[static_cast<size_t>(rng_.uniform_int(
            static_cast<int64_t>(images_.size())))];
        int y0 = static_cast<int>(rng_.uniform_int(src.height - p + 1));
        int x0 = static_cast<int>(rng_.uniform_int(src.width - p + 1));
        Image patch = crop(src, y0, x0, p, p);
        if (cfg_.hflip && rng_.coin()) patch = hflip(patch);
        inputs.patches.push_back(std::move(patch));
    }

    StepResult result;
    try {
        result = build_step_graph(net_, cfg_, inputs, &rng_);
    } catch (const DivergenceError& e) {
        std::string msg = e.what();
        const std::string prefix = "divergence: ";
        if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
        std::ostringstream os;
        os << msg << " at iteration " << iteration_ << " (scale " << scale.h << "x" << scale.v
           << ")";
        throw DivergenceError(os.str());
    }
    if (!std::isfinite(result.report.total)) {
        std::ostringstream os;
        os << "non-finite loss at iteration " << iteration_ << " (scale " << scale.h << "x"
           << scale.v << ")";
        throw DivergenceError(os.str());
    }

    backward(result.total);
    opt_.clip_grad_norm(cfg_.grad_clip);
    opt_.step(lr_at(iteration_, cfg_));
    opt_.zero_grad();
    ++iteration_;
    return result.report;
}

void Trainer::run(int64_t iterations, std::ostream* log) {
    for (int64_t i = 0; i < iterations; ++i) {
        double lr = lr_at(iteration_, cfg_);
        LossReport report = step();
        if (log) {
            (*log) << iteration_ - 1 << ' ' << lr << ' ' << report.total << ' ' << report.l_r
                   << ' ' << report.l_g << ' ' << report.l_d << ' ' << report.l_i << '\n';
        }
    }
}

}  // namespace iarn
