#pragma once

#include <cstdint>
#include <vector>

#include "iarn/backbone.hpp"
#include "iarn/channel_split.hpp"
#include "iarn/losses.hpp"

namespace iarn {

struct TrainConfig {
    int batch_size = 4;
    int patch_size = 48;
    int64_t iterations = 2000;
    double base_lr = 2e-4;
    int64_t lr_halving_period = 500;
    double scale_min = 1.0;
    double scale_max = 4.0;
    bool asymmetric = false;
    uint64_t seed = 0;
    bool hflip = true;
    bool zhat_gaussian = false;  // default: zero latent at inversion
    double grad_clip = 5.0;      // global L2 norm ceiling
    int min_lr_side = 8;
    bool channel_split = true;
    ResampleMethod method = ResampleMethod::nearest;
    LossWeights loss;
    BackboneConfig backbone;

    bool operator==(const TrainConfig&) const = default;
};

double lr_at(int64_t iteration, const TrainConfig& cfg);

// Symmetric mode draws one factor for both axes; asymmetric mode draws the
// axes independently.
ScalePair sample_scale(Rng& rng, const TrainConfig& cfg);

class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<NamedParam<float>> params, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8);

    // Scales all gradients so the global L2 norm stays below `max_norm`.
    void clip_grad_norm(double max_norm);
    void step(double lr);
    void zero_grad();

    int64_t step_count() const { return step_count_; }

private:
    std::vector<NamedParam<float>> params_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    double beta1_, beta2_, eps_;
    int64_t step_count_ = 0;
};

// One optimization pass over seeded random patches: split -> forward ->
// downscale -> upscale -> inverse(zero latent) -> merge, with the weighted
// four-term loss.
class Trainer {
public:
    Trainer(TrainConfig cfg, std::vector<Image> images);

    LossReport step();
    void run(int64_t iterations, std::ostream* log = nullptr);

    int64_t iteration() const { return iteration_; }
    Backbone<float>& net() { return net_; }
    const TrainConfig& config() const { return cfg_; }

private:
    TrainConfig cfg_;
    std::vector<Image> images_;
    Backbone<float> net_;
    AdamOptimizer opt_;
    Rng rng_;
    int64_t iteration_ = 0;
};

// The per-batch loss graph; exposed so tests can drive it directly.
struct StepInputs {
    std::vector<Image> patches;
    ScalePair scale;  // nominal; the realized scale is derived from sizes
};

struct StepResult {
    Tensor total;  // scalar graph root
    LossReport report;
};

StepResult build_step_graph(Backbone<float>& net, const TrainConfig& cfg,
                            const StepInputs& inputs, Rng* zhat_rng);

}  // namespace iarn
