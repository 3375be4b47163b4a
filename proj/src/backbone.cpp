#include "iarn/backbone.hpp"

#include <cmath>

namespace iarn {

const char* to_string(EncodingMode mode) {
    switch (mode) {
        case EncodingMode::dual: return "dual";
        case EncodingMode::lf_only: return "lf";
        case EncodingMode::hf_only: return "hf";
        case EncodingMode::none: return "none";
    }
    return "?";
}

EncodingMode encoding_mode_from_string(const std::string& name) {
    if (name == "dual") return EncodingMode::dual;
    if (name == "lf" || name == "lf_only") return EncodingMode::lf_only;
    if (name == "hf" || name == "hf_only") return EncodingMode::hf_only;
    if (name == "none") return EncodingMode::none;
    throw ConfigError("unknown encoding mode '" + name + "'");
}

std::vector<int> BackboneConfig::dilations() const {
    std::vector<int> d(static_cast<size_t>(atrous_layers));
    for (int k = 0; k < atrous_layers; ++k) d[static_cast<size_t>(k)] = use_atrous ? k + 1 : 1;
    return d;
}

void BackboneConfig::validate() const {
    if (num_blocks < 0) throw ConfigError("num_blocks must be >= 0");
    if (atrous_layers < 1) throw ConfigError("atrous_layers must be >= 1");
    if (feature_width < 1) throw ConfigError("feature_width must be >= 1");
    if (channels < 1) throw ConfigError("channels must be >= 1");
    if (clamp_amplitude <= 0.0) throw ConfigError("clamp_amplitude must be > 0");
}

template <class S>
DenseAtrousBlock<S> DenseAtrousBlock<S>::create(int in_channels, int out_channels, int width,
                                                const std::vector<int>& dilations) {
    DenseAtrousBlock b;
    b.in_channels = in_channels;
    b.out_channels = out_channels;
    b.width = width;
    b.dilations = dilations;
    int c = in_channels;
    for (size_t k = 0; k < dilations.size(); ++k) {
        b.layer_weights.push_back(BasicTensor<S>::zeros({width, c, 3, 3}, true));
        b.layer_biases.push_back(BasicTensor<S>::zeros({width}, true));
        c += width;
    }
    b.proj_weight = BasicTensor<S>::zeros({out_channels, c, 3, 3}, true);
    b.proj_bias = BasicTensor<S>::zeros({out_channels}, true);
    return b;
}

template <class S>
void DenseAtrousBlock<S>::init_params(Rng& rng) {
    for (auto& w : layer_weights) {
        int fan_in = w.dim(1);
        double bound = 0.1 / std::sqrt(static_cast<double>(fan_in) * 9.0);
        auto values = w.mutable_values();
        for (auto& v : values) v = static_cast<S>(rng.uniform(-bound, bound));
    }
    // Layer biases and the whole projection stay zero: identity start.
}

template <class S>
BasicTensor<S> DenseAtrousBlock<S>::forward(const BasicTensor<S>& x) const {
    std::vector<BasicTensor<S>> features{x};
    int c = in_channels;
    for (size_t k = 0; k < dilations.size(); ++k) {
        BasicTensor<S> in = features.size() == 1 ? features[0] : ops::concat_channels(features);
        ConvSpec spec{c, width, dilations[k]};
        BasicTensor<S> h = ops::conv2d(in, spec, layer_weights[k], layer_biases[k]);
        features.push_back(ops::leaky_relu(h, S(0.2)));
        c += width;
    }
    BasicTensor<S> in = ops::concat_channels(features);
    ConvSpec spec{c, out_channels, 1};
    return ops::conv2d(in, spec, proj_weight, proj_bias);
}

template <class S>
Backbone<S>::Backbone(const BackboneConfig& config) : config_(config) {
    config_.validate();
    const int ch = config_.channels;
    const int phi_in = ch + (phi_sees_encoding() ? 4 : 0);
    const int lf_in = ch + (lf_transforms_see_encoding() ? 4 : 0);
    const auto dil = config_.dilations();
    blocks_.reserve(static_cast<size_t>(config_.num_blocks));
    for (int i = 0; i < config_.num_blocks; ++i) {
        CouplingBlock<S> block;
        block.phi = DenseAtrousBlock<S>::create(phi_in, ch, config_.feature_width, dil);
        block.rho = DenseAtrousBlock<S>::create(lf_in, ch, config_.feature_width, dil);
        block.eta = DenseAtrousBlock<S>::create(lf_in, ch, config_.feature_width, dil);
        blocks_.push_back(std::move(block));
    }
}

template <class S>
bool Backbone<S>::phi_sees_encoding() const {
    return config_.encoding_mode == EncodingMode::dual ||
           config_.encoding_mode == EncodingMode::hf_only;
}

template <class S>
bool Backbone<S>::lf_transforms_see_encoding() const {
    return config_.encoding_mode == EncodingMode::dual ||
           config_.encoding_mode == EncodingMode::lf_only;
}

template <class S>
void Backbone<S>::init_params(Rng& rng) {
    for (auto& block : blocks_) {
        block.phi.init_params(rng);
        block.rho.init_params(rng);
        block.eta.init_params(rng);
    }
}

template <class S>
std::pair<BasicTensor<S>, BasicTensor<S>> Backbone<S>::forward(const BasicTensor<S>& lf,
                                                               const BasicTensor<S>& hf,
                                                               const BasicTensor<S>& p) const {
    const S alpha = static_cast<S>(config_.clamp_amplitude);
    BasicTensor<S> x1 = lf;
    BasicTensor<S> x2 = hf;
    for (size_t i = 0; i < blocks_.size(); ++i) {
        const auto& block = blocks_[i];
        BasicTensor<S> phi_in =
            phi_sees_encoding() ? ops::concat_channels<S>({x2, p}) : x2;
        BasicTensor<S> y1 = ops::add(x1, block.phi.forward(phi_in));

        BasicTensor<S> cond =
            lf_transforms_see_encoding() ? ops::concat_channels<S>({y1, p}) : y1;
        BasicTensor<S> log_scale =
            ops::add(ops::mul(ops::sigmoid(block.rho.forward(cond)), S(2) * alpha), -alpha);
        BasicTensor<S> y2 =
            ops::add(ops::mul(x2, ops::exp(log_scale)), block.eta.forward(cond));

        if (!ops::all_finite(y1) || !ops::all_finite(y2))
            throw DivergenceError("non-finite activation in coupling block " +
                                  std::to_string(i));
        x1 = y1;
        x2 = y2;
    }
    return {x1, x2};
}

template <class S>
std::pair<BasicTensor<S>, BasicTensor<S>> Backbone<S>::inverse(const BasicTensor<S>& y,
                                                               const BasicTensor<S>& z,
                                                               const BasicTensor<S>& p) const {
    const S alpha = static_cast<S>(config_.clamp_amplitude);
    BasicTensor<S> y1 = y;
    BasicTensor<S> y2 = z;
    for (size_t i = blocks_.size(); i-- > 0;) {
        const auto& block = blocks_[i];
        BasicTensor<S> cond =
            lf_transforms_see_encoding() ? ops::concat_channels<S>({y1, p}) : y1;
        BasicTensor<S> log_scale =
            ops::add(ops::mul(ops::sigmoid(block.rho.forward(cond)), S(2) * alpha), -alpha);
        BasicTensor<S> x2 = ops::mul(ops::sub(y2, block.eta.forward(cond)),
                                     ops::exp(ops::neg(log_scale)));

        BasicTensor<S> phi_in =
            phi_sees_encoding() ? ops::concat_channels<S>({x2, p}) : x2;
        BasicTensor<S> x1 = ops::sub(y1, block.phi.forward(phi_in));
        y1 = x1;
        y2 = x2;
    }
    return {y1, y2};
}

template <class S>
std::vector<NamedParam<S>> Backbone<S>::params() {
    std::vector<NamedParam<S>> out;
    const char* names[3] = {"phi", "rho", "eta"};
    for (size_t i = 0; i < blocks_.size(); ++i) {
        DenseAtrousBlock<S>* nets[3] = {&blocks_[i].phi, &blocks_[i].rho, &blocks_[i].eta};
        for (int t = 0; t < 3; ++t) {
            std::string prefix = "block" + std::to_string(i) + "." + names[t] + ".";
            for (size_t k = 0; k < nets[t]->layer_weights.size(); ++k) {
                out.push_back({prefix + "conv" + std::to_string(k) + ".weight",
                               nets[t]->layer_weights[k]});
                out.push_back({prefix + "conv" + std::to_string(k) + ".bias",
                               nets[t]->layer_biases[k]});
            }
            out.push_back({prefix + "proj.weight", nets[t]->proj_weight});
            out.push_back({prefix + "proj.bias", nets[t]->proj_bias});
        }
    }
    return out;
}

template <class S>
int64_t Backbone<S>::param_count() const {
    return iarn::param_count(config_);
}

namespace {

int64_t dense_block_param_count(int in_channels, int out_channels, int width, int layers) {
    int64_t total = 0;
    int c = in_channels;
    for (int k = 0; k < layers; ++k) {
        total += ConvSpec{c, width, 1}.param_count();
        c += width;
    }
    total += ConvSpec{c, out_channels, 1}.param_count();
    return total;
}

}  // namespace

int64_t param_count(const BackboneConfig& config) {
    config.validate();
    const int ch = config.channels;
    bool phi_enc = config.encoding_mode == EncodingMode::dual ||
                   config.encoding_mode == EncodingMode::hf_only;
    bool lf_enc = config.encoding_mode == EncodingMode::dual ||
                  config.encoding_mode == EncodingMode::lf_only;
    int64_t per_block =
        dense_block_param_count(ch + (phi_enc ? 4 : 0), ch, config.feature_width,
                                config.atrous_layers) +
        2 * dense_block_param_count(ch + (lf_enc ? 4 : 0), ch, config.feature_width,
                                    config.atrous_layers);
    return per_block * config.num_blocks;
}

template <class S>
BasicTensor<S> encoding_batch(const ScaleEncodingField& field, int n) {
    const auto src = field.field.values();
    std::vector<S> values(src.size());
    for (size_t i = 0; i < src.size(); ++i) values[i] = static_cast<S>(src[i]);
    auto one = BasicTensor<S>::from_values({1, 4, field.height(), field.width()},
                                           std::move(values));
    return ops::tile_batch(one, n);
}

template struct DenseAtrousBlock<float>;
template struct DenseAtrousBlock<double>;
template class Backbone<float>;
template class Backbone<double>;
template BasicTensor<float> encoding_batch(const ScaleEncodingField&, int);
template BasicTensor<double> encoding_batch(const ScaleEncodingField&, int);

}  // namespace iarn
