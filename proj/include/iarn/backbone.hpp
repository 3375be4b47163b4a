#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iarn/scale_encoding.hpp"
#include "iarn/tensor.hpp"

namespace iarn {

// Which coupling inputs receive the 4-channel scale encoding: the HF-branch
// transform (phi), the LF-branch transforms (rho/eta), both, or neither.
enum class EncodingMode { dual, lf_only, hf_only, none };

const char* to_string(EncodingMode mode);
EncodingMode encoding_mode_from_string(const std::string& name);

struct BackboneConfig {
    int num_blocks = 20;
    int atrous_layers = 4;   // dense layers per transform, dilations 1..l
    int feature_width = 32;
    double clamp_amplitude = 1.0;
    bool use_atrous = true;  // false: every dilation is 1
    EncodingMode encoding_mode = EncodingMode::dual;
    int channels = 3;        // branch width

    std::vector<int> dilations() const;
    void validate() const;

    bool operator==(const BackboneConfig&) const = default;
};

// Densely connected stack of 3x3 convolutions: layer k consumes the block
// input concatenated with every previous layer output, followed by a
// dilation-1 projection to the target channel count. Projection parameters
// start at zero so a fresh network is the identity map.
template <class S>
struct DenseAtrousBlock {
    int in_channels = 0;
    int out_channels = 0;
    int width = 0;
    std::vector<int> dilations;
    std::vector<BasicTensor<S>> layer_weights;
    std::vector<BasicTensor<S>> layer_biases;
    BasicTensor<S> proj_weight;
    BasicTensor<S> proj_bias;

    static DenseAtrousBlock create(int in_channels, int out_channels, int width,
                                   const std::vector<int>& dilations);
    void init_params(Rng& rng);
    BasicTensor<S> forward(const BasicTensor<S>& x) const;
};

template <class S>
struct CouplingBlock {
    DenseAtrousBlock<S> phi;  // HF branch -> additive update of LF branch
    DenseAtrousBlock<S> rho;  // LF branch -> log-scale of HF branch
    DenseAtrousBlock<S> eta;  // LF branch -> additive update of HF branch
};

template <class S>
struct NamedParam {
    std::string name;
    BasicTensor<S> value;
};

// Invertible feature transformation: a stack of coupling blocks over the
// (LF, HF) branch pair at HR resolution, conditioned on the scale encoding.
//   y1 = x1 + phi([x2, p])
//   y2 = x2 * exp(a * (2*sigmoid(rho([y1, p])) - 1)) + eta([y1, p])
// The inverse rearranges the same terms, so round trips are exact up to
// floating-point error and zero parameters give the identity map.
template <class S>
class Backbone {
public:
    Backbone() = default;
    explicit Backbone(const BackboneConfig& config);

    const BackboneConfig& config() const { return config_; }

    void init_params(Rng& rng);

    // lf/hf: [N,ch,H,W]; p: [N,4,H,W] (ignored when encoding_mode = none).
    // Returns (y_H, z_H). Raises DivergenceError on non-finite activations.
    std::pair<BasicTensor<S>, BasicTensor<S>> forward(const BasicTensor<S>& lf,
                                                      const BasicTensor<S>& hf,
                                                      const BasicTensor<S>& p) const;
    std::pair<BasicTensor<S>, BasicTensor<S>> inverse(const BasicTensor<S>& y,
                                                      const BasicTensor<S>& z,
                                                      const BasicTensor<S>& p) const;

    std::vector<NamedParam<S>> params();
    int64_t param_count() const;

private:
    BackboneConfig config_;
    std::vector<CouplingBlock<S>> blocks_;

    bool phi_sees_encoding() const;
    bool lf_transforms_see_encoding() const;
};

int64_t param_count(const BackboneConfig& config);

// Scale-encoding field replicated to a batched conditioning tensor.
template <class S>
BasicTensor<S> encoding_batch(const ScaleEncodingField& field, int n);

using BackboneF32 = Backbone<float>;
using BackboneF64 = Backbone<double>;

}  // namespace iarn
