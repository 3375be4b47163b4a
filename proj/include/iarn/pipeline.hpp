#pragma once

#include <optional>

#include "iarn/checkpoint.hpp"

namespace iarn {

// Model-driven bidirectional rescaling. The realized scale, recomputed from
// integer sizes, keeps the encoder and the resampler in exact agreement
// between the two directions.
struct DownscaleResult {
    Image lr;
    ScalePair realized;
};

struct UpscaleResult {
    Image hr;  // unclamped; clamp at export
    ScalePair realized;
};

DownscaleResult model_downscale(Backbone<float>& net, const TrainConfig& cfg, const Image& x,
                                ScalePair scale);

UpscaleResult model_upscale(Backbone<float>& net, const TrainConfig& cfg, const Image& y_l,
                            ScalePair scale, std::optional<SizeHW> target = std::nullopt);

// Bicubic down + bicubic up, the conventional reference pipeline.
Image bicubic_roundtrip(const Image& x, ScalePair scale);

// Matches a 1- or 3-channel image to what the model expects (grayscale is
// replicated to three channels).
Image adapt_channels(const Image& img, int model_channels);

}  // namespace iarn
