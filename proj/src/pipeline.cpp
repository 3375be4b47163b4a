#include "iarn/pipeline.hpp"

namespace iarn {

namespace {

Tensor as_batch(const Image& img) {
    return Tensor::from_values({1, img.channels, img.height, img.width}, img.data);
}

Image from_batch(const Tensor& t, Image::Colorspace cs) {
    return batch_slice_to_image(t, 0, cs);
}

}  // namespace

Image adapt_channels(const Image& img, int model_channels) {
    if (img.channels == model_channels) return img;
    if (img.channels == 1 && model_channels == 3) {
        Image out(3, img.height, img.width);
        out.colorspace = Image::Colorspace::srgb_rgb;
        for (int c = 0; c < 3; ++c)
            std::copy(img.data.begin(), img.data.end(), out.plane(c));
        return out;
    }
    throw UsageError("image has " + std::to_string(img.channels) +
                     " channels but the model expects " + std::to_string(model_channels));
}

DownscaleResult model_downscale(Backbone<float>& net, const TrainConfig& cfg, const Image& x,
                                ScalePair scale) {
    Image input = adapt_channels(x, net.config().channels);
    SizeHW lr = output_size(input.height, input.width, scale, Direction::down);
    ScalePair realized = realized_scale(input.height, input.width, lr.h, lr.w);

    SplitPair pair = cfg.channel_split ? split(input, realized, cfg.method)
                                       : split_disabled(input, realized, cfg.method);
    Tensor p = encoding_batch<float>(encode(input.height, input.width, realized), 1);
    auto [y, z] = net.forward(as_batch(pair.lf), as_batch(pair.hf), p);
    Tensor y_l = resample2d(y, lr.h, lr.w, cfg.method);

    DownscaleResult result;
    result.lr = from_batch(y_l, input.colorspace);
    result.realized = realized;
    return result;
}

UpscaleResult model_upscale(Backbone<float>& net, const TrainConfig& cfg, const Image& y_l,
                            ScalePair scale, std::optional<SizeHW> target) {
    Image input = adapt_channels(y_l, net.config().channels);
    SizeHW hr = target ? *target : output_size(input.height, input.width, scale, Direction::up);
    if (hr.h < input.height || hr.w < input.width)
        throw UsageError("upscale target smaller than the input");
    ScalePair realized = realized_scale(hr.h, hr.w, input.height, input.width);

    Tensor y_hat = resample2d(as_batch(input), hr.h, hr.w, cfg.method);
    Tensor z_hat = Tensor::zeros({1, net.config().channels, hr.h, hr.w});
    Tensor p = encoding_batch<float>(encode(hr.h, hr.w, realized), 1);
    auto [x_lf, x_hf] = net.inverse(y_hat, z_hat, p);
    Tensor x_hat = ops::add(x_lf, x_hf);

    UpscaleResult result;
    result.hr = from_batch(x_hat, input.colorspace);
    result.realized = realized;
    return result;
}

Image bicubic_roundtrip(const Image& x, ScalePair scale) {
    SizeHW lr = output_size(x.height, x.width, scale, Direction::down);
    Image down = resample_to(x, lr.h, lr.w, ResampleMethod::bicubic);
    return resample_to(down, x.height, x.width, ResampleMethod::bicubic);
}

}  // namespace iarn
