#pragma once

#include <cstdint>
#include <vector>

#include "iarn/common.hpp"
#include "iarn/tensor.hpp"

namespace iarn {

// Planar channel-major floating image, values nominally in [0,1]. Clamping
// and 8-bit quantization happen only at export.
struct Image {
    enum class Colorspace { srgb_rgb, luminance };

    int channels = 0;
    int height = 0;
    int width = 0;
    Colorspace colorspace = Colorspace::srgb_rgb;
    std::vector<float> data;  // [c][y][x]

    Image() = default;
    Image(int channels_, int height_, int width_, float fill = 0.0f);

    float& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float* plane(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
    const float* plane(int c) const {
        return data.data() + static_cast<size_t>(c) * height * width;
    }
    size_t plane_size() const { return static_cast<size_t>(height) * width; }

    bool same_shape(const Image& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }
};

Image clamp01(const Image& img);
std::vector<uint8_t> quantize8(const Image& img);  // round-half-up
Image from_quantized8(const std::vector<uint8_t>& bytes, int channels, int height, int width);

// [C,H,W] <-> image; tensor conversions never clamp.
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, Image::Colorspace cs = Image::Colorspace::srgb_rgb);

// Stacks equally sized images into [N,C,H,W].
Tensor stack_images(const std::vector<Image>& images);
Image batch_slice_to_image(const Tensor& t, int index,
                           Image::Colorspace cs = Image::Colorspace::srgb_rgb);

Image hflip(const Image& img);
Image crop(const Image& img, int y0, int x0, int h, int w);

}  // namespace iarn
