#include "iarn/image.hpp"

#include <algorithm>
#include <cmath>

namespace iarn {

Image::Image(int channels_, int height_, int width_, float fill)
    : channels(channels_), height(height_), width(width_) {
    if (channels_ <= 0 || height_ <= 0 || width_ <= 0)
        throw ShapeError("image dimensions must be positive");
    data.assign(static_cast<size_t>(channels_) * height_ * width_, fill);
}

Image clamp01(const Image& img) {
    Image out = img;
    for (float& v : out.data) v = std::min(1.0f, std::max(0.0f, v));
    return out;
}

std::vector<uint8_t> quantize8(const Image& img) {
    std::vector<uint8_t> out(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        float v = std::min(1.0f, std::max(0.0f, img.data[i]));
        out[i] = static_cast<uint8_t>(std::floor(v * 255.0f + 0.5f));
    }
    return out;
}

Image from_quantized8(const std::vector<uint8_t>& bytes, int channels, int height, int width) {
    Image img(channels, height, width);
    if (bytes.size() != img.data.size())
        throw ShapeError("byte count does not match image dimensions");
    for (size_t i = 0; i < bytes.size(); ++i)
        img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

Tensor image_to_tensor(const Image& img) {
    return Tensor::from_values({img.channels, img.height, img.width}, img.data);
}

Image tensor_to_image(const Tensor& t, Image::Colorspace cs) {
    if (t.rank() != 3)
        throw ShapeError("tensor_to_image expects [C,H,W], got " + shape_string(t.shape()));
    Image img(t.dim(0), t.dim(1), t.dim(2));
    img.colorspace = cs;
    std::copy(t.values().begin(), t.values().end(), img.data.begin());
    return img;
}

Tensor stack_images(const std::vector<Image>& images) {
    if (images.empty()) throw ShapeError("stack_images: empty batch");
    const Image& first = images[0];
    for (const Image& img : images)
        if (!img.same_shape(first)) throw ShapeError("stack_images: mismatched image shapes");
    int n = static_cast<int>(images.size());
    std::vector<float> values(static_cast<size_t>(n) * first.data.size());
    for (int i = 0; i < n; ++i)
        std::copy(images[i].data.begin(), images[i].data.end(),
                  values.begin() + static_cast<size_t>(i) * first.data.size());
    return Tensor::from_values({n, first.channels, first.height, first.width},
                               std::move(values));
}

Image batch_slice_to_image(const Tensor& t, int index, Image::Colorspace cs) {
    if (t.rank() != 4)
        throw ShapeError("batch_slice_to_image expects [N,C,H,W], got " +
                         shape_string(t.shape()));
    if (index < 0 || index >= t.dim(0)) throw ShapeError("batch index out of range");
    Image img(t.dim(1), t.dim(2), t.dim(3));
    img.colorspace = cs;
    size_t stride = img.data.size();
    std::copy(t.values().begin() + index * stride, t.values().begin() + (index + 1) * stride,
              img.data.begin());
    return img;
}

Image hflip(const Image& img) {
    Image out(img.channels, img.height, img.width);
    out.colorspace = img.colorspace;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

Image crop(const Image& img, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || y0 + h > img.height || x0 + w > img.width)
        throw ShapeError("crop window outside image bounds");
    Image out(img.channels, h, w);
    out.colorspace = img.colorspace;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y) {
            const float* src = img.plane(c) + static_cast<size_t>(y0 + y) * img.width + x0;
            std::copy(src, src + w, &out.at(c, y, 0));
        }
    return out;
}

}  // namespace iarn
