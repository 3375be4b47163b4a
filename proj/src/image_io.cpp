#include "iarn/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace iarn {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

Image interleaved_to_planar(const std::vector<uint8_t>& rows, int channels, int h, int w) {
    Image img(channels, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) =
                    static_cast<float>(rows[(static_cast<size_t>(y) * w + x) * channels + c]) /
                    255.0f;
    if (channels == 1) img.colorspace = Image::Colorspace::luminance;
    return img;
}

Image load_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError("cannot open image '" + path + "'");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failure");
    }
    std::vector<uint8_t> pixels;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG '" + path + "'");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("16-bit PNG is not supported: '" + path + "'");
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG must decode to 1 or 3 channels: '" + path + "'");
    }

    pixels.resize(static_cast<size_t>(h) * w * channels);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        row_ptrs[y] = pixels.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    return interleaved_to_planar(pixels, channels, static_cast<int>(h), static_cast<int>(w));
}

void save_png(const std::string& path, const Image& img) {
    std::vector<uint8_t> bytes = quantize8(img);
    std::vector<uint8_t> interleaved(bytes.size());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                interleaved[(static_cast<size_t>(y) * img.width + x) * img.channels + c] =
                    bytes[(static_cast<size_t>(c) * img.height + y) * img.width + x];

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failure");
    }
    std::vector<png_bytep> row_ptrs(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG '" + path + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        row_ptrs[y] = interleaved.data() + static_cast<size_t>(y) * img.width * img.channels;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

int read_pnm_token(std::istream& in) {
    // Skips whitespace and '#' comments.
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v = -1;
    in >> v;
    return v;
}

Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image '" + path + "'");
    char m0 = 0, m1 = 0;
    in.get(m0).get(m1);
    if (m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw IoError("unsupported PNM magic in '" + path + "' (need binary P5/P6)");
    int channels = m1 == '5' ? 1 : 3;
    int w = read_pnm_token(in);
    int h = read_pnm_token(in);
    int maxval = read_pnm_token(in);
    if (w <= 0 || h <= 0) throw IoError("bad PNM dimensions in '" + path + "'");
    if (maxval != 255) throw IoError("PNM maxval must be 255 in '" + path + "'");
    in.get();  // single whitespace after maxval

    std::vector<uint8_t> pixels(static_cast<size_t>(h) * w * channels);
    in.read(reinterpret_cast<char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
        throw IoError("truncated PNM data in '" + path + "'");
    return interleaved_to_planar(pixels, channels, h, w);
}

void save_pnm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << (img.channels == 1 ? "P5" : "P6") << '\n'
        << img.width << ' ' << img.height << '\n'
        << "255\n";
    std::vector<uint8_t> bytes = quantize8(img);
    std::vector<uint8_t> interleaved(bytes.size());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                interleaved[(static_cast<size_t>(y) * img.width + x) * img.channels + c] =
                    bytes[(static_cast<size_t>(c) * img.height + y) * img.width + x];
    out.write(reinterpret_cast<const char*>(interleaved.data()),
              static_cast<std::streamsize>(interleaved.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

Image load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open image '" + path + "'");
    unsigned char magic[8] = {};
    probe.read(reinterpret_cast<char*>(magic), 8);
    probe.close();
    if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return load_png(path);
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return load_pnm(path);
    throw IoError("unrecognized image format in '" + path + "' (need PNG or binary PPM/PGM)");
}

void save_image(const std::string& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ShapeError("save_image: image must have 1 or 3 channels");
    std::string ext = lower_ext(path);
    if (ext == ".png") {
        save_png(path, img);
    } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        save_pnm(path, img);
    } else {
        throw UsageError("unsupported output extension '" + ext + "' (use .png/.ppm/.pgm)");
    }
}

std::vector<std::string> list_image_files(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = lower_ext(entry.path().string());
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace iarn
