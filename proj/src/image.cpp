#include "flowmotion/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "flowmotion/errors.hpp"

namespace flowmotion {

RgbImage::RgbImage(int w, int h, uint8_t fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
        throw ShapeError("image dimensions must be positive");
    }
    data.assign(static_cast<size_t>(w) * h * 3, fill);
}

GrayImage::GrayImage(int w, int h, float fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
        throw ShapeError("image dimensions must be positive");
    }
    data.assign(static_cast<size_t>(w) * h, fill);
}

GrayImage rgb_to_gray(const RgbImage& rgb) {
    GrayImage out(rgb.width, rgb.height);
    for (size_t i = 0; i < out.data.size(); ++i) {
        const uint8_t* p = rgb.data.data() + i * 3;
        out.data[i] = (0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2]) / 255.0f;
    }
    return out;
}

RgbImage gray_to_rgb(const GrayImage& gray) {
    RgbImage out(gray.width, gray.height);
    for (size_t i = 0; i < gray.data.size(); ++i) {
        const float clamped = std::clamp(gray.data[i], 0.0f, 1.0f);
        const uint8_t v = static_cast<uint8_t>(std::lround(clamped * 255.0f));
        out.data[i * 3] = v;
        out.data[i * 3 + 1] = v;
        out.data[i * 3 + 2] = v;
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

RgbImage read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw IoError("cannot open png file: " + path);
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("malformed png file: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize every supported source to 8-bit RGB.
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));

    RgbImage image(width, height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = image.data.data() + static_cast<size_t>(y) * width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::string& path, const RgbImage& image) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot write png file: " + path);
    }

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y) {
        rows[y] = const_cast<png_bytep>(image.data.data() + static_cast<size_t>(y) * image.width * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_png_gray(const std::string& path, const GrayImage& image) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot write png file: " + path);
    }

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + path);
    }

    std::vector<uint8_t> bytes(image.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = static_cast<uint8_t>(std::lround(std::clamp(image.data[i], 0.0f, 1.0f) * 255.0f));
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y) {
        rows[y] = bytes.data() + static_cast<size_t>(y) * image.width;
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open pgm file: " + path);
    }
    std::string magic;
    in >> magic;
    if (magic != "P5") {
        throw FormatError("pgm file is not binary P5: " + path);
    }
    auto next_token = [&in]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw FormatError("pgm header truncated");
    };
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width <= 0 || height <= 0 || maxval != 255) {
        throw FormatError("pgm must be 8-bit with positive dimensions");
    }
    in.get();  // single whitespace after maxval

    std::vector<uint8_t> bytes(static_cast<size_t>(width) * height);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw LengthError("pgm payload truncated");
    }

    GrayImage image(width, height);
    for (size_t i = 0; i < bytes.size(); ++i) {
        image.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    }
    return image;
}

void write_pgm(const std::string& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write pgm file: " + path);
    }
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    for (float value : image.data) {
        out.put(static_cast<char>(std::lround(std::clamp(value, 0.0f, 1.0f) * 255.0f)));
    }
}

GrayImage read_image_gray(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".pgm") {
        return read_pgm(path);
    }
    return rgb_to_gray(read_png(path));
}

void draw_rect(RgbImage& image, int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b,
               int thickness) {
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    auto put = [&](int x, int y) {
        if (x < 0 || x >= image.width || y < 0 || y >= image.height) return;
        uint8_t* p = image.pixel(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    };
    for (int t = 0; t < thickness; ++t) {
        for (int x = x0 - t; x <= x1 + t; ++x) {
            put(x, y0 - t);
            put(x, y1 + t);
        }
        for (int y = y0 - t; y <= y1 + t; ++y) {
            put(x0 - t, y);
            put(x1 + t, y);
        }
    }
}

}  // namespace flowmotion
