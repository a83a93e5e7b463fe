#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowmotion {

// 8-bit interleaved RGB image.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // width * height * 3

    RgbImage() = default;
    RgbImage(int w, int h, uint8_t fill = 0);

    uint8_t* pixel(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const uint8_t* pixel(int x, int y) const {
        return data.data() + (static_cast<size_t>(y) * width + x) * 3;
    }

    bool operator==(const RgbImage& other) const = default;
};

// Single-channel image with intensities in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // width * height

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f);

    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }

    bool operator==(const GrayImage& other) const = default;
};

// Rec.601 luminance conversion (weights 0.299 / 0.587 / 0.114).
GrayImage rgb_to_gray(const RgbImage& rgb);

RgbImage gray_to_rgb(const GrayImage& gray);

// PNG IO, 8-bit only. Gray and RGB(A) sources are accepted on read;
// writes are 8-bit RGB (or 8-bit grayscale for write_png_gray).
RgbImage read_png(const std::string& path);
void write_png(const std::string& path, const RgbImage& image);
void write_png_gray(const std::string& path, const GrayImage& image);

// Binary PGM (P5), maxval 255.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& image);

// Reads either format by file extension (.png / .pgm) as grayscale.
GrayImage read_image_gray(const std::string& path);

// Axis-aligned rectangle outline, clipped to the image.
void draw_rect(RgbImage& image, int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b,
               int thickness = 1);

}  // namespace flowmotion
