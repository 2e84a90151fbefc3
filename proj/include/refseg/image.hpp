// 8-bit RGB image buffer with the deterministic pixel ops the mask
// rendering strategies need: bilinear resize (half-pixel centers) and
// edge-clamped Gaussian blur. File I/O covers PPM (P6) and PNG.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace refseg {

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // RGB, row-major, 3 bytes per pixel

    Image() = default;
    Image(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (std::size_t(y) * width + x); }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (std::size_t(y) * width + x);
    }

    void set(int x, int y, std::array<std::uint8_t, 3> rgb) {
        auto* p = at(x, y);
        p[0] = rgb[0];
        p[1] = rgb[1];
        p[2] = rgb[2];
    }

    bool operator==(const Image&) const = default;
};

// --- file I/O ---------------------------------------------------------------

Image load_image(const std::filesystem::path& path);           // PPM or PNG by magic
void save_ppm(const Image& img, const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

std::string encode_png(const Image& img);                       // in-memory PNG bytes
Image decode_png(const void* data, std::size_t len);

// Reads just enough of the header to report dimensions.
std::pair<int, int> probe_image_size(const std::filesystem::path& path);

// --- pixel ops --------------------------------------------------------------

Image resize_bilinear(const Image& src, int out_w, int out_h);
Image gaussian_blur(const Image& src, double sigma);

// Paste src centered onto a side x side canvas of fill color.
Image pad_to_square(const Image& src, std::array<std::uint8_t, 3> fill);

} // namespace refseg
