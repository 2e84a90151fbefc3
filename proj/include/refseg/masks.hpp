// Instance mask representation: COCO uncompressed RLE codec (column-major,
// first count background), bounding-box geometry, IoU, and the two mask
// rendering strategies (mask-and-blur, mask-and-crop) that turn a proposal
// into an encoder-ready instance image.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "refseg/image.hpp"

namespace refseg {

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits; // row-major, one byte per pixel, 0/1

    BinaryMask() = default;
    BinaryMask(int w, int h);

    bool at(int x, int y) const { return bits[std::size_t(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[std::size_t(y) * width + x] = v ? 1 : 0; }

    std::uint64_t foreground_count() const;
    bool empty_foreground() const { return foreground_count() == 0; }

    bool operator==(const BinaryMask&) const = default;
};

struct RleCounts {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> counts; // alternating background/foreground runs

    bool operator==(const RleCounts&) const = default;
};

struct BoundingBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0; // inclusive

    int width() const { return x_max - x_min + 1; }
    int height() const { return y_max - y_min + 1; }

    bool operator==(const BoundingBox&) const = default;
};

enum class MaskStrategy { blur, crop }; // MB, MC
const char* strategy_tag(MaskStrategy s);

struct InstanceImage {
    Image pixels;
    MaskStrategy strategy = MaskStrategy::blur;
};

struct RenderConfig {
    std::array<std::uint8_t, 3> fill_color{127, 127, 127};
    double crop_pad_ratio = 0.1;
    double blur_sigma = 10.0;
    int encoder_resolution = 224;
};

// Throws CountsMismatch / SchemaError when the RLE invariants are violated.
void validate(const RleCounts& r);

BinaryMask rle_decode(const RleCounts& r);
RleCounts rle_encode(const BinaryMask& m);

BoundingBox tight_bbox(const BinaryMask& m); // EmptyMask if no foreground

struct Overlap {
    std::uint64_t intersection = 0;
    std::uint64_t union_ = 0;
};

Overlap overlap(const BinaryMask& a, const BinaryMask& b); // DimensionMismatch

// |a AND b| / |a OR b|. Both empty -> 1.0, exactly one empty -> 0.0.
double iou(const BinaryMask& a, const BinaryMask& b);

// Pre-resize composites, exposed so tests can check pixel-exact properties.
// compose_mc also reports the padded crop window it used.
Image compose_mb(const Image& image, const BinaryMask& m, const RenderConfig& cfg);
Image compose_mc(const Image& image, const BinaryMask& m, const RenderConfig& cfg,
                 BoundingBox* window_out = nullptr);

InstanceImage render_mb(const Image& image, const BinaryMask& m, const RenderConfig& cfg);
InstanceImage render_mc(const Image& image, const BinaryMask& m, const RenderConfig& cfg);

} // namespace refseg
