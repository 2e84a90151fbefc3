#include "refseg/masks.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "refseg/errors.hpp"

namespace refseg {

BinaryMask::BinaryMask(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) raise(Errc::dimension_mismatch, "mask dimensions must be >= 1");
    bits.assign(std::size_t(w) * h, 0);
}

std::uint64_t BinaryMask::foreground_count() const {
    std::uint64_t n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
}

const char* strategy_tag(MaskStrategy s) {
    return s == MaskStrategy::blur ? "MB" : "MC";
}

void validate(const RleCounts& r) {
    if (r.width < 1 || r.height < 1)
        raise(Errc::schema_error, "RLE dimensions must be >= 1");
    std::uint64_t total = 0;
    for (std::uint32_t c : r.counts) total += c;
    if (total != std::uint64_t(r.width) * std::uint64_t(r.height))
        raise(Errc::counts_mismatch, "RLE counts sum " + std::to_string(total) + " != " +
                                         std::to_string(std::uint64_t(r.width) * r.height));
    for (std::size_t i = 0; i + 1 < r.counts.size(); ++i)
        if (r.counts[i] == 0 && r.counts[i + 1] == 0)
            raise(Errc::schema_error, "RLE has consecutive zero runs");
}

BinaryMask rle_decode(const RleCounts& r) {
    validate(r);
    BinaryMask m(r.width, r.height);
    // column-major scan: x outer, y inner
    std::uint64_t idx = 0;
    bool value = false;
    for (std::uint32_t run : r.counts) {
        for (std::uint32_t k = 0; k < run; ++k, ++idx) {
            if (value) {
                int x = int(idx / std::uint64_t(r.height));
                int y = int(idx % std::uint64_t(r.height));
                m.set(x, y, true);
            }
        }
        value = !value;
    }
    return m;
}

RleCounts rle_encode(const BinaryMask& m) {
    RleCounts r;
    r.width = m.width;
    r.height = m.height;
    bool current = false; // first run counts background
    std::uint32_t run = 0;
    for (int x = 0; x < m.width; ++x) {
        for (int y = 0; y < m.height; ++y) {
            bool v = m.at(x, y);
            if (v == current) {
                ++run;
            } else {
                r.counts.push_back(run);
                current = v;
                run = 1;
            }
        }
    }
    r.counts.push_back(run);
    return r;
}

BoundingBox tight_bbox(const BinaryMask& m) {
    int x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) raise(Errc::empty_mask, "tight_bbox of empty mask");
    return {x0, y0, x1, y1};
}

Overlap overlap(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        raise(Errc::dimension_mismatch, "mask dimensions differ");
    Overlap o;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        bool va = a.bits[i] != 0, vb = b.bits[i] != 0;
        o.intersection += (va && vb) ? 1 : 0;
        o.union_ += (va || vb) ? 1 : 0;
    }
    return o;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    Overlap o = overlap(a, b);
    if (o.union_ == 0) return 1.0; // both empty: agreement that nothing is there
    return double(o.intersection) / double(o.union_);
}

// --- rendering -----------------------------------------------------------------

Image compose_mb(const Image& image, const BinaryMask& m, const RenderConfig& cfg) {
    if (m.width != image.width || m.height != image.height)
        raise(Errc::dimension_mismatch, "mask does not match image dimensions");
    if (m.empty_foreground()) raise(Errc::empty_mask, "render_mb of empty mask");

    Image out = gaussian_blur(image, cfg.blur_sigma);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            if (m.at(x, y)) std::memcpy(out.at(x, y), image.at(x, y), 3);
    return out;
}

Image compose_mc(const Image& image, const BinaryMask& m, const RenderConfig& cfg,
                 BoundingBox* window_out) {
    if (m.width != image.width || m.height != image.height)
        raise(Errc::dimension_mismatch, "mask does not match image dimensions");
    if (m.empty_foreground()) raise(Errc::empty_mask, "render_mc of empty mask");

    BoundingBox box = tight_bbox(m);
    long pad = std::lround(cfg.crop_pad_ratio * std::max(box.width(), box.height()));
    BoundingBox window{
        std::max(0, box.x_min - int(pad)),
        std::max(0, box.y_min - int(pad)),
        std::min(image.width - 1, box.x_max + int(pad)),
        std::min(image.height - 1, box.y_max + int(pad)),
    };
    if (window_out) *window_out = window;

    Image out(window.width(), window.height(), cfg.fill_color);
    for (int y = window.y_min; y <= window.y_max; ++y)
        for (int x = window.x_min; x <= window.x_max; ++x)
            if (m.at(x, y))
                std::memcpy(out.at(x - window.x_min, y - window.y_min), image.at(x, y), 3);
    return out;
}

InstanceImage render_mb(const Image& image, const BinaryMask& m, const RenderConfig& cfg) {
    Image composed = compose_mb(image, m, cfg);
    Image squared = pad_to_square(composed, cfg.fill_color);
    return {resize_bilinear(squared, cfg.encoder_resolution, cfg.encoder_resolution),
            MaskStrategy::blur};
}

InstanceImage render_mc(const Image& image, const BinaryMask& m, const RenderConfig& cfg) {
    Image composed = compose_mc(image, m, cfg);
    Image squared = pad_to_square(composed, cfg.fill_color);
    return {resize_bilinear(squared, cfg.encoder_resolution, cfg.encoder_resolution),
            MaskStrategy::crop};
}

} // namespace refseg
