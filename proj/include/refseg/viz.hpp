// Qualitative overlay rendering: predicted mask as a translucent fill,
// ground-truth contour, and a caption strip with the three descriptions.

#pragma once

#include "refseg/image.hpp"
#include "refseg/masks.hpp"
#include "refseg/prompts.hpp"

namespace refseg {

// Output dimensions always equal the source image. The caption strip is
// drawn as a band inside the bottom of the frame (skipped when the image is
// too small to hold one).
Image render_overlay(const Image& source, const BinaryMask& predicted, const BinaryMask& gt,
                     const DescriptionBundle& bundle);

// 5x7 bitmap text, uppercase-folded; unsupported glyphs render as boxes.
void draw_text(Image& img, int x, int y, const std::string& text,
               std::array<std::uint8_t, 3> color);

} // namespace refseg
