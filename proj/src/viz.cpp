#include "refseg/viz.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include "refseg/errors.hpp"

namespace refseg {

namespace {

struct Glyph {
    char c;
    const char* rows[7]; // 5 columns, '#' = on
};

const Glyph kGlyphs[] = {
    {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
    {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
    {'D', {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
    {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
    {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
    {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."}},
    {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
    {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
    {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
    {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
    {'N', {"#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"}},
    {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
    {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
    {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
    {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
    {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
    {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
    {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"}},
    {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
    {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
    {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
    {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
    {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
    {'3', {".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."}},
    {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
    {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
    {'6', {".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."}},
    {'7', {"#####", "....#", "...#.", "..#..", "..#..", "..#..", "..#.."}},
    {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
    {'9', {".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."}},
    {'.', {".....", ".....", ".....", ".....", ".....", ".##..", ".##.."}},
    {',', {".....", ".....", ".....", ".....", ".##..", "..#..", ".#..."}},
    {'\'', {"..#..", "..#..", ".....", ".....", ".....", ".....", "....."}},
    {'"', {".#.#.", ".#.#.", ".....", ".....", ".....", ".....", "....."}},
    {'(', {"...#.", "..#..", ".#...", ".#...", ".#...", "..#..", "...#."}},
    {')', {".#...", "..#..", "...#.", "...#.", "...#.", "..#..", ".#..."}},
    {'<', {"...#.", "..#..", ".#...", "#....", ".#...", "..#..", "...#."}},
    {'>', {".#...", "..#..", "...#.", "....#", "...#.", "..#..", ".#..."}},
    {':', {".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."}},
    {';', {".....", ".##..", ".##..", ".....", ".##..", "..#..", ".#..."}},
    {'-', {".....", ".....", ".....", "#####", ".....", ".....", "....."}},
    {'_', {".....", ".....", ".....", ".....", ".....", ".....", "#####"}},
    {'?', {".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#.."}},
    {'!', {"..#..", "..#..", "..#..", "..#..", "..#..", ".....", "..#.."}},
    {'/', {"....#", "....#", "...#.", "..#..", ".#...", "#....", "#...."}},
    {'+', {".....", "..#..", "..#..", "#####", "..#..", "..#..", "....."}},
    {'=', {".....", ".....", "#####", ".....", "#####", ".....", "....."}},
    {'#', {".#.#.", "#####", ".#.#.", ".#.#.", ".#.#.", "#####", ".#.#."}},
};

const Glyph kBoxGlyph = {'?', {"#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"}};

const Glyph& glyph_for(char c) {
    char up = char(std::toupper(static_cast<unsigned char>(c)));
    for (const Glyph& g : kGlyphs)
        if (g.c == up) return g;
    return kBoxGlyph;
}

void blend(std::uint8_t* px, std::array<std::uint8_t, 3> color, double alpha) {
    for (int c = 0; c < 3; ++c)
        px[c] = std::uint8_t(std::clamp(
            std::lround((1.0 - alpha) * px[c] + alpha * color[std::size_t(c)]), 0L, 255L));
}

bool is_contour(const BinaryMask& m, int x, int y) {
    if (!m.at(x, y)) return false;
    if (x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1) return true;
    return !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) || !m.at(x, y + 1);
}

} // namespace

void draw_text(Image& img, int x, int y, const std::string& text,
               std::array<std::uint8_t, 3> color) {
    int cx = x;
    for (char c : text) {
        if (c == ' ') {
            cx += 6;
            continue;
        }
        const Glyph& g = glyph_for(c);
        for (int row = 0; row < 7; ++row) {
            for (int col = 0; col < 5; ++col) {
                if (g.rows[row][col] != '#') continue;
                int px = cx + col, py = y + row;
                if (px >= 0 && px < img.width && py >= 0 && py < img.height)
                    img.set(px, py, color);
            }
        }
        cx += 6;
        if (cx >= img.width) break;
    }
}

Image render_overlay(const Image& source, const BinaryMask& predicted, const BinaryMask& gt,
                     const DescriptionBundle& bundle) {
    if (predicted.width != source.width || predicted.height != source.height ||
        gt.width != source.width || gt.height != source.height)
        raise(Errc::dimension_mismatch, "overlay masks must match the image");

    Image out = source;

    const std::array<std::uint8_t, 3> pred_color{230, 60, 60};
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            if (predicted.at(x, y)) blend(out.at(x, y), pred_color, 0.5);

    const std::array<std::uint8_t, 3> gt_color{60, 230, 60};
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            if (is_contour(gt, x, y)) out.set(x, y, gt_color);

    // caption strip inside the bottom of the frame
    const int line_pitch = 9;
    const int band_height = 3 * line_pitch + 6;
    if (out.height >= 2 * band_height && out.width >= 40) {
        int band_top = out.height - band_height;
        for (int y = band_top; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) blend(out.at(x, y), {0, 0, 0}, 0.65);

        std::size_t max_chars = std::size_t(std::max(0, (out.width - 4) / 6));
        auto clip = [max_chars](std::string s) {
            if (s.size() > max_chars) s.resize(max_chars);
            return s;
        };
        const std::array<std::uint8_t, 3> white{255, 255, 255};
        draw_text(out, 2, band_top + 3, clip("VAN: " + bundle.t_van), white);
        draw_text(out, 2, band_top + 3 + line_pitch, clip("ATT: " + bundle.t_att), white);
        draw_text(out, 2, band_top + 3 + 2 * line_pitch, clip("SUR: " + bundle.t_sur), white);
    }
    return out;
}

} // namespace refseg
