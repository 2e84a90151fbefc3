#include "refseg/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "refseg/errors.hpp"

namespace refseg {

Image::Image(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
    if (w < 1 || h < 1) raise(Errc::dimension_mismatch, "image dimensions must be >= 1");
    pixels.resize(std::size_t(w) * h * 3);
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill[0];
        pixels[i + 1] = fill[1];
        pixels[i + 2] = fill[2];
    }
}

// --- PPM ---------------------------------------------------------------------

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::missing_image, "cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

// Skips PPM whitespace and '#' comments, then parses a decimal value.
int ppm_next_int(const std::string& s, std::size_t& pos) {
    while (pos < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        } else if (s[pos] == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    int value = 0;
    bool any = false;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        value = value * 10 + (s[pos] - '0');
        ++pos;
        any = true;
    }
    if (!any) raise(Errc::schema_error, "malformed PPM header");
    return value;
}

Image decode_ppm(const std::string& data, const std::string& origin) {
    if (data.size() < 2 || data[0] != 'P' || data[1] != '6')
        raise(Errc::schema_error, "not a P6 PPM: " + origin);
    std::size_t pos = 2;
    int w = ppm_next_int(data, pos);
    int h = ppm_next_int(data, pos);
    int maxval = ppm_next_int(data, pos);
    if (maxval != 255) raise(Errc::schema_error, "only maxval 255 PPM supported: " + origin);
    ++pos; // single whitespace after maxval
    std::size_t need = std::size_t(w) * h * 3;
    if (pos + need > data.size()) raise(Errc::schema_error, "truncated PPM: " + origin);
    Image img(w, h);
    std::memcpy(img.pixels.data(), data.data() + pos, need);
    return img;
}

} // namespace

void save_ppm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              std::streamsize(img.pixels.size()));
    if (!out) raise(Errc::io_error, "short write to " + path.string());
}

// --- PNG ---------------------------------------------------------------------
// Minimal codec: 8-bit grayscale / RGB / RGBA, non-interlaced. zlib does the
// compression; chunk and filter handling is inline.

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(char(v >> 24));
    out.push_back(char(v >> 16));
    out.push_back(char(v >> 8));
    out.push_back(char(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_chunk(std::string& out, const char type[4], const std::string& payload) {
    put_u32(out, std::uint32_t(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    std::uint32_t crc =
        std::uint32_t(::crc32(0, reinterpret_cast<const Bytef*>(body.data()), uInt(body.size())));
    put_u32(out, crc);
}

std::string zlib_compress(const std::string& raw) {
    uLongf bound = compressBound(uLong(raw.size()));
    std::string out(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), uLong(raw.size()),
                  Z_BEST_SPEED) != Z_OK)
        raise(Errc::io_error, "zlib compress failed");
    out.resize(bound);
    return out;
}

std::vector<std::uint8_t> zlib_decompress(const std::vector<std::uint8_t>& in,
                                          std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf dest_len = uLongf(expected);
    int rc = uncompress(out.data(), &dest_len, in.data(), uLong(in.size()));
    if (rc != Z_OK || dest_len != expected) raise(Errc::schema_error, "corrupt PNG stream");
    return out;
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace

std::string encode_png(const Image& img) {
    std::string raw;
    raw.reserve(std::size_t(img.height) * (1 + std::size_t(img.width) * 3));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back('\0'); // filter 0
        raw.append(reinterpret_cast<const char*>(img.at(0, y)), std::size_t(img.width) * 3);
    }

    std::string ihdr;
    put_u32(ihdr, std::uint32_t(img.width));
    put_u32(ihdr, std::uint32_t(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // no interlace

    std::string out("\x89PNG\r\n\x1a\n", 8);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", zlib_compress(raw));
    append_chunk(out, "IEND", "");
    return out;
}

void save_png(const Image& img, const std::filesystem::path& path) {
    std::string bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) raise(Errc::io_error, "short write to " + path.string());
}

Image decode_png(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    if (len < 8 || std::memcmp(p, "\x89PNG\r\n\x1a\n", 8) != 0)
        raise(Errc::schema_error, "not a PNG");

    int w = 0, h = 0, bit_depth = 0, color_type = 0;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= len) {
        std::uint32_t chunk_len = get_u32(p + pos);
        if (pos + 12 + chunk_len > len) raise(Errc::schema_error, "truncated PNG");
        const char* type = reinterpret_cast<const char*>(p + pos + 4);
        const std::uint8_t* payload = p + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (chunk_len != 13) raise(Errc::schema_error, "bad IHDR");
            w = int(get_u32(payload));
            h = int(get_u32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) raise(Errc::schema_error, "interlaced PNG unsupported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + chunk_len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + chunk_len;
    }
    if (w <= 0 || h <= 0) raise(Errc::schema_error, "bad PNG dimensions");
    if (bit_depth != 8) raise(Errc::schema_error, "only 8-bit PNG supported");
    int channels;
    switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 6: channels = 4; break;
        default: raise(Errc::schema_error, "unsupported PNG color type");
    }

    std::size_t stride = std::size_t(w) * channels;
    auto scanlines = zlib_decompress(idat, (stride + 1) * std::size_t(h));

    std::vector<std::uint8_t> prior(stride, 0);
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        std::uint8_t filter = scanlines[(stride + 1) * y];
        std::uint8_t* row = scanlines.data() + (stride + 1) * y + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= std::size_t(channels) ? row[i - channels] : 0;
            int b = prior[i];
            int c = i >= std::size_t(channels) ? prior[i - channels] : 0;
            int x = row[i];
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += paeth(a, b, c); break;
                default: raise(Errc::schema_error, "bad PNG filter");
            }
            row[i] = std::uint8_t(x);
        }
        std::memcpy(prior.data(), row, stride);
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* s = row + std::size_t(x) * channels;
            std::uint8_t r, g, bch;
            if (channels == 1) {
                r = g = bch = s[0];
            } else {
                r = s[0];
                g = s[1];
                bch = s[2];
            }
            img.set(x, y, {r, g, bch});
        }
    }
    return img;
}

Image load_image(const std::filesystem::path& path) {
    std::string data = read_file(path);
    if (data.size() >= 2 && data[0] == 'P' && data[1] == '6')
        return decode_ppm(data, path.string());
    if (data.size() >= 8 && std::memcmp(data.data(), "\x89PNG\r\n\x1a\n", 8) == 0)
        return decode_png(data.data(), data.size());
    raise(Errc::schema_error, "unknown image format: " + path.string());
}

std::pair<int, int> probe_image_size(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::missing_image, "cannot open " + path.string());
    char head[256];
    in.read(head, sizeof(head));
    std::streamsize got = in.gcount();
    if (got >= 2 && head[0] == 'P' && head[1] == '6') {
        std::string s(head, std::size_t(got));
        std::size_t pos = 2;
        int w = ppm_next_int(s, pos);
        int h = ppm_next_int(s, pos);
        return {w, h};
    }
    if (got >= 24 && std::memcmp(head, "\x89PNG\r\n\x1a\n", 8) == 0) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(head);
        return {int(get_u32(p + 16)), int(get_u32(p + 20))};
    }
    raise(Errc::schema_error, "unknown image format: " + path.string());
}

// --- pixel ops ----------------------------------------------------------------

Image resize_bilinear(const Image& src, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) raise(Errc::dimension_mismatch, "resize target must be >= 1");
    if (out_w == src.width && out_h == src.height) return src;

    Image out(out_w, out_h);
    double sx = double(src.width) / out_w;
    double sy = double(src.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = int(std::floor(fy));
        double ty = fy - y0;
        int y0c = std::clamp(y0, 0, src.height - 1);
        int y1c = std::clamp(y0 + 1, 0, src.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = int(std::floor(fx));
            double tx = fx - x0;
            int x0c = std::clamp(x0, 0, src.width - 1);
            int x1c = std::clamp(x0 + 1, 0, src.width - 1);
            const std::uint8_t* p00 = src.at(x0c, y0c);
            const std::uint8_t* p10 = src.at(x1c, y0c);
            const std::uint8_t* p01 = src.at(x0c, y1c);
            const std::uint8_t* p11 = src.at(x1c, y1c);
            std::uint8_t* q = out.at(x, y);
            for (int c = 0; c < 3; ++c) {
                double top = p00[c] * (1.0 - tx) + p10[c] * tx;
                double bot = p01[c] * (1.0 - tx) + p11[c] * tx;
                double v = top * (1.0 - ty) + bot * ty;
                q[c] = std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

Image gaussian_blur(const Image& src, double sigma) {
    if (sigma <= 0.0) return src;
    int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> kernel(std::size_t(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
        kernel[std::size_t(i + radius)] = v;
        sum += v;
    }
    for (auto& v : kernel) v /= sum;

    // horizontal pass, edge-clamped
    std::vector<double> tmp(std::size_t(src.width) * src.height * 3);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc[3] = {0, 0, 0};
            for (int i = -radius; i <= radius; ++i) {
                int xi = std::clamp(x + i, 0, src.width - 1);
                const std::uint8_t* p = src.at(xi, y);
                double k = kernel[std::size_t(i + radius)];
                acc[0] += k * p[0];
                acc[1] += k * p[1];
                acc[2] += k * p[2];
            }
            double* q = &tmp[3 * (std::size_t(y) * src.width + x)];
            q[0] = acc[0];
            q[1] = acc[1];
            q[2] = acc[2];
        }
    }

    // vertical pass
    Image out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc[3] = {0, 0, 0};
            for (int i = -radius; i <= radius; ++i) {
                int yi = std::clamp(y + i, 0, src.height - 1);
                const double* p = &tmp[3 * (std::size_t(yi) * src.width + x)];
                double k = kernel[std::size_t(i + radius)];
                acc[0] += k * p[0];
                acc[1] += k * p[1];
                acc[2] += k * p[2];
            }
            std::uint8_t* q = out.at(x, y);
            for (int c = 0; c < 3; ++c)
                q[c] = std::uint8_t(std::clamp(std::lround(acc[c]), 0L, 255L));
        }
    }
    return out;
}

Image pad_to_square(const Image& src, std::array<std::uint8_t, 3> fill) {
    if (src.width == src.height) return src;
    int side = std::max(src.width, src.height);
    Image out(side, side, fill);
    int ox = (side - src.width) / 2;
    int oy = (side - src.height) / 2;
    for (int y = 0; y < src.height; ++y)
        std::memcpy(out.at(ox, y + oy), src.at(0, y), std::size_t(src.width) * 3);
    return out;
}

} // namespace refseg
