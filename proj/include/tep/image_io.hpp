#pragma once

#include <png.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tep/errors.hpp"
#include "tep/image.hpp"

namespace tep {

namespace detail {

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

/// Decodes a PNG into interleaved channel samples scaled to [0,255].
/// Returns the number of color channels (1 or 3).
inline int read_png_samples(const std::string& path, int& width, int& height,
                            std::vector<double>& samples) {
    PngReadCloser h;
    h.fp = std::fopen(path.c_str(), "rb");
    if (!h.fp) throw IoError("cannot open file: " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, h.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw IoError("not a PNG file: " + path);

    h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!h.png) throw IoError("libpng init failed");
    h.info = png_create_info_struct(h.png);
    if (!h.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(h.png))) throw IoError("PNG decode failed: " + path);

    png_init_io(h.png, h.fp);
    png_set_sig_bytes(h.png, 8);
    png_read_info(h.png, h.info);

    width = static_cast<int>(png_get_image_width(h.png, h.info));
    height = static_cast<int>(png_get_image_height(h.png, h.info));
    if (width <= 0 || height <= 0) throw IoError("zero-size image: " + path);

    int color_type = png_get_color_type(h.png, h.info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(h.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(h.png, h.info) < 8)
        png_set_expand_gray_1_2_4_to_8(h.png);
    if (png_get_valid(h.png, h.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(h.png);
    png_set_strip_alpha(h.png);
    png_set_interlace_handling(h.png);
    png_read_update_info(h.png, h.info);

    const int depth = png_get_bit_depth(h.png, h.info);
    const int channels = png_get_channels(h.png, h.info);
    if (channels != 1 && channels != 3)
        throw IoError("unsupported PNG channel layout: " + path);

    const std::size_t row_bytes = png_get_rowbytes(h.png, h.info);
    std::vector<unsigned char> raw(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + row_bytes * y;
    png_read_image(h.png, rows.data());
    png_read_end(h.png, nullptr);

    samples.resize(static_cast<std::size_t>(width) * height * channels);
    std::size_t k = 0;
    for (int y = 0; y < height; ++y) {
        const unsigned char* row = rows[y];
        for (int i = 0; i < width * channels; ++i) {
            if (depth == 16) {
                // network byte order; rescale 0..65535 to 0..255
                double v = row[2 * i] * 256.0 + row[2 * i + 1];
                samples[k++] = v / 257.0;
            } else {
                samples[k++] = row[i];
            }
        }
    }
    return channels;
}

/// Reads a PNM (P2/P3/P5/P6) into interleaved samples scaled to [0,255].
inline int read_pnm_samples(const std::string& path, int& width, int& height,
                            std::vector<double>& samples) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);

    auto next_token = [&in, &path]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
            } else if (!std::isspace(c)) {
                tok.push_back(static_cast<char>(c));
                while ((c = in.get()) != EOF && !std::isspace(c))
                    tok.push_back(static_cast<char>(c));
                return tok;
            }
        }
        throw IoError("truncated PNM header: " + path);
    };

    const std::string magic = next_token();
    int channels;
    bool ascii;
    if (magic == "P2") { channels = 1; ascii = true; }
    else if (magic == "P3") { channels = 3; ascii = true; }
    else if (magic == "P5") { channels = 1; ascii = false; }
    else if (magic == "P6") { channels = 3; ascii = false; }
    else throw IoError("unsupported PNM magic '" + magic + "': " + path);

    width = std::stoi(next_token());
    height = std::stoi(next_token());
    const long maxval = std::stol(next_token());
    if (width <= 0 || height <= 0) throw IoError("zero-size image: " + path);
    if (maxval <= 0 || maxval > 65535) throw IoError("bad PNM maxval: " + path);

    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    samples.resize(n);
    const double scale = 255.0 / static_cast<double>(maxval);

    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            long v = std::stol(next_token());
            samples[i] = v * scale;
        }
    } else {
        // binary payload starts right after the single whitespace ending the header
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(n * bytes);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw IoError("truncated PNM payload: " + path);
        for (std::size_t i = 0; i < n; ++i) {
            long v = bytes == 2 ? raw[2 * i] * 256L + raw[2 * i + 1] : raw[i];
            samples[i] = v * scale;
        }
    }
    return channels;
}

inline bool has_png_signature(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    return in.gcount() == 8 && !png_sig_cmp(sig, 0, 8);
}

} // namespace detail

/// Loads a raster (PNG or PNM) as a grayscale grid in [0,255]. Color inputs
/// are reduced to brightness, the Euclidean norm of the RGB vector; the
/// grid's nominal_range records 255 (gray) or 255*sqrt(3) (color brightness).
inline ImageGrid load_image(const std::string& path) {
    int w = 0, h = 0, channels;
    std::vector<double> samples;
    if (detail::has_png_signature(path))
        channels = detail::read_png_samples(path, w, h, samples);
    else
        channels = detail::read_pnm_samples(path, w, h, samples);

    ImageGrid img(w, h);
    if (channels == 1) {
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = samples[i];
        img.nominal_range = 255.0;
    } else {
        for (std::size_t i = 0; i < img.size(); ++i) {
            const double r = samples[3 * i], g = samples[3 * i + 1], b = samples[3 * i + 2];
            img[i] = std::sqrt(r * r + g * g + b * b);
        }
        img.nominal_range = 255.0 * std::sqrt(3.0);
    }
    if (!img.all_finite()) throw IoError("non-finite pixel values: " + path);
    return img;
}

/// Loads a raster as a three-channel color image in [0,255] per channel.
/// Grayscale inputs are replicated across channels.
inline ColorImage load_color(const std::string& path) {
    int w = 0, h = 0, channels;
    std::vector<double> samples;
    if (detail::has_png_signature(path))
        channels = detail::read_png_samples(path, w, h, samples);
    else
        channels = detail::read_pnm_samples(path, w, h, samples);

    ColorImage img{ImageGrid(w, h), ImageGrid(w, h), ImageGrid(w, h)};
    for (std::size_t i = 0; i < img.r.size(); ++i) {
        if (channels == 1) {
            img.r[i] = img.g[i] = img.b[i] = samples[i];
        } else {
            img.r[i] = samples[3 * i];
            img.g[i] = samples[3 * i + 1];
            img.b[i] = samples[3 * i + 2];
        }
    }
    return img;
}

/// Writes an 8-bit grayscale PNG; values are clamped to [0,255] and rounded.
inline void write_png_gray8(const ImageGrid& img, const std::string& path) {
    detail::PngWriteCloser h;
    h.fp = std::fopen(path.c_str(), "wb");
    if (!h.fp) throw IoError("cannot create file: " + path);
    h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!h.png) throw IoError("libpng init failed");
    h.info = png_create_info_struct(h.png);
    if (!h.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(h.png))) throw IoError("PNG encode failed: " + path);

    png_init_io(h.png, h.fp);
    png_set_IHDR(h.png, h.info, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(h.png, h.info);

    std::vector<unsigned char> row(img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double v = std::floor(img.at(x, y) + 0.5);
            row[x] = static_cast<unsigned char>(v < 0 ? 0 : (v > 255 ? 255 : v));
        }
        png_write_row(h.png, row.data());
    }
    png_write_end(h.png, nullptr);
}

/// Writes an 8-bit RGB PNG from three channels in [0,255].
inline void write_png_color8(const ColorImage& img, const std::string& path) {
    detail::PngWriteCloser h;
    h.fp = std::fopen(path.c_str(), "wb");
    if (!h.fp) throw IoError("cannot create file: " + path);
    h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!h.png) throw IoError("libpng init failed");
    h.info = png_create_info_struct(h.png);
    if (!h.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(h.png))) throw IoError("PNG encode failed: " + path);

    png_init_io(h.png, h.fp);
    png_set_IHDR(h.png, h.info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(h.png, h.info);

    std::vector<unsigned char> row(static_cast<std::size_t>(img.width()) * 3);
    auto quantize = [](double v) {
        v = std::floor(v + 0.5);
        return static_cast<unsigned char>(v < 0 ? 0 : (v > 255 ? 255 : v));
    };
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            row[3 * x + 0] = quantize(img.r.at(x, y));
            row[3 * x + 1] = quantize(img.g.at(x, y));
            row[3 * x + 2] = quantize(img.b.at(x, y));
        }
        png_write_row(h.png, row.data());
    }
    png_write_end(h.png, nullptr);
}

enum class MapMode { raw_float, normalized_8bit };

/// Saves a scalar map. raw_float writes the exact grid — ASCII header
/// "TEPF1 <width> <height>\n" followed by little-endian 64-bit floats in
/// row-major order. normalized_8bit maps [min,max] to [0,255] and writes a
/// PNG. Returns false (and writes an all-zero PNG) when the map has a
/// degenerate range in 8-bit mode.
inline bool save_scalar_map(const ImageGrid& map, const std::string& path, MapMode mode) {
    if (!map.all_finite()) throw NumericError("scalar map contains non-finite values");

    if (mode == MapMode::raw_float) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot create file: " + path);
        out << "TEPF1 " << map.width() << " " << map.height() << "\n";
        for (double v : map.data())
            detail::write_u64_le(out, std::bit_cast<std::uint64_t>(v));
        if (!out) throw IoError("write failed: " + path);
        return true;
    }

    double lo = map[0], hi = map[0];
    for (double v : map.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    ImageGrid out8(map.width(), map.height());
    if (hi <= lo) {
        std::cerr << "warning: degenerate value range, writing all-zero image: "
                  << path << "\n";
        write_png_gray8(out8, path);
        return false;
    }
    for (std::size_t i = 0; i < map.size(); ++i)
        out8[i] = (map[i] - lo) / (hi - lo) * 255.0;
    write_png_gray8(out8, path);
    return true;
}

/// Loads a raw-float scalar map written by save_scalar_map.
inline ImageGrid load_scalar_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::string magic;
    int w = 0, h = 0;
    in >> magic >> w >> h;
    if (magic != "TEPF1" || w <= 0 || h <= 0)
        throw IoError("not a raw-float grid: " + path);
    in.get(); // consume the header newline
    ImageGrid map(w, h);
    for (std::size_t i = 0; i < map.size(); ++i)
        map[i] = std::bit_cast<double>(detail::read_u64_le(in));
    if (!in) throw IoError("truncated raw-float grid: " + path);
    return map;
}

} // namespace tep
