#include "image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "errors.hpp"

namespace p3m {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t to_byte(double v) {
    double x = std::round(v * 255.0);
    if (x < 0.0) x = 0.0;
    if (x > 255.0) x = 255.0;
    return static_cast<uint8_t>(x);
}

// Decodes any 8/16-bit PNG to 8-bit rows with `channels` components (1 or 3).
std::vector<std::vector<uint8_t>> read_png_rows(const std::string& path, int channels,
                                                int* out_h, int* out_w) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");

    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        fail(ErrorCode::Io, "'" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::Internal, "libpng initialization failed");
    }
    std::vector<std::vector<uint8_t>> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::Io, "libpng failed while reading '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);

    if (channels == 3) {
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
        png_set_strip_alpha(png);
    } else {
        if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
            color == PNG_COLOR_TYPE_PALETTE)
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    rows.assign(h, std::vector<uint8_t>(static_cast<size_t>(w) * channels));
    std::vector<png_bytep> row_ptrs(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    *out_h = static_cast<int>(h);
    *out_w = static_cast<int>(w);
    return rows;
}

void write_png_rows(const std::string& path, const std::vector<std::vector<uint8_t>>& rows,
                    int h, int w, int channels) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Internal, "libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Io, "libpng failed while writing '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(rows[y].data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_image(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_png_rows(path, 3, &h, &w);
    Image img(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, y, x) = rows[y][static_cast<size_t>(x) * 3 + ch] / 255.0;
    return img;
}

void write_image(const Image& img, const std::string& path) {
    std::vector<std::vector<uint8_t>> rows(img.h, std::vector<uint8_t>(static_cast<size_t>(img.w) * 3));
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                rows[y][static_cast<size_t>(x) * 3 + ch] = to_byte(img.at(ch, y, x));
    write_png_rows(path, rows, img.h, img.w, 3);
}

AlphaMatte read_matte(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_png_rows(path, 1, &h, &w);
    AlphaMatte m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.at(y, x) = rows[y][x] / 255.0;
    return m;
}

void write_matte(const AlphaMatte& m, const std::string& path) {
    std::vector<std::vector<uint8_t>> rows(m.h, std::vector<uint8_t>(m.w));
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            rows[y][x] = to_byte(m.at(y, x));
    write_png_rows(path, rows, m.h, m.w, 1);
}

RegionMask read_mask(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_png_rows(path, 1, &h, &w);
    RegionMask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.set(y, x, rows[y][x] >= 128);
    return m;
}

void write_mask(const RegionMask& m, const std::string& path) {
    std::vector<std::vector<uint8_t>> rows(m.h, std::vector<uint8_t>(m.w));
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            rows[y][x] = m.at(y, x) ? 255 : 0;
    write_png_rows(path, rows, m.h, m.w, 1);
}

Trimap read_trimap(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_png_rows(path, 1, &h, &w);
    Trimap t(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            uint8_t b = rows[y][x];
            TriClass c = b < 64 ? TriClass::Background
                                : (b < 192 ? TriClass::Transition : TriClass::Foreground);
            t.set(y, x, c);
        }
    }
    return t;
}

void write_trimap(const Trimap& t, const std::string& path) {
    static const uint8_t codes[3] = {0, 128, 255};
    std::vector<std::vector<uint8_t>> rows(t.h, std::vector<uint8_t>(t.w));
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x)
            rows[y][x] = codes[static_cast<int>(t.at(y, x))];
    write_png_rows(path, rows, t.h, t.w, 1);
}

void read_png_size(const std::string& path, int* h, int* w) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
    // 8-byte signature, 8-byte IHDR chunk header, then width/height big-endian
    uint8_t buf[24];
    if (std::fread(buf, 1, 24, fp.get()) != 24 || png_sig_cmp(buf, 0, 8) != 0 ||
        std::memcmp(buf + 12, "IHDR", 4) != 0)
        fail(ErrorCode::Io, "'" + path + "' is not a PNG file");
    *w = (buf[16] << 24) | (buf[17] << 16) | (buf[18] << 8) | buf[19];
    *h = (buf[20] << 24) | (buf[21] << 16) | (buf[22] << 8) | buf[23];
}

}  // namespace p3m
