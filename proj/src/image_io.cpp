#include "adgs/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace adgs {

namespace {

void write_pfm_raw(const std::string& path, int h, int w, int channels, const float* data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (channels == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n" << "-1.0\n";
    // Bottom-up scanlines per the PFM convention.
    for (int r = h - 1; r >= 0; --r)
        out.write(reinterpret_cast<const char*>(data + static_cast<size_t>(r) * w * channels),
                  static_cast<std::streamsize>(sizeof(float)) * w * channels);
    if (!out) throw std::runtime_error("short write to " + path);
}

std::vector<float> read_pfm_raw(const std::string& path, int& h, int& w, int& channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string magic;
    double scale;
    in >> magic >> w >> h >> scale;
    if (magic == "PF") channels = 3;
    else if (magic == "Pf") channels = 1;
    else throw std::runtime_error(path + ": not a PFM file");
    if (w < 1 || h < 1) throw std::runtime_error(path + ": bad PFM dimensions");
    if (scale > 0) throw std::runtime_error(path + ": big-endian PFM not supported");
    in.get();  // single whitespace after the header
    std::vector<float> data(static_cast<size_t>(h) * w * channels);
    for (int r = h - 1; r >= 0; --r)
        in.read(reinterpret_cast<char*>(data.data() + static_cast<size_t>(r) * w * channels),
                static_cast<std::streamsize>(sizeof(float)) * w * channels);
    if (!in) throw std::runtime_error(path + ": truncated PFM data");
    return data;
}

}  // namespace

void write_pfm(const std::string& path, const Image& img) {
    std::vector<float> data(static_cast<size_t>(img.height) * img.width * 3);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch)
                data[(static_cast<size_t>(r) * img.width + c) * 3 + ch] =
                    static_cast<float>(img.ch[ch](r, c));
    write_pfm_raw(path, img.height, img.width, 3, data.data());
}

void write_pfm_depth(const std::string& path, const DepthMap& depth) {
    const int h = static_cast<int>(depth.rows()), w = static_cast<int>(depth.cols());
    std::vector<float> data(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) data[static_cast<size_t>(r) * w + c] = static_cast<float>(depth(r, c));
    write_pfm_raw(path, h, w, 1, data.data());
}

Image read_pfm(const std::string& path) {
    int h, w, ch;
    auto data = read_pfm_raw(path, h, w, ch);
    if (ch != 3) throw std::runtime_error(path + ": expected a color PFM");
    Image img(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int k = 0; k < 3; ++k)
                img.ch[k](r, c) = data[(static_cast<size_t>(r) * w + c) * 3 + k];
    return img;
}

DepthMap read_pfm_depth(const std::string& path) {
    int h, w, ch;
    auto data = read_pfm_raw(path, h, w, ch);
    if (ch != 1) throw std::runtime_error(path + ": expected a grayscale PFM");
    DepthMap d(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) d(r, c) = data[static_cast<size_t>(r) * w + c];
    return d;
}

void write_png(const std::string& path, const Image& img) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng failure writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<size_t>(img.width) * 3);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                const double v = std::clamp(img.ch[ch](r, c), 0.0, 1.0);
                row[static_cast<size_t>(c) * 3 + ch] = static_cast<png_byte>(std::lround(v * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot read " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng failure reading " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    Image img(h, w);
    std::vector<png_byte> row(static_cast<size_t>(w) * 3);
    for (int r = 0; r < h; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < 3; ++ch)
                img.ch[ch](r, c) = row[static_cast<size_t>(c) * 3 + ch] / 255.0;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image read_image(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pfm") == 0) return read_pfm(path);
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0) return read_png(path);
    throw std::runtime_error("unsupported image extension: " + path);
}

void write_image(const std::string& path, const Image& img) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pfm") == 0) return write_pfm(path, img);
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0) return write_png(path, img);
    throw std::runtime_error("unsupported image extension: " + path);
}

}  // namespace adgs
