#include "gridlag/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "gridlag/errors.hpp"

namespace gridlag::png {

namespace {

struct ErrorSlot {
    char message[256] = {};
};

[[noreturn]] void on_error(png_structp p, png_const_charp msg) {
    auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(p));
    if (slot) std::snprintf(slot->message, sizeof slot->message, "%s", msg);
    png_longjmp(p, 1);
}

void on_warning(png_structp, png_const_charp) {}

void append_bytes(png_structp p, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
    out->insert(out->end(), data, data + n);
}

void no_flush(png_structp) {}

struct ReadCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void read_bytes(png_structp p, png_bytep data, png_size_t n) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(p));
    if (n > cur->size - cur->pos) png_error(p, "unexpected end of PNG data");
    std::memcpy(data, cur->data + cur->pos, n);
    cur->pos += n;
}

// Encodes prepared rows. Only trivially destructible locals live between
// setjmp and the libpng calls.
bool encode_rows(std::vector<std::uint8_t>& out, std::vector<png_bytep>& rows, png_uint_32 width,
                 png_uint_32 height, int bit_depth, int color_type, ErrorSlot& err) {
    png_structp p = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!p) return false;
    png_infop info = png_create_info_struct(p);
    if (!info) {
        png_destroy_write_struct(&p, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(p))) {
        png_destroy_write_struct(&p, &info);
        return false;
    }
    png_set_write_fn(p, &out, append_bytes, no_flush);
    png_set_IHDR(p, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(p, 6);
    png_write_info(p, info);
    png_write_image(p, rows.data());
    png_write_end(p, nullptr);
    png_destroy_write_struct(&p, &info);
    return true;
}

void check_shape(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw DataError("cannot encode an empty image as PNG");
    if (rows > 0x7fffffffu || cols > 0x7fffffffu) throw DataError("image too large for PNG");
}

}  // namespace

std::vector<std::uint8_t> encode_gray16(const CountImage& img) {
    check_shape(img.rows(), img.cols());
    for (std::size_t r = 0; r < img.rows(); ++r)
        for (std::size_t c = 0; c < img.cols(); ++c)
            if (img(r, c) > 0xffffu)
                throw DataError(
                    fmt::format("pixel ({}, {}) = {} exceeds the 16-bit range (65535)", r, c, img(r, c)));

    std::vector<std::uint8_t> buffer(img.size() * 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto v = img.values()[i];
        buffer[2 * i] = static_cast<std::uint8_t>(v >> 8);
        buffer[2 * i + 1] = static_cast<std::uint8_t>(v & 0xffu);
    }
    std::vector<png_bytep> rows(img.rows());
    for (std::size_t r = 0; r < img.rows(); ++r) rows[r] = buffer.data() + r * img.cols() * 2;

    std::vector<std::uint8_t> out;
    ErrorSlot err;
    if (!encode_rows(out, rows, static_cast<png_uint_32>(img.cols()), static_cast<png_uint_32>(img.rows()), 16,
                     PNG_COLOR_TYPE_GRAY, err))
        throw DataError(fmt::format("PNG encode failed: {}", err.message));
    return out;
}

std::vector<std::uint8_t> encode_rgb8(const RgbImage& img) {
    check_shape(img.rows(), img.cols());
    std::vector<std::uint8_t> buffer(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i)
        for (int k = 0; k < 3; ++k) buffer[3 * i + k] = img.values()[i][k];
    std::vector<png_bytep> rows(img.rows());
    for (std::size_t r = 0; r < img.rows(); ++r) rows[r] = buffer.data() + r * img.cols() * 3;
    std::vector<std::uint8_t> out;
    ErrorSlot err;
    if (!encode_rows(out, rows, static_cast<png_uint_32>(img.cols()), static_cast<png_uint_32>(img.rows()), 8,
                     PNG_COLOR_TYPE_RGB, err))
        throw DataError(fmt::format("PNG encode failed: {}", err.message));
    return out;
}

namespace {

struct Header {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
};

bool decode_rows(std::span<const std::uint8_t> bytes, Header& hdr, std::vector<std::uint8_t>& pixels,
                 ErrorSlot& err) {
    ReadCursor cur{bytes.data(), bytes.size(), 0};
    png_structp p = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!p) return false;
    png_infop info = png_create_info_struct(p);
    if (!info) {
        png_destroy_read_struct(&p, nullptr, nullptr);
        return false;
    }
    std::vector<png_bytep>* volatile rows = nullptr;  // survives longjmp
    if (setjmp(png_jmpbuf(p))) {
        delete rows;
        png_destroy_read_struct(&p, &info, nullptr);
        return false;
    }
    png_set_read_fn(p, &cur, read_bytes);
    png_read_info(p, info);
    hdr.width = png_get_image_width(p, info);
    hdr.height = png_get_image_height(p, info);
    hdr.bit_depth = png_get_bit_depth(p, info);
    hdr.color_type = png_get_color_type(p, info);
    if (hdr.color_type != PNG_COLOR_TYPE_GRAY) {
        std::snprintf(err.message, sizeof err.message, "unsupported color type %d (expected grayscale)",
                      hdr.color_type);
        png_destroy_read_struct(&p, &info, nullptr);
        return false;
    }
    if (hdr.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(p);
    png_set_interlace_handling(p);
    png_read_update_info(p, info);
    const std::size_t stride = png_get_rowbytes(p, info);
    pixels.resize(stride * hdr.height);
    rows = new std::vector<png_bytep>(hdr.height);
    for (png_uint_32 r = 0; r < hdr.height; ++r) (*rows)[r] = pixels.data() + r * stride;
    png_read_image(p, rows->data());
    png_read_end(p, nullptr);
    delete rows;
    png_destroy_read_struct(&p, &info, nullptr);
    return true;
}

}  // namespace

CountImage decode_gray16(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw DataError("not a PNG file");
    Header hdr;
    std::vector<std::uint8_t> pixels;
    ErrorSlot err;
    if (!decode_rows(bytes, hdr, pixels, err)) throw DataError(fmt::format("PNG decode failed: {}", err.message));
    CountImage img(hdr.height, hdr.width);
    const bool wide = hdr.bit_depth == 16;
    auto values = img.values();
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = wide ? (std::uint32_t{pixels[2 * i]} << 8) | pixels[2 * i + 1] : std::uint32_t{pixels[i]};
    return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(fmt::format("write failed for {}", path.string()));
}

void write_gray16(const std::filesystem::path& path, const CountImage& img) {
    write_file(path, encode_gray16(img));
}

CountImage read_gray16(const std::filesystem::path& path) {
    try {
        return decode_gray16(read_file(path));
    } catch (const DataError& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_rgb8(const std::filesystem::path& path, const RgbImage& img) { write_file(path, encode_rgb8(img)); }

}  // namespace gridlag::png
