#include "groundmix/png_io.hpp"

#include <png.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace groundmix {

// ---------------------------------------------------------------------------
// Reading (libpng)
// ---------------------------------------------------------------------------

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

}  // namespace

Image read_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    std::array<unsigned char, 8> sig{};
    if (std::fread(sig.data(), 1, sig.size(), fp.get()) != sig.size() ||
        png_sig_cmp(sig.data(), 0, sig.size()) != 0)
        throw ParseError("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }

    Image out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("malformed PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, static_cast<int>(sig.size()));
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.data.resize(static_cast<std::size_t>(out.width) * out.height * 3);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.px(0, y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// Writing (self-contained encoder: store-only deflate, fixed layout)
// ---------------------------------------------------------------------------

namespace {

std::uint32_t crc32_update(std::uint32_t crc, const std::uint8_t* buf, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    crc = ~crc;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ buf[i]) & 0xffu] ^ (crc >> 8);
    return ~crc;
}

void put_u32_be(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[5],
                  const std::vector<std::uint8_t>& data) {
    put_u32_be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const std::uint32_t crc = crc32_update(0, out.data() + type_pos, 4 + data.size());
    put_u32_be(out, crc);
}

std::vector<std::uint8_t> zlib_store(const std::vector<std::uint8_t>& raw) {
    std::vector<std::uint8_t> z;
    z.reserve(raw.size() + raw.size() / 65535 * 5 + 16);
    z.push_back(0x78);  // deflate, 32k window
    z.push_back(0x01);  // no dict, checksum-valid flags
    std::size_t pos = 0;
    do {
        const std::size_t n = std::min<std::size_t>(raw.size() - pos, 65535);
        const bool final = pos + n == raw.size();
        z.push_back(final ? 0x01 : 0x00);  // BFINAL, BTYPE=00 (stored)
        z.push_back(static_cast<std::uint8_t>(n & 0xff));
        z.push_back(static_cast<std::uint8_t>(n >> 8));
        z.push_back(static_cast<std::uint8_t>(~n & 0xff));
        z.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + pos, raw.begin() + pos + n);
        pos += n;
    } while (pos < raw.size());
    // adler32 of the uncompressed stream
    std::uint32_t a = 1, b = 0;
    for (std::uint8_t byte : raw) {
        a = (a + byte) % 65521u;
        b = (b + a) % 65521u;
    }
    put_u32_be(z, (b << 16) | a);
    return z;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.empty()) throw IoError("encode_png: empty image");
    static const std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<std::uint8_t> out(kSig, kSig + 8);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // no interlace
    append_chunk(out, "IHDR", ihdr);

    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(img.height) * (1 + static_cast<std::size_t>(img.width) * 3));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        const std::uint8_t* row = img.px(0, y);
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(img.width) * 3);
    }
    append_chunk(out, "IDAT", zlib_store(raw));
    append_chunk(out, "IEND", {});
    return out;
}

void write_png(const Image& img, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = encode_png(img);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace groundmix
