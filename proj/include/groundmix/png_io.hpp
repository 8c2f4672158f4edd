#pragma once

#include <filesystem>

#include "groundmix/image.hpp"

namespace groundmix {

/// Decodes a PNG file to 8-bit RGB (palette, gray, 16-bit and alpha variants
/// are converted). Throws IoError on missing/unreadable files, ParseError on
/// malformed data.
Image read_png(const std::filesystem::path& path);

/// Encodes 8-bit RGB PNG. The encoder always emits the same bytes for the
/// same pixels (fixed headers, store-only deflate), so outputs are comparable
/// across runs and machines. Throws IoError.
void write_png(const Image& img, const std::filesystem::path& path);

/// In-memory variant of write_png.
std::vector<std::uint8_t> encode_png(const Image& img);

}  // namespace groundmix
