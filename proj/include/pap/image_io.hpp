#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pap/image.hpp"

namespace pap::io {

/// Reads PNG or JPEG, chosen by magic bytes. Gray+alpha and RGBA inputs are
/// reduced to 1 and 3 channels respectively.
Image read_image(const std::filesystem::path& path);
Image decode_image(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const Image& img);
std::vector<std::uint8_t> encode_png(const Image& img, int compression_level = 1);

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace pap::io
