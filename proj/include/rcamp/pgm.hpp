#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace rcamp {

/// Writes a binary P5 image, maxval 255. `gray` is row-major with row 0 at
/// the top of the image. `comment` lines are emitted after the magic number.
void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> gray,
               const std::string& comment = {});

}  // namespace rcamp
