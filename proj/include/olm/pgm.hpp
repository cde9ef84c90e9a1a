#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "olm/errors.hpp"
#include "olm/grid.hpp"

namespace olm {

// Binary 8-bit PGM: "P5\n<W> <H>\n255\n" followed by W*H bytes.
inline std::vector<std::uint8_t> encode_pgm(const Grid<std::uint8_t>& image) {
  const std::string header =
      "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.begin(), image.end());
  return out;
}

inline Grid<std::uint8_t> decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      ++pos;
      if (++digits > 9) throw FormatError(std::string("PGM ") + what + " too large");
    }
    if (digits == 0) throw FormatError(std::string("PGM header missing ") + what);
    return value;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("not a binary PGM (P5) image");
  }
  pos = 2;
  const std::size_t width = number("width");
  const std::size_t height = number("height");
  const std::size_t maxval = number("maxval");
  if (maxval == 0 || maxval > 255) throw FormatError("only 8-bit PGM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("malformed PGM header");
  ++pos;
  if (bytes.size() - pos < width * height) throw CorruptionError("PGM pixel data truncated");
  std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + width * height));
  return Grid<std::uint8_t>(height, width, std::move(pixels));
}

inline void write_pgm(const Grid<std::uint8_t>& image, const std::filesystem::path& path) {
  const auto bytes = encode_pgm(image);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("write failed for '" + path.string() + "'");
}

inline Grid<std::uint8_t> read_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_pgm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

// Any nonzero pixel is foreground; 0/255 and 0/1 masks both work.
inline Grid<std::uint8_t> to_binary_mask(const Grid<std::uint8_t>& image) {
  Grid<std::uint8_t> mask(image.rows(), image.cols(), 0);
  for (std::size_t p = 0; p < image.size(); ++p) mask[p] = image[p] != 0 ? 1 : 0;
  return mask;
}

inline Grid<std::uint8_t> mask_to_pgm_levels(const Grid<std::uint8_t>& mask) {
  Grid<std::uint8_t> out(mask.rows(), mask.cols(), 0);
  for (std::size_t p = 0; p < mask.size(); ++p) out[p] = mask[p] != 0 ? 255 : 0;
  return out;
}

}  // namespace olm
