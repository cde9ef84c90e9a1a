#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "olm/errors.hpp"
#include "olm/grid.hpp"

namespace olm {

/// One layer's C x H x W activation tensor, channel-major then row-major.
///
/// Construction validates the invariants (positive dimensions, matching
/// element count, every value finite and non-negative); a constructed stack
/// is never modified afterwards.
class FeatureStack {
 public:
  FeatureStack(std::string layer_name, std::size_t channels, std::size_t height,
               std::size_t width, std::vector<float> data)
      : layer_name_(std::move(layer_name)),
        channels_(channels),
        height_(height),
        width_(width),
        data_(std::move(data)) {
    if (channels_ == 0 || height_ == 0 || width_ == 0) {
      throw ValidationError("tensor '" + layer_name_ + "': dimensions must be >= 1");
    }
    if (data_.size() != channels_ * height_ * width_) {
      throw ValidationError("tensor '" + layer_name_ + "': element count " +
                            std::to_string(data_.size()) + " != C*H*W " +
                            std::to_string(channels_ * height_ * width_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const float v = data_[i];
      if (!std::isfinite(v) || v < 0.0f) {
        throw ValidationError("tensor '" + layer_name_ + "': invalid value at index " +
                              std::to_string(i) + " (must be finite and >= 0)");
      }
    }
  }

  const std::string& layer_name() const noexcept { return layer_name_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::span<const float> data() const noexcept { return data_; }

  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(data_).subspan(c * plane_size(), plane_size());
  }

  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * height_ + y) * width_ + x];
  }

  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

 private:
  std::string layer_name_;
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<float> data_;
};

// ---------------------------------------------------------------------------
// OLMF container
//
//   "OLMF" | u32 version=1 | u32 tensor_count |
//   per tensor: u32 name_len | name bytes | u32 C | u32 H | u32 W | C*H*W f32
//
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

inline constexpr char kOlmfMagic[4] = {'O', 'L', 'M', 'F'};
inline constexpr std::uint32_t kOlmfVersion = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw CorruptionError(std::string("OLMF truncated while reading ") + what +
                            " at offset " + std::to_string(pos_) + ": need " +
                            std::to_string(n) + " bytes, have " +
                            std::to_string(remaining()));
    }
  }

  std::uint32_t u32(const char* what) {
    require(4, what);
    const auto* p = bytes_.data() + pos_;
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    require(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_olmf(std::span<const FeatureStack> stacks) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), std::begin(kOlmfMagic), std::end(kOlmfMagic));
  detail::put_u32(out, kOlmfVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(stacks.size()));
  for (const auto& s : stacks) {
    detail::put_u32(out, static_cast<std::uint32_t>(s.layer_name().size()));
    out.insert(out.end(), s.layer_name().begin(), s.layer_name().end());
    detail::put_u32(out, static_cast<std::uint32_t>(s.channels()));
    detail::put_u32(out, static_cast<std::uint32_t>(s.height()));
    detail::put_u32(out, static_cast<std::uint32_t>(s.width()));
    for (float v : s.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline std::vector<FeatureStack> decode_olmf(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kOlmfMagic, 4) != 0) {
    throw FormatError("not an OLMF file (bad magic)");
  }
  in.take(4, "magic");
  const std::uint32_t version = in.u32("version");
  if (version != kOlmfVersion) {
    throw FormatError("unsupported OLMF version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32("tensor count");

  std::vector<FeatureStack> stacks;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = in.u32("name length");
    auto name_bytes = in.take(name_len, "tensor name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::uint64_t c = in.u32("channels");
    const std::uint64_t h = in.u32("height");
    const std::uint64_t w = in.u32("width");
    const std::uint64_t n = c * h * w;
    if (n > in.remaining() / 4) {
      throw CorruptionError("OLMF tensor '" + name + "' declares " + std::to_string(n) +
                            " values but only " + std::to_string(in.remaining()) +
                            " bytes remain");
    }
    std::vector<float> data(n);
    for (auto& v : data) v = std::bit_cast<float>(in.u32("tensor data"));
    stacks.emplace_back(std::move(name), c, h, w, std::move(data));
  }
  if (in.remaining() != 0) {
    throw CorruptionError("OLMF has " + std::to_string(in.remaining()) +
                          " trailing bytes after the last tensor");
  }
  return stacks;
}

inline std::vector<FeatureStack> read_olmf(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_olmf(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Stacks are validated at construction, so nothing invalid reaches the file.
inline void write_olmf(std::span<const FeatureStack> stacks, const std::filesystem::path& path) {
  const auto bytes = encode_olmf(stacks);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  file.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

/// Bilinear resize of one row-major plane, half-pixel centers
/// (align_corners = false): src = (dst + 0.5) * in/out - 0.5, clamped to
/// [0, in - 1]. Each output is clamped to the range of its four source
/// neighbours so rounding can never leave the source range.
template <typename T>
std::vector<T> resize_plane_bilinear(std::span<const T> src, std::size_t src_h,
                                     std::size_t src_w, std::size_t dst_h,
                                     std::size_t dst_w) {
  if (dst_h == 0 || dst_w == 0) throw ArgumentError("resize target must be >= 1x1");
  if (src.size() != src_h * src_w) throw DimensionError("plane size mismatch");

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> result(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
      double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(s);
      const std::size_t hi = std::min(lo + 1, in - 1);
      result[d] = {lo, hi, s - static_cast<double>(lo)};
    }
    return result;
  };
  const auto ty = taps(src_h, dst_h);
  const auto tx = taps(src_w, dst_w);

  std::vector<T> dst(dst_h * dst_w);
  for (std::size_t y = 0; y < dst_h; ++y) {
    const auto& [y0, y1, fy] = ty[y];
    for (std::size_t x = 0; x < dst_w; ++x) {
      const auto& [x0, x1, fx] = tx[x];
      const double a = src[y0 * src_w + x0];
      const double b = src[y0 * src_w + x1];
      const double c = src[y1 * src_w + x0];
      const double d = src[y1 * src_w + x1];
      const double top = a + (b - a) * fx;
      const double bottom = c + (d - c) * fx;
      double v = top + (bottom - top) * fy;
      v = std::clamp(v, std::min({a, b, c, d}), std::max({a, b, c, d}));
      dst[y * dst_w + x] = static_cast<T>(v);
    }
  }
  return dst;
}

template <typename T>
Grid<T> resize_bilinear(const Grid<T>& grid, std::size_t dst_h, std::size_t dst_w) {
  return Grid<T>(dst_h, dst_w,
                 resize_plane_bilinear<T>(grid.values(), grid.rows(), grid.cols(), dst_h, dst_w));
}

inline FeatureStack resize_bilinear(const FeatureStack& stack, std::size_t target_h,
                                    std::size_t target_w) {
  if (target_h == 0 || target_w == 0) throw ArgumentError("resize target must be >= 1x1");
  std::vector<float> out;
  out.reserve(stack.channels() * target_h * target_w);
  for (std::size_t c = 0; c < stack.channels(); ++c) {
    auto plane = resize_plane_bilinear<float>(stack.channel(c), stack.height(), stack.width(),
                                              target_h, target_w);
    out.insert(out.end(), plane.begin(), plane.end());
  }
  return FeatureStack(stack.layer_name(), stack.channels(), target_h, target_w, std::move(out));
}

/// Channel concatenation, a's channels first. The merged name is "a+b".
inline FeatureStack merge_stacks(const FeatureStack& a, const FeatureStack& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    std::ostringstream msg;
    msg << "cannot merge '" << a.layer_name() << "' (" << a.height() << "x" << a.width()
        << ") with '" << b.layer_name() << "' (" << b.height() << "x" << b.width() << ")";
    throw DimensionError(msg.str());
  }
  std::vector<float> data;
  data.reserve(a.data().size() + b.data().size());
  data.insert(data.end(), a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return FeatureStack(a.layer_name() + "+" + b.layer_name(), a.channels() + b.channels(),
                      a.height(), a.width(), std::move(data));
}

}  // namespace olm
