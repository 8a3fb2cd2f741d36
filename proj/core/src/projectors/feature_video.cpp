#include "espresso/projectors/feature_video.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "espresso/tensor/kernels.hpp"

namespace espresso {

FeatureVideo::FeatureVideo(Tensor features) : features_(std::move(features)) {
  if (features_.rank() != 3) {
    throw ShapeError("feature video must be [T x P x D_v], got " + to_string(features_.shape()));
  }
}

FeatureVideo FeatureVideo::frame_range(std::size_t begin, std::size_t end) const {
  return FeatureVideo(kernels::slice_axis(features_, 0, begin, end));
}

std::vector<std::pair<std::size_t, std::size_t>> segment_bounds(std::size_t frames,
                                                                 std::size_t segments) {
  if (segments == 0) throw std::invalid_argument("n: segment count must be >= 1");
  if (frames < segments) {
    throw std::invalid_argument("n: cannot split " + std::to_string(frames) + " frames into " +
                                std::to_string(segments) + " segments (T < n)");
  }
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  bounds.reserve(segments);
  for (std::size_t s = 0; s < segments; ++s) {
    bounds.emplace_back(s * frames / segments, (s + 1) * frames / segments);
  }
  return bounds;
}

std::vector<FeatureVideo> split_segments(const FeatureVideo& video, std::size_t segments) {
  std::vector<FeatureVideo> out;
  for (auto [begin, end] : segment_bounds(video.frames(), segments)) {
    out.push_back(video.frame_range(begin, end));
  }
  return out;
}

namespace {

constexpr std::array<char, 4> kMagic{'E', 'S', 'P', 'R'};
constexpr std::uint8_t kVersion = 0x01;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                  static_cast<char>((v >> 16) & 0xFF),
                                  static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!in) throw FormatError("feature video truncated in header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("feature video extent exceeds 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_feature_video(std::ostream& out, const FeatureVideo& video) {
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kVersion));
  put_u32(out, checked_u32(video.frames()));
  put_u32(out, checked_u32(video.patches()));
  put_u32(out, checked_u32(video.width()));
  for (double v : video.features().data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw FormatError("failed writing feature video");
}

FeatureVideo read_feature_video(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("feature video: bad magic bytes");
  const int version = in.get();
  if (!in || version != kVersion) {
    throw FormatError("feature video: unsupported version " + std::to_string(version));
  }
  const std::size_t t = get_u32(in);
  const std::size_t p = get_u32(in);
  const std::size_t d = get_u32(in);
  if (t == 0 || p == 0 || d == 0) throw FormatError("feature video: zero extent in header");
  Tensor features({t, p, d});
  for (auto& v : features.data()) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), b.size());
    if (!in) throw FormatError("feature video truncated in payload");
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                               (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    v = static_cast<double>(std::bit_cast<float>(bits));
  }
  return FeatureVideo(std::move(features));
}

void write_feature_video(const std::filesystem::path& path, const FeatureVideo& video) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_feature_video(out, video);
}

FeatureVideo read_feature_video(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_feature_video(in);
}

}  // namespace espresso
