#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "espresso/tensor/tensor.hpp"

namespace espresso {

/// Frozen-encoder output for one clip: T frames x P patches x D_v channels.
class FeatureVideo {
 public:
  FeatureVideo() = default;
  /// Throws ShapeError unless `features` has rank 3.
  explicit FeatureVideo(Tensor features);

  std::size_t frames() const { return features_.dim(0); }
  std::size_t patches() const { return features_.dim(1); }
  std::size_t width() const { return features_.dim(2); }

  const Tensor& features() const noexcept { return features_; }
  Tensor& features() noexcept { return features_; }

  /// Frames [begin, end) as a new video.
  FeatureVideo frame_range(std::size_t begin, std::size_t end) const;

  friend bool operator==(const FeatureVideo&, const FeatureVideo&) = default;

 private:
  Tensor features_;
};

/// Half-open frame ranges [floor(sT/n), floor((s+1)T/n)) for s in [0, n).
/// Throws std::invalid_argument when n == 0 or T < n.
std::vector<std::pair<std::size_t, std::size_t>> segment_bounds(std::size_t frames,
                                                                 std::size_t segments);

std::vector<FeatureVideo> split_segments(const FeatureVideo& video, std::size_t segments);

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout: "ESPR", version 0x01, T/P/D_v as u32 LE, then T*P*D_v
// float32 LE values in (frame, patch, channel) order.
void write_feature_video(std::ostream& out, const FeatureVideo& video);
FeatureVideo read_feature_video(std::istream& in);
void write_feature_video(const std::filesystem::path& path, const FeatureVideo& video);
FeatureVideo read_feature_video(const std::filesystem::path& path);

}  // namespace espresso
