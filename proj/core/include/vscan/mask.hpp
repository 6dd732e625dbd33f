#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vscan/errors.hpp"

namespace vscan {

/// Binary segmentation mask, row-major. x indexes columns (lateral pixel u),
/// y indexes rows (axial pixel v).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * height, 0) {
    if (width < 0 || height < 0) throw DomainError("BinaryMask: negative size");
  }

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const { return bits_[idx(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[idx(x, y)] = v ? 1 : 0; }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  std::size_t count_set() const;

  bool operator==(const BinaryMask& other) const = default;

 private:
  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// One connected blob detected in a mask.
struct Candidate {
  Eigen::Vector2d centroid_px = Eigen::Vector2d::Zero();  // (u, v), pixel centers
  std::vector<Eigen::Vector2i> boundary_px;                // outer boundary, (x, y)
  double area_px2 = 0.0;
};

/// Dice coefficient 2|G∩S| / (|G|+|S|). Both masks empty -> 1.0.
/// Throws DomainError on dimension mismatch.
double dice(const BinaryMask& g, const BinaryMask& s);

/// 4-connected components with area >= min_area_px2, outer boundary traced
/// Moore-style, sorted by area descending. Empty mask -> empty list.
std::vector<Candidate> extract_candidates(const BinaryMask& mask, double min_area_px2);

/// Nearest-centroid tracking. With a previous centroid, pick the candidate
/// minimizing centroid distance (ties by larger area); without one, pick the
/// largest-area candidate. Empty candidate list -> nullopt.
std::optional<Candidate> track_nearest(
    const std::optional<Eigen::Vector2d>& previous_centroid_px,
    const std::vector<Candidate>& candidates);

/// Rasterize closed boundary polygons (pixel coordinates) into a filled mask.
/// Even-odd scanline fill over pixel centers; boundary vertices are stamped too.
BinaryMask rasterize_polygons(const std::vector<std::vector<Eigen::Vector2d>>& rings,
                              int width, int height);

/// Morphological opening (erosion then dilation) with a 3x3 cross element:
/// removes specks and pixel-wide spikes while leaving blobs intact.
BinaryMask morphological_open(const BinaryMask& mask);

/// PGM (P5, 8-bit) import/export for test fixtures; set pixels are 255.
void save_pgm(const BinaryMask& mask, const std::string& path);
BinaryMask load_pgm(const std::string& path);

}  // namespace vscan
