#include "vscan/cloud_buffer.hpp"

#include <Eigen/SVD>
#include <cstdio>
#include <fstream>

namespace vscan {

bool cloud_is_planar(const std::vector<Vec3>& points_mm, double rel_tol) {
  if (points_mm.size() < 4) return true;
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points_mm) mean += p;
  mean /= static_cast<double>(points_mm.size());
  Eigen::MatrixXd centered(points_mm.size(), 3);
  for (std::size_t i = 0; i < points_mm.size(); ++i)
    centered.row(static_cast<Eigen::Index>(i)) = (points_mm[i] - mean).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  const double largest = sv(0);
  const double smallest = sv(sv.size() - 1);
  if (largest == 0.0) return true;
  return smallest < rel_tol * largest;
}

void CloudRingBuffer::push(const BoundaryCloud& cloud) {
  if (cloud.empty())
    throw EmptyInputError("CloudRingBuffer::push: refusing empty cloud");
  std::lock_guard lock(mutex_);
  slots_.push_back(cloud);
  while (slots_.size() > capacity_) slots_.pop_front();
}

std::size_t CloudRingBuffer::size() const {
  std::lock_guard lock(mutex_);
  return slots_.size();
}

bool CloudRingBuffer::is_full() const {
  std::lock_guard lock(mutex_);
  return slots_.size() == capacity_;
}

std::vector<Vec3> CloudRingBuffer::spread_view() const {
  std::lock_guard lock(mutex_);
  if (slots_.empty()) throw EmptyBufferError("CloudRingBuffer::spread_view: buffer empty");
  const Vec3 anchor = slots_.front().centroid_mm;  // C_1: oldest cloud
  std::vector<Vec3> out;
  std::size_t total = 0;
  for (const auto& c : slots_) total += c.size();
  out.reserve(total);
  for (const auto& cloud : slots_) {
    const Vec3 shift = mu_ * (cloud.centroid_mm - anchor);
    for (const auto& p : cloud.points_mm) out.push_back(p + shift);
  }
  return out;
}

std::vector<Vec3> CloudRingBuffer::raw_view() const {
  std::lock_guard lock(mutex_);
  if (slots_.empty()) throw EmptyBufferError("CloudRingBuffer::raw_view: buffer empty");
  std::vector<Vec3> out;
  std::size_t total = 0;
  for (const auto& c : slots_) total += c.size();
  out.reserve(total);
  for (const auto& cloud : slots_)
    out.insert(out.end(), cloud.points_mm.begin(), cloud.points_mm.end());
  return out;
}

bool CloudRingBuffer::spread_degenerate(double rel_tol) const {
  return cloud_is_planar(spread_view(), rel_tol);
}

double CloudRingBuffer::centroid_span_mm() const {
  std::lock_guard lock(mutex_);
  if (slots_.empty()) return 0.0;
  const Vec3 anchor = slots_.front().centroid_mm;
  double span = 0.0;
  for (const auto& c : slots_)
    span = std::max(span, (c.centroid_mm - anchor).norm());
  return span;
}

std::vector<BoundaryCloud> CloudRingBuffer::snapshot() const {
  std::lock_guard lock(mutex_);
  return {slots_.begin(), slots_.end()};
}

void CloudRingBuffer::clear() {
  std::lock_guard lock(mutex_);
  slots_.clear();
}

void save_ply(const std::vector<Vec3>& points_mm, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DomainError("save_ply: cannot open " + path);
  f << "ply\nformat ascii 1.0\nelement vertex " << points_mm.size()
    << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  char line[96];
  for (const auto& p : points_mm) {
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f\n", p.x(), p.y(), p.z());
    f << line;
  }
}

}  // namespace vscan
