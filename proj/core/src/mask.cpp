#include "vscan/mask.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

namespace vscan {

std::size_t BinaryMask::count_set() const {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

double dice(const BinaryMask& g, const BinaryMask& s) {
  if (g.width() != s.width() || g.height() != s.height())
    throw DomainError("dice: mask dimensions differ");
  std::size_t inter = 0, ng = 0, ns = 0;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      const bool a = g.at(x, y);
      const bool b = s.at(x, y);
      ng += a;
      ns += b;
      inter += (a && b);
    }
  }
  if (ng + ns == 0) return 1.0;  // both empty: total overlap by convention
  return 2.0 * static_cast<double>(inter) / static_cast<double>(ng + ns);
}

namespace {

// Moore neighborhood, clockwise starting east.
constexpr std::array<std::array<int, 2>, 8> kMoore = {
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

std::vector<Eigen::Vector2i> trace_boundary(const BinaryMask& mask,
                                            const std::vector<std::uint8_t>& member,
                                            int start_x, int start_y) {
  auto inside = [&](int x, int y) {
    return mask.in_bounds(x, y) &&
           member[static_cast<std::size_t>(y) * mask.width() + x] != 0;
  };

  std::vector<Eigen::Vector2i> boundary;
  int cx = start_x, cy = start_y;
  int backtrack = 6;  // came from the west scan, start looking north-ish
  boundary.emplace_back(cx, cy);

  // Single-pixel blob.
  bool isolated = true;
  for (const auto& d : kMoore)
    if (inside(cx + d[0], cy + d[1])) isolated = false;
  if (isolated) return boundary;

  const int sx = cx, sy = cy;
  int guard = 0;
  const int guard_max = 8 * mask.width() * mask.height();
  do {
    bool advanced = false;
    for (int k = 0; k < 8; ++k) {
      const int dir = (backtrack + 1 + k) % 8;
      const int nx = cx + kMoore[dir][0];
      const int ny = cy + kMoore[dir][1];
      if (inside(nx, ny)) {
        backtrack = (dir + 4) % 8;
        cx = nx;
        cy = ny;
        advanced = true;
        break;
      }
    }
    if (!advanced) break;
    if (cx == sx && cy == sy) break;
    boundary.emplace_back(cx, cy);
  } while (++guard < guard_max);

  return boundary;
}

}  // namespace

std::vector<Candidate> extract_candidates(const BinaryMask& mask, double min_area_px2) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<Candidate> out;
  std::vector<int> stack;
  std::vector<std::uint8_t> member(static_cast<std::size_t>(w) * h, 0);

  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
      if (!mask.at(x0, y0) || visited[i0]) continue;

      std::fill(member.begin(), member.end(), 0);
      stack.clear();
      stack.push_back(static_cast<int>(i0));
      visited[i0] = 1;
      member[i0] = 1;
      double sum_u = 0.0, sum_v = 0.0;
      std::size_t area = 0;

      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int x = i % w, y = i / w;
        ++area;
        sum_u += x + 0.5;  // pixel centers
        sum_v += y + 0.5;
        constexpr std::array<std::array<int, 2>, 4> n4 = {
            {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (const auto& d : n4) {
          const int nx = x + d[0], ny = y + d[1];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (mask.at(nx, ny) && !visited[ni]) {
            visited[ni] = 1;
            member[ni] = 1;
            stack.push_back(static_cast<int>(ni));
          }
        }
      }

      if (static_cast<double>(area) < min_area_px2) continue;

      Candidate c;
      c.area_px2 = static_cast<double>(area);
      c.centroid_px = {sum_u / static_cast<double>(area), sum_v / static_cast<double>(area)};
      c.boundary_px = trace_boundary(mask, member, x0, y0);
      out.push_back(std::move(c));
    }
  }

  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.area_px2 > b.area_px2; });
  return out;
}

std::optional<Candidate> track_nearest(
    const std::optional<Eigen::Vector2d>& previous_centroid_px,
    const std::vector<Candidate>& candidates) {
  if (candidates.empty()) return std::nullopt;
  if (!previous_centroid_px) {
    // Largest area first by construction of extract_candidates, but do not
    // rely on pre-sorted input here.
    const Candidate* best = &candidates.front();
    for (const auto& c : candidates)
      if (c.area_px2 > best->area_px2) best = &c;
    return *best;
  }
  const Candidate* best = nullptr;
  double best_dist = 0.0;
  for (const auto& c : candidates) {
    const double d = (c.centroid_px - *previous_centroid_px).norm();
    if (!best || d < best_dist - 1e-12 ||
        (std::abs(d - best_dist) <= 1e-12 && c.area_px2 > best->area_px2)) {
      best = &c;
      best_dist = d;
    }
  }
  return *best;
}

BinaryMask rasterize_polygons(const std::vector<std::vector<Eigen::Vector2d>>& rings,
                              int width, int height) {
  BinaryMask mask(width, height);
  for (const auto& ring : rings) {
    if (ring.size() < 3) {
      for (const auto& p : ring) {
        const int x = static_cast<int>(std::floor(p.x()));
        const int y = static_cast<int>(std::floor(p.y()));
        if (mask.in_bounds(x, y)) mask.set(x, y);
      }
      continue;
    }
    // Even-odd scanline fill over pixel centers.
    for (int y = 0; y < height; ++y) {
      const double yc = y + 0.5;
      std::vector<double> xs;
      for (std::size_t i = 0; i < ring.size(); ++i) {
        const Eigen::Vector2d& a = ring[i];
        const Eigen::Vector2d& b = ring[(i + 1) % ring.size()];
        const double y0 = a.y(), y1 = b.y();
        if ((y0 <= yc && y1 > yc) || (y1 <= yc && y0 > yc)) {
          const double t = (yc - y0) / (y1 - y0);
          xs.push_back(a.x() + t * (b.x() - a.x()));
        }
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
        int x_begin = static_cast<int>(std::ceil(xs[i] - 0.5));
        int x_end = static_cast<int>(std::floor(xs[i + 1] - 0.5));
        x_begin = std::max(x_begin, 0);
        x_end = std::min(x_end, width - 1);
        for (int x = x_begin; x <= x_end; ++x) mask.set(x, y);
      }
    }
    // Stamp vertices so thin rings stay connected.
    for (const auto& p : ring) {
      const int x = static_cast<int>(std::floor(p.x()));
      const int y = static_cast<int>(std::floor(p.y()));
      if (mask.in_bounds(x, y)) mask.set(x, y);
    }
  }
  return mask;
}

BinaryMask morphological_open(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  auto cross_all = [&](const BinaryMask& m, int x, int y) {
    if (!m.at(x, y)) return false;
    const bool l = x > 0 ? m.at(x - 1, y) : false;
    const bool r = x + 1 < w ? m.at(x + 1, y) : false;
    const bool u = y > 0 ? m.at(x, y - 1) : false;
    const bool d = y + 1 < h ? m.at(x, y + 1) : false;
    return l && r && u && d;
  };
  BinaryMask eroded(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (cross_all(mask, x, y)) eroded.set(x, y);
  BinaryMask opened(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!eroded.at(x, y)) continue;
      opened.set(x, y);
      if (x > 0) opened.set(x - 1, y);
      if (x + 1 < w) opened.set(x + 1, y);
      if (y > 0) opened.set(x, y - 1);
      if (y + 1 < h) opened.set(x, y + 1);
    }
  return opened;
}

void save_pgm(const BinaryMask& mask, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("save_pgm: cannot open " + path);
  f << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      f.put(mask.at(x, y) ? static_cast<char>(0xFF) : 0);
}

BinaryMask load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("load_pgm: cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5") throw DomainError("load_pgm: not a P5 PGM: " + path);
  auto skip_ws_comments = [&f]() {
    while (true) {
      const int c = f.peek();
      if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(c)) {
        f.get();
      } else {
        break;
      }
    }
  };
  int w = 0, h = 0, maxval = 0;
  skip_ws_comments();
  f >> w;
  skip_ws_comments();
  f >> h;
  skip_ws_comments();
  f >> maxval;
  f.get();  // single whitespace after header
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw DomainError("load_pgm: bad header in " + path);
  BinaryMask mask(w, h);
  std::vector<char> row(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    f.read(row.data(), w);
    if (!f) throw DomainError("load_pgm: truncated data in " + path);
    for (int x = 0; x < w; ++x)
      mask.set(x, y, static_cast<unsigned char>(row[x]) > maxval / 2);
  }
  return mask;
}

}  // namespace vscan
