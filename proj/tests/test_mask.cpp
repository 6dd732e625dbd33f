#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "vscan/mask.hpp"
#include "vscan/rng.hpp"

using namespace vscan;

namespace {

BinaryMask filled_circle(int w, int h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) m.set(x, y);
  return m;
}

BinaryMask block(int w, int h, int x0, int y0, int bw, int bh) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) m.set(x, y);
  return m;
}

}  // namespace

TEST_CASE("dice coefficient") {
  SUBCASE("identical nonempty masks give 1") {
    const BinaryMask g = filled_circle(64, 64, 32, 32, 10);
    CHECK(dice(g, g) == doctest::Approx(1.0));
  }
  SUBCASE("disjoint nonempty masks give 0") {
    const BinaryMask g = block(64, 64, 0, 0, 8, 8);
    const BinaryMask s = block(64, 64, 32, 32, 8, 8);
    CHECK(dice(g, s) == doctest::Approx(0.0));
  }
  SUBCASE("constructed 80/100/100 overlap gives 0.8") {
    // |G| = |S| = 100, |G ∩ S| = 80: G covers columns 0..9, S columns 2..11
    // over 10 rows, overlap columns 2..9.
    const BinaryMask g = block(32, 32, 0, 0, 10, 10);
    const BinaryMask s = block(32, 32, 2, 0, 10, 10);
    CHECK(dice(g, s) == doctest::Approx(0.8));
  }
  SUBCASE("both empty gives 1 by convention") {
    CHECK(dice(BinaryMask(16, 16), BinaryMask(16, 16)) == doctest::Approx(1.0));
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(dice(BinaryMask(16, 16), BinaryMask(16, 17)), DomainError);
  }
  SUBCASE("symmetry and monotone decrease in shrinking intersection") {
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
      const int shift = static_cast<int>(rng.below(12));
      const BinaryMask g = block(64, 64, 10, 10, 12, 12);
      const BinaryMask s = block(64, 64, 10 + shift, 10, 12, 12);
      CHECK(dice(g, s) == doctest::Approx(dice(s, g)));
    }
    double prev = 1.1;
    for (int shift = 0; shift <= 12; ++shift) {
      const BinaryMask g = block(64, 64, 10, 10, 12, 12);
      const BinaryMask s = block(64, 64, 10 + shift, 10, 12, 12);
      const double d = dice(g, s);
      CHECK(d <= prev + 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("extract_candidates") {
  SUBCASE("filled circle: one candidate, pixel-count area near pi r^2") {
    const BinaryMask m = filled_circle(128, 128, 64, 64, 20);
    const auto cands = extract_candidates(m, 30);
    REQUIRE(cands.size() == 1);
    const double expected = static_cast<double>(m.count_set());  // pixel-count oracle
    CHECK(cands[0].area_px2 == doctest::Approx(expected));
    CHECK(std::abs(cands[0].area_px2 - M_PI * 400.0) / (M_PI * 400.0) < 0.05);
    CHECK(cands[0].centroid_px.x() == doctest::Approx(64.0).epsilon(0.01));
    CHECK(cands[0].centroid_px.y() == doctest::Approx(64.0).epsilon(0.01));
    CHECK(!cands[0].boundary_px.empty());
    // Boundary pixels sit on the rim: radius within a pixel of 20.
    for (const auto& b : cands[0].boundary_px) {
      const double r = std::hypot(b.x() + 0.5 - 64.0, b.y() + 0.5 - 64.0);
      CHECK(r > 17.5);
      CHECK(r < 20.5);
    }
  }
  SUBCASE("empty mask gives empty list") {
    CHECK(extract_candidates(BinaryMask(32, 32), 1).empty());
  }
  SUBCASE("min_area filters the smaller of two blobs") {
    BinaryMask m = block(64, 64, 4, 4, 10, 10);
    for (int y = 40; y < 43; ++y)
      for (int x = 40; x < 43; ++x) m.set(x, y);
    const auto cands = extract_candidates(m, 30);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].area_px2 == doctest::Approx(100.0));
  }
  SUBCASE("sorted by area descending") {
    BinaryMask m = block(64, 64, 2, 2, 6, 6);
    for (int y = 20; y < 32; ++y)
      for (int x = 20; x < 32; ++x) m.set(x, y);
    const auto cands = extract_candidates(m, 1);
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].area_px2 > cands[1].area_px2);
  }
  SUBCASE("centroid equals mean of member pixels within half a pixel") {
    const BinaryMask m = filled_circle(64, 64, 30.3, 24.8, 9);
    const auto cands = extract_candidates(m, 10);
    REQUIRE(cands.size() == 1);
    CHECK(std::abs(cands[0].centroid_px.x() - 30.3) < 0.5);
    CHECK(std::abs(cands[0].centroid_px.y() - 24.8) < 0.5);
  }
}

TEST_CASE("track_nearest") {
  auto cand = [](double u, double v, double area) {
    Candidate c;
    c.centroid_px = {u, v};
    c.area_px2 = area;
    return c;
  };

  SUBCASE("picks the closer candidate") {
    const auto sel = track_nearest(Eigen::Vector2d(100, 100),
                                   {cand(102, 101, 50), cand(200, 50, 500)});
    REQUIRE(sel);
    CHECK(sel->centroid_px.x() == doctest::Approx(102));
  }
  SUBCASE("no previous: larger area wins") {
    const auto sel = track_nearest(std::nullopt, {cand(10, 10, 50), cand(50, 50, 51)});
    REQUIRE(sel);
    CHECK(sel->area_px2 == doctest::Approx(51));
  }
  SUBCASE("exact distance tie breaks by area") {
    const auto sel = track_nearest(Eigen::Vector2d(100, 100),
                                   {cand(90, 100, 40), cand(110, 100, 45)});
    REQUIRE(sel);
    CHECK(sel->area_px2 == doctest::Approx(45));
  }
  SUBCASE("empty list gives nothing") {
    CHECK(!track_nearest(Eigen::Vector2d(0, 0), {}));
  }
  SUBCASE("translation equivariance") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector2d prev(rng.uniform(0, 200), rng.uniform(0, 200));
      const Eigen::Vector2d shift(rng.uniform(-40, 40), rng.uniform(-40, 40));
      std::vector<Candidate> cs;
      for (int j = 0; j < 5; ++j)
        cs.push_back(cand(rng.uniform(0, 200), rng.uniform(0, 200), rng.uniform(10, 90)));
      std::vector<Candidate> shifted = cs;
      for (auto& c : shifted) c.centroid_px += shift;
      const auto a = track_nearest(prev, cs);
      const auto b = track_nearest(Eigen::Vector2d(prev + shift), shifted);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(((a->centroid_px + shift) - b->centroid_px).norm() < 1e-9);
    }
  }
}

TEST_CASE("rasterize_polygons fills a ring into a solid blob") {
  std::vector<Eigen::Vector2d> ring;
  for (int k = 0; k < 64; ++k) {
    const double th = 2.0 * M_PI * k / 64;
    ring.push_back({32 + 12 * std::cos(th), 32 + 12 * std::sin(th)});
  }
  const BinaryMask m = rasterize_polygons({ring}, 64, 64);
  const double area = static_cast<double>(m.count_set());
  CHECK(std::abs(area - M_PI * 144.0) / (M_PI * 144.0) < 0.06);
  CHECK(m.at(32, 32));
  CHECK(!m.at(2, 2));
}

TEST_CASE("morphological opening removes spikes and specks, keeps blobs") {
  BinaryMask m = filled_circle(96, 96, 48, 48, 18);
  // pixel-wide spike off the blob and an isolated speck
  for (int x = 48; x < 90; ++x) m.set(x, 20);
  m.set(5, 5);
  const std::size_t blob_area = filled_circle(96, 96, 48, 48, 18).count_set();
  const BinaryMask opened = morphological_open(m);
  CHECK(!opened.at(5, 5));
  CHECK(!opened.at(85, 20));
  const double area = static_cast<double>(opened.count_set());
  CHECK(std::abs(area - static_cast<double>(blob_area)) / blob_area < 0.05);
  const auto cands = extract_candidates(opened, 10);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].centroid_px.x() == doctest::Approx(48.0).epsilon(0.02));
}

TEST_CASE("PGM round trip") {
  const BinaryMask m = filled_circle(48, 48, 20.5, 25.5, 11);
  const auto path =
      (std::filesystem::temp_directory_path() / "vscan_mask_test.pgm").string();
  save_pgm(m, path);
  const BinaryMask back = load_pgm(path);
  CHECK(back == m);
  std::remove(path.c_str());
}
