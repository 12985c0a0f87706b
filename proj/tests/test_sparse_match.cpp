#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hybridflow/sparse_match.hpp"

namespace {

hf::Image random_image(int w, int h, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> val(0.f, 1.f);
  hf::Image img(w, h);
  for (float& v : img.data()) v = val(rng);
  return img;
}

hf::Image crop(const hf::Image& src, int x0, int y0, int w, int h) {
  hf::Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = src.at(x + x0, y + y0, c);
  return out;
}

std::vector<hf::PixelCoord> rect_region(int x0, int y0, int x1, int y1) {
  std::vector<hf::PixelCoord> r;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) r.push_back({x, y});
  return r;
}

// Matches drawn from two projective views of a random 3D scene; F computed
// in closed form from the camera pair as K2^-T [t]x R K1^-1.
struct EpipolarScene {
  std::vector<hf::PixelMatch> matches;
  Eigen::Matrix3d f;
};

EpipolarScene make_scene(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::Matrix3d k;
  k << 400, 0, 320, 0, 400, 240, 0, 0, 1;
  double a = 0.15;  // small rotation about y
  Eigen::Matrix3d r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  Eigen::Vector3d t(0.5, 0.1, 0.05);
  Eigen::Matrix3d tx;
  tx << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
  EpipolarScene s;
  s.f = k.inverse().transpose() * tx * r * k.inverse();
  while (static_cast<int>(s.matches.size()) < n) {
    Eigen::Vector3d p(2.0 * unif(rng), 2.0 * unif(rng), 5.0 + 2.0 * unif(rng));
    Eigen::Vector3d q1 = k * p;
    Eigen::Vector3d q2 = k * (r * p + t);
    if (q1.z() <= 0 || q2.z() <= 0) continue;
    hf::PixelMatch m;
    m.x1 = static_cast<float>(q1.x() / q1.z());
    m.y1 = static_cast<float>(q1.y() / q1.z());
    m.x2 = static_cast<float>(q2.x() / q2.z());
    m.y2 = static_cast<float>(q2.y() / q2.z());
    m.region_id = 1;
    s.matches.push_back(m);
  }
  return s;
}

}  // namespace

TEST_CASE("pure translation: grid matches recover the shift exactly") {
  hf::Image base = random_image(96, 80, 17);
  hf::Image img1 = crop(base, 6, 2, 80, 70);   // img1(x,y) = base(x+6, y+2)
  hf::Image img2 = crop(base, 0, 0, 80, 70);   // content moves by (+6, +2)
  hf::DescriptorField f1 = hf::dense_descriptors(img1);
  hf::DescriptorField f2 = hf::dense_descriptors(img2);

  auto region_a = rect_region(16, 16, 56, 48);
  auto region_b = rect_region(16, 16, 70, 58);
  auto matches = hf::match_pixels(region_a, region_b, f1, f2);
  REQUIRE(matches.size() > 100);
  int exact = 0;
  for (const auto& m : matches)
    if (m.du() == doctest::Approx(6.f) && m.dv() == doctest::Approx(2.f)) ++exact;
  CHECK(exact >= static_cast<int>(0.9 * matches.size()));
  // matched pixels sit on the stride grid
  for (const auto& m : matches) {
    CHECK(static_cast<int>(m.x1) % 2 == 0);
    CHECK(static_cast<int>(m.y1) % 2 == 0);
  }
}

TEST_CASE("identical frames match every grid pixel to itself at distance 0") {
  hf::Image img = random_image(48, 48, 23);
  hf::DescriptorField f = hf::dense_descriptors(img);
  auto region = rect_region(12, 12, 36, 36);
  auto matches = hf::match_pixels(region, region, f, f);
  REQUIRE(matches.size() == 144);  // 12x12 stride-2 grid
  for (const auto& m : matches) {
    CHECK(m.x2 == m.x1);
    CHECK(m.y2 == m.y1);
    CHECK(m.distance == doctest::Approx(0.0).scale(1).epsilon(5e-3));
  }
}

TEST_CASE("ratio test rejects ambiguous matches") {
  // a region of two near-identical texture copies: the best and second-best
  // candidates nearly tie, so the ratio ~1 kills the match
  hf::Image img1 = random_image(48, 48, 31);
  hf::Image img2(96, 48);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<float> noise(-0.05f, 0.05f);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      for (int c = 0; c < 3; ++c) {
        img2.at(x, y, c) = std::clamp(img1.at(x, y, c) + noise(rng), 0.f, 1.f);
        img2.at(x + 48, y, c) = std::clamp(img1.at(x, y, c) + noise(rng), 0.f, 1.f);
      }
  hf::DescriptorField f1 = hf::dense_descriptors(img1);
  hf::DescriptorField f2 = hf::dense_descriptors(img2);
  auto region_a = rect_region(16, 16, 32, 32);
  auto region_b = rect_region(0, 0, 96, 48);
  auto strict = hf::match_pixels(region_a, region_b, f1, f2, 2, 0.9);
  auto loose = hf::match_pixels(region_a, region_b, f1, f2, 2, 10.0);
  CHECK(strict.size() < loose.size() / 2);
}

TEST_CASE("ransac on a noise-free epipolar scene keeps every match") {
  EpipolarScene s = make_scene(60, 41);
  hf::RansacResult res = hf::ransac_fundamental(s.matches, 1.0, 2000, 7);
  CHECK(!res.pass_through);
  CHECK(res.inliers.size() == s.matches.size());
  // recovered matrix is rank 2 and fits all matches tightly
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(res.fundamental);
  CHECK(svd.singularValues()(2) ==
        doctest::Approx(0.0).scale(svd.singularValues()(0)).epsilon(1e-8));
  for (const auto& m : s.matches)
    CHECK(hf::detail::sampson_distance(res.fundamental, m) < 1e-2);
}

TEST_CASE("ransac removes gross outliers and keeps exactly the true set") {
  EpipolarScene s = make_scene(80, 43);
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<float> pos(0.f, 600.f), off(30.f, 120.f);
  for (int i = 0; i < 20; ++i) {
    hf::PixelMatch m;
    m.x1 = pos(rng);
    m.y1 = pos(rng) * 0.8f;
    m.x2 = pos(rng);
    m.y2 = m.y1 + off(rng);  // far off any smooth epipolar geometry
    m.region_id = 0;
    s.matches.push_back(m);
  }
  hf::RansacResult res = hf::ransac_fundamental(s.matches, 1.0, 4000, 3);
  CHECK(res.inliers.size() == 80);
  for (const auto& m : res.inliers) CHECK(m.region_id == 1);
}

TEST_CASE("fewer than eight matches pass through unfiltered") {
  EpipolarScene s = make_scene(7, 45);
  hf::RansacResult res = hf::ransac_fundamental(s.matches);
  CHECK(res.pass_through);
  CHECK(res.inliers.size() == 7);
}

TEST_CASE("ransac is deterministic for a fixed seed") {
  EpipolarScene s = make_scene(50, 47);
  // perturb half the points so the consensus is nontrivial
  for (size_t i = 0; i < s.matches.size(); i += 2) s.matches[i].y2 += 15.f;
  auto a = hf::ransac_fundamental(s.matches, 1.0, 500, 99);
  auto b = hf::ransac_fundamental(s.matches, 1.0, 500, 99);
  REQUIRE(a.inliers.size() == b.inliers.size());
  for (size_t i = 0; i < a.inliers.size(); ++i) {
    CHECK(a.inliers[i].x1 == b.inliers[i].x1);
    CHECK(a.inliers[i].y1 == b.inliers[i].y1);
  }
  CHECK(a.fundamental == b.fundamental);
}

TEST_CASE("affine consistency keeps conforming centroids, drops displaced ones") {
  struct {
    double a = 1.1, b = 0.05, c = -0.03, d = 0.95, tx = 4.0, ty = -2.0;
    hf::Point2 apply(const hf::Point2& p) const {
      return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty};
    }
  } t;
  std::vector<hf::CentroidMatch> neighbors;
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> pos(0.0, 200.0);
  for (int i = 0; i < 8; ++i) {
    hf::Point2 p{pos(rng), pos(rng)};
    neighbors.push_back({p, t.apply(p)});
  }
  hf::Point2 sp{100.0, 100.0};
  hf::CentroidMatch good{sp, t.apply(sp)};
  CHECK(hf::affine_consistency(good, neighbors));

  hf::CentroidMatch bad = good;
  bad.p2.x += 50.0;
  CHECK(!hf::affine_consistency(bad, neighbors));

  // under three neighbors: always keep
  std::vector<hf::CentroidMatch> two(neighbors.begin(), neighbors.begin() + 2);
  CHECK(hf::affine_consistency(bad, two));

  // collinear neighbors: fit is rank deficient, keep
  std::vector<hf::CentroidMatch> line;
  for (int i = 0; i < 5; ++i) {
    hf::Point2 p{10.0 * i, 20.0 * i};
    line.push_back({p, t.apply(p)});
  }
  CHECK(hf::affine_consistency(bad, line));
}
