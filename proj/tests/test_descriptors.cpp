#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hybridflow/descriptors.hpp"

namespace {

hf::Image random_image(int w, int h, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> val(0.f, 1.f);
  hf::Image img(w, h);
  for (float& v : img.data()) v = val(rng);
  return img;
}

// Independent single-pixel histogram oracle, straight from the definition:
// Gaussian-weighted soft-binned gradient orientations over the patch,
// L1-normalized then square-rooted.
std::vector<double> descriptor_oracle(const hf::Image& img, int px, int py,
                                      const hf::DescriptorParams& p) {
  const int half = p.patch_size / 2;
  const int cell_px = p.patch_size / p.cells;
  std::vector<double> hist(p.cells * p.cells * p.bins, 0.0);
  for (int dy = -half; dy < half; ++dy)
    for (int dx = -half; dx < half; ++dx) {
      double gx = (img.gray_mirror(px + dx + 1, py + dy) -
                   img.gray_mirror(px + dx - 1, py + dy)) * 0.5;
      double gy = (img.gray_mirror(px + dx, py + dy + 1) -
                   img.gray_mirror(px + dx, py + dy - 1)) * 0.5;
      double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0) ang += 2.0 * M_PI;
      double fb = ang * p.bins / (2.0 * M_PI);
      int b0 = static_cast<int>(fb) % p.bins;
      double t = fb - std::floor(fb);
      double w = mag * std::exp(-((dx + 0.5) * (dx + 0.5) + (dy + 0.5) * (dy + 0.5)) /
                                (2.0 * p.sigma * p.sigma));
      int cx = (dx + half) / cell_px, cy = (dy + half) / cell_px;
      double* cell = hist.data() + (static_cast<size_t>(cy) * p.cells + cx) * p.bins;
      cell[b0] += w * (1.0 - t);
      cell[(b0 + 1) % p.bins] += w * t;
    }
  double l1 = 0.0;
  for (double h : hist) l1 += h;
  if (l1 > 0)
    for (double& h : hist) h = std::sqrt(h / l1);
  return hist;
}

}  // namespace

TEST_CASE("constant image yields all-zero descriptors") {
  hf::Image img(20, 20, 0.5f);
  hf::DescriptorField f = hf::dense_descriptors(img);
  CHECK(f.dims() == 128);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x)
      for (int d = 0; d < f.dims(); ++d) CHECK(f.at(x, y)[d] == 0.f);
}

TEST_CASE("descriptors match an independent histogram oracle") {
  hf::Image img = random_image(24, 24, 42);
  hf::DescriptorParams p;
  hf::DescriptorField f = hf::dense_descriptors(img, p);
  for (auto [px, py] : {std::pair{12, 12}, std::pair{0, 0}, std::pair{23, 7}}) {
    auto oracle = descriptor_oracle(img, px, py, p);
    const float* got = f.at(px, py);
    for (int d = 0; d < f.dims(); ++d)
      CHECK(got[d] == doctest::Approx(oracle[d]).epsilon(1e-5));
  }
}

TEST_CASE("every descriptor has L2 norm <= 1 + 1e-6 (rootSIFT)") {
  hf::Image img = random_image(30, 22, 3);
  hf::DescriptorField f = hf::dense_descriptors(img);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double l2 = 0.0;
      for (int d = 0; d < f.dims(); ++d) l2 += double(f.at(x, y)[d]) * f.at(x, y)[d];
      CHECK(std::sqrt(l2) <= 1.0 + 1e-6);
      CHECK((std::abs(std::sqrt(l2) - 1.0) < 1e-6 || l2 == 0.0));
    }
}

TEST_CASE("translation equivariance away from borders is exact") {
  hf::Image canvas = random_image(48, 48, 9);
  const int shift_x = 3, shift_y = 2, w = 32, h = 32;
  hf::Image a(w, h), b(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        a.at(x, y, c) = canvas.at(x, y, c);
        b.at(x, y, c) = canvas.at(x + shift_x, y + shift_y, c);
      }
  hf::DescriptorField fa = hf::dense_descriptors(a);
  hf::DescriptorField fb = hf::dense_descriptors(b);
  // b(x,y) == a(x+sx, y+sy); interior pixels whose patches avoid all padding
  // see identical inputs, so identical arithmetic.
  const int margin = 16 / 2 + 2;
  for (int y = margin; y < h - margin - shift_y; ++y)
    for (int x = margin; x < w - margin - shift_x; ++x)
      for (int d = 0; d < fa.dims(); ++d)
        CHECK(fb.at(x, y)[d] == fa.at(x + shift_x, y + shift_y)[d]);
}

TEST_CASE("90-degree rotation permutes cells and orientation bins") {
  const int n = 24;
  hf::Image img = random_image(n, n, 77);
  hf::Image rot(n, n);
  // rot(x, y) = img(y, n-1-x): 90-degree clockwise rotation.
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c) rot.at(x, y, c) = img.at(y, n - 1 - x, c);

  hf::DescriptorParams p;
  hf::DescriptorField fi = hf::dense_descriptors(img, p);
  hf::DescriptorField fr = hf::dense_descriptors(rot, p);

  const int cells = p.cells, bins = p.bins, shift = bins / 4;
  for (auto [px, py] : {std::pair{12, 12}, std::pair{6, 15}, std::pair{20, 3}}) {
    // Pixel (px,py) of img corresponds to pixel (n-py, px) of rot.
    int qx = n - py, qy = px;
    REQUIRE(qx >= 0);
    REQUIRE(qx < n);
    const float* di = fi.at(px, py);
    const float* dr = fr.at(qx, qy);
    for (int cy = 0; cy < cells; ++cy)
      for (int cx = 0; cx < cells; ++cx)
        for (int b = 0; b < bins; ++b) {
          // cell (cx,cy) -> (cells-1-cy, cx); orientation bin b -> b + bins/4.
          int src = (cy * cells + cx) * bins + b;
          int dst = (cx * cells + (cells - 1 - cy)) * bins + (b + shift) % bins;
          CHECK(dr[dst] == doctest::Approx(di[src]).epsilon(1e-4));
        }
  }
}

TEST_CASE("image smaller than patch is rejected") {
  hf::Image img(8, 20, 0.5f);
  CHECK_THROWS_AS(hf::dense_descriptors(img), hf::ContractError);
}

TEST_CASE("classify_pixels takes the argmax with ties to the lowest channel") {
  hf::DescriptorField f(2, 1, 3);
  f.at(0, 0)[0] = 0.1f;
  f.at(0, 0)[1] = 0.9f;
  f.at(0, 0)[2] = 0.3f;
  // all-zero descriptor -> class 0 by the tie rule
  hf::LabelMap m = hf::classify_pixels(f);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(1, 0) == 0);
}

TEST_CASE("classify_pixels is invariant under strictly increasing channel maps") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> val(-1.f, 1.f);
  hf::DescriptorField f(8, 8, 16), g(8, 8, 16);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int d = 0; d < 16; ++d) {
        float v = val(rng);
        f.at(x, y)[d] = v;
        // monotone map applied after ReLU would be tanh(max(v,0)) + its cube
        float r = std::max(v, 0.f);
        g.at(x, y)[d] = std::tanh(r) + r * r * r;
      }
  hf::LabelMap mf = hf::classify_pixels(f);
  hf::LabelMap mg = hf::classify_pixels(g);
  CHECK(mf.labels == mg.labels);
}

TEST_CASE("color_stats single pixel and two-pixel examples") {
  hf::Image img(2, 1);
  img.at(0, 0, 0) = 0.2f; img.at(0, 0, 1) = 0.4f; img.at(0, 0, 2) = 0.6f;
  img.at(1, 0, 0) = 1.0f;
  hf::ColorStats one = hf::color_stats(img, {{0, 0}});
  CHECK(one.mean[0] == doctest::Approx(0.2));
  CHECK(one.mean[1] == doctest::Approx(0.4));
  CHECK(one.mean[2] == doctest::Approx(0.6));
  CHECK(one.stddev[0] == doctest::Approx(0.0));

  hf::Image two(2, 1);
  two.at(0, 0, 0) = 0.f;
  two.at(1, 0, 0) = 1.f;
  hf::ColorStats s = hf::color_stats(two, {{0, 0}, {1, 0}});
  CHECK(s.mean[0] == doctest::Approx(0.5));
  CHECK(s.stddev[0] == doctest::Approx(0.5));  // population sigma
}

TEST_CASE("color_stats matches a two-pass oracle and ignores pixel order") {
  hf::Image img = random_image(16, 16, 123);
  std::vector<hf::PixelCoord> region;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> coord(0, 15);
  for (int i = 0; i < 10; ++i) region.push_back({coord(rng), coord(rng)});

  hf::ColorStats s = hf::color_stats(img, region);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (const auto& p : region) mean += img.at(p.x, p.y, c);
    mean /= region.size();
    double var = 0.0;
    for (const auto& p : region) {
      double d = img.at(p.x, p.y, c) - mean;
      var += d * d;
    }
    CHECK(s.mean[c] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.stddev[c] == doctest::Approx(std::sqrt(var / region.size())).epsilon(1e-12));
  }
  std::reverse(region.begin(), region.end());
  hf::ColorStats rev = hf::color_stats(img, region);
  CHECK(rev.mean[0] == doctest::Approx(s.mean[0]).epsilon(1e-12));
  CHECK(rev.stddev[2] == doctest::Approx(s.stddev[2]).epsilon(1e-12));
}

TEST_CASE("color_stats rejects an empty region") {
  hf::Image img(4, 4, 0.1f);
  CHECK_THROWS_AS(hf::color_stats(img, {}), hf::ContractError);
}

TEST_CASE("descriptor_distance basics and metric axioms") {
  std::vector<float> a{1.f, 0.f}, b{0.f, 1.f};
  CHECK(hf::descriptor_distance(a, a, hf::Norm::L1) == doctest::Approx(0.0));
  CHECK(hf::descriptor_distance(a, a, hf::Norm::L2) == doctest::Approx(0.0));
  CHECK(hf::descriptor_distance(a, b, hf::Norm::L1) == doctest::Approx(2.0));
  CHECK(hf::descriptor_distance(a, b, hf::Norm::L2) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(hf::descriptor_distance(a, {1.f, 2.f, 3.f}, hf::Norm::L1),
                  hf::ContractError);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> val(-2.f, 2.f);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> x(8), y(8), z(8);
    for (int i = 0; i < 8; ++i) {
      x[i] = val(rng);
      y[i] = val(rng);
      z[i] = val(rng);
    }
    for (hf::Norm norm : {hf::Norm::L1, hf::Norm::L2}) {
      double xy = hf::descriptor_distance(x, y, norm);
      double yx = hf::descriptor_distance(y, x, norm);
      double xz = hf::descriptor_distance(x, z, norm);
      double zy = hf::descriptor_distance(z, y, norm);
      CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
      CHECK(xy <= xz + zy + 1e-9);
    }
  }
}
