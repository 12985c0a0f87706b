#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hybridflow/flow.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "hf_flow_tests";
  fs::create_directories(dir);
  return dir / name;
}

hf::FlowField random_flow(int w, int h, uint64_t seed, float range = 30.f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> val(-range, range);
  std::bernoulli_distribution invalid(0.1);
  hf::FlowField f(w, h);
  for (size_t i = 0; i < f.size(); ++i) {
    f.u[i] = val(rng);
    f.v[i] = val(rng);
    if (invalid(rng)) f.valid[i] = 0;
  }
  return f;
}

}  // namespace

TEST_CASE(".flo write -> read roundtrips bit-exact on valid pixels") {
  hf::FlowField f = random_flow(31, 18, 21);
  auto path = temp_file("rt.flo");
  hf::write_flow_flo(f, path.string());
  hf::FlowField back = hf::read_flow_flo(path.string());
  REQUIRE(back.width == f.width);
  REQUIRE(back.height == f.height);
  for (size_t i = 0; i < f.size(); ++i) {
    CHECK(back.valid[i] == f.valid[i]);
    if (f.valid[i]) {
      CHECK(back.u[i] == f.u[i]);  // bit exact: float carried verbatim
      CHECK(back.v[i] == f.v[i]);
    }
  }
}

TEST_CASE(".flo file layout matches the interchange convention") {
  hf::FlowField f(2, 1);
  f.u[0] = 1.5f; f.v[0] = -2.5f;
  f.u[1] = 0.f;  f.v[1] = 0.f;
  f.valid[1] = 0;
  auto path = temp_file("layout.flo");
  hf::write_flow_flo(f, path.string());

  std::ifstream in(path, std::ios::binary);
  float magic; int32_t w, h; float vals[4];
  in.read(reinterpret_cast<char*>(&magic), 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  in.read(reinterpret_cast<char*>(vals), 16);
  REQUIRE(in.good());
  CHECK(magic == 202021.25f);
  CHECK(w == 2);
  CHECK(h == 1);
  CHECK(vals[0] == 1.5f);
  CHECK(vals[1] == -2.5f);
  CHECK(vals[2] >= 1e9f);  // invalid sentinel
  CHECK(vals[3] >= 1e9f);
}

TEST_CASE(".flo reader rejects bad magic and truncation") {
  auto path = temp_file("bad.flo");
  {
    std::ofstream out(path, std::ios::binary);
    float magic = 1.0f; int32_t w = 2, h = 2;
    out.write(reinterpret_cast<char*>(&magic), 4);
    out.write(reinterpret_cast<char*>(&w), 4);
    out.write(reinterpret_cast<char*>(&h), 4);
  }
  CHECK_THROWS_AS(hf::read_flow_flo(path.string()), hf::FormatError);

  auto trunc = temp_file("trunc.flo");
  {
    std::ofstream out(trunc, std::ios::binary);
    float magic = 202021.25f; int32_t w = 4, h = 4;
    out.write(reinterpret_cast<char*>(&magic), 4);
    out.write(reinterpret_cast<char*>(&w), 4);
    out.write(reinterpret_cast<char*>(&h), 4);
    float one = 1.f;
    out.write(reinterpret_cast<char*>(&one), 4);  // far too little payload
  }
  CHECK_THROWS_AS(hf::read_flow_flo(trunc.string()), hf::FormatError);
}

TEST_CASE("KITTI roundtrip within quantization (1/128 px)") {
  hf::FlowField f = random_flow(23, 11, 5, 100.f);
  auto path = temp_file("rt_kitti.png");
  hf::write_flow_kitti(f, path.string());
  hf::FlowField back = hf::read_flow_kitti(path.string());
  REQUIRE(back.width == f.width);
  for (size_t i = 0; i < f.size(); ++i) {
    CHECK(back.valid[i] == f.valid[i]);
    if (f.valid[i]) {
      CHECK(std::abs(back.u[i] - f.u[i]) <= 1.f / 128.f);
      CHECK(std::abs(back.v[i] - f.v[i]) <= 1.f / 128.f);
    }
  }
}

TEST_CASE("KITTI known quantization example") {
  // u = 1 px encodes as 32832, v = -0.5 px as 32736.
  hf::FlowField f(1, 1);
  f.u[0] = 1.f;
  f.v[0] = -0.5f;
  auto path = temp_file("quant_kitti.png");
  hf::write_flow_kitti(f, path.string());
  int depth = 0;
  hf::Raster16 r = hf::detail::read_png_raster(path.string(), &depth);
  REQUIRE(depth == 16);
  CHECK(r.at(0, 0, 0) == 32768 + 64);
  CHECK(r.at(0, 0, 1) == 32768 - 32);
  CHECK(r.at(0, 0, 2) == 1);
}

TEST_CASE("EPE matches a per-pixel oracle") {
  hf::FlowField pred = random_flow(17, 13, 31);
  hf::FlowField gt = random_flow(17, 13, 32);
  for (size_t i = 0; i < pred.size(); ++i) pred.valid[i] = 1;

  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid[i]) continue;
    sum += std::hypot(double(pred.u[i]) - gt.u[i], double(pred.v[i]) - gt.v[i]);
    ++n;
  }
  hf::FlowMetrics m = hf::epe(pred, gt);
  CHECK(m.epe_valid_count == n);
  CHECK(m.epe_all == doctest::Approx(sum / n).epsilon(1e-9));
}

TEST_CASE("FI matches the outlier definition (err > 3px AND > 5% magnitude)") {
  hf::FlowField gt(3, 1);
  hf::FlowField pred(3, 1);
  // pixel 0: error 4 px, gt magnitude 10 -> 4 > 3 and 4 > 0.5 -> outlier
  gt.u[0] = 10; pred.u[0] = 14;
  // pixel 1: error 4 px, gt magnitude 100 -> 4 > 3 but 4 < 5 -> not outlier
  gt.u[1] = 100; pred.u[1] = 104;
  // pixel 2: error 2 px -> not outlier
  gt.u[2] = 1; pred.u[2] = 3;
  hf::FlowMetrics m = hf::fi_rate(pred, gt);
  CHECK(m.fi_outlier_count == 1);
  CHECK(m.fi_rate == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("metrics reject mismatched dimensions and empty ground truth") {
  hf::FlowField a(2, 2), b(3, 2);
  CHECK_THROWS_AS(hf::epe(a, b), hf::ContractError);
  hf::FlowField gt(2, 2);
  std::fill(gt.valid.begin(), gt.valid.end(), 0);
  hf::FlowField pred(2, 2);
  CHECK_THROWS_AS(hf::epe(pred, gt), hf::ContractError);
}

TEST_CASE("flow_to_color: zero flow is near white, invalid is black") {
  hf::FlowField f(4, 2);
  f.valid[3] = 0;
  hf::Image img = hf::flow_to_color(f);
  CHECK(img.at(0, 0, 0) > 0.95f);
  CHECK(img.at(0, 0, 1) > 0.95f);
  CHECK(img.at(0, 0, 2) > 0.95f);
  CHECK(img.at(3, 0, 0) == 0.f);
  CHECK(img.at(3, 0, 1) == 0.f);
  CHECK(img.at(3, 0, 2) == 0.f);
}

TEST_CASE("flow_to_color wheel has 55 stops and saturates at max magnitude") {
  CHECK(hf::detail::color_wheel().size() == 55);
  hf::FlowField f(1, 1);
  f.u[0] = 10.f;
  hf::Image img = hf::flow_to_color(f, 10.f);
  // Fully saturated pixel: at least one channel far from white.
  float min_c = std::min({img.at(0, 0, 0), img.at(0, 0, 1), img.at(0, 0, 2)});
  CHECK(min_c < 0.2f);
}
