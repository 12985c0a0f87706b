#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "hybridflow/image.hpp"

namespace hf {

// Per-pixel 2D displacement with validity mask.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u, v;
  std::vector<uint8_t> valid;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h),
        u(static_cast<size_t>(w) * h, 0.f),
        v(static_cast<size_t>(w) * h, 0.f),
        valid(static_cast<size_t>(w) * h, 1) {}

  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  size_t size() const { return u.size(); }
};

struct FlowMetrics {
  double epe_all = 0.0;
  size_t epe_valid_count = 0;
  double fi_rate = 0.0;
  size_t fi_outlier_count = 0;
};

namespace flo {
constexpr float kMagic = 202021.25f;
constexpr float kUnknownThresh = 1e9f;   // |value| above this reads as invalid
constexpr float kUnknownWrite = 1e10f;
}  // namespace flo

inline FlowField read_flow_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  float magic = 0.f;
  int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  if (!in || magic != flo::kMagic) throw FormatError("bad .flo magic in " + path);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || w < 1 || h < 1) throw FormatError("bad .flo dimensions in " + path);

  FlowField f(w, h);
  std::vector<float> payload(static_cast<size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * 4));
  if (in.gcount() != static_cast<std::streamsize>(payload.size() * 4))
    throw FormatError("truncated .flo payload in " + path);
  for (size_t i = 0; i < f.size(); ++i) {
    float fu = payload[2 * i], fv = payload[2 * i + 1];
    if (std::abs(fu) > flo::kUnknownThresh || std::abs(fv) > flo::kUnknownThresh ||
        !std::isfinite(fu) || !std::isfinite(fv)) {
      f.valid[i] = 0;
      f.u[i] = f.v[i] = 0.f;
    } else {
      f.u[i] = fu;
      f.v[i] = fv;
    }
  }
  return f;
}

inline void write_flow_flo(const FlowField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  float magic = flo::kMagic;
  int32_t w = f.width, h = f.height;
  out.write(reinterpret_cast<const char*>(&magic), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  std::vector<float> payload(f.size() * 2);
  for (size_t i = 0; i < f.size(); ++i) {
    if (f.valid[i]) {
      payload[2 * i] = f.u[i];
      payload[2 * i + 1] = f.v[i];
    } else {
      payload[2 * i] = flo::kUnknownWrite;
      payload[2 * i + 1] = flo::kUnknownWrite;
    }
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * 4));
  if (!out) throw IoError("write failed: " + path);
}

// KITTI 16-bit raster: u = (ch1 - 2^15)/64, v = (ch2 - 2^15)/64, ch3 = validity.
inline FlowField read_flow_kitti(const std::string& path) {
  int depth = 0;
  Raster16 r = detail::read_png_raster(path, &depth);
  if (depth != 16) throw FormatError("KITTI flow requires a 16-bit raster: " + path);
  FlowField f(r.width, r.height);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      size_t i = f.idx(x, y);
      if (r.at(x, y, 2) == 0) {
        f.valid[i] = 0;
      } else {
        f.u[i] = (static_cast<float>(r.at(x, y, 0)) - 32768.f) / 64.f;
        f.v[i] = (static_cast<float>(r.at(x, y, 1)) - 32768.f) / 64.f;
      }
    }
  return f;
}

inline void write_flow_kitti(const FlowField& f, const std::string& path) {
  Raster16 r;
  r.width = f.width;
  r.height = f.height;
  r.channels = 3;
  r.data.assign(static_cast<size_t>(f.width) * f.height * 3, 0);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      size_t i = f.idx(x, y);
      if (!f.valid[i]) continue;
      double cu = std::round(f.u[i] * 64.0 + 32768.0);
      double cv = std::round(f.v[i] * 64.0 + 32768.0);
      r.at(x, y, 0) = static_cast<uint16_t>(std::clamp(cu, 0.0, 65535.0));
      r.at(x, y, 1) = static_cast<uint16_t>(std::clamp(cv, 0.0, 65535.0));
      r.at(x, y, 2) = 1;
    }
  detail::write_png_raster(path, r, 16);
}

namespace detail {

// Middlebury color wheel: 55 hue stops over RY/YG/GC/CB/BM/MR sectors.
inline const std::vector<std::array<float, 3>>& color_wheel() {
  static const std::vector<std::array<float, 3>> wheel = [] {
    const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::vector<std::array<float, 3>> w;
    w.reserve(RY + YG + GC + CB + BM + MR);
    for (int i = 0; i < RY; ++i) w.push_back({1.f, i / float(RY), 0.f});
    for (int i = 0; i < YG; ++i) w.push_back({1.f - i / float(YG), 1.f, 0.f});
    for (int i = 0; i < GC; ++i) w.push_back({0.f, 1.f, i / float(GC)});
    for (int i = 0; i < CB; ++i) w.push_back({0.f, 1.f - i / float(CB), 1.f});
    for (int i = 0; i < BM; ++i) w.push_back({i / float(BM), 0.f, 1.f});
    for (int i = 0; i < MR; ++i) w.push_back({1.f, 0.f, 1.f - i / float(MR)});
    return w;
  }();
  return wheel;
}

}  // namespace detail

// max_magnitude <= 0 selects auto-scaling by the field's maximum.
inline Image flow_to_color(const FlowField& f, float max_magnitude = -1.f) {
  float maxrad = max_magnitude;
  if (maxrad <= 0.f) {
    maxrad = 1e-6f;
    for (size_t i = 0; i < f.size(); ++i)
      if (f.valid[i])
        maxrad = std::max(maxrad, std::hypot(f.u[i], f.v[i]));
  }
  const auto& wheel = detail::color_wheel();
  const int ncols = static_cast<int>(wheel.size());
  Image img(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      size_t i = f.idx(x, y);
      if (!f.valid[i]) continue;  // invalid stays black
      float rad = std::min(std::hypot(f.u[i], f.v[i]) / maxrad, 1.f);
      float a = std::atan2(-f.v[i], -f.u[i]) / static_cast<float>(M_PI);
      float fk = (a + 1.f) / 2.f * (ncols - 1);
      int k0 = static_cast<int>(fk) % ncols;
      int k1 = (k0 + 1) % ncols;
      float t = fk - std::floor(fk);
      for (int c = 0; c < 3; ++c) {
        float col = (1.f - t) * wheel[k0][c] + t * wheel[k1][c];
        img.at(x, y, c) = 1.f - rad * (1.f - col);  // saturate toward hue
      }
    }
  return img;
}

namespace detail {

inline void check_metric_pre(const FlowField& pred, const FlowField& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw ContractError("flow metric: dimension mismatch");
}

}  // namespace detail

inline FlowMetrics epe(const FlowField& pred, const FlowField& gt) {
  detail::check_metric_pre(pred, gt);
  FlowMetrics m;
  double sum = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid[i]) continue;
    double du = static_cast<double>(pred.u[i]) - gt.u[i];
    double dv = static_cast<double>(pred.v[i]) - gt.v[i];
    sum += std::sqrt(du * du + dv * dv);
    ++m.epe_valid_count;
  }
  if (m.epe_valid_count == 0)
    throw ContractError("flow metric: no valid ground-truth pixels");
  m.epe_all = sum / static_cast<double>(m.epe_valid_count);
  return m;
}

// KITTI outlier convention: error > 3 px AND > 5% of gt magnitude.
inline FlowMetrics fi_rate(const FlowField& pred, const FlowField& gt) {
  detail::check_metric_pre(pred, gt);
  FlowMetrics m;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid[i]) continue;
    double du = static_cast<double>(pred.u[i]) - gt.u[i];
    double dv = static_cast<double>(pred.v[i]) - gt.v[i];
    double err = std::sqrt(du * du + dv * dv);
    double mag = std::hypot(static_cast<double>(gt.u[i]), static_cast<double>(gt.v[i]));
    ++m.epe_valid_count;
    if (err > 3.0 && err > 0.05 * mag) ++m.fi_outlier_count;
  }
  if (m.epe_valid_count == 0)
    throw ContractError("flow metric: no valid ground-truth pixels");
  m.fi_rate = static_cast<double>(m.fi_outlier_count) /
              static_cast<double>(m.epe_valid_count);
  return m;
}

}  // namespace hf
