#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hybridflow/image.hpp"

namespace hf {

struct DescriptorParams {
  int patch_size = 16;   // square patch side, samples at offsets [-p/2, p/2)
  int cells = 4;         // spatial cells per axis
  int bins = 8;          // orientation bins over [0, 2pi)
  double sigma = 8.0;    // Gaussian weight sigma, in pixels from patch center
};

// Per-pixel D-dimensional feature vectors, nonnegative after rootSIFT.
class DescriptorField {
 public:
  DescriptorField() = default;
  DescriptorField(int width, int height, int dims)
      : width_(width), height_(height), dims_(dims),
        data_(static_cast<size_t>(width) * height * dims, 0.f) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int dims() const { return dims_; }

  float* at(int x, int y) {
    return data_.data() + (static_cast<size_t>(y) * width_ + x) * dims_;
  }
  const float* at(int x, int y) const {
    return data_.data() + (static_cast<size_t>(y) * width_ + x) * dims_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int dims_ = 0;
  std::vector<float> data_;
};

struct ColorStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};

  std::array<double, 6> as_vec() const {
    return {mean[0], mean[1], mean[2], stddev[0], stddev[1], stddev[2]};
  }
};

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int w, int h) : width(w), height(h), labels(static_cast<size_t>(w) * h, 0) {}
  int at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
  int& at(int x, int y) { return labels[static_cast<size_t>(y) * width + x]; }
};

// Dense gradient-orientation histogram with rootSIFT normalization
// (L1-normalize then elementwise sqrt). Zero-gradient patches stay zero.
inline DescriptorField dense_descriptors(const Image& img,
                                         const DescriptorParams& params = {}) {
  const int p = params.patch_size;
  const int cells = params.cells;
  const int bins = params.bins;
  if (img.width() < p || img.height() < p)
    throw ContractError("dense_descriptors: image smaller than patch");
  const int half = p / 2;
  const int cell_px = p / cells;
  const int dims = cells * cells * bins;

  // Gradients on the mirror-padded grayscale image, precomputed with apron.
  const int aw = img.width() + 2 * half + 2;
  const int ah = img.height() + 2 * half + 2;
  std::vector<float> gx(static_cast<size_t>(aw) * ah), gy(gx.size());
  for (int y = 0; y < ah; ++y)
    for (int x = 0; x < aw; ++x) {
      int ix = x - half - 1, iy = y - half - 1;
      gx[static_cast<size_t>(y) * aw + x] =
          (img.gray_mirror(ix + 1, iy) - img.gray_mirror(ix - 1, iy)) * 0.5f;
      gy[static_cast<size_t>(y) * aw + x] =
          (img.gray_mirror(ix, iy + 1) - img.gray_mirror(ix, iy - 1)) * 0.5f;
    }

  std::vector<float> weight(static_cast<size_t>(p) * p);
  for (int dy = -half; dy < half; ++dy)
    for (int dx = -half; dx < half; ++dx) {
      double r2 = (dx + 0.5) * (dx + 0.5) + (dy + 0.5) * (dy + 0.5);
      weight[static_cast<size_t>(dy + half) * p + (dx + half)] =
          static_cast<float>(std::exp(-r2 / (2.0 * params.sigma * params.sigma)));
    }

  DescriptorField field(img.width(), img.height(), dims);
  const double bin_scale = bins / (2.0 * M_PI);

  std::vector<double> hist(dims);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::fill(hist.begin(), hist.end(), 0.0);
      for (int dy = -half; dy < half; ++dy) {
        const int cy = (dy + half) / cell_px;
        const size_t row = static_cast<size_t>(y + dy + half + 1) * aw + (x + half + 1);
        for (int dx = -half; dx < half; ++dx) {
          float g1 = gx[row + dx], g2 = gy[row + dx];
          double mag = std::sqrt(static_cast<double>(g1) * g1 +
                                 static_cast<double>(g2) * g2);
          if (mag == 0.0) continue;
          double ang = std::atan2(static_cast<double>(g2), static_cast<double>(g1));
          if (ang < 0) ang += 2.0 * M_PI;
          double fb = ang * bin_scale;
          int b0 = static_cast<int>(fb) % bins;
          int b1 = (b0 + 1) % bins;
          double t = fb - std::floor(fb);
          int cx = (dx + half) / cell_px;
          double w = mag * weight[static_cast<size_t>(dy + half) * p + (dx + half)];
          double* cell = hist.data() + (static_cast<size_t>(cy) * cells + cx) * bins;
          cell[b0] += w * (1.0 - t);
          cell[b1] += w * t;
        }
      }
      double l1 = 0.0;
      for (double h : hist) l1 += h;
      float* out = field.at(x, y);
      if (l1 > 0.0) {
        for (int d = 0; d < dims; ++d)
          out[d] = static_cast<float>(std::sqrt(hist[d] / l1));
      }
    }
  }
  return field;
}

// Cluster index per pixel: argmax of the ReLU'd descriptor, ties to the
// lowest channel. Monotone channelwise maps stacked on top cannot change it.
inline LabelMap classify_pixels(const DescriptorField& field) {
  LabelMap map(field.width(), field.height());
  for (int y = 0; y < field.height(); ++y)
    for (int x = 0; x < field.width(); ++x) {
      const float* d = field.at(x, y);
      int best = 0;
      float best_v = std::max(d[0], 0.f);
      for (int c = 1; c < field.dims(); ++c) {
        float v = std::max(d[c], 0.f);
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      map.at(x, y) = best;
    }
  return map;
}

struct PixelCoord {
  int x = 0;
  int y = 0;
  bool operator==(const PixelCoord&) const = default;
};

// Channel means and population standard deviations over a region.
inline ColorStats color_stats(const Image& img, const std::vector<PixelCoord>& region) {
  if (region.empty()) throw ContractError("color_stats: empty region");
  ColorStats s;
  for (const auto& p : region)
    for (int c = 0; c < 3; ++c) s.mean[c] += img.at(p.x, p.y, c);
  for (int c = 0; c < 3; ++c) s.mean[c] /= static_cast<double>(region.size());
  for (const auto& p : region)
    for (int c = 0; c < 3; ++c) {
      double d = img.at(p.x, p.y, c) - s.mean[c];
      s.stddev[c] += d * d;
    }
  for (int c = 0; c < 3; ++c)
    s.stddev[c] = std::sqrt(s.stddev[c] / static_cast<double>(region.size()));
  return s;
}

enum class Norm { L1, L2 };

inline double descriptor_distance(const float* a, const float* b, int dims, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::L1) {
    for (int i = 0; i < dims; ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
    return acc;
  }
  for (int i = 0; i < dims; ++i) {
    double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double descriptor_distance(const std::vector<float>& a,
                                  const std::vector<float>& b, Norm norm) {
  if (a.size() != b.size())
    throw ContractError("descriptor_distance: dimension mismatch");
  return descriptor_distance(a.data(), b.data(), static_cast<int>(a.size()), norm);
}

}  // namespace hf
