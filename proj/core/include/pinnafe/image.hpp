#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace pinnafe {

// Dense float image, values in [0,1], interleaved channels (1 = gray,
// 3 = RGB).  Small and explicit; this library only needs 8-bit-depth
// round-trips.
struct Image {
  int w = 0, h = 0, ch = 1;
  std::vector<float> data;

  Image() = default;
  Image(int w_, int h_, int ch_) : w(w_), h(h_), ch(ch_) {
    data.assign(size_t(w) * size_t(h) * size_t(ch), 0.0f);
  }
  float& at(int x, int y, int c = 0) {
    return data[(size_t(y) * size_t(w) + size_t(x)) * size_t(ch) + size_t(c)];
  }
  float at(int x, int y, int c = 0) const {
    return data[(size_t(y) * size_t(w) + size_t(x)) * size_t(ch) + size_t(c)];
  }
  bool gray() const { return ch == 1; }
};

// PNG (8-bit gray or RGB; palette/alpha inputs are normalized) and binary
// PGM (P5).  Format chosen by extension on load; save_* are explicit.
Image load_image(const std::string& path);
void save_png(const std::string& path, const Image& img);
void save_pgm(const std::string& path, const Image& img);

// Rec.601 luma; returns the sole channel for gray images.
double luminance(const Image& img, int x, int y);
Image to_gray(const Image& img);

// Separable Gaussian blur with reflected edges; sigma in pixels.
Image gaussian_blur(const Image& img, double sigma);

// Classic Otsu threshold over a 256-bin histogram of a gray image.
double otsu_threshold(const Image& gray);
std::vector<uint8_t> threshold_mask(const Image& gray, double thr);

// Synthetic test content -------------------------------------------------
// Gray phantom: disk or annulus on a constant background, optional blur.
Image phantom_disk(int w, int h, double cx, double cy, double radius,
                   float fg, float bg, double blur_sigma);
Image phantom_ring(int w, int h, double cx, double cy, double r_in,
                   double r_out, float fg, float bg, double blur_sigma);
// Procedural scenes with varied, non-degenerate histograms (kind 0..4):
// gradients, vignettes, blobs and value noise mixed per kind.
Image synthetic_scene(int w, int h, int kind, uint64_t seed);

}  // namespace pinnafe
