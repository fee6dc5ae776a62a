// Imaging utilities: file round-trips, luma, blur mass conservation, Otsu on
// two-tone content, phantoms, and the procedural scene generator.
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "pinnafe/errors.hpp"
#include "pinnafe/image.hpp"
#include "pinnafe/rng.hpp"

using namespace pinnafe;

namespace {

Image noise_image(int w, int h, int ch, uint64_t seed) {
  Image img(w, h, ch);
  Rng rng(seed);
  for (float& v : img.data)
    v = float(int(rng.below(256))) / 255.0f;  // byte-representable values
  return img;
}

double mean_intensity(const Image& img) {
  double s = 0.0;
  for (float v : img.data) s += v;
  return s / double(img.data.size());
}

}  // namespace

TEST_CASE("png round-trips byte-representable images exactly") {
  namespace fs = std::filesystem;
  for (int ch : {1, 3}) {
    Image img = noise_image(37, 23, ch, 42 + uint64_t(ch));
    std::string path = "roundtrip_test_" + std::to_string(ch) + ".png";
    save_png(path, img);
    Image back = load_image(path);
    REQUIRE(back.w == img.w);
    REQUIRE(back.h == img.h);
    REQUIRE(back.ch == img.ch);
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
    fs::remove(path);
  }
}

TEST_CASE("pgm round-trips gray images exactly") {
  namespace fs = std::filesystem;
  Image img = noise_image(64, 48, 1, 7);
  std::string path = "roundtrip_test.pgm";
  save_pgm(path, img);
  Image back = load_image(path);
  REQUIRE(back.w == 64);
  REQUIRE(back.h == 48);
  REQUIRE(back.ch == 1);
  for (size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
  fs::remove(path);
}

TEST_CASE("unreadable paths and unknown extensions fail loudly") {
  CHECK_THROWS_AS(load_image("does_not_exist_anywhere.png"), IoError);
  CHECK_THROWS_AS(load_image("file.tiff"), IoError);
}

TEST_CASE("luma uses the standard coefficients") {
  Image img(2, 1, 3);
  img.at(0, 0, 0) = 1.0f;  // pure red
  img.at(1, 0, 1) = 1.0f;  // pure green
  CHECK(luminance(img, 0, 0) == doctest::Approx(0.299).epsilon(1e-6));
  CHECK(luminance(img, 1, 0) == doctest::Approx(0.587).epsilon(1e-6));
  Image g(1, 1, 1);
  g.at(0, 0) = 0.25f;
  CHECK(luminance(g, 0, 0) == doctest::Approx(0.25).epsilon(1e-7));
  // gray conversion agrees with per-pixel luma
  Image converted = to_gray(img);
  REQUIRE(converted.ch == 1);
  CHECK(converted.at(0, 0) == doctest::Approx(0.299f).epsilon(1e-6));
}

TEST_CASE("gaussian blur preserves mean intensity and flattens variance") {
  Image img = noise_image(65, 65, 1, 99);
  Image blurred = gaussian_blur(img, 2.0);
  REQUIRE(blurred.w == img.w);
  CHECK(mean_intensity(blurred) ==
        doctest::Approx(mean_intensity(img)).epsilon(1e-4));
  double v0 = 0.0, v1 = 0.0, m0 = mean_intensity(img), m1 = mean_intensity(blurred);
  for (float v : img.data) v0 += (v - m0) * (v - m0);
  for (float v : blurred.data) v1 += (v - m1) * (v - m1);
  CHECK(v1 < 0.2 * v0);
  // sigma <= 0 is the identity
  Image same = gaussian_blur(img, 0.0);
  for (size_t i = 0; i < img.data.size(); ++i) CHECK(same.data[i] == img.data[i]);
  // a constant image is a fixed point (reflected edges add no mass)
  Image flat(16, 16, 1);
  for (float& v : flat.data) v = 0.37f;
  Image flat_b = gaussian_blur(flat, 3.0);
  for (float v : flat_b.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("otsu splits two-tone content at the gap") {
  Image img(32, 32, 1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) img.at(x, y) = (x < 16) ? 0.2f : 0.8f;
  double thr = otsu_threshold(img);
  CHECK(thr > 0.2);
  CHECK(thr < 0.8);
  auto mask = threshold_mask(img, thr);
  int on = 0;
  for (uint8_t m : mask) on += m;
  CHECK(on == 32 * 16);
}

TEST_CASE("unblurred phantoms have exact pixel-count masks") {
  const double r = 20.0, cx = 48.0, cy = 48.0;
  Image disk = phantom_disk(96, 96, cx, cy, r, 0.9f, 0.1f, 0.0);
  double thr = otsu_threshold(disk);
  auto mask = threshold_mask(disk, thr);
  int on = 0;
  for (uint8_t m : mask) on += m;
  // every pixel whose center is inside the circle, no transition pixels
  int want = 0;
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r * r) ++want;
    }
  CHECK(on == want);
  CHECK(std::abs(want - 3.14159265 * r * r) < 0.1 * r * r);

  Image ring = phantom_ring(96, 96, cx, cy, 12.0, 24.0, 0.9f, 0.1f, 0.0);
  auto rmask = threshold_mask(ring, otsu_threshold(ring));
  int ron = 0;
  for (uint8_t m : rmask) ron += m;
  int rwant = 0;
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      double dx = x - cx, dy = y - cy;
      double d2 = dx * dx + dy * dy;
      if (d2 >= 12.0 * 12.0 && d2 <= 24.0 * 24.0) ++rwant;
    }
  CHECK(ron == rwant);
}

TEST_CASE("blurred phantom stays binary-free at the rim") {
  Image disk = phantom_disk(64, 64, 32, 32, 15, 1.0f, 0.0f, 2.0);
  int transitional = 0;
  for (float v : disk.data)
    if (v > 0.05f && v < 0.95f) ++transitional;
  CHECK(transitional > 50);  // a soft rim exists
}

TEST_CASE("procedural scenes are deterministic, in range, and distinct") {
  for (int kind = 0; kind < 5; ++kind) {
    Image a = synthetic_scene(80, 60, kind, 11);
    Image b = synthetic_scene(80, 60, kind, 11);
    REQUIRE(a.data.size() == b.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
    for (float v : a.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    // non-degenerate histogram: spread over many bins
    std::vector<int> hist(256, 0);
    for (float v : a.data) ++hist[size_t(std::min(255, int(v * 256.0f)))];
    int occupied = 0;
    for (int c : hist) occupied += c > 0;
    CHECK(occupied > 40);
  }
  // different kinds differ
  Image k0 = synthetic_scene(32, 32, 0, 5);
  Image k3 = synthetic_scene(32, 32, 3, 5);
  int differ = 0;
  for (size_t i = 0; i < k0.data.size(); ++i) differ += k0.data[i] != k3.data[i];
  CHECK(differ > 100);
}
