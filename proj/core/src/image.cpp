#include "pinnafe/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "pinnafe/errors.hpp"
#include "pinnafe/rng.hpp"

namespace pinnafe {

namespace {

uint8_t to_byte(float v) {
  float c = std::clamp(v, 0.0f, 1.0f);
  return uint8_t(std::lround(c * 255.0f));
}

Image load_pgm(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  struct Closer {
    FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};
  char magic[3] = {};
  if (std::fscanf(f, "%2s", magic) != 1 || std::strcmp(magic, "P5") != 0)
    throw IoError(path + ": only binary PGM (P5) is supported");
  auto next_int = [&]() {
    int c;
    // skip whitespace and comment lines
    for (;;) {
      c = std::fgetc(f);
      if (c == '#') {
        while (c != '\n' && c != EOF) c = std::fgetc(f);
      } else if (!std::isspace(c)) {
        break;
      }
    }
    int v = 0;
    while (std::isdigit(c)) {
      v = v * 10 + (c - '0');
      c = std::fgetc(f);
    }
    return v;
  };
  int w = next_int(), h = next_int(), maxv = next_int();
  if (w <= 0 || h <= 0 || maxv <= 0 || maxv > 255)
    throw IoError(path + ": unsupported PGM header");
  Image img(w, h, 1);
  std::vector<uint8_t> row(static_cast<size_t>(w));
  for (int y = 0; y < h; ++y) {
    if (std::fread(row.data(), 1, size_t(w), f) != size_t(w))
      throw IoError(path + ": truncated PGM");
    for (int x = 0; x < w; ++x)
      img.at(x, y) = float(row[size_t(x)]) / float(maxv);
  }
  return img;
}

Image load_png_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    throw IoError(path + ": PNG decode failed");
  }
  png_init_io(png, f);
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    throw IoError(path + ": unsupported channel count");
  }
  Image img(int(w), int(h), channels);
  std::vector<uint8_t> row(size_t(w) * size_t(channels));
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (size_t i = 0; i < row.size(); ++i)
      img.data[size_t(y) * row.size() + i] = float(row[i]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(f);
  return img;
}

}  // namespace

Image load_image(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& c : ext) c = char(std::tolower(c));
  if (ext == "pgm") return load_pgm(path);
  if (ext == "png") return load_png_file(path);
  throw IoError("unsupported image format: " + path);
}

void save_png(const std::string& path, const Image& img) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw IoError(path + ": PNG encode failed");
  }
  png_init_io(png, f);
  int color = img.ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(size_t(img.w) * size_t(img.ch));
  for (int y = 0; y < img.h; ++y) {
    for (size_t i = 0; i < row.size(); ++i)
      row[i] = to_byte(img.data[size_t(y) * row.size() + i]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void save_pgm(const std::string& path, const Image& img) {
  if (img.ch != 1) throw IoError("PGM supports grayscale only");
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "P5\n%d %d\n255\n", img.w, img.h);
  std::vector<uint8_t> row(size_t(img.w));
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) row[size_t(x)] = to_byte(img.at(x, y));
    std::fwrite(row.data(), 1, row.size(), f);
  }
  std::fclose(f);
}

double luminance(const Image& img, int x, int y) {
  if (img.ch == 1) return img.at(x, y, 0);
  return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
         0.114 * img.at(x, y, 2);
}

Image to_gray(const Image& img) {
  if (img.ch == 1) return img;
  Image g(img.w, img.h, 1);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) g.at(x, y) = float(luminance(img, x, y));
  return g;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kern(size_t(2 * radius + 1));
  double s = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kern[size_t(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    s += kern[size_t(i + radius)];
  }
  for (auto& k : kern) k /= s;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  Image tmp(img.w, img.h, img.ch), out(img.w, img.h, img.ch);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kern[size_t(i + radius)] * img.at(reflect(x + i, img.w), y, c);
        tmp.at(x, y, c) = float(acc);
      }
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kern[size_t(i + radius)] * tmp.at(x, reflect(y + i, img.h), c);
        out.at(x, y, c) = float(acc);
      }
  return out;
}

double otsu_threshold(const Image& gray) {
  long hist[256] = {};
  long total = 0;
  for (int y = 0; y < gray.h; ++y)
    for (int x = 0; x < gray.w; ++x) {
      hist[to_byte(gray.at(x, y))]++;
      total++;
    }
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += double(i) * double(hist[i]);
  double sum_b = 0.0, best = -1.0;
  long w_b = 0;
  int thr = 127;
  for (int i = 0; i < 256; ++i) {
    w_b += hist[i];
    if (w_b == 0) continue;
    long w_f = total - w_b;
    if (w_f == 0) break;
    sum_b += double(i) * double(hist[i]);
    double m_b = sum_b / double(w_b);
    double m_f = (sum_all - sum_b) / double(w_f);
    double between = double(w_b) * double(w_f) * (m_b - m_f) * (m_b - m_f);
    if (between > best) {
      best = between;
      thr = i;
    }
  }
  return (double(thr) + 0.5) / 255.0;
}

std::vector<uint8_t> threshold_mask(const Image& gray, double thr) {
  std::vector<uint8_t> mask(size_t(gray.w) * size_t(gray.h));
  for (int y = 0; y < gray.h; ++y)
    for (int x = 0; x < gray.w; ++x)
      mask[size_t(y) * size_t(gray.w) + size_t(x)] =
          gray.at(x, y) > thr ? 1 : 0;
  return mask;
}

Image phantom_disk(int w, int h, double cx, double cy, double radius,
                   float fg, float bg, double blur_sigma) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double dx = x - cx, dy = y - cy;
      img.at(x, y) = dx * dx + dy * dy <= radius * radius ? fg : bg;
    }
  return gaussian_blur(img, blur_sigma);
}

Image phantom_ring(int w, int h, double cx, double cy, double r_in,
                   double r_out, float fg, float bg, double blur_sigma) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double r = std::hypot(x - cx, y - cy);
      img.at(x, y) = (r >= r_in && r <= r_out) ? fg : bg;
    }
  return gaussian_blur(img, blur_sigma);
}

Image synthetic_scene(int w, int h, int kind, uint64_t seed) {
  Rng rng(seed * 1315423911ULL + uint64_t(kind));
  Image img(w, h, 1);
  // coarse value-noise lattice shared by all kinds
  const int gw = 8, gh = 8;
  std::vector<double> lattice(size_t((gw + 1) * (gh + 1)));
  for (auto& v : lattice) v = rng.uniform01();
  auto noise = [&](double u, double v) {
    double fx = u * gw, fy = v * gh;
    int ix = std::min(gw - 1, int(fx)), iy = std::min(gh - 1, int(fy));
    double tx = fx - ix, ty = fy - iy;
    auto l = [&](int i, int j) { return lattice[size_t(j * (gw + 1) + i)]; };
    return (1 - tx) * (1 - ty) * l(ix, iy) + tx * (1 - ty) * l(ix + 1, iy) +
           (1 - tx) * ty * l(ix, iy + 1) + tx * ty * l(ix + 1, iy + 1);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double u = double(x) / (w - 1), v = double(y) / (h - 1);
      double val = 0.0;
      switch (kind % 5) {
        case 0:  // soft horizontal gradient + noise: mid-key
          val = 0.15 + 0.6 * u + 0.2 * noise(u, v);
          break;
        case 1:  // low-key vignette
          val = 0.8 * std::exp(-3.0 * ((u - 0.5) * (u - 0.5) +
                                       (v - 0.5) * (v - 0.5))) *
                (0.4 + 0.6 * noise(u, v));
          break;
        case 2: {  // bright blobs on dark ground: bimodal
          double b1 = std::exp(-40.0 * ((u - 0.3) * (u - 0.3) +
                                        (v - 0.4) * (v - 0.4)));
          double b2 = std::exp(-60.0 * ((u - 0.7) * (u - 0.7) +
                                        (v - 0.65) * (v - 0.65)));
          val = 0.08 + 0.85 * std::min(1.0, b1 + b2) + 0.05 * noise(u, v);
          break;
        }
        case 3:  // high-key with texture
          val = 0.55 + 0.35 * noise(u, v) + 0.1 * std::sin(9.0 * u) * 0.5;
          break;
        default:  // diagonal bands, wide mid histogram
          val = 0.5 + 0.3 * std::sin(7.0 * (u + v)) + 0.2 * noise(v, u) - 0.1;
          break;
      }
      img.at(x, y) = float(std::clamp(val, 0.0, 1.0));
    }
  return img;
}

}  // namespace pinnafe
