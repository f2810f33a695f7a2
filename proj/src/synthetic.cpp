#include "aesust/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "aesust/layers.hpp"
#include "aesust/persist.hpp"

namespace aesust {

namespace {

float unit(float v) { return std::clamp(v, 0.0f, 1.0f); }

}  // namespace

ImageTensor synthetic_content(Index height, Index width, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  float base[3], slope_x[3], slope_y[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.2f + 0.6f * u(rng);
    slope_x[c] = 0.4f * (u(rng) - 0.5f);
    slope_y[c] = 0.4f * (u(rng) - 0.5f);
  }
  struct Blob {
    float cy, cx, r, color[3];
  };
  std::vector<Blob> blobs(3);
  for (Blob& b : blobs) {
    b.cy = u(rng) * height;
    b.cx = u(rng) * width;
    b.r = (0.1f + 0.25f * u(rng)) * std::min(height, width);
    for (float& c : b.color) c = u(rng);
  }
  ImageTensor img({1, 3, height, width});
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const float fy = static_cast<float>(y) / height, fx = static_cast<float>(x) / width;
      for (int c = 0; c < 3; ++c) {
        float v = base[c] + slope_x[c] * fx + slope_y[c] * fy;
        for (const Blob& b : blobs) {
          const float d2 = ((y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx)) / (b.r * b.r);
          const float w = std::exp(-d2);
          v = (1 - w) * v + w * b.color[c];
        }
        img(0, c, y, x) = unit(v);
      }
    }
  }
  return img;
}

ImageTensor synthetic_style(Index height, Index width, std::uint64_t seed) {
  Rng rng(seed ^ 0x5eedull);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::normal_distribution<float> noise(0.0f, 0.08f);
  const float angle = u(rng) * std::numbers::pi_v<float>;
  const float period = 4.0f + 10.0f * u(rng);
  float a[3], b[3];
  for (int c = 0; c < 3; ++c) {
    a[c] = u(rng);
    b[c] = u(rng);
  }
  const float ca = std::cos(angle), sa = std::sin(angle);
  ImageTensor img({1, 3, height, width});
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const float t = 0.5f + 0.5f * std::sin(2 * std::numbers::pi_v<float> * (ca * x + sa * y) / period);
      const float n = noise(rng);
      for (int c = 0; c < 3; ++c) img(0, c, y, x) = unit(a[c] * t + b[c] * (1 - t) + n);
    }
  }
  return img;
}

SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& root, int count, Index height, Index width,
                                       std::uint64_t seed) {
  SyntheticCorpus corpus{root / "content", root / "style"};
  std::filesystem::create_directories(corpus.content_dir);
  std::filesystem::create_directories(corpus.style_dir);
  for (int i = 0; i < count; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    write_file_atomic(corpus.content_dir / name, encode_png(synthetic_content(height, width, seed * 1000 + i)));
    write_file_atomic(corpus.style_dir / name, encode_png(synthetic_style(height, width, seed * 1000 + i)));
  }
  return corpus;
}

}  // namespace aesust
