#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aesust/image_io.hpp"

namespace aesust {

/// Seeded procedural photo-like image: smooth gradient background with a few soft blobs.
ImageTensor synthetic_content(Index height, Index width, std::uint64_t seed);
/// Seeded procedural painting-like image: oriented colored stripes with brush-like noise.
ImageTensor synthetic_style(Index height, Index width, std::uint64_t seed);

struct SyntheticCorpus {
  std::filesystem::path content_dir;
  std::filesystem::path style_dir;
};

/// Writes `count` content and `count` style PNGs under root/content and root/style.
SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& root, int count = 8, Index height = 80,
                                       Index width = 96, std::uint64_t seed = 7);

}  // namespace aesust
