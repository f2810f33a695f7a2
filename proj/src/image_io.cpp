#include "aesust/image_io.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <string>

#include "aesust/errors.hpp"

namespace aesust {

namespace {

struct RawImage {
  Index height = 0;
  Index width = 0;
  Index channels = 0;
  std::vector<std::uint8_t> pixels;  // interleaved
};

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

bool looks_like_png(std::span<const std::uint8_t> b) { return b.size() >= 2 && b[0] == 0x89 && b[1] == 'P'; }
bool looks_like_jpeg(std::span<const std::uint8_t> b) { return b.size() >= 2 && b[0] == 0xFF && b[1] == 0xD8; }

// libpng validates chunks itself, but its messages carry no byte position.
void check_png_header(std::span<const std::uint8_t> b) {
  for (std::size_t i = 0; i < sizeof(kPngSignature); ++i) {
    if (i >= b.size()) throw FormatError("corrupt PNG: stream ends at offset " + std::to_string(i));
    if (b[i] != kPngSignature[i]) throw FormatError("corrupt PNG: bad signature byte at offset " + std::to_string(i));
  }
  if (b.size() < 33) throw FormatError("corrupt PNG: IHDR truncated at offset " + std::to_string(b.size()));
  const std::uint32_t len = (std::uint32_t{b[8]} << 24) | (std::uint32_t{b[9]} << 16) | (std::uint32_t{b[10]} << 8) | b[11];
  if (len != 13) throw FormatError("corrupt PNG: bad IHDR length at offset 8");
  if (std::memcmp(b.data() + 12, "IHDR", 4) != 0) throw FormatError("corrupt PNG: missing IHDR chunk at offset 12");
  const bool zero_w = b[16] == 0 && b[17] == 0 && b[18] == 0 && b[19] == 0;
  const bool zero_h = b[20] == 0 && b[21] == 0 && b[22] == 0 && b[23] == 0;
  if (zero_w) throw FormatError("corrupt PNG: zero width at offset 16");
  if (zero_h) throw FormatError("corrupt PNG: zero height at offset 20");
}

RawImage decode_png(std::span<const std::uint8_t> bytes, bool gray) {
  check_png_header(bytes);
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw FormatError(std::string("corrupt PNG: ") + img.message);
  }
  img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  RawImage raw;
  raw.height = img.height;
  raw.width = img.width;
  raw.channels = gray ? 1 : 3;
  raw.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raw.pixels.data(), 0, nullptr)) {
    std::string message = img.message;
    png_image_free(&img);
    throw FormatError("corrupt PNG: " + message);
  }
  return raw;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RawImage decode_jpeg(std::span<const std::uint8_t> bytes, bool gray) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  RawImage raw;
  // Nothing with a destructor is created between setjmp and the jpeg calls.
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(std::string("corrupt JPEG: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  raw.height = cinfo.output_height;
  raw.width = cinfo.output_width;
  raw.channels = cinfo.output_components;
  raw.pixels.resize(static_cast<std::size_t>(raw.height * raw.width * raw.channels));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * raw.width * raw.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return raw;
}

RawImage decode_raw(std::span<const std::uint8_t> bytes, bool gray) {
  if (looks_like_png(bytes)) return decode_png(bytes, gray);
  if (looks_like_jpeg(bytes)) return decode_jpeg(bytes, gray);
  throw FormatError("unsupported image format: unrecognized signature at offset 0");
}

}  // namespace

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
  RawImage raw = decode_raw(bytes, false);
  ImageTensor out({1, 3, raw.height, raw.width});
  const Index plane = raw.height * raw.width;
  for (Index p = 0; p < plane; ++p) {
    for (Index c = 0; c < 3; ++c) out[c * plane + p] = static_cast<float>(raw.pixels[static_cast<std::size_t>(p * 3 + c)]) / 255.0f;
  }
  return out;
}

Tensor<float> decode_mask(std::span<const std::uint8_t> bytes) {
  RawImage raw = decode_raw(bytes, true);
  Tensor<float> out({1, 1, raw.height, raw.width});
  for (Index p = 0; p < out.size(); ++p) out[p] = raw.pixels[static_cast<std::size_t>(p)] >= 128 ? 1.0f : 0.0f;
  return out;
}

std::vector<std::uint8_t> encode_png(const Tensor<float>& image) {
  require_rank4(image, "encode_png");
  const Index channels = image.dim(1), height = image.dim(2), width = image.dim(3);
  if (image.dim(0) != 1 || (channels != 1 && channels != 3)) {
    throw ShapeError("encode_png: expected 1×1×H×W or 1×3×H×W, got " + to_string(image.shape()));
  }
  const Index plane = height * width;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(plane * channels));
  for (Index p = 0; p < plane; ++p) {
    for (Index c = 0; c < channels; ++c) {
      const float v = std::clamp(image[c * plane + p], 0.0f, 1.0f);
      pixels[static_cast<std::size_t>(p * channels + c)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

Tensor<float> resize_bilinear(const Tensor<float>& image, Index out_h, Index out_w) {
  require_rank4(image, "resize_bilinear");
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: empty target size");
  const Index planes = image.dim(0) * image.dim(1), in_h = image.dim(2), in_w = image.dim(3);
  if (in_h == out_h && in_w == out_w) return image;
  Tensor<float> out({image.dim(0), image.dim(1), out_h, out_w});
  auto axis = [](Index dst, Index in, Index out, Index& i0, Index& i1, float& frac) {
    const double src = std::max(0.0, (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5);
    i0 = std::min<Index>(static_cast<Index>(src), in - 1);
    i1 = std::min<Index>(i0 + 1, in - 1);
    frac = static_cast<float>(src - static_cast<double>(i0));
  };
  for (Index p = 0; p < planes; ++p) {
    const float* src = image.raw() + p * in_h * in_w;
    float* dst = out.raw() + p * out_h * out_w;
    for (Index h = 0; h < out_h; ++h) {
      Index h0, h1;
      float fh;
      axis(h, in_h, out_h, h0, h1, fh);
      for (Index w = 0; w < out_w; ++w) {
        Index w0, w1;
        float fw;
        axis(w, in_w, out_w, w0, w1, fw);
        const float top = src[h0 * in_w + w0] * (1 - fw) + src[h0 * in_w + w1] * fw;
        const float bottom = src[h1 * in_w + w0] * (1 - fw) + src[h1 * in_w + w1] * fw;
        dst[h * out_w + w] = top * (1 - fh) + bottom * fh;
      }
    }
  }
  return out;
}

}  // namespace aesust
