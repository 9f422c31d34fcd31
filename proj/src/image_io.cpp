#include "flare/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

namespace flare {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

bool has_suffix(const std::string& s, const char* suf) {
  const size_t n = std::strlen(suf);
  if (s.size() < n) return false;
  for (size_t i = 0; i < n; ++i)
    if (std::tolower(static_cast<unsigned char>(s[s.size() - n + i])) != suf[i])
      return false;
  return true;
}

double decode_sample(uint8_t v, bool gamma) {
  const double x = v / 255.0;
  return gamma ? std::pow(x, 2.2) : x;
}

uint8_t encode_sample(double v, bool gamma) {
  double x = clamp01(v);
  if (gamma) x = std::pow(x, 1.0 / 2.2);
  return static_cast<uint8_t>(std::lround(x * 255.0));
}

// ---- PNG ----

ImageBuffer load_png(const std::string& path, bool gamma) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw Error(ErrorKind::Format, path + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Io, "libpng init failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<uint8_t> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Format, "corrupt PNG: " + path);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Format, "16-bit PNG not supported: " + path);
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Format, "unsupported PNG channel layout: " + path);
  }
  const size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * h);
  row_ptrs.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = raw.data() + y * stride;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageBuffer img(static_cast<int>(w), static_cast<int>(h), channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = decode_sample(raw[y * stride + x * channels + c], gamma);
  return img;
}

void save_png(const ImageBuffer& img, const std::string& path, bool gamma) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "PNG write failed: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<size_t>(x) * img.channels + c] = encode_sample(img.at(x, y, c), gamma);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---- binary PPM (P6) / PGM (P5) ----

int read_pnm_int(FILE* f) {
  int c = std::fgetc(f);
  while (c != EOF) {
    if (c == '#') {  // comment to end of line
      while (c != EOF && c != '\n') c = std::fgetc(f);
    } else if (!std::isspace(c)) {
      break;
    }
    c = std::fgetc(f);
  }
  if (c == EOF || !std::isdigit(c)) throw Error(ErrorKind::Format, "malformed PNM header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = std::fgetc(f);
  }
  return v;
}

ImageBuffer load_pnm(const std::string& path, bool gamma) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path);
  char magic[2];
  if (std::fread(magic, 1, 2, f.get()) != 2 || magic[0] != 'P' ||
      (magic[1] != '5' && magic[1] != '6'))
    throw Error(ErrorKind::Format, path + " is not a binary PPM/PGM file");
  const int channels = magic[1] == '6' ? 3 : 1;
  const int w = read_pnm_int(f.get());
  const int h = read_pnm_int(f.get());
  const int maxval = read_pnm_int(f.get());
  if (maxval != 255) throw Error(ErrorKind::Format, "only maxval 255 PNM supported");

  std::vector<uint8_t> raw(static_cast<size_t>(w) * h * channels);
  if (std::fread(raw.data(), 1, raw.size(), f.get()) != raw.size())
    throw Error(ErrorKind::Format, "truncated PNM payload: " + path);

  ImageBuffer img(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) =
            decode_sample(raw[(static_cast<size_t>(y) * w + x) * channels + c], gamma);
  return img;
}

void save_pnm(const ImageBuffer& img, const std::string& path, bool gamma) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  std::fprintf(f.get(), "P%c\n%d %d\n255\n", img.channels == 3 ? '6' : '5', img.width,
               img.height);
  std::vector<uint8_t> raw(static_cast<size_t>(img.width) * img.height * img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        raw[(static_cast<size_t>(y) * img.width + x) * img.channels + c] =
            encode_sample(img.at(x, y, c), gamma);
  if (std::fwrite(raw.data(), 1, raw.size(), f.get()) != raw.size())
    throw Error(ErrorKind::Io, "short write: " + path);
}

}  // namespace

ImageBuffer load_image(const std::string& path, bool gamma_decode) {
  if (has_suffix(path, ".png")) return load_png(path, gamma_decode);
  if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm"))
    return load_pnm(path, gamma_decode);
  // fall back on content sniffing for extensionless paths
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path);
  unsigned char head[2] = {0, 0};
  size_t got = std::fread(head, 1, 2, f.get());
  f.reset();
  if (got == 2 && head[0] == 0x89 && head[1] == 'P') return load_png(path, gamma_decode);
  if (got == 2 && head[0] == 'P' && (head[1] == '5' || head[1] == '6'))
    return load_pnm(path, gamma_decode);
  throw Error(ErrorKind::Format, "unsupported image format: " + path);
}

void save_image(const ImageBuffer& img, const std::string& path, bool gamma_encode) {
  if (img.empty()) throw Error(ErrorKind::Parameter, "cannot save empty image");
  if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm"))
    save_pnm(img, path, gamma_encode);
  else
    save_png(img, path, gamma_encode);
}

void save_mask(const Mask& m, const std::string& path) {
  ImageBuffer img(m.width, m.height, 1);
  for (size_t i = 0; i < m.data.size(); ++i) img.data[i] = m.data[i] != 0.0 ? 1.0 : 0.0;
  save_image(img, path);
}

Mask load_mask(const std::string& path) {
  ImageBuffer img = load_image(path);
  if (img.channels != 1) img = luminance(img);
  Mask m(img.width, img.height);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = img.data[i] >= 0.5 ? 1.0 : 0.0;
  return m;
}

}  // namespace flare
