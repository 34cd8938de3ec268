#include "markerlens/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <vector>

namespace markerlens {
namespace {

std::string lower_ext(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_read(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(Errc::file_not_found, "no such file: " + path);
  }
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(Errc::io_failure, "cannot open for reading: " + path);
  return f;
}

FilePtr open_for_write(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(Errc::io_failure, "cannot open for writing: " + path);
  return f;
}

// --- PNM (P5/P6) ---------------------------------------------------------

// Reads one whitespace-delimited unsigned integer, skipping '#' comments.
long pnm_read_int(std::FILE* f, const std::string& path) {
  int c = std::fgetc(f);
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = std::fgetc(f);
    } else if (!std::isspace(c)) {
      break;
    }
    c = std::fgetc(f);
  }
  if (c == EOF || !std::isdigit(c)) {
    throw Error(Errc::corrupt_data, "malformed PNM header: " + path);
  }
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 28) throw Error(Errc::corrupt_data, "absurd PNM field: " + path);
    c = std::fgetc(f);
  }
  return v;
}

ImageRGB load_pnm(const std::string& path) {
  FilePtr f = open_for_read(path);
  char magic[2] = {0, 0};
  if (std::fread(magic, 1, 2, f.get()) != 2 || magic[0] != 'P' ||
      (magic[1] != '5' && magic[1] != '6')) {
    throw Error(Errc::unsupported_format, "not a binary PPM/PGM: " + path);
  }
  const bool color = magic[1] == '6';
  const long w = pnm_read_int(f.get(), path);
  const long h = pnm_read_int(f.get(), path);
  const long maxval = pnm_read_int(f.get(), path);
  if (w < 1 || h < 1 || w > 0xffff || h > 0xffff) {
    throw Error(Errc::corrupt_data, "bad PNM dimensions: " + path);
  }
  if (maxval != 255) {
    throw Error(Errc::unsupported_format, "PNM maxval must be 255: " + path);
  }
  // pnm_read_int consumed the single whitespace byte after maxval.

  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  ImageRGB img(static_cast<int>(w), static_cast<int>(h));
  if (color) {
    if (std::fread(img.data.data(), 1, n * 3, f.get()) != n * 3) {
      throw Error(Errc::corrupt_data, "truncated PPM payload: " + path);
    }
  } else {
    std::vector<std::uint8_t> gray(n);
    if (std::fread(gray.data(), 1, n, f.get()) != n) {
      throw Error(Errc::corrupt_data, "truncated PGM payload: " + path);
    }
    for (std::size_t i = 0; i < n; ++i) {
      img.data[i * 3] = img.data[i * 3 + 1] = img.data[i * 3 + 2] = gray[i];
    }
  }
  return img;
}

void save_pnm(const std::uint8_t* data, int width, int height, bool color,
              const std::string& path) {
  FilePtr f = open_for_write(path);
  char header[64];
  const int len = std::snprintf(header, sizeof(header), "%s %d %d 255\n",
                                color ? "P6" : "P5", width, height);
  const std::size_t n =
      static_cast<std::size_t>(width) * height * (color ? 3 : 1);
  if (std::fwrite(header, 1, static_cast<std::size_t>(len), f.get()) !=
          static_cast<std::size_t>(len) ||
      std::fwrite(data, 1, n, f.get()) != n) {
    throw Error(Errc::io_failure, "short write: " + path);
  }
  if (std::fflush(f.get()) != 0) {
    throw Error(Errc::io_failure, "flush failed: " + path);
  }
}

// --- PNG ------------------------------------------------------------------

// libpng reports fatal errors via longjmp; keep C++ objects with
// destructors out of the setjmp scope.
struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      png_destroy_read_struct(&png, &info, nullptr);
      png = nullptr;
      info = nullptr;
    }
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngWriter() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      png = nullptr;
      info = nullptr;
    }
  }
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;
};

// Runs the libpng read steps under setjmp. Returns false when libpng bailed.
bool png_read_guarded(PngReader& r, std::FILE* f, ImageRGB& img,
                      bool& unsupported, std::string& detail) {
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(r.png))) {
    return false;
  }
  png_init_io(r.png, f);
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  const png_uint_32 w = png_get_image_width(r.png, r.info);
  const png_uint_32 h = png_get_image_height(r.png, r.info);
  const int depth = png_get_bit_depth(r.png, r.info);
  const int type = png_get_color_type(r.png, r.info);
  if (w < 1 || h < 1 || w > 0xffff || h > 0xffff) {
    detail = "bad PNG dimensions";
    return false;
  }
  if (depth == 16) {
    unsupported = true;
    detail = "16-bit PNG not supported";
    return false;
  }

  if (type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  if (type == PNG_COLOR_TYPE_GRAY || type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(r.png);
  }
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  if (png_get_rowbytes(r.png, r.info) != static_cast<std::size_t>(w) * 3) {
    unsupported = true;
    detail = "unexpected PNG layout";
    return false;
  }

  img = ImageRGB(static_cast<int>(w), static_cast<int>(h));
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y] = img.data.data() + static_cast<std::size_t>(y) * w * 3;
  }
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return true;
}

ImageRGB load_png(const std::string& path) {
  FilePtr f = open_for_read(path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(Errc::unsupported_format, "not a PNG: " + path);
  }

  PngReader reader;
  if (!reader.png) throw Error(Errc::io_failure, "libpng init failed");

  ImageRGB img;
  bool unsupported = false;
  std::string detail;
  if (!png_read_guarded(reader, f.get(), img, unsupported, detail)) {
    if (detail.empty()) detail = "PNG decode failed";
    throw Error(unsupported ? Errc::unsupported_format : Errc::corrupt_data,
                detail + ": " + path);
  }
  return img;
}

bool png_write_guarded(PngWriter& w, std::FILE* f, const std::uint8_t* data,
                       int width, int height, bool color) {
  if (setjmp(png_jmpbuf(w.png))) {
    return false;
  }
  png_init_io(w.png, f);
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8,
               color ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  const std::size_t stride = static_cast<std::size_t>(width) * (color ? 3 : 1);
  for (int y = 0; y < height; ++y) {
    png_write_row(w.png, const_cast<png_bytep>(data + y * stride));
  }
  png_write_end(w.png, nullptr);
  return true;
}

void save_png(const std::uint8_t* data, int width, int height, bool color,
              const std::string& path) {
  FilePtr f = open_for_write(path);
  PngWriter writer;
  if (!writer.png) throw Error(Errc::io_failure, "libpng init failed");
  if (!png_write_guarded(writer, f.get(), data, width, height, color)) {
    throw Error(Errc::io_failure, "PNG encode failed: " + path);
  }
  if (std::fflush(f.get()) != 0) {
    throw Error(Errc::io_failure, "flush failed: " + path);
  }
}

}  // namespace

ImageRGB load_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".ppm" || ext == ".pgm") return load_pnm(path);

  // No recognized extension: sniff the magic bytes.
  {
    FilePtr f = open_for_read(path);
    unsigned char magic[2] = {0, 0};
    const std::size_t got = std::fread(magic, 1, 2, f.get());
    if (got == 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
      return load_pnm(path);
    }
    if (got == 2 && magic[0] == 0x89 && magic[1] == 'P') {
      return load_png(path);
    }
  }
  throw Error(Errc::unsupported_format, "unrecognized image format: " + path);
}

void save_image(const ImageRGB& img, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    save_png(img.data.data(), img.width, img.height, true, path);
  } else if (ext == ".ppm") {
    save_pnm(img.data.data(), img.width, img.height, true, path);
  } else {
    throw Error(Errc::unsupported_format, "RGB images save as .png or .ppm: " + path);
  }
}

void save_image(const ImageGray& img, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    save_png(img.data.data(), img.width, img.height, false, path);
  } else if (ext == ".pgm") {
    save_pnm(img.data.data(), img.width, img.height, false, path);
  } else {
    throw Error(Errc::unsupported_format, "gray images save as .png or .pgm: " + path);
  }
}

bool is_supported_image_path(const std::string& path) {
  const std::string ext = lower_ext(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

}  // namespace markerlens
