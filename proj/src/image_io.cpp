#include "facepipe/image_io.hpp"

#include <png.h>

#include <array>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "facepipe/error.hpp"

namespace facepipe::io {

namespace {

constexpr std::array<unsigned char, 8> kPngSignature = {0x89, 'P', 'N', 'G',
                                                        '\r', '\n', 0x1a, '\n'};

// Reads one whitespace-separated PGM header token, skipping '#' comments.
std::string next_pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

long parse_pgm_number(std::istream& in, const char* what) {
  const std::string tok = next_pgm_token(in);
  if (tok.empty()) throw Error(Errc::corrupt_header, std::string("missing PGM ") + what);
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw Error(Errc::corrupt_header, std::string("non-numeric PGM ") + what + ": " + tok);
  }
  return std::stol(tok);
}

Image load_pgm(std::istream& in, const std::filesystem::path& path) {
  const long width = parse_pgm_number(in, "width");
  const long height = parse_pgm_number(in, "height");
  const long maxval = parse_pgm_number(in, "maxval");
  if (width <= 0 || height <= 0)
    throw Error(Errc::corrupt_header, "bad PGM dimensions in " + path.string());
  if (maxval <= 0)
    throw Error(Errc::corrupt_header, "bad PGM maxval in " + path.string());
  if (maxval > 255)
    throw Error(Errc::unsupported_format,
                "16-bit PGM not supported: " + path.string());

  // The maxval token is followed by exactly one whitespace byte, already
  // consumed by the tokenizer.
  Image img(static_cast<int>(width), static_cast<int>(height));
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.pixel_count()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixel_count())
    throw Error(Errc::corrupt_header,
                "truncated PGM body in " + path.string());
  return img;
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

Image load_png(const std::filesystem::path& path) {
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.string().c_str(), "rb");
  if (!ctx.fp) throw Error(Errc::file_not_found, "cannot open " + path.string());

  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw Error(Errc::io_error, "libpng init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw Error(Errc::io_error, "libpng info init failed");

  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error(Errc::corrupt_header, "corrupt PNG: " + path.string());

  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 width = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 height = png_get_image_height(ctx.png, ctx.info);
  const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
  const int color_type = png_get_color_type(ctx.png, ctx.info);

  if (color_type != PNG_COLOR_TYPE_GRAY)
    throw Error(Errc::unsupported_format,
                "PNG is not grayscale: " + path.string());
  if (bit_depth > 8)
    throw Error(Errc::unsupported_format,
                "PNG bit depth > 8: " + path.string());
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  png_set_interlace_handling(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  if (width == 0 || height == 0)
    throw Error(Errc::corrupt_header, "empty PNG: " + path.string());

  Image img(static_cast<int>(width), static_cast<int>(height));
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y)
    rows[y] = img.data.data() + static_cast<std::size_t>(y) * width;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);
  return img;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, "cannot open " + path.string());

  std::array<unsigned char, 8> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  const auto got = in.gcount();
  if (got >= 8 && magic == kPngSignature) {
    in.close();
    return load_png(path);
  }
  if (got >= 2 && magic[0] == 'P') {
    if (magic[1] == '5') {
      in.clear();
      in.seekg(2);
      return load_pgm(in, path);
    }
    if (magic[1] >= '1' && magic[1] <= '7')
      throw Error(Errc::unsupported_format,
                  std::string("unsupported PNM type P") + static_cast<char>(magic[1]) +
                      ": " + path.string());
  }
  throw Error(Errc::corrupt_header, "unrecognized image header in " + path.string());
}

void save_pgm(const Image& img, const std::filesystem::path& path) {
  if (!img.valid()) throw Error(Errc::invalid_argument, "invalid image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.pixel_count()));
  if (!out) throw Error(Errc::io_error, "write failed: " + path.string());
}

namespace {

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

void save_png(const Image& img, const std::filesystem::path& path) {
  if (!img.valid()) throw Error(Errc::invalid_argument, "invalid image");
  PngWriteCloser ctx;
  ctx.fp = std::fopen(path.string().c_str(), "wb");
  if (!ctx.fp) throw Error(Errc::io_error, "cannot write " + path.string());
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw Error(Errc::io_error, "libpng init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw Error(Errc::io_error, "libpng info init failed");
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error(Errc::io_error, "PNG write failed: " + path.string());

  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  std::vector<png_const_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.data.data() + static_cast<std::size_t>(y) * img.width;
  png_write_rows(ctx.png, const_cast<png_bytepp>(rows.data()),
                 static_cast<png_uint_32>(rows.size()));
  png_write_end(ctx.png, ctx.info);
}

}  // namespace facepipe::io
