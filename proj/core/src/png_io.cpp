#include "png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include "dynfilter/error.hpp"

namespace dynfilter::detail {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; the message is parked here first.
struct ErrorSlot {
  char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp message) {
  auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
  std::snprintf(slot->message, sizeof(slot->message), "%s", message);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct ReadHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~ReadHandles() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct WriteHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~WriteHandles() { png_destroy_write_struct(&png, &info); }
};

FilePtr open_png_for_read(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::FormatError, path.string() + " is not a PNG file");
  }
  return file;
}

[[noreturn]] void fail(const std::filesystem::path& path, const ErrorSlot& slot) {
  throw Error(ErrorCode::FormatError, path.string() + ": " + slot.message);
}

}  // namespace

LabelImage read_label_png(const std::filesystem::path& path) {
  FilePtr file = open_png_for_read(path);
  ErrorSlot slot;
  ReadHandles h;
  LabelImage img;
  std::vector<unsigned char> row;
  bool bad_layout = false;

  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  h.info = png_create_info_struct(h.png);
  if (setjmp(png_jmpbuf(h.png))) fail(path, slot);

  png_init_io(h.png, file.get());
  png_set_sig_bytes(h.png, 8);
  png_read_info(h.png, h.info);
  const int color = png_get_color_type(h.png, h.info);
  const int depth = png_get_bit_depth(h.png, h.info);
  if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
    bad_layout = true;
  } else {
    img.width = static_cast<int>(png_get_image_width(h.png, h.info));
    img.height = static_cast<int>(png_get_image_height(h.png, h.info));
    img.labels.resize(static_cast<std::size_t>(img.width) * img.height);
    row.resize(png_get_rowbytes(h.png, h.info));
    for (int y = 0; y < img.height; ++y) {
      png_read_row(h.png, row.data(), nullptr);
      for (int x = 0; x < img.width; ++x) {
        const std::uint16_t value =
            depth == 16 ? static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1])
                        : row[x];
        img.labels[static_cast<std::size_t>(y) * img.width + x] = value;
      }
    }
    png_read_end(h.png, nullptr);
  }
  if (bad_layout) {
    throw Error(ErrorCode::FormatError,
                path.string() + ": label map must be single-channel 8- or 16-bit");
  }
  return img;
}

void write_label_png(const std::filesystem::path& path, const LabelImage& image) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  ErrorSlot slot;
  WriteHandles h;
  std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 2);

  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  h.info = png_create_info_struct(h.png);
  if (setjmp(png_jmpbuf(h.png))) fail(path, slot);

  png_init_io(h.png, file.get());
  png_set_IHDR(h.png, h.info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(h.png, h.info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint16_t v = image.labels[static_cast<std::size_t>(y) * image.width + x];
      row[2 * x] = static_cast<unsigned char>(v >> 8);
      row[2 * x + 1] = static_cast<unsigned char>(v & 0xff);
    }
    png_write_row(h.png, row.data());
  }
  png_write_end(h.png, nullptr);
}

GrayImage read_gray_png(const std::filesystem::path& path) {
  FilePtr file = open_png_for_read(path);
  ErrorSlot slot;
  ReadHandles h;
  GrayImage img;

  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  h.info = png_create_info_struct(h.png);
  if (setjmp(png_jmpbuf(h.png))) fail(path, slot);

  png_init_io(h.png, file.get());
  png_set_sig_bytes(h.png, 8);
  png_read_info(h.png, h.info);
  const int color = png_get_color_type(h.png, h.info);
  const int depth = png_get_bit_depth(h.png, h.info);
  if (depth == 16) png_set_strip_16(h.png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(h.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(h.png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(h.png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(h.png, 1, -1, -1);
  }
  png_read_update_info(h.png, h.info);

  img.width = static_cast<int>(png_get_image_width(h.png, h.info));
  img.height = static_cast<int>(png_get_image_height(h.png, h.info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    png_read_row(h.png, &img.pixels[static_cast<std::size_t>(y) * img.width], nullptr);
  }
  png_read_end(h.png, nullptr);
  return img;
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& image) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  ErrorSlot slot;
  WriteHandles h;

  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  h.info = png_create_info_struct(h.png);
  if (setjmp(png_jmpbuf(h.png))) fail(path, slot);

  png_init_io(h.png, file.get());
  png_set_IHDR(h.png, h.info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(h.png, h.info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(h.png, &image.pixels[static_cast<std::size_t>(y) * image.width]);
  }
  png_write_end(h.png, nullptr);
}

}  // namespace dynfilter::detail
