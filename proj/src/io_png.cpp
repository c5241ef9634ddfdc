#include <png.h>

#include <csetjmp>
#include <cstring>
#include <memory>

#include "glassdepth/error.hpp"
#include "glassdepth/io.hpp"

namespace glassdepth::io {

namespace {

// libpng reports errors with longjmp; everything touched after setjmp lives
// behind a pointer that is set before it.
struct DecodeState {
  std::string_view bytes;
  std::size_t pos = 0;
  RawImage image;
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* state = static_cast<DecodeState*>(png_get_io_ptr(png));
  if (state->pos + n > state->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, state->bytes.data() + state->pos, n);
  state->pos += n;
}

void ignore_warning(png_structp, png_const_charp) {}

struct EncodeState {
  std::string out;
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
};

void write_to_memory(png_structp png, png_bytep data, png_size_t n) {
  auto* state = static_cast<EncodeState*>(png_get_io_ptr(png));
  state->out.append(reinterpret_cast<const char*>(data), n);
}

void flush_noop(png_structp) {}

}  // namespace

RawImage decode_png(std::string_view bytes) {
  if (bytes.size() < 8 ||
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw BadFormat("not a PNG file");
  }
  auto state = std::make_unique<DecodeState>();
  state->bytes = bytes;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, ignore_warning);
  if (!png) throw IoError("cannot allocate PNG reader");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("cannot allocate PNG info");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw BadFormat("corrupt PNG data");
  }
  png_set_read_fn(png, state.get(), read_from_memory);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  RawImage& img = state->image;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  state->buffer.resize(rowbytes * static_cast<std::size_t>(img.height));
  state->rows.resize(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    state->rows[y] = state->buffer.data() + rowbytes * static_cast<std::size_t>(y);
  }
  png_read_image(png, state->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count =
      static_cast<std::size_t>(img.width) * img.height * static_cast<std::size_t>(img.channels);
  img.samples.resize(count);
  const unsigned char* src = state->buffer.data();
  if (img.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      img.samples[i] = static_cast<std::uint16_t>((src[2 * i] << 8) | src[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) img.samples[i] = src[i];
  }
  return std::move(state->image);
}

std::string encode_png(const RawImage& image) {
  if (image.width < 1 || image.height < 1 || image.channels < 1 || image.channels > 4 ||
      (image.bit_depth != 8 && image.bit_depth != 16) ||
      image.samples.size() !=
          static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw InvalidArgument("malformed image for PNG encoding");
  }
  static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA,
                                        PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGB_ALPHA};
  auto state = std::make_unique<EncodeState>();
  const std::size_t bytes_per_sample = image.bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes =
      static_cast<std::size_t>(image.width) * image.channels * bytes_per_sample;
  state->buffer.resize(rowbytes * static_cast<std::size_t>(image.height));
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    if (bytes_per_sample == 2) {
      state->buffer[2 * i] = static_cast<unsigned char>(image.samples[i] >> 8);
      state->buffer[2 * i + 1] = static_cast<unsigned char>(image.samples[i] & 0xff);
    } else {
      state->buffer[i] = static_cast<unsigned char>(image.samples[i]);
    }
  }
  state->rows.resize(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    state->rows[y] = state->buffer.data() + rowbytes * static_cast<std::size_t>(y);
  }

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, ignore_warning);
  if (!png) throw IoError("cannot allocate PNG writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("cannot allocate PNG info");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed");
  }
  png_set_write_fn(png, state.get(), write_to_memory, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), image.bit_depth,
               kColorTypes[image.channels - 1], PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, state->rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(state->out);
}

}  // namespace glassdepth::io
