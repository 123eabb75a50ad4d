#include "punch/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "punch/error.hpp"

namespace punch {

namespace {

void check_shape(int rows, int cols, std::size_t n) {
  if (rows <= 0 || cols <= 0 || static_cast<std::size_t>(rows) * cols != n) {
    throw DataError("image buffer does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void png_error_fn(png_structp, png_const_charp msg) { throw DataError(std::string("png: ") + msg); }
void png_warn_fn(png_structp, png_const_charp) {}

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_consume(png_structp png, png_bytep data, png_size_t len) {
  auto* r = static_cast<Reader*>(png_get_io_ptr(png));
  if (r->pos + len > r->bytes.size()) png_error(png, "truncated stream");
  std::memcpy(data, r->bytes.data() + r->pos, len);
  r->pos += len;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm16(int rows, int cols, std::span<const double> values,
                                       const std::string& comment) {
  check_shape(rows, cols, values.size());
  if (comment.find('\n') != std::string::npos) throw DataError("PGM comment must be a single line");
  const std::string header = "P5\n" + (comment.empty() ? std::string() : "# " + comment + "\n") + std::to_string(cols) + " " + std::to_string(rows) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + values.size() * 2);
  for (double v : values) {
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xFF));
  }
  return out;
}

void write_pgm16(const std::filesystem::path& path, int rows, int cols, std::span<const double> values,
                 const std::string& comment) {
  write_bytes(path, encode_pgm16(rows, cols, values, comment));
}

GrayImage16 read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  GrayImage16 img;
  in >> magic >> std::ws;
  while (in.peek() == '#') {
    std::string skip;
    std::getline(in, skip);
  }
  in >> img.cols >> img.rows >> maxval;
  if (magic != "P5" || maxval != 65535 || img.rows <= 0 || img.cols <= 0) {
    throw DataError(path.string() + " is not a 16-bit binary PGM");
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.rows) * img.cols);
  for (auto& p : img.pixels) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2)) throw DataError("truncated PGM " + path.string());
    p = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  const int bpp = image.kind == PngKind::rgb8 ? 3 : 1;
  check_shape(image.rows, image.cols, image.pixels.size() / bpp);
  if (image.pixels.size() % bpp != 0) throw DataError("image buffer has a partial pixel");
  if (image.kind == PngKind::indexed8 && (image.palette.empty() || image.palette.size() > 256)) {
    throw DataError("indexed image needs 1 to 256 palette entries");
  }

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_append, nullptr);
    const int colour = image.kind == PngKind::gray8 ? PNG_COLOR_TYPE_GRAY
                       : image.kind == PngKind::rgb8 ? PNG_COLOR_TYPE_RGB
                                                     : PNG_COLOR_TYPE_PALETTE;
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols), static_cast<png_uint_32>(image.rows), 8, colour,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_color> pal;
    if (image.kind == PngKind::indexed8) {
      for (const auto& c : image.palette) pal.push_back({c.r, c.g, c.b});
      png_set_PLTE(png, info, pal.data(), static_cast<int>(pal.size()));
    }
    std::vector<png_text> texts;
    for (const auto& [k, v] : image.text) {
      png_text t{};
      t.compression = PNG_TEXT_COMPRESSION_NONE;
      t.key = const_cast<png_charp>(k.c_str());
      t.text = const_cast<png_charp>(v.c_str());
      t.text_length = v.size();
      texts.push_back(t);
    }
    if (!texts.empty()) png_set_text(png, info, texts.data(), static_cast<int>(texts.size()));
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(image.cols) * bpp;
    for (int r = 0; r < image.rows; ++r) {
      png_write_row(png, const_cast<png_bytep>(image.pixels.data() + r * stride));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) { write_bytes(path, encode_png(image)); }

Image decode_png_rgb(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw DataError("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  Reader reader{bytes, 0};
  Image img;
  try {
    png_set_read_fn(png, &reader, png_consume);
    png_read_info(png, info);
    png_set_palette_to_rgb(png);
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_set_strip_16(png);
    png_read_update_info(png, info);
    img.cols = static_cast<int>(png_get_image_width(png, info));
    img.rows = static_cast<int>(png_get_image_height(png, info));
    img.kind = PngKind::rgb8;
    const std::size_t stride = png_get_rowbytes(png, info);
    if (stride != static_cast<std::size_t>(img.cols) * 3) png_error(png, "unexpected row layout");
    img.pixels.resize(stride * img.rows);
    for (int r = 0; r < img.rows; ++r) png_read_row(png, img.pixels.data() + r * stride, nullptr);
    png_textp text = nullptr;
    int n = 0;
    png_get_text(png, info, &text, &n);
    for (int i = 0; i < n; ++i) img.text.emplace_back(text[i].key, std::string(text[i].text, text[i].text_length));
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image score_image(int rows, int cols, std::span<const double> scores) {
  check_shape(rows, cols, scores.size());
  Image img{rows, cols, PngKind::gray8, {}, {}, {}};
  img.pixels.reserve(scores.size());
  for (double s : scores) img.pixels.push_back(to_byte(s));
  return img;
}

Image confusion_image(int rows, int cols, std::span<const Outcome> outcomes) {
  check_shape(rows, cols, outcomes.size());
  Image img{rows, cols, PngKind::indexed8, {}, {}, {}};
  for (int i = 0; i <= static_cast<int>(Outcome::ignored); ++i) img.palette.push_back(outcome_colour(Outcome(i)));
  img.pixels.reserve(outcomes.size());
  for (auto o : outcomes) img.pixels.push_back(static_cast<std::uint8_t>(o));
  return img;
}

Image false_colour(const HsiCube& cube, int r, int g, int b) {
  for (int ch : {r, g, b}) {
    if (ch < 0 || ch >= cube.channels()) {
      throw ConfigError("channel " + std::to_string(ch) + " out of range [0, " + std::to_string(cube.channels()) + ")");
    }
  }
  Image img{cube.rows(), cube.cols(), PngKind::rgb8, {}, {}, {}};
  img.pixels.resize(cube.pixel_count() * 3);
  const std::array<int, 3> chans{r, g, b};
  for (int k = 0; k < 3; ++k) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < cube.pixel_count(); ++i) {
      const double v = cube.spectrum(i)[chans[k]];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < cube.pixel_count(); ++i) {
      const double v = cube.spectrum(i)[chans[k]];
      img.pixels[i * 3 + k] = span > 0.0 ? to_byte((v - lo) / span) : 0;
    }
  }
  return img;
}

Image training_data_image(const HsiCube& cube, std::span<const PixelCoord> positives,
                          std::span<const PixelCoord> negatives) {
  Image img{cube.rows(), cube.cols(), PngKind::rgb8, {}, {}, {}};
  img.pixels.resize(cube.pixel_count() * 3);
  std::vector<double> mean(cube.pixel_count());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const auto s = cube.spectrum(i);
    double acc = 0.0;
    for (double v : s) acc += v;
    mean[i] = s.empty() ? 0.0 : acc / static_cast<double>(s.size());
  }
  const auto [lo, hi] = std::minmax_element(mean.begin(), mean.end());
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(span > 0.0 ? to_byte((mean[i] - *lo) / span) / 3 : 0);
    img.pixels[i * 3] = img.pixels[i * 3 + 1] = img.pixels[i * 3 + 2] = v;
  }
  auto paint = [&](std::span<const PixelCoord> pixels, Rgb c) {
    for (const auto& p : pixels) {
      if (!cube.contains(p)) throw DataError("training pixel outside the scene");
      const std::size_t i = cube.pixel_index(p) * 3;
      img.pixels[i] = c.r;
      img.pixels[i + 1] = c.g;
      img.pixels[i + 2] = c.b;
    }
  };
  paint(negatives, {220, 0, 0});
  paint(positives, {0, 220, 0});
  return img;
}

}  // namespace punch
