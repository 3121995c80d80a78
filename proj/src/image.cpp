#include "selfcal/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "selfcal/errors.hpp"

namespace selfcal {

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) *
                                std::max(channels, 0))) {}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1) throw ShapeError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ShapeError("image must have 1 or 3 channels");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw ShapeError("image data length does not match width * height * channels");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) throw DomainError("image value " + std::to_string(i) + " is not finite");
  }
}

DepthMap::DepthMap(int width, int height, double fill)
    : DepthMap(width, height, std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill)) {}

DepthMap::DepthMap(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) throw ShapeError("depth map dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("depth data length does not match width * height");
  }
}

void DepthMap::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i]) || data_[i] <= 0.0) {
      throw DomainError("depth at pixel " + std::to_string(i) + " is not finite and positive");
    }
  }
}

PixelSample sample_bilinear(const Image &img, double u, double v) {
  PixelSample s;
  const int w = img.width();
  const int h = img.height();
  if (!(u >= 0.0 && v >= 0.0 && u <= w - 1 && v <= h - 1)) return s;

  // The cell origin is clamped so that u == W-1 blends inside the last cell.
  int x0 = std::min(static_cast<int>(u), std::max(w - 2, 0));
  int y0 = std::min(static_cast<int>(v), std::max(h - 2, 0));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = u - x0;
  const double fy = v - y0;

  const int nc = img.channels();
  const double *data = img.data().data();
  const double *p00 = data + img.index(x0, y0);
  const double *p10 = data + img.index(x1, y0);
  const double *p01 = data + img.index(x0, y1);
  const double *p11 = data + img.index(x1, y1);
  for (int c = 0; c < nc; ++c) {
    const double top = (1.0 - fx) * p00[c] + fx * p10[c];
    const double bottom = (1.0 - fx) * p01[c] + fx * p11[c];
    s.color[c] = (1.0 - fy) * top + fy * bottom;
    s.d_du[c] = (1.0 - fy) * (p10[c] - p00[c]) + fy * (p11[c] - p01[c]);
    s.d_dv[c] = bottom - top;
  }
  s.valid = true;
  return s;
}

Image downsample(const Image &img) {
  if (img.width() < 2 && img.height() < 2) throw ShapeError("cannot downsample a 1x1 image");
  const int w = (img.width() + 1) / 2;
  const int h = (img.height() + 1) / 2;
  const int nc = img.channels();
  Image out(w, h, nc);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xe = std::min(2 * x + 2, img.width());
      const int ye = std::min(2 * y + 2, img.height());
      for (int c = 0; c < nc; ++c) {
        double sum = 0.0;
        int n = 0;
        for (int yy = 2 * y; yy < ye; ++yy) {
          for (int xx = 2 * x; xx < xe; ++xx) {
            sum += img.at(xx, yy, c);
            ++n;
          }
        }
        out.at(x, y, c) = sum / n;
      }
    }
  }
  return out;
}

Pyramid build_pyramid(const Image &img, int levels) {
  if (levels < 1) throw ShapeError("pyramid needs at least one level");
  int w = img.width();
  int h = img.height();
  for (int l = 1; l < levels; ++l) {
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  if (w < 2 || h < 2) {
    throw ShapeError("too many pyramid levels for a " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()) + " image");
  }
  Pyramid pyramid;
  pyramid.reserve(levels);
  pyramid.push_back(img);
  for (int l = 1; l < levels; ++l) pyramid.push_back(downsample(pyramid.back()));
  return pyramid;
}

namespace {

bool is_space(std::uint8_t b) { return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f'; }

/// Cursor over a Netpbm-style ASCII header.
class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    if (start == pos_) throw ParseError("malformed header: unexpected end of data", start);
    return std::string(bytes_.begin() + start, bytes_.begin() + pos_);
  }

  long integer(const char *what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    const std::string tok = token();
    if (tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9) {
      throw ParseError(std::string("malformed header: bad ") + what + " '" + tok + "'", start);
    }
    return std::stol(tok);
  }

  /// Consumes the single whitespace byte that terminates the header.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ParseError("malformed header: missing whitespace after header", pos_);
    }
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image load_image(std::span<const std::uint8_t> bytes) {
  HeaderReader reader(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6') ||
      (bytes.size() > 2 && !is_space(bytes[2]) && bytes[2] != '#')) {
    throw ParseError("unsupported magic: expected P5 or P6", 0);
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  reader.token();
  const long width = reader.integer("width");
  const long height = reader.integer("height");
  if (width < 1 || height < 1) throw ParseError("malformed header: zero image dimension", reader.pos());
  reader.skip_space_and_comments();
  const std::size_t maxval_pos = reader.pos();
  const long maxval = reader.integer("maxval");
  if (maxval != 255) {
    throw ParseError("unsupported maxval " + std::to_string(maxval) + " (only 255)", maxval_pos);
  }
  reader.end_of_header();

  const std::size_t payload = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - reader.pos() < payload) {
    throw ParseError("truncated payload: need " + std::to_string(payload) + " bytes, have " +
                         std::to_string(bytes.size() - reader.pos()),
                     bytes.size());
  }
  std::vector<double> data(payload);
  const std::uint8_t *src = bytes.data() + reader.pos();
  for (std::size_t i = 0; i < payload; ++i) data[i] = src[i] / 255.0;
  return Image(static_cast<int>(width), static_cast<int>(height), channels, std::move(data));
}

std::vector<std::uint8_t> save_image(const Image &img) {
  const std::string header = std::string(img.channels() == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width()) +
                             " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.data().size());
  for (double v : img.data()) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> save_depth_pfm(const DepthMap &depth) {
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!std::isfinite(depth[i]) || depth[i] <= 0.0) {
      throw SerializationError("depth at pixel index " + std::to_string(i) + " is not finite and positive");
    }
  }
  const std::string header = "Pf\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + depth.size() * 4);
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(depth.at(x, y)));
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  return out;
}

DepthMap load_depth_pfm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != 'f') {
    throw ParseError("unsupported magic: expected Pf", 0);
  }
  HeaderReader reader(bytes);
  reader.token();
  const long width = reader.integer("width");
  const long height = reader.integer("height");
  if (width < 1 || height < 1) throw ParseError("malformed header: zero image dimension", reader.pos());
  reader.skip_space_and_comments();
  const std::size_t scale_pos = reader.pos();
  const std::string scale_tok = reader.token();
  double scale = 0.0;
  {
    std::istringstream in(scale_tok);
    in >> scale;
    if (in.fail() || !in.eof() || scale == 0.0) throw ParseError("malformed header: bad scale '" + scale_tok + "'", scale_pos);
  }
  reader.end_of_header();
  const bool little_endian = scale < 0.0;

  const std::size_t payload = static_cast<std::size_t>(width) * height * 4;
  if (bytes.size() - reader.pos() < payload) {
    throw ParseError("truncated payload: need " + std::to_string(payload) + " bytes", bytes.size());
  }
  std::vector<double> data(static_cast<std::size_t>(width) * height);
  const std::uint8_t *src = bytes.data() + reader.pos();
  for (long row = 0; row < height; ++row) {
    const long y = height - 1 - row;
    for (long x = 0; x < width; ++x) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little_endian ? 8 * b : 8 * (3 - b);
        bits |= static_cast<std::uint32_t>(src[b]) << shift;
      }
      src += 4;
      data[static_cast<std::size_t>(y) * width + x] = std::bit_cast<float>(bits);
    }
  }
  return DepthMap(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace selfcal
