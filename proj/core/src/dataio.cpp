#include "maxfun/dataio.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "maxfun/error.hpp"
#include "maxfun/random.hpp"

namespace maxfun::io {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
constexpr char kFeatureMagic[4] = {'M', 'F', 'P', 'F'};
constexpr std::size_t kFeatureHeader = 20;

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Minimal netpbm header tokenizer: skips whitespace and '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number(const char* what) {
    skip();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 24)) throw FormatError(std::string("PGM: ") + what + " is too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("PGM: missing ") + what);
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) throw FormatError("PGM: header not terminated");
    return pos_ + 1;
  }

 private:
  void skip() {
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

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | b[at + static_cast<std::size_t>(k)];
  return v;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Image decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("PGM: expected P5 magic");
  HeaderReader header(bytes);
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (width == 0 || height == 0) throw FormatError("PGM: zero dimension");
  if (maxval == 0 || maxval > 255) throw FormatError("PGM: only 8-bit rasters (maxval 1..255) are supported");
  const std::size_t start = header.raster_start();
  if (bytes.size() < start || bytes.size() - start < width * height) {
    throw FormatError("PGM: truncated raster, expected " + std::to_string(width * height) + " bytes");
  }
  std::vector<double> values(width * height);
  const double scale = static_cast<double>(maxval);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const std::uint8_t v = bytes[start + k];
    if (v > maxval) throw FormatError("PGM: sample exceeds maxval");
    values[k] = static_cast<double>(v) / scale;
  }
  return Image(height, width, std::move(values));
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("PNG: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  const std::size_t width = image.width;
  const std::size_t height = image.height;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("PNG: " + msg);
  }
  if (width == 0 || height == 0) throw FormatError("PNG: zero dimension");
  std::vector<double> values(width * height);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const unsigned sum = rgb[3 * k] + rgb[3 * k + 1] + rgb[3 * k + 2];
    values[k] = static_cast<double>(sum) / 765.0;
  }
  return Image(height, width, std::move(values));
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
    return decode_png(bytes);
  }
  throw FormatError("unsupported image format (expected binary PGM or PNG)");
}

Image load_image(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pgm(const Image& img) {
  const std::string header = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size());
  for (double v : img.values()) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
  }
  return out;
}

Image pad_to_square(const Image& img) {
  const std::size_t side = std::max(img.rows(), img.cols());
  if (img.rows() == img.cols()) return img;
  const std::size_t top = (side - img.rows()) / 2;
  const std::size_t left = (side - img.cols()) / 2;
  Image out(side, side, 0.0);
  for (std::size_t i = 0; i < img.rows(); ++i) {
    for (std::size_t j = 0; j < img.cols(); ++j) out(top + i, left + j) = img(i, j);
  }
  return out;
}

Image resize(const Image& img, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw InvalidArgument("resize target must be at least 1x1");
  if (img.empty()) throw InvalidArgument("resize of an empty image");
  if (rows == img.rows() && cols == img.cols()) return img;

  struct Tap {
    std::size_t lo, hi;
    double t;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> result(out);
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t k = 0; k < out; ++k) {
      double s = (static_cast<double>(k) + 0.5) * ratio - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(s));
      result[k] = {lo, std::min(lo + 1, in - 1), s - static_cast<double>(lo)};
    }
    return result;
  };
  auto lerp = [](double a, double b, double t) {
    const double v = a + t * (b - a);
    return std::clamp(v, std::min(a, b), std::max(a, b));
  };

  const auto rt = taps(img.rows(), rows);
  const auto ct = taps(img.cols(), cols);
  Image out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double top = lerp(img(rt[i].lo, ct[j].lo), img(rt[i].lo, ct[j].hi), ct[j].t);
      const double bottom = lerp(img(rt[i].hi, ct[j].lo), img(rt[i].hi, ct[j].hi), ct[j].t);
      out(i, j) = lerp(top, bottom, rt[i].t);
    }
  }
  return out;
}

Image preprocess(const fs::path& path, std::size_t side) {
  return resize(pad_to_square(load_image(path)), side, side);
}

Manifest::Manifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  std::set<fs::path> seen;
  for (const auto& e : entries_) {
    if (e.label.empty()) throw InvalidArgument("manifest entry " + e.path.string() + " has an empty label");
    if (!seen.insert(e.path.lexically_normal()).second) {
      throw InvalidArgument("manifest lists " + e.path.string() + " more than once");
    }
  }
}

std::map<std::string, std::size_t> Manifest::histogram() const {
  std::map<std::string, std::size_t> h;
  for (const auto& e : entries_) ++h[e.label];
  return h;
}

std::vector<std::string> Manifest::labels() const {
  std::vector<std::string> out;
  for (const auto& [label, count] : histogram()) out.push_back(label);
  return out;
}

Manifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": expected exactly one tab");
    }
    const std::string path = trim(line.substr(0, tab));
    const std::string label = trim(line.substr(tab + 1));
    if (path.empty() || label.empty()) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": empty path or label");
    }
    fs::path p(path);
    if (p.is_relative()) p = base_dir / p;
    entries.push_back({p.lexically_normal(), label});
  }
  return Manifest(std::move(entries));
}

Manifest read_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        path.parent_path());
}

Manifest filter_classes(const Manifest& m, std::size_t min_count, std::size_t max_count) {
  if (min_count > max_count) throw InvalidArgument("filter_classes: min_count > max_count");
  const auto hist = m.histogram();
  std::vector<ManifestEntry> kept;
  for (const auto& e : m.entries()) {
    const std::size_t n = hist.at(e.label);
    if (n >= min_count && n <= max_count) kept.push_back(e);
  }
  if (kept.empty()) {
    throw InvalidArgument("filter_classes: no class has between " + std::to_string(min_count) + " and " +
                          (max_count == kUnbounded ? std::string("inf") : std::to_string(max_count)) +
                          " entries");
  }
  return Manifest(std::move(kept));
}

std::size_t test_count(std::size_t n, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must lie strictly between 0 and 1");
  }
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 0.5));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double test_fraction,
                                                                            std::uint64_t seed) {
  const std::size_t n_test = test_count(n, test_fraction);
  if (n_test == 0 || n_test >= n) {
    throw InvalidArgument("split of " + std::to_string(n) + " items at fraction " + std::to_string(test_fraction) +
                          " leaves an empty side");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> in_test(n, false);
  for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t k = 0; k < n; ++k) (in_test[k] ? out.second : out.first).push_back(k);
  return out;
}

std::pair<Manifest, Manifest> split(const Manifest& m, double test_fraction, std::uint64_t seed) {
  const auto [train_idx, test_idx] = split_indices(m.size(), test_fraction, seed);
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
  for (std::size_t k : train_idx) train.push_back(m.entries()[k]);
  for (std::size_t k : test_idx) test.push_back(m.entries()[k]);
  return {Manifest(std::move(train)), Manifest(std::move(test))};
}

std::vector<std::uint8_t> encode_features(const FeatureTensor& t) {
  if (t.values.size() != t.channels * t.rows * t.cols) {
    throw InvalidArgument("feature tensor payload does not match its shape");
  }
  std::vector<std::uint8_t> out(std::begin(kFeatureMagic), std::end(kFeatureMagic));
  out.reserve(kFeatureHeader + 8 * t.values.size());
  put_u32(out, kFeatureVersion);
  put_u32(out, static_cast<std::uint32_t>(t.channels));
  put_u32(out, static_cast<std::uint32_t>(t.rows));
  put_u32(out, static_cast<std::uint32_t>(t.cols));
  for (double v : t.values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return out;
}

FeatureTensor decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFeatureHeader || !std::equal(std::begin(kFeatureMagic), std::end(kFeatureMagic), bytes.begin())) {
    throw FormatError("feature file: bad magic");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kFeatureVersion) {
    throw FormatError("feature file: unsupported version " + std::to_string(version));
  }
  const std::size_t c = get_u32(bytes, 8);
  const std::size_t h = get_u32(bytes, 12);
  const std::size_t w = get_u32(bytes, 16);
  if (c == 0 || h == 0 || w == 0) throw FormatError("feature file: zero dimension");
  const std::size_t count = c * h * w;
  if ((bytes.size() - kFeatureHeader) != 8 * count) {
    throw FormatError("feature file: payload holds " + std::to_string((bytes.size() - kFeatureHeader) / 8) +
                      " values, header declares " + std::to_string(count));
  }
  FeatureTensor t(c, h, w);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[kFeatureHeader + 8 * k + static_cast<std::size_t>(b)];
    t.values[k] = std::bit_cast<double>(bits);
  }
  return t;
}

void write_features(const fs::path& path, const FeatureTensor& t) { write_file_atomic(path, encode_features(t)); }

FeatureTensor read_features(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_features(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string s = std::move(buf).str();
  return {s.begin(), s.end()};
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_file_atomic(const fs::path& path, std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace maxfun::io
