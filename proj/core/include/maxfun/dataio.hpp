#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maxfun/core.hpp"

namespace maxfun::io {

namespace fs = std::filesystem;

// Image decoding. Pixel values are scaled to [0, 1].

/// Binary graymap (P5) with maxval <= 255.
Image decode_pgm(std::span<const std::uint8_t> bytes);
/// 8-bit grayscale or colour PNG; colour is reduced by the unweighted mean of R, G, B.
Image decode_png(std::span<const std::uint8_t> bytes);
/// Chooses the decoder from the leading magic bytes.
Image decode_image(std::span<const std::uint8_t> bytes);
Image load_image(const fs::path& path);

/// P5 encoding with maxval 255; values are clamped to [0, 1] and rounded.
std::vector<std::uint8_t> encode_pgm(const Image& img);

// Preprocessing.

/// Zero-pads to max(M, N) squared, keeping the content centered. An odd
/// remainder puts the extra row or column at the bottom or right.
Image pad_to_square(const Image& img);

/// Bilinear resampling with pixel-center alignment and edge clamping.
/// Returns the input unchanged when the size already matches.
Image resize(const Image& img, std::size_t rows, std::size_t cols);

/// load -> pad_to_square -> resize(side, side).
Image preprocess(const fs::path& path, std::size_t side = 128);

// Datasets.

struct ManifestEntry {
  fs::path path;
  std::string label;
  bool operator==(const ManifestEntry&) const = default;
};

class Manifest {
 public:
  Manifest() = default;
  /// Throws InvalidArgument on duplicate paths or empty labels.
  explicit Manifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Count per label, ordered by label.
  std::map<std::string, std::size_t> histogram() const;
  /// Distinct labels in sorted order; a label's index here is its class id.
  std::vector<std::string> labels() const;

 private:
  std::vector<ManifestEntry> entries_;
};

/// One `path<TAB>label` entry per line; blank lines and lines starting with
/// '#' are skipped. Relative paths are resolved against `base_dir`.
Manifest parse_manifest(std::string_view text, const fs::path& base_dir);
Manifest read_manifest(const fs::path& path);

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// Keeps the classes whose count lies in [min_count, max_count].
Manifest filter_classes(const Manifest& m, std::size_t min_count, std::size_t max_count = kUnbounded);

/// Test-set size for n items: n * fraction rounded half up.
std::size_t test_count(std::size_t n, double test_fraction);

/// Seeded uniform partition of [0, n) into (train, test) index lists, each ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double test_fraction,
                                                                            std::uint64_t seed);

/// split_indices applied to the manifest entries.
std::pair<Manifest, Manifest> split(const Manifest& m, double test_fraction, std::uint64_t seed);

// Feature files: "MFPF", u32 version, u32 C, H, W, then C*H*W little-endian
// doubles, channel-major then row-major.

inline constexpr std::uint32_t kFeatureVersion = 1;

std::vector<std::uint8_t> encode_features(const FeatureTensor& t);
FeatureTensor decode_features(std::span<const std::uint8_t> bytes);
void write_features(const fs::path& path, const FeatureTensor& t);
FeatureTensor read_features(const fs::path& path);

// Files.

std::vector<std::uint8_t> read_file(const fs::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const fs::path& path, std::string_view text);

}  // namespace maxfun::io
