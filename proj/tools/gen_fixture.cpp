// Writes the synthetic texture corpus used by the classification tests:
// three classes (horizontal stripes, vertical stripes, checkerboard) of
// non-square binary PGMs plus a manifest.
//
//   maxfun_gen_fixture <output-dir> [per-class=20] [seed=7]

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "maxfun/core.hpp"
#include "maxfun/dataio.hpp"
#include "maxfun/random.hpp"

namespace {

using maxfun::Image;
using maxfun::Rng;

double wave(double t) { return std::sin(2.0 * std::numbers::pi * t); }

Image texture(int cls, Rng& rng) {
  const auto rows = static_cast<std::size_t>(40 + rng.below(41));
  const auto cols = static_cast<std::size_t>(40 + rng.below(41));
  const double period = rng.uniform(5.0, 11.0);
  const double phase_i = rng.uniform();
  const double phase_j = rng.uniform();
  Image img(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double u = static_cast<double>(i) / period + phase_i;
      const double v = static_cast<double>(j) / period + phase_j;
      double s = 0.0;
      switch (cls) {
        case 0: s = wave(u); break;
        case 1: s = wave(v); break;
        default: s = (wave(u) >= 0.0) == (wave(v) >= 0.0) ? 1.0 : -1.0; break;
      }
      const double noise = 0.15 * (rng.uniform() - 0.5);
      img(i, j) = std::clamp(0.5 + 0.35 * s + noise, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: " << argv[0] << " <output-dir> [per-class=20] [seed=7]\n";
    return 1;
  }
  const std::filesystem::path dir = argv[1];
  const int per_class = argc > 2 ? std::atoi(argv[2]) : 20;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;
  const char* names[] = {"horizontal", "vertical", "checker"};

  std::filesystem::create_directories(dir);
  Rng rng(seed);
  std::ostringstream manifest;
  manifest << "# synthetic texture corpus: path<TAB>label\n";
  for (int cls = 0; cls < 3; ++cls) {
    for (int k = 0; k < per_class; ++k) {
      const std::string file = std::string(names[cls]) + "_" + (k < 10 ? "0" : "") + std::to_string(k) + ".pgm";
      maxfun::io::write_file_atomic(dir / file, maxfun::io::encode_pgm(texture(cls, rng)));
      manifest << file << '\t' << names[cls] << '\n';
    }
  }
  maxfun::io::write_file_atomic(dir / "manifest.tsv", manifest.str());
  return 0;
}
