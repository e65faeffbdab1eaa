#include "maxfun/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maxfun/error.hpp"

namespace maxfun {

namespace {

void require_shape(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("image dimensions must be positive");
  }
}

double sum_squares(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return acc;
}

}  // namespace

Image::Image(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_shape(rows, cols);
}

Image::Image(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  require_shape(rows, cols);
  if (data_.size() != rows * cols) {
    throw InvalidArgument("image data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
}

Image Image::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw InvalidArgument("ragged row list");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Image(m, n, std::move(data));
}

FeatureTensor::FeatureTensor(std::size_t c, std::size_t h, std::size_t w, double fill)
    : channels(c), rows(h), cols(w), values(c * h * w, fill) {}

Image FeatureTensor::channel(std::size_t c) const {
  if (c >= channels) throw InvalidArgument("channel index out of range");
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(c * rows * cols);
  return Image(rows, cols, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(rows * cols)));
}

void FeatureTensor::set_channel(std::size_t c, const Image& img) {
  if (c >= channels || img.rows() != rows || img.cols() != cols) {
    throw InvalidArgument("channel shape mismatch");
  }
  std::copy(img.values().begin(), img.values().end(),
            values.begin() + static_cast<std::ptrdiff_t>(c * rows * cols));
}

Vec vectorize(const Image& x) {
  Vec v(static_cast<Eigen::Index>(x.size()));
  Eigen::Index k = 0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < x.rows(); ++i) v(k++) = x(i, j);
  }
  return v;
}

Image devectorize(const Vec& v, std::size_t rows, std::size_t cols) {
  if (static_cast<std::size_t>(v.size()) != rows * cols) {
    throw InvalidArgument("vector length " + std::to_string(v.size()) +
                          " does not match " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  Image x(rows, cols);
  Eigen::Index k = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) x(i, j) = v(k++);
  }
  return x;
}

double frob_norm(const Image& x) { return std::sqrt(sum_squares(x.values())); }

double frob_norm(const Mat& a) { return std::sqrt(sum_squares({a.data(), static_cast<std::size_t>(a.size())})); }

double frob_norm(const Vec& v) { return std::sqrt(sum_squares({v.data(), static_cast<std::size_t>(v.size())})); }

double frob_distance(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("frob_distance: shape mismatch");
  }
  double acc = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) {
    const double d = av[k] - bv[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace maxfun
