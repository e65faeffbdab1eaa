#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace maxfun {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense real image on the lattice [rows] x [cols], stored row-major.
/// Indices are 0-based throughout.
class Image {
 public:
  Image() = default;
  Image(std::size_t rows, std::size_t cols, double fill = 0.0);
  Image(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  /// Builds an image from nested row lists, e.g. {{1, 3}, {2, 4}}.
  static Image from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const double* row(std::size_t i) const noexcept { return data_.data() + i * cols_; }

  bool operator==(const Image& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Channel-stacked feature maps: channel-major, then row-major within a channel.
struct FeatureTensor {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureTensor() = default;
  FeatureTensor(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0);

  Image channel(std::size_t c) const;
  void set_channel(std::size_t c, const Image& img);
  double& at(std::size_t c, std::size_t i, std::size_t j) { return values[(c * rows + i) * cols + j]; }
  double at(std::size_t c, std::size_t i, std::size_t j) const { return values[(c * rows + i) * cols + j]; }

  bool operator==(const FeatureTensor& other) const = default;
};

/// Column-major folding: X(0,0), X(1,0), ..., X(M-1,0), X(0,1), ..., X(M-1,N-1).
Vec vectorize(const Image& x);

/// Inverse of vectorize. Throws InvalidArgument when v.size() != rows * cols.
Image devectorize(const Vec& v, std::size_t rows, std::size_t cols);

double frob_norm(const Image& x);
double frob_norm(const Mat& a);
double frob_norm(const Vec& v);

/// ||a - b||_F; shapes must agree.
double frob_distance(const Image& a, const Image& b);

}  // namespace maxfun
