#pragma once

#include <Eigen/Dense>

#include <array>
#include <cassert>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace toriclab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense tensor of fixed rank over an n-dimensional index space, stored
/// row-major (last index fastest). Ranks up to 6 are enough for everything
/// the library contracts.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rank, int dim) : rank_(rank), dim_(dim), data_(ipow(dim, rank), 0.0) {}

  int rank() const noexcept { return rank_; }
  int dim() const noexcept { return dim_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  template <std::integral... I>
  double& operator()(I... idx) {
    assert(static_cast<int>(sizeof...(I)) == rank_);
    return data_[flat(idx...)];
  }
  template <std::integral... I>
  double operator()(I... idx) const {
    assert(static_cast<int>(sizeof...(I)) == rank_);
    return data_[flat(idx...)];
  }

  double& at(std::span<const int> idx) { return data_[flat_span(idx)]; }
  double at(std::span<const int> idx) const { return data_[flat_span(idx)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double max_abs() const;
  /// Largest deviation between an entry and any of its index permutations.
  double symmetry_defect() const;

  /// Visits every multi-index in row-major order.
  void for_each_index(const std::function<void(std::span<const int>)>& fn) const;

  static std::size_t ipow(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
    return r;
  }

 private:
  template <std::integral... I>
  std::size_t flat(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }
  std::size_t flat_span(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return f;
  }

  int rank_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const Tensor& a, const Tensor& b);
double max_abs(const Matrix& m);

}  // namespace toriclab
