#include "toriclab/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace toriclab {

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void Tensor::for_each_index(const std::function<void(std::span<const int>)>& fn) const {
  std::vector<int> idx(static_cast<std::size_t>(rank_), 0);
  for (std::size_t f = 0; f < data_.size(); ++f) {
    fn(idx);
    for (int pos = rank_ - 1; pos >= 0; --pos) {
      if (++idx[static_cast<std::size_t>(pos)] < dim_) break;
      idx[static_cast<std::size_t>(pos)] = 0;
    }
  }
}

double Tensor::symmetry_defect() const {
  double defect = 0.0;
  for_each_index([&](std::span<const int> idx) {
    std::vector<int> perm(idx.begin(), idx.end());
    std::sort(perm.begin(), perm.end());
    const double ref = at(perm);
    defect = std::max(defect, std::abs(at(idx) - ref));
  });
  return defect;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  assert(a.size() == b.size());
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace toriclab
