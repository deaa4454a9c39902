#pragma once

#include <cstddef>
#include <vector>

namespace qdag {

/// Dense row-major 3-d array of doubles, indexed (a, b, c).
class Array3 {
 public:
  Array3() = default;
  Array3(int d0, int d1, int d2, double fill = 0.0)
      : d0_(d0), d1_(d1), d2_(d2), v_(static_cast<std::size_t>(d0) * d1 * d2, fill) {}

  double& operator()(int a, int b, int c) { return v_[index(a, b, c)]; }
  double operator()(int a, int b, int c) const { return v_[index(a, b, c)]; }

  int dim0() const { return d0_; }
  int dim1() const { return d1_; }
  int dim2() const { return d2_; }
  std::size_t size() const { return v_.size(); }
  bool same_shape(const Array3& o) const { return d0_ == o.d0_ && d1_ == o.d1_ && d2_ == o.d2_; }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }
  bool operator==(const Array3&) const = default;

 private:
  std::size_t index(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * d1_ + b) * d2_ + c;
  }
  int d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<double> v_;
};

}  // namespace qdag
