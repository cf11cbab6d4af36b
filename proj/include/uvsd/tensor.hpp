#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "uvsd/types.hpp"

namespace uvsd {

struct Tensor {
  std::vector<int> dims;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    std::size_t n = 1;
    for (int x : dims) n *= static_cast<std::size_t>(x);
    v.assign(n, 0.0);
  }

  std::size_t size() const { return v.size(); }

  void fill(double value) { std::fill(v.begin(), v.end(), value); }

  bool same_shape(const Tensor& o) const { return dims == o.dims; }
};

inline void check_finite(const Tensor& t, const std::string& where) {
  for (double x : t.v)
    if (!std::isfinite(x))
      throw Error("non-finite value in " + where);
}

}  // namespace uvsd
