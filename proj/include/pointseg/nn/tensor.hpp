#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

namespace pointseg::nn {

// Value array with a paired gradient array of the same shape. Weights
// set requires_grad; activations reuse the same type so every edge of
// the graph has a place to accumulate gradients.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;
  std::vector<T> g;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, bool rg = false) {
    resize(std::move(s), rg);
  }

  void resize(std::vector<int> s, bool rg = false) {
    shape = std::move(s);
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    v.assign(n, T(0));
    g.assign(n, T(0));
    requires_grad = rg;
  }

  // Reshapes without clearing when the element count already matches;
  // forward passes call this every time so nets stay size-agnostic.
  void ensure(std::vector<int> s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    if (n != v.size()) {
      resize(std::move(s), requires_grad);
    } else {
      shape = std::move(s);
    }
  }

  std::size_t size() const { return v.size(); }
  void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

}  // namespace pointseg::nn
