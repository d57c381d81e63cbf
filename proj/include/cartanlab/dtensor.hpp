#pragma once

/// \file
/// Component arrays of distinguished tensors. Upper indices are momentum-like
/// (they transform as the vertical frame), lower indices are base-like.

#include <array>
#include <initializer_list>
#include <optional>
#include <vector>

#include "cartanlab/errors.hpp"
#include "cartanlab/jet.hpp"

namespace cartanlab {

enum class Valence : char { Up, Down };

template <class T>
class DTensor {
 public:
  DTensor() = default;

  DTensor(int dim, std::vector<Valence> valence, std::optional<int> degree = std::nullopt)
      : dim_(dim), valence_(std::move(valence)), degree_(degree) {
    std::size_t size = 1;
    for (std::size_t k = 0; k < valence_.size(); ++k) size *= static_cast<std::size_t>(dim_);
    data_.assign(size, T(0.0));
  }

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(valence_.size()); }
  const std::vector<Valence>& valence() const { return valence_; }
  std::optional<int> degree() const { return degree_; }
  void set_degree(std::optional<int> d) { degree_ = d; }

  std::size_t size() const { return data_.size(); }
  T& flat(std::size_t k) { return data_[k]; }
  const T& flat(std::size_t k) const { return data_[k]; }

  template <class... I>
  T& operator()(I... idx) {
    return data_[offset(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data_[offset(idx...)];
  }

  T& at(const std::vector<int>& idx) { return data_[offset_vec(idx)]; }
  const T& at(const std::vector<int>& idx) const { return data_[offset_vec(idx)]; }

  /// Multi-index of a flat position.
  std::vector<int> unflatten(std::size_t k) const {
    std::vector<int> idx(valence_.size());
    for (std::size_t s = valence_.size(); s-- > 0;) {
      idx[s] = static_cast<int>(k % static_cast<std::size_t>(dim_));
      k /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

  template <class F>
  auto map(F&& f) const {
    using R = decltype(f(data_.front()));
    DTensor<R> out(dim_, valence_, degree_);
    for (std::size_t k = 0; k < data_.size(); ++k) out.flat(k) = f(data_[k]);
    return out;
  }

 private:
  template <class... I>
  std::size_t offset(I... idx) const {
    if (sizeof...(I) != valence_.size()) throw ValenceError("tensor accessed with wrong rank");
    std::size_t off = 0;
    ((off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return off;
  }
  std::size_t offset_vec(const std::vector<int>& idx) const {
    if (idx.size() != valence_.size()) throw ValenceError("tensor accessed with wrong rank");
    std::size_t off = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return off;
  }

  int dim_ = 0;
  std::vector<Valence> valence_;
  std::optional<int> degree_;
  std::vector<T> data_;
};

using JetTensor = DTensor<Jet>;
using NumTensor = DTensor<double>;

inline NumTensor values(const JetTensor& t) {
  return t.map([](const Jet& j) { return j.value(); });
}

inline double max_abs(const NumTensor& t) {
  double m = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) m = std::max(m, std::abs(t.flat(k)));
  return m;
}

inline double max_abs_diff(const NumTensor& a, const NumTensor& b) {
  if (a.size() != b.size()) throw ValenceError("tensor shapes differ");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.flat(k) - b.flat(k)));
  return m;
}


/// out[.., a, ..] = sum_s m(a, s) * t[.., s, ..] on one slot; the slot takes
/// the given valence. Used to raise or lower an index with g^{ij} or g_{ij}.
template <class T, class M>
DTensor<T> transform_slot(const DTensor<T>& t, int slot, const M& m, Valence to) {
  auto valence = t.valence();
  valence[static_cast<std::size_t>(slot)] = to;
  DTensor<T> out(t.dim(), valence, t.degree());
  const int n = t.dim();
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto idx = out.unflatten(k);
    const int a = idx[static_cast<std::size_t>(slot)];
    T acc(0.0);
    for (int s = 0; s < n; ++s) {
      idx[static_cast<std::size_t>(slot)] = s;
      acc += m(a, s) * t.at(idx);
    }
    out.flat(k) = acc;
  }
  return out;
}

}  // namespace cartanlab
