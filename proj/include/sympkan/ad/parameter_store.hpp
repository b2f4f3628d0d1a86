#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sympkan/errors.hpp"

namespace sympkan::ad {

// Flat vector of trainable parameters plus named, non-overlapping slices.
// Models allocate their slices at construction and then freeze the store;
// optimizers work on the flat view.
class ParameterStore {
 public:
  struct Slice {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  // Appends a slice of `n` zeros, returns its offset.
  std::size_t allocate(std::string name, std::size_t n) {
    if (frozen_)
      throw UsageError("parameter store is frozen, cannot allocate \"" +
                       name + "\"");
    const std::size_t offset = values_.size();
    values_.resize(offset + n, 0.0);
    slices_.push_back(Slice{std::move(name), offset, n});
    return offset;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  std::size_t size() const { return values_.size(); }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> slice(std::string_view name) {
    for (const Slice& s : slices_)
      if (s.name == name) return {values_.data() + s.offset, s.size};
    throw UsageError("no parameter slice named \"" + std::string(name) + "\"");
  }

  const std::vector<Slice>& slices() const { return slices_; }

 private:
  std::vector<double> values_;
  std::vector<Slice> slices_;
  bool frozen_ = false;
};

}  // namespace sympkan::ad
