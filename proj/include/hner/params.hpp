#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hner/tensor.hpp"

namespace hner {

// Ordered name -> tensor view over a model's trainable parameters. Insertion
// order is the checkpoint serialization order. Holds non-owning pointers, so
// it must not outlive the model it was taken from.
class ParamRegistry {
 public:
  using Entry = std::pair<std::string, Tensor*>;

  void add(std::string name, Tensor& tensor);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  Tensor& at(const std::string& name) const;
  Tensor* find(const std::string& name) const;
  std::vector<Tensor*> tensors() const;

  std::size_t parameter_count() const;
  void set_requires_grad(bool on) const;
  void zero_grad() const;

  double grad_norm() const;
  // Rescales all gradients so that their global L2 norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm) const;

  // FNV-1a over names, shapes and the bit patterns of all values.
  std::uint64_t checksum() const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace hner
