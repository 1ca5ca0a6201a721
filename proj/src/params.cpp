#include "hner/params.hpp"

#include <bit>
#include <cmath>

#include "hner/errors.hpp"

namespace hner {

namespace {
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}
}  // namespace

void ParamRegistry::add(std::string name, Tensor& tensor) {
  if (find(name) != nullptr) throw StateError("duplicate parameter name: " + name);
  entries_.emplace_back(std::move(name), &tensor);
}

Tensor* ParamRegistry::find(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  return nullptr;
}

Tensor& ParamRegistry::at(const std::string& name) const {
  Tensor* t = find(name);
  if (t == nullptr) throw StateError("unknown parameter: " + name);
  return *t;
}

std::vector<Tensor*> ParamRegistry::tensors() const {
  std::vector<Tensor*> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

std::size_t ParamRegistry::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second->size();
  return n;
}

void ParamRegistry::set_requires_grad(bool on) const {
  for (const auto& e : entries_) e.second->set_requires_grad(on);
}

void ParamRegistry::zero_grad() const {
  for (const auto& e : entries_) e.second->zero_grad();
}

double ParamRegistry::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    for (double g : e.second->grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParamRegistry::clip_grad_norm(double max_norm) const {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (const auto& e : entries_) {
      for (double& g : e.second->grad()) g *= factor;
    }
  }
  return norm;
}

std::uint64_t ParamRegistry::checksum() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, t] : entries_) {
    fnv_bytes(h, name.data(), name.size());
    for (auto d : t->shape()) {
      const std::uint64_t d64 = d;
      fnv_bytes(h, &d64, sizeof d64);
    }
    for (double v : t->values()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      fnv_bytes(h, &bits, sizeof bits);
    }
  }
  return h;
}

}  // namespace hner
