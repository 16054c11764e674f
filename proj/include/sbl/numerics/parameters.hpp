#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sbl/numerics/autograd.hpp"

namespace sbl {

struct Parameter {
  std::string name;
  Var var;
};

/// Ordered collection of named trainable tensors. Names are unique.
class ParameterSet {
 public:
  Var add(std::string name, Tensor init);

  const std::vector<Parameter>& items() const { return items_; }
  std::vector<Parameter>& items() { return items_; }
  std::size_t size() const { return items_.size(); }

  const Parameter* find(const std::string& name) const;
  void zero_grad() const;

  // Appends the other set's parameters (sharing nodes). Names must stay unique.
  void extend(const ParameterSet& other);

 private:
  std::vector<Parameter> items_;
};

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Checkpoint file: magic "SBL1", then per parameter the name length (u32 LE),
// UTF-8 name bytes, rank (u32 LE), extents (u32 LE each) and float64 LE data.
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

std::vector<NamedTensor> snapshot(const ParameterSet& params);

// Copies values into `params` by name. Every parameter must be present in
// `tensors` with an identical shape; extra tensors are ignored.
void restore(ParameterSet& params, const std::vector<NamedTensor>& tensors);

}  // namespace sbl
