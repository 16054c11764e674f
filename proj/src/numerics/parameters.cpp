#include "sbl/numerics/parameters.hpp"

#include <cstdint>

#include "sbl/binary_io.hpp"
#include "sbl/error.hpp"

namespace sbl {

Var ParameterSet::add(std::string name, Tensor init) {
  if (find(name)) fail(ErrorKind::config, "duplicate parameter name '" + name + "'");
  Var v = Var::leaf(std::move(init));
  items_.push_back({std::move(name), v});
  return v;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void ParameterSet::zero_grad() const {
  for (const auto& p : items_) p.var.zero_grad();
}

void ParameterSet::extend(const ParameterSet& other) {
  for (const auto& p : other.items_) {
    if (find(p.name)) fail(ErrorKind::config, "duplicate parameter name '" + p.name + "'");
    items_.push_back(p);
  }
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  ByteWriter out;
  out.magic("SBL1");
  for (const auto& t : tensors) {
    out.u32(static_cast<std::uint32_t>(t.name.size()));
    out.bytes(t.name.data(), t.name.size());
    out.u32(static_cast<std::uint32_t>(t.value.rank()));
    for (auto e : t.value.shape()) out.u32(static_cast<std::uint32_t>(e));
    const auto data = t.value.data();
    out.bytes(data.data(), data.size_bytes());
  }
  write_file(path, out.str());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  ByteReader in(read_file(path), "checkpoint " + path.string());
  in.expect_magic("SBL1");
  std::vector<NamedTensor> out;
  while (!in.done()) {
    NamedTensor t;
    t.name.resize(in.u32());
    in.take(t.name.data(), t.name.size());
    Shape shape(in.u32());
    for (auto& e : shape) e = in.u32();
    std::vector<double> data(shape_numel(shape));
    in.take(data.data(), data.size() * sizeof(double));
    t.value = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<NamedTensor> snapshot(const ParameterSet& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto& p : params.items()) out.push_back({p.name, p.var.value()});
  return out;
}

void restore(ParameterSet& params, const std::vector<NamedTensor>& tensors) {
  for (auto& p : params.items()) {
    const NamedTensor* match = nullptr;
    for (const auto& t : tensors) {
      if (t.name == p.name) match = &t;
    }
    if (!match) fail(ErrorKind::format, "checkpoint lacks parameter '" + p.name + "'");
    if (match->value.shape() != p.var.value().shape()) {
      fail(ErrorKind::dimension, "parameter '" + p.name + "' is " + p.var.value().shape_str() +
                                     " but checkpoint holds " + match->value.shape_str());
    }
    p.var.mutable_value() = match->value;
  }
}

}  // namespace sbl
