#include "gagnet/params.hpp"

#include "gagnet/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace gagnet {

Index ParamStore::add(const std::string& name, Tensor value) {
  if (by_name_.count(name)) throw std::logic_error("params: duplicate name '" + name + "'");
  const Index idx = static_cast<Index>(entries_.size());
  ParamEntry e;
  e.name = name;
  e.value = std::move(value);
  entries_.push_back(std::move(e));
  by_name_[name] = idx;
  return idx;
}

Index ParamStore::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

ParamEntry& ParamStore::named(const std::string& name) {
  const Index i = index_of(name);
  if (i < 0) throw std::logic_error("params: no entry '" + name + "'");
  return entries_[static_cast<size_t>(i)];
}

const ParamEntry& ParamStore::named(const std::string& name) const {
  const Index i = index_of(name);
  if (i < 0) throw std::logic_error("params: no entry '" + name + "'");
  return entries_[static_cast<size_t>(i)];
}

Index ParamStore::total_elements() const {
  Index n = 0;
  for (const ParamEntry& e : entries_) n += e.value.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (ParamEntry& e : entries_) {
    e.grad = Tensor(e.value.dims());
  }
}

void ParamStore::clear_grads() {
  for (ParamEntry& e : entries_) e.grad = Tensor();
}

void ParamStore::accumulate_grad(Index i, const Tensor& delta) {
  ParamEntry& e = entries_[static_cast<size_t>(i)];
  if (e.grad.numel() == 0) e.grad = Tensor(e.value.dims());
  if (e.grad.numel() != delta.numel())
    throw std::logic_error("params: gradient shape mismatch for '" + e.name + "'");
  e.grad.flat() += delta.flat();
}

void adam_step(ParamStore& store, Real lr, Real beta1, Real beta2, Real eps) {
  for (const ParamEntry& e : store.entries())
    if (!e.has_grad()) throw UsageError("adam: parameter '" + e.name + "' has no gradient");

  store.step += 1;
  const Real t = static_cast<Real>(store.step);
  const Real corr1 = 1.0 - std::pow(beta1, t);
  const Real corr2 = 1.0 - std::pow(beta2, t);
  for (ParamEntry& e : store.entries()) {
    if (e.m.numel() == 0) e.m = Tensor(e.value.dims());
    if (e.v.numel() == 0) e.v = Tensor(e.value.dims());
    auto& m = e.m.flat();
    auto& v = e.v.flat();
    const auto& g = e.grad.flat();
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.square();
    e.value.flat() -= lr * (m / corr1) / ((v / corr2).sqrt() + eps);
  }
}

namespace {

void wr(std::ostream& os, const void* p, size_t n) { os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n)); }

template <typename T>
void wr_pod(std::ostream& os, T v) { wr(os, &v, sizeof(T)); }

template <typename T>
T rd_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("checkpoint: unexpected end of file");
  return v;
}

void write_record(std::ostream& os, const std::string& name, CkptDtype dtype,
                  const std::vector<Index>& dims, const Tensor* tensor, const std::string* bytes) {
  wr_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  wr(os, name.data(), name.size());
  wr_pod<std::uint8_t>(os, static_cast<std::uint8_t>(dtype));
  wr_pod<std::uint8_t>(os, static_cast<std::uint8_t>(dims.size()));
  for (Index d : dims) wr_pod<std::int64_t>(os, d);
  switch (dtype) {
    case CkptDtype::kF64:
      wr(os, tensor->data(), sizeof(double) * static_cast<size_t>(tensor->numel()));
      break;
    case CkptDtype::kF32: {
      for (Index i = 0; i < tensor->numel(); ++i) wr_pod<float>(os, static_cast<float>((*tensor)[i]));
      break;
    }
    case CkptDtype::kBytes:
      wr(os, bytes->data(), bytes->size());
      break;
  }
}

struct Record {
  std::string name;
  CkptDtype dtype;
  std::vector<Index> dims;
  Tensor tensor;
  std::string bytes;
};

Record read_record(std::istream& is) {
  Record r;
  const auto name_len = rd_pod<std::uint32_t>(is);
  r.name.resize(name_len);
  is.read(r.name.data(), name_len);
  const auto dt = rd_pod<std::uint8_t>(is);
  if (dt > 2) throw DataError("checkpoint: unknown dtype code " + std::to_string(dt));
  r.dtype = static_cast<CkptDtype>(dt);
  const auto rank = rd_pod<std::uint8_t>(is);
  r.dims.resize(rank);
  for (auto& d : r.dims) d = rd_pod<std::int64_t>(is);
  const Index n = Tensor::count(r.dims);
  switch (r.dtype) {
    case CkptDtype::kF64: {
      r.tensor = Tensor(r.dims);
      is.read(reinterpret_cast<char*>(r.tensor.data()), static_cast<std::streamsize>(sizeof(double) * n));
      break;
    }
    case CkptDtype::kF32: {
      r.tensor = Tensor(r.dims);
      for (Index i = 0; i < n; ++i) r.tensor[i] = static_cast<Real>(rd_pod<float>(is));
      break;
    }
    case CkptDtype::kBytes: {
      r.bytes.resize(static_cast<size_t>(n));
      is.read(r.bytes.data(), n);
      break;
    }
  }
  if (!is) throw DataError("checkpoint: unexpected end of file");
  return r;
}

constexpr char kMagic[4] = {'G', 'G', 'N', 'T'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& config_text,
                     bool with_moments, CkptDtype dtype) {
  if (dtype == CkptDtype::kBytes) throw std::logic_error("checkpoint: parameters cannot be byte-typed");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot write '" + path + "'");
  wr(f, kMagic, 4);
  wr_pod<std::uint32_t>(f, kVersion);
  const std::uint64_t count = static_cast<std::uint64_t>(store.size()) + 1;
  wr_pod<std::uint64_t>(f, count);

  write_record(f, "__config__", CkptDtype::kBytes, {static_cast<Index>(config_text.size())}, nullptr,
               &config_text);
  for (const ParamEntry& e : store.entries()) write_record(f, e.name, dtype, e.value.dims(), &e.value, nullptr);

  wr_pod<std::uint8_t>(f, with_moments ? 1 : 0);
  if (with_moments) {
    wr_pod<std::uint64_t>(f, store.step);
    for (const ParamEntry& e : store.entries()) {
      const Tensor m = e.m.numel() ? e.m : Tensor(e.value.dims());
      const Tensor v = e.v.numel() ? e.v : Tensor(e.value.dims());
      wr(f, m.data(), sizeof(double) * static_cast<size_t>(m.numel()));
      wr(f, v.data(), sizeof(double) * static_cast<size_t>(v.numel()));
    }
  }
  if (!f) throw DataError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint: bad magic in '" + path + "'");
  const auto version = rd_pod<std::uint32_t>(f);
  if (version != kVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version) + " in '" + path + "'");
  const auto count = rd_pod<std::uint64_t>(f);

  Checkpoint ck;
  for (std::uint64_t i = 0; i < count; ++i) {
    Record r = read_record(f);
    if (r.name == "__config__") {
      ck.config_text = std::move(r.bytes);
    } else {
      if (r.dtype == CkptDtype::kBytes) throw DataError("checkpoint: byte-typed parameter '" + r.name + "'");
      ck.store.add(r.name, std::move(r.tensor));
    }
  }
  const auto flags = rd_pod<std::uint8_t>(f);
  if (flags & 1) {
    ck.has_moments = true;
    ck.store.step = rd_pod<std::uint64_t>(f);
    for (ParamEntry& e : ck.store.entries()) {
      e.m = Tensor(e.value.dims());
      e.v = Tensor(e.value.dims());
      f.read(reinterpret_cast<char*>(e.m.data()), static_cast<std::streamsize>(sizeof(double) * e.m.numel()));
      f.read(reinterpret_cast<char*>(e.v.data()), static_cast<std::streamsize>(sizeof(double) * e.v.numel()));
      if (!f) throw DataError("checkpoint: truncated moment payload in '" + path + "'");
    }
  }
  return ck;
}

}  // namespace gagnet
