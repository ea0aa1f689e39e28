#include "gmp/param_set.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace gmp {

std::string_view to_string(Partition p) noexcept {
  switch (p) {
    case Partition::EncoderVideo: return "encoder:v";
    case Partition::EncoderAudio: return "encoder:a";
    case Partition::Classifier: return "head:classifier";
    case Partition::Discriminator: return "head:discriminator";
  }
  return "unknown";
}

Partition parse_partition(std::string_view label) {
  for (Partition p : {Partition::EncoderVideo, Partition::EncoderAudio, Partition::Classifier,
                      Partition::Discriminator}) {
    if (to_string(p) == label) return p;
  }
  throw LookupError("unknown partition '" + std::string(label) + "'");
}

void ParamSet::add(std::string id, ad::Tensor tensor, Partition partition) {
  if (id.empty()) throw ContractError("parameter id must not be empty");
  if (!tensor.defined()) throw ContractError("parameter '" + id + "' is undefined");
  if (!tensor.is_leaf()) throw ContractError("parameter '" + id + "' must be a leaf tensor");
  if (entries_.contains(id)) throw ContractError("duplicate parameter id '" + id + "'");
  entries_.emplace(std::move(id), Entry{std::move(tensor), partition});
}

bool ParamSet::contains(std::string_view id) const { return entries_.find(id) != entries_.end(); }

const ad::Tensor& ParamSet::get(std::string_view id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw LookupError("unknown parameter '" + std::string(id) + "'");
  return it->second.tensor;
}

ad::Tensor& ParamSet::get(std::string_view id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw LookupError("unknown parameter '" + std::string(id) + "'");
  return it->second.tensor;
}

Partition ParamSet::partition_of(std::string_view id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw LookupError("unknown parameter '" + std::string(id) + "'");
  return it->second.partition;
}

std::vector<std::string> ParamSet::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

std::vector<std::string> ParamSet::ids_in(Partition p) const {
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) {
    if (e.partition == p) out.push_back(id);
  }
  return out;
}

std::size_t ParamSet::parameter_count(Partition p) const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) {
    if (e.partition == p) n += e.tensor.size();
  }
  return n;
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [id, e] : entries_) out.add(id, e.tensor.clone(), e.partition);
  return out;
}

bool ParamSet::bitwise_equal(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [id, e] : entries_) {
    auto it = other.entries_.find(id);
    if (it == other.entries_.end() || it->second.partition != e.partition) return false;
    const auto& a = e.tensor;
    const auto& b = it->second.tensor;
    if (a.shape() != b.shape()) return false;
    if (std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

GradientMap backward(const ad::Tensor& loss, const ParamSet& params) {
  // Stale buffers from an earlier pass must not leak into this one.
  for (const auto& [_, e] : params.entries()) e.tensor.zero_grad();
  ad::backward(loss);
  GradientMap out;
  for (const auto& [id, e] : params.entries()) {
    auto g = e.tensor.grad();
    if (g.size() == e.tensor.size()) {
      out.emplace(id, std::vector<double>(g.begin(), g.end()));
    } else {
      out.emplace(id, std::vector<double>(e.tensor.size(), 0.0));
    }
  }
  return out;
}

std::vector<double> flatten_grads(const GradientMap& grads, const ParamSet& params, Partition p) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count(p));
  for (const auto& id : params.ids_in(p)) {
    auto it = grads.find(id);
    if (it == grads.end()) throw LookupError("gradient map has no entry for '" + id + "'");
    if (it->second.size() != params.get(id).size()) {
      throw ShapeError("gradient for '" + id + "' has wrong length");
    }
    flat.insert(flat.end(), it->second.begin(), it->second.end());
  }
  return flat;
}

std::vector<double> flatten_grads(const GradientMap& grads, const ParamSet& params, std::string_view partition) {
  return flatten_grads(grads, params, parse_partition(partition));
}

GradientMap unflatten_grads(std::span<const double> flat, const ParamSet& params, Partition p) {
  if (flat.size() != params.parameter_count(p)) {
    throw ShapeError("unflatten_grads: " + std::to_string(flat.size()) + " values for a partition of " +
                     std::to_string(params.parameter_count(p)));
  }
  GradientMap out;
  std::size_t offset = 0;
  for (const auto& id : params.ids_in(p)) {
    const std::size_t n = params.get(id).size();
    out.emplace(id, std::vector<double>(flat.begin() + offset, flat.begin() + offset + n));
    offset += n;
  }
  return out;
}

void apply_update(ParamSet& params, const GradientMap& grads, double step) {
  for (const auto& [id, g] : grads) {
    auto values = params.get(id).mutable_data();
    if (values.size() != g.size()) throw ShapeError("apply_update: gradient for '" + id + "' has wrong length");
    for (std::size_t i = 0; i < g.size(); ++i) values[i] -= step * g[i];
  }
}

// ---------------------------------------------------------------------------
// Checkpoint encoding

namespace {

constexpr char kMagic[4] = {'G', 'M', 'P', 'C'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& [id, e] : params.entries()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(id.size()));
    w.put_bytes(id.data(), id.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.partition));
    const auto& shape = e.tensor.shape();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) w.put<std::uint64_t>(d);
    for (double v : e.tensor.data()) w.put<double>(v);
  }
  return w.take();
}

ParamSet decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.get_string(4) != std::string(kMagic, 4)) throw IoError("not a checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  ParamSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto id_len = r.get<std::uint32_t>();
    std::string id = r.get_string(id_len);
    const auto tag = r.get<std::uint8_t>();
    if (tag > static_cast<std::uint8_t>(Partition::Discriminator)) {
      throw IoError("checkpoint: invalid partition tag for '" + id + "'");
    }
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0) throw IoError("checkpoint: zero-rank parameter '" + id + "'");
    ad::Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    const std::size_t n = ad::element_count(shape);
    std::vector<double> values(n);
    for (auto& v : values) v = r.get<double>();
    params.add(std::move(id), ad::Tensor(std::move(shape), std::move(values), true), static_cast<Partition>(tag));
  }
  if (!r.at_end()) throw IoError("checkpoint: trailing bytes");
  return params;
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace gmp
