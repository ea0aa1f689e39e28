#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmp/autodiff.hpp"
#include "gmp/modality.hpp"

namespace gmp {

enum class Partition : std::uint8_t {
  EncoderVideo = 0,
  EncoderAudio = 1,
  Classifier = 2,
  Discriminator = 3,
};

inline constexpr Partition encoder_partition(Modality m) noexcept {
  return m == Modality::Video ? Partition::EncoderVideo : Partition::EncoderAudio;
}

// "encoder:v", "encoder:a", "head:classifier", "head:discriminator"
std::string_view to_string(Partition p) noexcept;
Partition parse_partition(std::string_view label);

// Parameter id -> gradient values (same length as the parameter).
using GradientMap = std::map<std::string, std::vector<double>>;

// Named trainable tensors, each assigned to exactly one partition.
// Iteration order is sorted by id, which fixes flattening order.
class ParamSet {
 public:
  struct Entry {
    ad::Tensor tensor;
    Partition partition;
  };

  void add(std::string id, ad::Tensor tensor, Partition partition);

  bool contains(std::string_view id) const;
  const ad::Tensor& get(std::string_view id) const;
  ad::Tensor& get(std::string_view id);
  Partition partition_of(std::string_view id) const;

  std::vector<std::string> ids() const;
  std::vector<std::string> ids_in(Partition p) const;
  std::size_t parameter_count(Partition p) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, Entry, std::less<>>& entries() const noexcept { return entries_; }

  // Deep copy with fresh leaf tensors.
  ParamSet clone() const;
  bool bitwise_equal(const ParamSet& other) const;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

// Gradient of a scalar loss with respect to every parameter. Parameters the
// loss does not reach receive zeros. Parameter values are not modified.
GradientMap backward(const ad::Tensor& loss, const ParamSet& params);

std::vector<double> flatten_grads(const GradientMap& grads, const ParamSet& params, Partition p);
std::vector<double> flatten_grads(const GradientMap& grads, const ParamSet& params, std::string_view partition);
GradientMap unflatten_grads(std::span<const double> flat, const ParamSet& params, Partition p);

// params[id] -= step * grads[id] for every id in grads.
void apply_update(ParamSet& params, const GradientMap& grads, double step);

// Binary little-endian checkpoint ("GMPC", version, count, then per-parameter records).
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params);
ParamSet decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace gmp
