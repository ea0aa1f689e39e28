#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "gmp/batch.hpp"
#include "gmp/modality.hpp"

namespace gmp::synth {

// Two-modality, multi-domain classification data. For modality m:
//   x^m = discrim_strength[m] * P_m onehot(y) + domain_leak[m] * Q_m onehot(d) + N(0, noise_std[m]^2)
// where [P_m | Q_m] has orthonormal columns drawn once from the seed.
struct SynthConfig {
  int num_classes = 6;
  int num_domains = 3;
  int samples_per_class_per_domain = 150;
  std::size_t dim_v = 24;
  std::size_t dim_a = 24;
  PerModality<double> discrim_strength{1.0, 0.55};
  PerModality<double> domain_leak{0.8, 0.15};
  PerModality<double> noise_std{0.35, 0.35};
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t dim(Modality m) const noexcept { return m == Modality::Video ? dim_v : dim_a; }

  // "asym-v": strong but domain-leaky video, weaker but cleaner audio.
  static SynthConfig preset(std::string_view name);

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Column-major embeddings: class_basis[m] is dim x Y, domain_basis[m] is dim x C.
struct Embeddings {
  PerModality<std::vector<double>> class_basis;
  PerModality<std::vector<double>> domain_basis;
};

Embeddings make_embeddings(const SynthConfig& cfg);

// Features of sample `index` of (domain, cls). Pure in (cfg, domain, cls, index).
void generate_sample(const SynthConfig& cfg, const Embeddings& emb, int domain, int cls, int index,
                     std::span<double> out_v, std::span<double> out_a);

struct Dataset {
  SynthConfig config;
  // by_domain[d] holds every sample of domain d, ordered by (class, index).
  std::vector<MultimodalBatch> by_domain;
};

Dataset generate(const SynthConfig& cfg);

struct Splits {
  MultimodalBatch train;
  MultimodalBatch source_val;
  MultimodalBatch target_test;
};

// Leave-one-domain-out: source domains are split per (class, domain) into
// train and validation; the held-out domain is the test split.
Splits split_leave_one_domain_out(const Dataset& data, int target_domain, double val_fraction);

// Number of validation samples drawn from each (class, source domain) cell.
int validation_count(int samples_per_cell, double val_fraction);

// FNV-1a over labels and the bit patterns of all features.
std::uint64_t hash_batch(const MultimodalBatch& batch, std::uint64_t seed = 1469598103934665603ull);
std::uint64_t hash_splits(const Splits& splits);

// CSV: "# gmp-dataset v1", then domain,class,v0..,a0.. with 17 significant digits.
void write_csv(const MultimodalBatch& batch, const std::filesystem::path& path);
MultimodalBatch read_csv(const std::filesystem::path& path);

}  // namespace gmp::synth
