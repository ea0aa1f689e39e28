#include "gmp/synthdata.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "gmp/csv.hpp"

namespace gmp::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                          std::uint64_t d = 0) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t v : {a, b, c, d}) h = splitmix64(h ^ v);
  return h;
}

// Stream tags keep the random streams of different uses apart.
constexpr std::uint64_t kEmbeddingStream = 0x454d42;  // "EMB"
constexpr std::uint64_t kSampleStream = 0x534d50;     // "SMP"
constexpr std::uint64_t kSplitStream = 0x53504c;      // "SPL"

void check_amplitude(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string("data: ") + name + " must be finite and >= 0");
}

}  // namespace

void SynthConfig::validate() const {
  if (num_classes < 2) throw ConfigError("data: num_classes must be >= 2");
  if (num_domains < 3) throw ConfigError("data: num_domains must be >= 3 (two sources and a target)");
  if (samples_per_class_per_domain < 1) throw ConfigError("data: samples_per_class_per_domain must be >= 1");
  const auto needed = static_cast<std::size_t>(num_classes + num_domains);
  if (dim_v < needed || dim_a < needed) {
    throw ConfigError("data: feature dimensions must be >= num_classes + num_domains (" + std::to_string(needed) +
                      ") to hold orthogonal class and domain embeddings");
  }
  for (Modality m : kModalities) {
    check_amplitude(discrim_strength[m], "discrim_strength");
    check_amplitude(domain_leak[m], "domain_leak");
    check_amplitude(noise_std[m], "noise_std");
  }
}

SynthConfig SynthConfig::preset(std::string_view name) {
  if (name == "asym-v") return SynthConfig{};
  throw ConfigError("unknown data preset '" + std::string(name) + "'");
}

Embeddings make_embeddings(const SynthConfig& cfg) {
  cfg.validate();
  Embeddings emb;
  const auto classes = static_cast<Eigen::Index>(cfg.num_classes);
  const auto domains = static_cast<Eigen::Index>(cfg.num_domains);
  for (Modality m : kModalities) {
    const auto dim = static_cast<Eigen::Index>(cfg.dim(m));
    std::mt19937_64 rng(derive_seed(cfg.seed, kEmbeddingStream, static_cast<std::uint64_t>(m)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd gaussian(dim, classes + domains);
    for (Eigen::Index c = 0; c < gaussian.cols(); ++c) {
      for (Eigen::Index r = 0; r < dim; ++r) gaussian(r, c) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, classes + domains);
    emb.class_basis[m].assign(q.data(), q.data() + dim * classes);
    emb.domain_basis[m].assign(q.data() + dim * classes, q.data() + dim * (classes + domains));
  }
  return emb;
}

void generate_sample(const SynthConfig& cfg, const Embeddings& emb, int domain, int cls, int index,
                     std::span<double> out_v, std::span<double> out_a) {
  if (cls < 0 || cls >= cfg.num_classes || domain < 0 || domain >= cfg.num_domains) {
    throw LabelError("generate_sample: class or domain out of range");
  }
  std::mt19937_64 rng(derive_seed(cfg.seed, kSampleStream, static_cast<std::uint64_t>(domain),
                                  static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(index)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Modality m : kModalities) {
    std::span<double> out = m == Modality::Video ? out_v : out_a;
    const std::size_t dim = cfg.dim(m);
    if (out.size() != dim) throw ShapeError("generate_sample: output buffer has wrong length");
    const double* class_col = emb.class_basis[m].data() + static_cast<std::size_t>(cls) * dim;
    const double* domain_col = emb.domain_basis[m].data() + static_cast<std::size_t>(domain) * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      out[j] = cfg.discrim_strength[m] * class_col[j] + cfg.domain_leak[m] * domain_col[j] +
               cfg.noise_std[m] * normal(rng);
    }
  }
}

Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const Embeddings emb = make_embeddings(cfg);
  Dataset data;
  data.config = cfg;
  const auto per_cell = static_cast<std::size_t>(cfg.samples_per_class_per_domain);
  const std::size_t n = per_cell * static_cast<std::size_t>(cfg.num_classes);
  for (int d = 0; d < cfg.num_domains; ++d) {
    std::vector<double> v(n * cfg.dim_v), a(n * cfg.dim_a);
    MultimodalBatch batch;
    batch.y.reserve(n);
    batch.d.assign(n, d);
    std::size_t row = 0;
    for (int c = 0; c < cfg.num_classes; ++c) {
      for (int i = 0; i < cfg.samples_per_class_per_domain; ++i, ++row) {
        generate_sample(cfg, emb, d, c, i, std::span<double>(v).subspan(row * cfg.dim_v, cfg.dim_v),
                        std::span<double>(a).subspan(row * cfg.dim_a, cfg.dim_a));
        batch.y.push_back(c);
      }
    }
    batch.x_v = ad::Tensor::matrix(n, cfg.dim_v, std::move(v));
    batch.x_a = ad::Tensor::matrix(n, cfg.dim_a, std::move(a));
    data.by_domain.push_back(std::move(batch));
  }
  return data;
}

int validation_count(int samples_per_cell, double val_fraction) {
  return static_cast<int>(std::floor(val_fraction * samples_per_cell + 0.5));
}

Splits split_leave_one_domain_out(const Dataset& data, int target_domain, double val_fraction) {
  const SynthConfig& cfg = data.config;
  if (target_domain < 0 || target_domain >= static_cast<int>(data.by_domain.size())) {
    throw LookupError("unknown target domain " + std::to_string(target_domain));
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");

  const int per_cell = cfg.samples_per_class_per_domain;
  const int n_val = validation_count(per_cell, val_fraction);
  std::vector<MultimodalBatch> train_parts, val_parts;
  for (int d = 0; d < static_cast<int>(data.by_domain.size()); ++d) {
    if (d == target_domain) continue;
    std::vector<std::size_t> train_rows, val_rows;
    for (int c = 0; c < cfg.num_classes; ++c) {
      std::vector<std::size_t> cell(static_cast<std::size_t>(per_cell));
      std::iota(cell.begin(), cell.end(), static_cast<std::size_t>(c) * static_cast<std::size_t>(per_cell));
      std::mt19937_64 rng(derive_seed(cfg.seed, kSplitStream, static_cast<std::uint64_t>(d),
                                      static_cast<std::uint64_t>(c)));
      std::shuffle(cell.begin(), cell.end(), rng);
      std::sort(cell.begin(), cell.begin() + n_val);
      std::sort(cell.begin() + n_val, cell.end());
      val_rows.insert(val_rows.end(), cell.begin(), cell.begin() + n_val);
      train_rows.insert(train_rows.end(), cell.begin() + n_val, cell.end());
    }
    if (!train_rows.empty()) train_parts.push_back(data.by_domain[d].select(train_rows));
    if (!val_rows.empty()) val_parts.push_back(data.by_domain[d].select(val_rows));
  }
  Splits s;
  s.train = concat_batches(train_parts);
  s.source_val = concat_batches(val_parts);
  s.target_test = data.by_domain[static_cast<std::size_t>(target_domain)];
  return s;
}

std::uint64_t hash_batch(const MultimodalBatch& batch, std::uint64_t h) {
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    mix(static_cast<std::uint64_t>(batch.d[i]));
    mix(static_cast<std::uint64_t>(batch.y[i]));
  }
  if (!batch.empty()) {
    for (double x : batch.x_v.data()) mix(std::bit_cast<std::uint64_t>(x));
    for (double x : batch.x_a.data()) mix(std::bit_cast<std::uint64_t>(x));
  }
  return h;
}

std::uint64_t hash_splits(const Splits& splits) {
  std::uint64_t h = hash_batch(splits.train);
  h = hash_batch(splits.source_val, h);
  return hash_batch(splits.target_test, h);
}

void write_csv(const MultimodalBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::size_t dv = batch.empty() ? 0 : batch.x_v.cols();
  const std::size_t da = batch.empty() ? 0 : batch.x_a.cols();
  out << "# gmp-dataset v1\n";
  out << "domain,class";
  for (std::size_t j = 0; j < dv; ++j) out << ",v" << j;
  for (std::size_t j = 0; j < da; ++j) out << ",a" << j;
  out << '\n';
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << batch.d[i] << ',' << batch.y[i];
    for (std::size_t j = 0; j < dv; ++j) out << ',' << csv::format_double(batch.x_v.data()[i * dv + j]);
    for (std::size_t j = 0; j < da; ++j) out << ',' << csv::format_double(batch.x_a.data()[i * da + j]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

MultimodalBatch read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::size_t dv = 0, da = 0;
  std::vector<double> v, a;
  MultimodalBatch batch;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = csv::split_line(line);
    if (header.empty()) {
      header.assign(fields.begin(), fields.end());
      if (header.size() < 2 || header[0] != "domain" || header[1] != "class") {
        throw ParseError("dataset header must start with domain,class", line_no, "header");
      }
      for (std::size_t j = 2; j < header.size(); ++j) {
        const bool is_v = header[j] == "v" + std::to_string(dv);
        const bool is_a = header[j] == "a" + std::to_string(da);
        if (is_v && da == 0) {
          ++dv;
        } else if (is_a) {
          ++da;
        } else {
          throw ParseError("unexpected column '" + header[j] + "'", line_no, header[j]);
        }
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no, "");
    }
    batch.d.push_back(static_cast<int>(csv::parse_int(fields[0], line_no, "domain")));
    batch.y.push_back(static_cast<int>(csv::parse_int(fields[1], line_no, "class")));
    for (std::size_t j = 0; j < dv; ++j) v.push_back(csv::parse_double(fields[2 + j], line_no, header[2 + j]));
    for (std::size_t j = 0; j < da; ++j) {
      a.push_back(csv::parse_double(fields[2 + dv + j], line_no, header[2 + dv + j]));
    }
  }
  if (header.empty()) throw ParseError("missing dataset header", line_no, "header");
  if (!batch.y.empty()) {
    if (dv == 0 || da == 0) throw ParseError("dataset needs both v and a feature columns", 0, "header");
    batch.x_v = ad::Tensor::matrix(batch.y.size(), dv, std::move(v));
    batch.x_a = ad::Tensor::matrix(batch.y.size(), da, std::move(a));
  }
  batch.validate();
  return batch;
}

}  // namespace gmp::synth
