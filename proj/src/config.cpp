#include "gmp/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gmp/csv.hpp"

namespace gmp {

ModelConfig ExperimentConfig::model() const {
  ModelConfig m;
  m.input_dim_v = data.dim_v;
  m.input_dim_a = data.dim_a;
  m.encoder_hidden = encoder_hidden;
  m.feature_dim = feature_dim;
  m.num_classes = data.num_classes;
  m.num_domains = data.num_domains;
  m.seed = model_seed;
  return m;
}

void ExperimentConfig::validate() const {
  data.validate();
  model().validate();
  train.validate();
  if (target_domain < 0 || target_domain >= data.num_domains) {
    throw ConfigError("split: target_domain must lie in [0, num_domains)");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("split: val_fraction must lie in (0, 1)");
}

void ExperimentConfig::apply_seed(std::uint64_t seed) {
  data.seed = seed;
  model_seed = seed;
  train.seed = seed;
}

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  return seeds.empty() ? std::vector<std::uint64_t>{train.seed} : seeds;
}

namespace {

struct Entry {
  std::string value;
  std::size_t line;
};

using Section = std::map<std::string, Entry, std::less<>>;

std::uint64_t parse_u64(const Entry& e, const std::string& field) {
  const auto v = csv::parse_int(e.value, e.line, field);
  if (v < 0) throw ParseError("must be non-negative", e.line, field);
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const Entry& e, const std::string& field) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  throw ParseError("expected true or false, got '" + e.value + "'", e.line, field);
}

std::vector<std::uint64_t> parse_seed_list(const Entry& e, const std::string& field) {
  std::vector<std::uint64_t> out;
  if (csv::trim(e.value).empty()) return out;
  for (auto item : csv::split_line(e.value)) out.push_back(parse_u64(Entry{std::string(csv::trim(item)), e.line}, field));
  return out;
}

// Applies each known key through its setter; leftovers are reported as unknown.
class SectionReader {
 public:
  SectionReader(std::string name, Section entries) : name_(std::move(name)), entries_(std::move(entries)) {}

  template <typename Fn>
  void on(std::string_view key, Fn&& fn) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    const std::string field = name_ + "." + std::string(key);
    try {
      fn(it->second, field);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError(err.what(), it->second.line, field);
    }
    entries_.erase(it);
  }

  void on_double(std::string_view key, double& out) {
    on(key, [&](const Entry& e, const std::string& f) { out = csv::parse_double(e.value, e.line, f); });
  }
  void on_int(std::string_view key, int& out) {
    on(key, [&](const Entry& e, const std::string& f) { out = static_cast<int>(csv::parse_int(e.value, e.line, f)); });
  }
  void on_size(std::string_view key, std::size_t& out) {
    on(key, [&](const Entry& e, const std::string& f) { out = static_cast<std::size_t>(parse_u64(e, f)); });
  }
  void on_u64(std::string_view key, std::uint64_t& out) {
    on(key, [&](const Entry& e, const std::string& f) { out = parse_u64(e, f); });
  }

  void finish() const {
    if (entries_.empty()) return;
    const auto& [key, e] = *entries_.begin();
    throw ParseError("unknown key", e.line, name_ + "." + key);
  }

 private:
  std::string name_;
  Section entries_;
};

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, Section, std::less<>> sections;
  std::string current;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = csv::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no, "");
      current = std::string(csv::trim(line.substr(1, line.size() - 2)));
      if (current != "data" && current != "model" && current != "train" && current != "split" && current != "run") {
        throw ParseError("unknown section '" + current + "'", line_no, current);
      }
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no, "");
    const std::string key(csv::trim(line.substr(0, eq)));
    std::string value(csv::trim(line.substr(eq + 1)));
    if (current.empty()) throw ParseError("key outside of any section", line_no, key);
    if (key.empty()) throw ParseError("empty key", line_no, "");
    auto& section = sections[current];
    if (section.contains(key)) throw ParseError("duplicate key", line_no, current + "." + key);
    section.emplace(key, Entry{std::move(value), line_no});
  }

  ExperimentConfig cfg;
  {
    SectionReader r("data", sections["data"]);
    r.on("preset", [&](const Entry& e, const std::string&) { cfg.data = synth::SynthConfig::preset(e.value); });
    r.on_int("num_classes", cfg.data.num_classes);
    r.on_int("num_domains", cfg.data.num_domains);
    r.on_int("samples_per_class_per_domain", cfg.data.samples_per_class_per_domain);
    r.on_size("dim_v", cfg.data.dim_v);
    r.on_size("dim_a", cfg.data.dim_a);
    r.on_double("discrim_strength_v", cfg.data.discrim_strength.v);
    r.on_double("discrim_strength_a", cfg.data.discrim_strength.a);
    r.on_double("domain_leak_v", cfg.data.domain_leak.v);
    r.on_double("domain_leak_a", cfg.data.domain_leak.a);
    r.on_double("noise_std_v", cfg.data.noise_std.v);
    r.on_double("noise_std_a", cfg.data.noise_std.a);
    r.on_u64("seed", cfg.data.seed);
    r.finish();
  }
  {
    SectionReader r("model", sections["model"]);
    r.on_size("encoder_hidden", cfg.encoder_hidden);
    r.on_size("feature_dim", cfg.feature_dim);
    r.on_u64("seed", cfg.model_seed);
    r.finish();
  }
  {
    SectionReader r("train", sections["train"]);
    r.on("strategy", [&](const Entry& e, const std::string&) { cfg.train.strategy = parse_strategy(e.value); });
    r.on_double("lambda", cfg.train.lambda);
    r.on_double("eta", cfg.train.eta);
    r.on_double("alpha_k", cfg.train.alpha_k);
    r.on_double("alpha_p", cfg.train.alpha_p);
    r.on_int("epochs", cfg.train.epochs);
    r.on_size("batch_size", cfg.train.batch_size);
    r.on_u64("seed", cfg.train.seed);
    r.on("track_loss_change",
         [&](const Entry& e, const std::string& f) { cfg.train.track_loss_change = parse_bool(e, f); });
    r.finish();
  }
  {
    SectionReader r("split", sections["split"]);
    r.on_int("target_domain", cfg.target_domain);
    r.on_double("val_fraction", cfg.val_fraction);
    r.finish();
  }
  {
    SectionReader r("run", sections["run"]);
    r.on("seeds", [&](const Entry& e, const std::string& f) { cfg.seeds = parse_seed_list(e, f); });
    r.finish();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_config_text(const ExperimentConfig& cfg) {
  using csv::format_double;
  std::ostringstream out;
  const auto& d = cfg.data;
  out << "[data]\n"
      << "num_classes = " << d.num_classes << "\n"
      << "num_domains = " << d.num_domains << "\n"
      << "samples_per_class_per_domain = " << d.samples_per_class_per_domain << "\n"
      << "dim_v = " << d.dim_v << "\n"
      << "dim_a = " << d.dim_a << "\n"
      << "discrim_strength_v = " << format_double(d.discrim_strength.v) << "\n"
      << "discrim_strength_a = " << format_double(d.discrim_strength.a) << "\n"
      << "domain_leak_v = " << format_double(d.domain_leak.v) << "\n"
      << "domain_leak_a = " << format_double(d.domain_leak.a) << "\n"
      << "noise_std_v = " << format_double(d.noise_std.v) << "\n"
      << "noise_std_a = " << format_double(d.noise_std.a) << "\n"
      << "seed = " << d.seed << "\n\n";
  out << "[model]\n"
      << "encoder_hidden = " << cfg.encoder_hidden << "\n"
      << "feature_dim = " << cfg.feature_dim << "\n"
      << "seed = " << cfg.model_seed << "\n\n";
  const auto& t = cfg.train;
  out << "[train]\n"
      << "strategy = " << to_string(t.strategy) << "\n"
      << "lambda = " << format_double(t.lambda) << "\n"
      << "eta = " << format_double(t.eta) << "\n"
      << "alpha_k = " << format_double(t.alpha_k) << "\n"
      << "alpha_p = " << format_double(t.alpha_p) << "\n"
      << "epochs = " << t.epochs << "\n"
      << "batch_size = " << t.batch_size << "\n"
      << "seed = " << t.seed << "\n"
      << "track_loss_change = " << (t.track_loss_change ? "true" : "false") << "\n\n";
  out << "[split]\n"
      << "target_domain = " << cfg.target_domain << "\n"
      << "val_fraction = " << format_double(cfg.val_fraction) << "\n\n";
  out << "[run]\nseeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
  out << "\n";
  return out.str();
}

}  // namespace gmp
