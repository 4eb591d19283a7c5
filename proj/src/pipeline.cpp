// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "grassy/dataset.hpp"
#include "grassy/error.hpp"
#include "grassy/json_fields.hpp"
#include "grassy/serialize.hpp"

namespace grassy::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  json_fields::require_object(j, path);
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(ErrorKind::ConfigInvalid, (path.empty() ? key : path + "." + key) + ": unknown field");
  }
}

// Module validators report InvalidConfig; at the command boundary those are
// configuration errors.
template <typename F>
void as_config_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidConfig) throw;
    std::string msg = e.what();
    const std::string prefix = std::string(to_string(ErrorKind::InvalidConfig)) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw Error(ErrorKind::ConfigInvalid, msg);
  }
}

AtomAlphabet alphabet_of(const RunConfig& cfg) {
  return cfg.alphabet.empty() ? AtomAlphabet() : AtomAlphabet(cfg.alphabet);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Matrix values;
};

std::string features_csv(const std::vector<std::string>& ids, const std::vector<std::string>& names, const Matrix& x) {
  std::string out = "id";
  for (const std::string& n : names) out += "," + csv_field(n);
  out += "\n";
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out += csv_field(ids[r]);
    for (double v : x.row_span(r)) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

FeatureTable read_features(const fs::path& path) {
  const auto rows = parse_csv(io::read_file(path));
  if (rows.empty() || rows[0].empty() || rows[0][0] != "id")
    throw Error(ErrorKind::FormatError, path.string() + ": missing header");
  FeatureTable t;
  t.columns.assign(rows[0].begin() + 1, rows[0].end());
  t.values = Matrix(rows.size() - 1, t.columns.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != t.columns.size() + 1)
      throw Error(ErrorKind::FormatError, path.string() + ": row " + std::to_string(r) + " has " +
                                              std::to_string(rows[r].size()) + " fields");
    t.ids.push_back(rows[r][0]);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      try {
        std::size_t used = 0;
        t.values(r - 1, c) = std::stod(rows[r][c + 1], &used);
        if (used != rows[r][c + 1].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw Error(ErrorKind::FormatError, path.string() + ": bad number '" + rows[r][c + 1] + "'");
      }
    }
  }
  return t;
}

std::string history_csv(const std::vector<latent::EpochRecord>& h) {
  std::string out = "epoch,train_loss,val_loss,reconstruction,property,kl,best_val_loss\n";
  for (const auto& r : h)
    out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," + format_double(r.val_loss) + "," +
           format_double(r.reconstruction) + "," + format_double(r.property) + "," + format_double(r.kl) + "," +
           format_double(r.best_val_loss) + "\n";
  return out;
}

std::string gan_history_csv(const std::vector<gan::GanStepRecord>& h) {
  std::string out = "step,d_loss,g_loss,l_m,l_a,l_s\n";
  for (const auto& r : h)
    out += std::to_string(r.step) + "," + format_double(r.d_loss) + "," + format_double(r.g_loss) + "," +
           format_double(r.l_m) + "," + format_double(r.l_a) + "," + format_double(r.l_s) + "\n";
  return out;
}

void require(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw Error(ErrorKind::MissingPrerequisite, p.string() + " not found; " + hint);
}

std::string hint_featurize(const Options& o) {
  return "run `grassy featurize --config " + o.config.string() + " --out " + o.out.string() + "` first";
}

std::string hint_train_ae(const Options& o) {
  std::string flags = (o.variational ? " --variational" : "") + std::string(o.no_regr ? " --no-regr" : "");
  return "run `grassy train-ae --config " + o.config.string() + " --out " + o.out.string() + flags + "` first";
}

std::string hint_train_gan(const Options& o) {
  std::string flags = (o.variational ? " --variational" : "") + std::string(o.no_regr ? " --no-regr" : "");
  return "run `grassy train-gan --config " + o.config.string() + " --out " + o.out.string() + flags + "` first";
}

// Graphs of the dataset that featurized cleanly, aligned with a feature table.
struct Workspace {
  std::vector<MolecularGraph> graphs;
  FeatureTable features;
};

Workspace load_workspace(const RunConfig& cfg, const fs::path& features_path) {
  Workspace w;
  w.features = read_features(features_path);
  auto loaded = data::load_dataset(cfg.dataset, alphabet_of(cfg));
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < loaded.graphs.size(); ++i) pos[loaded.graphs[i].id] = i;
  for (const std::string& id : w.features.ids) {
    auto it = pos.find(id);
    if (it == pos.end())
      throw Error(ErrorKind::MissingPrerequisite, features_path.string() + " lists graph '" + id +
                                                      "' that the dataset no longer provides; rerun featurize");
    w.graphs.push_back(std::move(loaded.graphs[it->second]));
  }
  return w;
}

fs::path features_for_model(const fs::path& run_dir, const fs::path& model_dir) {
  return fs::exists(model_dir / "features.csv") ? model_dir / "features.csv" : run_dir / "features.csv";
}

latent::Split read_split(const fs::path& model_dir, const std::vector<MolecularGraph>& graphs) {
  json j;
  try {
    j = json::parse(io::read_file(model_dir / "split.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, (model_dir / "split.json").string() + ": " + e.what());
  }
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < graphs.size(); ++i) pos[graphs[i].id] = i;
  auto indices = [&](const char* key) {
    std::vector<std::size_t> out;
    for (const auto& id : j.at(key)) {
      auto it = pos.find(id.get<std::string>());
      if (it == pos.end()) throw Error(ErrorKind::FormatError, "split.json names unknown graph " + id.dump());
      out.push_back(it->second);
    }
    return out;
  };
  return {indices("train"), indices("val"), indices("test")};
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(m.row_span(rows[i]).begin(), m.row_span(rows[i]).end(), out.row_span(i).begin());
  return out;
}

json verdict_json(const validity::ValidityVerdict& v) {
  json rules = json::array();
  for (auto r : v.failed_rules) rules.push_back(validity::to_string(r));
  return json{{"valid", v.valid},
              {"failed_rules", rules},
              {"component_size", v.component_size},
              {"largest_ring", v.largest_ring},
              {"max_degree", v.max_degree_found}};
}

json summary_json(const validity::ValiditySummary& s, const validity::ValidityConfig& cfg) {
  return json{{"samples", s.total},
              {"valid", s.valid},
              {"fraction", s.fraction()},
              {"too_small", s.too_small},
              {"ring_too_large", s.ring_too_large},
              {"degree_too_high", s.degree_too_high},
              {"min_atoms", cfg.min_atoms},
              {"threshold", cfg.threshold}};
}

std::vector<validity::ValidityVerdict> verdicts_from_samples(const fs::path& path, const validity::ValidityConfig& cfg) {
  const std::string text = io::read_file(path);
  std::vector<validity::ValidityVerdict> out;
  std::size_t start = 0, line = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string row = text.substr(start, end - start);
    start = end + 1;
    ++line;
    if (row.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json s = json::parse(row);
      const std::size_t n = s.at("n").get<std::size_t>();
      const auto values = s.at("soft_adjacency").get<std::vector<double>>();
      if (values.size() != n * n) throw Error(ErrorKind::FormatError, "soft_adjacency has " + std::to_string(values.size()) + " entries for n=" + std::to_string(n));
      out.push_back(validity::check_soft(Matrix(n, n, values), cfg));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::FormatError, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  using json_fields::get;
  check_keys(j, {"seed", "dataset", "alphabet", "scattering", "latent", "generator", "validity", "smoothness", "generate"}, "");
  RunConfig c;
  c.seed = get<std::uint64_t>(j, "seed", c.seed, "config");
  const std::string ds = get<std::string>(j, "dataset", "", "config");
  if (!ds.empty()) c.dataset = fs::path(ds).is_absolute() ? fs::path(ds) : base_dir / ds;
  c.alphabet = get<std::vector<std::string>>(j, "alphabet", {}, "config");

  if (j.contains("scattering")) {
    check_keys(j["scattering"], {"J", "Q", "T", "mode", "all_second_order_pairs", "include_zeroth_order"}, "scattering");
    c.scattering = latent::scattering_config_from_json(j["scattering"]);
  }
  if (j.contains("latent")) {
    check_keys(j["latent"], {"input_dim", "latent_dim", "hidden", "regressor_hidden", "variational", "regression_weight",
                             "kl_weight", "property_names", "lr", "max_epochs", "patience", "batch_size"},
               "latent");
    c.latent = latent::latent_config_from_json(j["latent"]);
    c.property_names_given = j["latent"].contains("property_names");
  }
  if (j.contains("generator")) {
    check_keys(j["generator"], {"n_max", "K", "w_m", "w_a", "w_s", "disc_hidden", "gen_hidden", "threshold", "sigma", "lr",
                                "disc_lr", "steps", "pair_batch"},
               "generator");
    c.generator = gan::generator_config_from_json(j["generator"]);
  }
  c.validity.threshold = c.generator.threshold;
  if (j.contains("validity")) {
    const json& v = j["validity"];
    check_keys(v, {"threshold", "min_atoms", "tranche", "max_ring_size", "max_degree", "ring_mode"}, "validity");
    c.validity.threshold = get<double>(v, "threshold", c.validity.threshold, "validity");
    if (v.contains("threshold") && j.contains("generator") && j["generator"].contains("threshold") &&
        c.validity.threshold != c.generator.threshold)
      throw Error(ErrorKind::ConfigInvalid, "validity.threshold: disagrees with generator.threshold");
    c.generator.threshold = c.validity.threshold;
    c.validity.min_atoms = get<std::size_t>(v, "min_atoms", c.validity.min_atoms, "validity");
    if (v.contains("tranche")) {
      std::size_t m = 0;
      as_config_error([&] { m = validity::tranche_min_atoms(get<std::string>(v, "tranche", "", "validity")); });
      if (v.contains("min_atoms") && m != c.validity.min_atoms)
        throw Error(ErrorKind::ConfigInvalid, "validity.min_atoms: disagrees with validity.tranche");
      c.validity.min_atoms = m;
    }
    c.validity.max_ring_size = get<std::size_t>(v, "max_ring_size", c.validity.max_ring_size, "validity");
    c.validity.max_degree = get<std::size_t>(v, "max_degree", c.validity.max_degree, "validity");
    const std::string mode = get<std::string>(v, "ring_mode", "basis", "validity");
    if (mode == "basis") c.validity.ring_mode = validity::RingMode::MinimumCycleBasis;
    else if (mode == "all_circuits") c.validity.ring_mode = validity::RingMode::AllCircuits;
    else throw Error(ErrorKind::ConfigInvalid, "validity.ring_mode: expected \"basis\" or \"all_circuits\"");
  }
  if (j.contains("smoothness")) {
    check_keys(j["smoothness"], {"k"}, "smoothness");
    c.smoothness.k = get<std::size_t>(j["smoothness"], "k", c.smoothness.k, "smoothness");
  }
  if (j.contains("generate")) {
    check_keys(j["generate"], {"count", "mode"}, "generate");
    c.sample_count = get<std::size_t>(j["generate"], "count", c.sample_count, "generate");
    const std::string mode = get<std::string>(j["generate"], "mode", "perturb", "generate");
    if (mode == "perturb") c.sample_mode = gan::SampleMode::Perturb;
    else if (mode == "interp") c.sample_mode = gan::SampleMode::Interpolate;
    else throw Error(ErrorKind::ConfigInvalid, "generate.mode: expected \"perturb\" or \"interp\"");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorKind::ConfigInvalid, "cannot read config file " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

void validate(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw Error(ErrorKind::ConfigInvalid, "dataset: no dataset path given");
  as_config_error([&] {
    const AtomAlphabet alphabet = alphabet_of(cfg);
    cfg.scattering.validate();
    latent::LatentModelConfig l = cfg.latent;
    const std::size_t dim = scattering::feature_dimension(cfg.scattering, alphabet.size());
    if (l.input_dim != 0 && l.input_dim != dim)
      throw Error(ErrorKind::InvalidConfig, "latent.input_dim (" + std::to_string(l.input_dim) +
                                                ") disagrees with the scattering feature dimension " + std::to_string(dim));
    l.input_dim = dim;
    if (!cfg.property_names_given) l.property_names = {"inferred"};
    l.validate();
    cfg.generator.validate();
    cfg.validity.validate();
    if (cfg.smoothness.k == 0) throw Error(ErrorKind::InvalidConfig, "smoothness.k must be >= 1");
  });
}

RunConfig resolve(const Options& opts) {
  RunConfig cfg;
  if (!opts.config.empty()) cfg = load_run_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.dataset) cfg.dataset = *opts.dataset;
  if (opts.scattering_mode) cfg.scattering.mode = *opts.scattering_mode;
  if (opts.variational) cfg.latent.variational = true;
  if (opts.no_regr) cfg.latent.regression_weight = 0.0;
  if (opts.count) cfg.sample_count = *opts.count;
  if (opts.sample_mode) cfg.sample_mode = *opts.sample_mode;
  if (opts.out.empty()) throw Error(ErrorKind::ConfigInvalid, "out: no output directory given");
  validate(cfg);
  return cfg;
}

std::string model_name(const RunConfig& cfg, const Options&) {
  std::string name = cfg.latent.variational ? "vae" : "ae";
  if (cfg.latent.regression_weight > 0.0) name += "_regr";
  if (cfg.scattering.mode == scattering::Mode::Learned) name += "_learned";
  return name;
}

int cmd_featurize(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve(opts);
  const AtomAlphabet alphabet = alphabet_of(cfg);
  const data::LoadedDataset loaded = data::load_dataset(cfg.dataset, alphabet);
  fs::create_directories(opts.out);

  std::string errors;
  for (const auto& e : loaded.errors) {
    errors += data::to_json(e).dump() + "\n";
    log << "record at line " << e.line << (e.id.empty() ? "" : " (" + e.id + ")") << ": " << e.kind << ": "
        << e.message << "\n";
  }
  io::atomic_write(opts.out / "featurize_errors.jsonl", errors);
  if (static_cast<double>(loaded.errors.size()) > 0.01 * static_cast<double>(loaded.records))
    throw Error(ErrorKind::DatasetUnreadable,
                std::to_string(loaded.errors.size()) + " of " + std::to_string(loaded.records) +
                    " records failed (more than 1%); see " + (opts.out / "featurize_errors.jsonl").string());

  Matrix selector;
  const Matrix* sel = nullptr;
  if (cfg.scattering.mode == scattering::Mode::Learned) {
    ad::Tape tape;
    selector = ad::softmax_rows(tape.constant(scattering::dyadic_logits(cfg.scattering.J, cfg.scattering.T))).value();
    sel = &selector;
  } else {
    selector = scattering::dyadic_selector(cfg.scattering.J, 1 << cfg.scattering.J);
  }
  const Matrix x = scattering::featurize_dataset(loaded.graphs, alphabet, cfg.scattering, sel);
  const auto names = scattering::feature_names(cfg.scattering, alphabet);
  std::vector<std::string> ids;
  for (const auto& g : loaded.graphs) ids.push_back(g.id);
  io::atomic_write(opts.out / "features.csv", features_csv(ids, names, x));

  const latent::Standardizer stats = latent::Standardizer::fit(x);
  io::atomic_write(opts.out / "feature_stats.json",
                   json{{"rows", x.rows()}, {"dimension", x.cols()}, {"columns", names}, {"mean", stats.mean}, {"scale", stats.scale}}
                           .dump(2) + "\n");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < selector.rows(); ++r) rows.emplace_back(selector.row_span(r).begin(), selector.row_span(r).end());
  io::atomic_write(opts.out / "bank.json",
                   json{{"scattering", latent::to_json(cfg.scattering)}, {"alphabet", alphabet.symbols()}, {"selector", rows}}
                           .dump(2) + "\n");
  log << "featurized " << x.rows() << " graphs (" << loaded.errors.size() << " failed), " << x.cols()
      << " features -> " << (opts.out / "features.csv").string() << "\n";
  return 0;
}

int cmd_train_ae(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve(opts);
  require(opts.out / "features.csv", hint_featurize(opts));
  Workspace w = load_workspace(cfg, opts.out / "features.csv");
  const AtomAlphabet alphabet = alphabet_of(cfg);

  latent::LatentModelConfig lcfg = cfg.latent;
  lcfg.input_dim = w.features.values.cols();
  if (!cfg.property_names_given) lcfg.property_names = data::common_properties(w.graphs);
  as_config_error([&] { lcfg.validate(); });

  latent::Dataset ds;
  ds.ids = w.features.ids;
  ds.features = w.features.values;
  ds.properties = latent::property_matrix(w.graphs, lcfg.property_names);
  std::vector<scattering::ScatteringPlan> plans;
  std::optional<scattering::ScatteringConfig> learned;
  if (cfg.scattering.mode == scattering::Mode::Learned) {
    learned = cfg.scattering;
    for (const auto& g : w.graphs) plans.push_back(scattering::make_plan(g, alphabet, cfg.scattering));
    ds.plans = &plans;
  }
  if (ds.size() < 10)
    throw Error(ErrorKind::DatasetTooSmall, "training needs at least 10 graphs, got " + std::to_string(ds.size()));

  Rng rng(cfg.seed);
  const latent::Split split = latent::split_dataset(ds.size(), rng);
  latent::LatentModel model(lcfg, rng, learned);
  const latent::TrainResult result = latent::train(model, ds, split, rng.next_u64());
  bool probe = false;
  if (lcfg.regression_weight == 0.0 && !lcfg.property_names.empty()) {
    latent::fit_probe(model, ds, split, rng.next_u64());
    probe = true;
  }

  const std::string name = model_name(cfg, opts);
  const fs::path dir = opts.out / name;
  fs::create_directories(dir);
  model.save(dir, json{{"variant", name}, {"probe", probe}, {"alphabet", alphabet.symbols()}, {"seed", cfg.seed}});
  io::atomic_write(dir / "history.csv", history_csv(result.history));
  auto ids_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (std::size_t i : idx) out.push_back(ds.ids[i]);
    return out;
  };
  io::atomic_write(dir / "split.json",
                   json{{"train", ids_of(split.train)}, {"val", ids_of(split.val)}, {"test", ids_of(split.test)}}.dump(2) + "\n");
  if (learned) {
    const Matrix selector = model.selector();
    std::string csv = "row";
    for (std::size_t t = 0; t < selector.cols(); ++t) csv += ",t" + std::to_string(t);
    csv += "\n";
    for (std::size_t r = 0; r < selector.rows(); ++r) {
      csv += std::to_string(r);
      for (double v : selector.row_span(r)) csv += "," + format_double(v);
      csv += "\n";
    }
    io::atomic_write(dir / "selector.csv", csv);
    const Matrix x = scattering::featurize_dataset(w.graphs, alphabet, cfg.scattering, &selector);
    io::atomic_write(dir / "features.csv", features_csv(ds.ids, w.features.columns, x));
  }
  log << "trained " << name << ": " << result.history.size() - 1 << " epochs, best epoch " << result.best_epoch
      << ", val loss " << format_double(model.best_val_loss) << (probe ? ", property probe fitted" : "") << " -> "
      << dir.string() << "\n";
  return 0;
}

int cmd_train_gan(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve(opts);
  const fs::path dir = opts.out / model_name(cfg, opts);
  require(opts.out / "features.csv", hint_featurize(opts));
  require(dir / "model.json", hint_train_ae(opts));
  const latent::LatentModel ae = latent::LatentModel::load(dir);
  Workspace w = load_workspace(cfg, features_for_model(opts.out, dir));
  std::size_t largest = 0;
  for (const auto& g : w.graphs) largest = std::max(largest, g.n());
  if (cfg.generator.n_max != 0 && cfg.generator.n_max < largest)
    throw Error(ErrorKind::ConfigInvalid, "generator.n_max (" + std::to_string(cfg.generator.n_max) +
                                              ") is smaller than the largest graph (" + std::to_string(largest) + ")");
  gan::GeneratorConfig gcfg = cfg.generator;
  if (gcfg.n_max == 0) gcfg.n_max = largest;

  const latent::Split split = read_split(dir, w.graphs);
  std::vector<MolecularGraph> train_graphs;
  for (std::size_t i : split.train) train_graphs.push_back(w.graphs[i]);
  const Matrix train_features = take_rows(w.features.values, split.train);

  Rng rng(cfg.seed);
  const gan::GanTrainResult result = gan::train_gan(gcfg, ae, train_graphs, train_features, rng.next_u64());
  result.model.save(dir / "gan");
  io::atomic_write(dir / "gan" / "history.csv", gan_history_csv(result.history));
  const auto& last = result.history.back();
  log << "trained generator: " << result.history.size() << " steps, final L_m " << format_double(last.l_m)
      << ", D loss " << format_double(last.d_loss) << " -> " << (dir / "gan").string() << "\n";
  return 0;
}

int cmd_generate(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve(opts);
  const fs::path dir = opts.out / model_name(cfg, opts);
  require(opts.out / "features.csv", hint_featurize(opts));
  require(dir / "model.json", hint_train_ae(opts));
  require(dir / "gan" / "gan.json", hint_train_gan(opts));
  const latent::LatentModel ae = latent::LatentModel::load(dir);
  const gan::GeneratorModel gen = gan::GeneratorModel::load(dir / "gan");
  Workspace w = load_workspace(cfg, features_for_model(opts.out, dir));
  const latent::Split split = read_split(dir, w.graphs);
  std::vector<std::string> ids;
  for (std::size_t i : split.train) ids.push_back(w.graphs[i].id);
  const Matrix features = take_rows(w.features.values, split.train);

  Rng rng(cfg.seed);
  const auto samples =
      gan::sample_molecules(gen, ae, ids, features, cfg.sample_count, cfg.generator.sigma, cfg.sample_mode, rng);

  std::string out;
  std::vector<validity::ValidityVerdict> verdicts;
  for (const gan::Sample& s : samples) {
    const validity::ValidityVerdict v = validity::check_soft(s.soft_adjacency, cfg.validity);
    verdicts.push_back(v);
    json edges = json::array();
    for (auto [a, b] : validity::from_adjacency(s.soft_adjacency, cfg.validity.threshold).edges) edges.push_back({a, b});
    json rec{{"sample_id", s.sample_id}};
    if (cfg.sample_mode == gan::SampleMode::Perturb) {
      rec["mode"] = "perturb";
      rec["source_graph_id"] = s.source;
      rec["sigma"] = s.sigma;
    } else {
      rec["mode"] = "interp";
      rec["source_pair"] = {s.source, s.source_j};
      rec["alpha"] = s.alpha;
    }
    rec["n"] = s.soft_adjacency.rows();
    rec["soft_adjacency"] = s.soft_adjacency.values();
    rec["thresholded_edges"] = edges;
    rec["validity"] = verdict_json(v);
    out += rec.dump() + "\n";
  }
  io::atomic_write(dir / "samples.jsonl", out);
  const auto summary = validity::summarize(verdicts);
  io::atomic_write(dir / "validity.json", summary_json(summary, cfg.validity).dump(2) + "\n");
  log << "generated " << samples.size() << " samples -> " << (dir / "samples.jsonl").string() << "\n"
      << validity::format_summary(summary);
  return 0;
}

int cmd_validate(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve(opts);
  const fs::path dir = opts.out / model_name(cfg, opts);
  const fs::path samples = opts.samples ? *opts.samples : dir / "samples.jsonl";
  require(samples, "run `grassy generate` first or pass --samples");
  const auto verdicts = verdicts_from_samples(samples, cfg.validity);
  const auto summary = validity::summarize(verdicts);
  if (summary.total == 0) throw Error(ErrorKind::EmptySampleSet, samples.string() + " holds no samples");
  io::atomic_write(samples.parent_path() / "validity.json", summary_json(summary, cfg.validity).dump(2) + "\n");
  log << validity::format_summary(summary);
  return 0;
}

int cmd_metrics(const Options& opts, std::ostream& log) {
  const RunConfig cfg = resolve(opts);
  require(opts.out / "features.csv", hint_featurize(opts));
  std::vector<std::string> names = opts.models;
  if (names.empty() && fs::exists(opts.out)) {
    for (const auto& entry : fs::directory_iterator(opts.out))
      if (entry.is_directory() && fs::exists(entry.path() / "model.json")) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
  }
  if (names.empty()) throw Error(ErrorKind::MissingPrerequisite, "no trained models below " + opts.out.string() + "; " + hint_train_ae(opts));

  metrics::MetricsReport report;
  for (const std::string& name : names) {
    const fs::path dir = opts.out / name;
    require(dir / "model.json", hint_train_ae(opts));
    const latent::LatentModel model = latent::LatentModel::load(dir);
    Workspace w = load_workspace(cfg, features_for_model(opts.out, dir));
    const latent::Split split = read_split(dir, w.graphs);
    const auto& props = model.config().property_names;
    const Matrix all_targets = latent::property_matrix(w.graphs, props);

    metrics::ModelMetrics mm;
    mm.name = name;
    mm.properties = props;
    mm.test_count = split.test.size();
    mm.latent_count = w.graphs.size();
    if (!props.empty()) {
      mm.error = metrics::property_error(model, take_rows(w.features.values, split.test), take_rows(all_targets, split.test));
      const Matrix z = model.encode(w.features.values);
      for (std::size_t k = 0; k < props.size(); ++k) {
        std::vector<double> p(all_targets.rows());
        for (std::size_t r = 0; r < p.size(); ++r) p[r] = all_targets(r, k);
        mm.smoothness.push_back(metrics::smoothness(z, p, cfg.smoothness));
      }
      if (report.mean_baseline.empty()) {
        const Matrix train = take_rows(all_targets, split.train);
        const Matrix test = take_rows(all_targets, split.test);
        const latent::Standardizer s = latent::Standardizer::fit(train);
        Matrix pred(test.rows(), test.cols());
        for (std::size_t r = 0; r < pred.rows(); ++r)
          for (std::size_t c = 0; c < pred.cols(); ++c) pred(r, c) = s.mean[c];
        report.mean_baseline = metrics::absolute_error(pred, test);
        report.baseline_properties = props;
      }
    }
    metrics::export_latent(model, w.features.ids, w.features.values, all_targets, props, dir / "latent.csv");
    report.models.push_back(std::move(mm));

    if (fs::exists(dir / "samples.jsonl")) {
      const auto verdicts = verdicts_from_samples(dir / "samples.jsonl", cfg.validity);
      const auto s = validity::summarize(verdicts);
      report.validity.push_back({name, s.total, s.valid, s.fraction(), cfg.validity.min_atoms});
    }
  }

  io::atomic_write(opts.out / "report.json", metrics::to_json(report).dump(2) + "\n");
  const std::string text = "Property prediction error (mean ± std of absolute error)\n" +
                           metrics::format_error_table(report) + "\nSmoothness (p^T L p / p^T p, lower is smoother)\n" +
                           metrics::format_smoothness_table(report) + "\nValidity\n" +
                           metrics::format_validity_table(report);
  io::atomic_write(opts.out / "report.txt", text);
  log << text;
  return 0;
}

}  // namespace grassy::pipeline
