// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/latent_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "grassy/error.hpp"
#include "grassy/json_fields.hpp"
#include "grassy/serialize.hpp"

namespace grassy::latent {

using nlohmann::json;

void LatentModelConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (input_dim == 0) bad("latent.input_dim must be positive");
  if (latent_dim == 0) bad("latent.latent_dim must be positive");
  if (latent_dim >= input_dim)
    bad("latent.latent_dim (" + std::to_string(latent_dim) + ") must be smaller than input_dim (" +
        std::to_string(input_dim) + ")");
  for (std::size_t h : hidden)
    if (h == 0) bad("latent.hidden widths must be positive");
  if (!(regression_weight >= 0.0)) bad("latent.regression_weight must be >= 0");
  if (!(kl_weight >= 0.0)) bad("latent.kl_weight must be >= 0");
  if (regression_weight > 0.0 && property_names.empty())
    bad("latent.property_names must be nonempty when regression_weight > 0");
  if (!property_names.empty() && regressor_hidden == 0) bad("latent.regressor_hidden must be positive");
  std::set<std::string> seen;
  for (const auto& p : property_names)
    if (!seen.insert(p).second) bad("latent.property_names has duplicate '" + p + "'");
  if (!(lr > 0.0)) bad("latent.lr must be > 0");
  if (max_epochs < 1) bad("latent.max_epochs must be >= 1");
  if (patience < 1) bad("latent.patience must be >= 1");
  if (batch_size == 0) bad("latent.batch_size must be >= 1");
}

json to_json(const LatentModelConfig& c) {
  return json{{"input_dim", c.input_dim},
              {"latent_dim", c.latent_dim},
              {"hidden", c.hidden},
              {"regressor_hidden", c.regressor_hidden},
              {"variational", c.variational},
              {"regression_weight", c.regression_weight},
              {"kl_weight", c.kl_weight},
              {"property_names", c.property_names},
              {"lr", c.lr},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"batch_size", c.batch_size}};
}

LatentModelConfig latent_config_from_json(const json& j, const std::string& path) {
  using json_fields::get;
  json_fields::require_object(j, path);
  LatentModelConfig c;
  c.input_dim = get<std::size_t>(j, "input_dim", c.input_dim, path);
  c.latent_dim = get<std::size_t>(j, "latent_dim", c.latent_dim, path);
  c.hidden = get<std::vector<std::size_t>>(j, "hidden", c.hidden, path);
  c.regressor_hidden = get<std::size_t>(j, "regressor_hidden", c.regressor_hidden, path);
  c.variational = get<bool>(j, "variational", c.variational, path);
  c.regression_weight = get<double>(j, "regression_weight", c.regression_weight, path);
  c.kl_weight = get<double>(j, "kl_weight", c.kl_weight, path);
  c.property_names = get<std::vector<std::string>>(j, "property_names", c.property_names, path);
  c.lr = get<double>(j, "lr", c.lr, path);
  c.max_epochs = get<int>(j, "max_epochs", c.max_epochs, path);
  c.patience = get<int>(j, "patience", c.patience, path);
  c.batch_size = get<std::size_t>(j, "batch_size", c.batch_size, path);
  return c;
}

json to_json(const scattering::ScatteringConfig& c) {
  return json{{"J", c.J},
              {"Q", c.Q},
              {"T", c.T},
              {"mode", c.mode == scattering::Mode::Learned ? "learned" : "dyadic"},
              {"all_second_order_pairs", c.all_second_order_pairs},
              {"include_zeroth_order", c.include_zeroth_order}};
}

scattering::ScatteringConfig scattering_config_from_json(const json& j, const std::string& path) {
  using json_fields::get;
  json_fields::require_object(j, path);
  scattering::ScatteringConfig c;
  c.J = get<int>(j, "J", c.J, path);
  c.Q = get<int>(j, "Q", c.Q, path);
  c.T = get<int>(j, "T", c.T, path);
  const std::string mode = get<std::string>(j, "mode", "dyadic", path);
  if (mode == "dyadic") c.mode = scattering::Mode::Dyadic;
  else if (mode == "learned") c.mode = scattering::Mode::Learned;
  else throw Error(ErrorKind::ConfigInvalid, path + ".mode: expected \"dyadic\" or \"learned\", got \"" + mode + "\"");
  c.all_second_order_pairs = get<bool>(j, "all_second_order_pairs", c.all_second_order_pairs, path);
  c.include_zeroth_order = get<bool>(j, "include_zeroth_order", c.include_zeroth_order, path);
  return c;
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 1.0);
  if (x.rows() == 0) return s;
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
    const double mu = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - mu) * (x(r, c) - mu);
    const double sd = std::sqrt(ss / n);
    s.mean[c] = mu;
    s.scale[c] = sd > 1e-12 * std::max(1.0, std::fabs(mu)) ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != size())
    throw Error(ErrorKind::DimensionMismatch, "standardizer has " + std::to_string(size()) + " columns, input " + shape_string(x));
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
  return out;
}

Matrix Standardizer::invert(const Matrix& x) const {
  if (x.cols() != size())
    throw Error(ErrorKind::DimensionMismatch, "standardizer has " + std::to_string(size()) + " columns, input " + shape_string(x));
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c) * scale[c] + mean[c];
  return out;
}

Matrix property_matrix(std::span<const MolecularGraph> graphs, std::span<const std::string> names) {
  Matrix out(graphs.size(), names.size());
  for (std::size_t i = 0; i < graphs.size(); ++i)
    for (std::size_t k = 0; k < names.size(); ++k) {
      auto it = graphs[i].properties.find(names[k]);
      if (it == graphs[i].properties.end())
        throw Error(ErrorKind::MissingProperty, "property '" + names[k] + "' missing for graph " + graphs[i].id);
      out(i, k) = it->second;
    }
  return out;
}

Split split_dataset(std::size_t count, Rng& rng) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t n_val = std::max<std::size_t>(1, count / 10);
  const std::size_t n_test = std::max<std::size_t>(1, count / 10);
  Split s;
  if (count < n_val + n_test + 1) throw Error(ErrorKind::DatasetTooSmall, "cannot split " + std::to_string(count) + " items");
  const std::size_t n_train = count - n_val - n_test;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

namespace {

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(m.row_span(rows[i]).begin(), m.row_span(rows[i]).end(), out.row_span(i).begin());
  return out;
}

std::vector<std::size_t> reversed(std::vector<std::size_t> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

json stats_json(const Standardizer& s) { return json{{"mean", s.mean}, {"scale", s.scale}}; }

Standardizer stats_from_json(const json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw Error(ErrorKind::FormatError, "standardizer mean/scale length mismatch");
  return s;
}

}  // namespace

LatentModel::LatentModel(LatentModelConfig cfg, Rng& rng, std::optional<scattering::ScatteringConfig> learned)
    : cfg_(std::move(cfg)), scattering_(std::move(learned)) {
  cfg_.validate();
  std::vector<std::size_t> enc{cfg_.input_dim};
  enc.insert(enc.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  enc.push_back(cfg_.variational ? 2 * cfg_.latent_dim : cfg_.latent_dim);
  std::vector<std::size_t> dec{cfg_.latent_dim};
  const auto back = reversed(cfg_.hidden);
  dec.insert(dec.end(), back.begin(), back.end());
  dec.push_back(cfg_.input_dim);
  encoder_ = nn::Mlp(enc, nn::Activation::Relu, nn::Activation::None, "encoder", rng);
  decoder_ = nn::Mlp(dec, nn::Activation::Relu, nn::Activation::None, "decoder", rng);
  if (!cfg_.property_names.empty())
    regressor_ = nn::Mlp({cfg_.latent_dim, cfg_.regressor_hidden, cfg_.property_names.size()}, nn::Activation::Relu,
                         nn::Activation::None, "regressor", rng);
  if (scattering_) {
    scattering_->validate();
    if (scattering_->mode != scattering::Mode::Learned)
      throw Error(ErrorKind::InvalidConfig, "learned selector requested with a dyadic scattering config");
    selector_logits_ = ad::Parameter("scattering.logits", scattering::dyadic_logits(scattering_->J, scattering_->T));
  }
  features_ = Standardizer{std::vector<double>(cfg_.input_dim, 0.0), std::vector<double>(cfg_.input_dim, 1.0)};
  const std::size_t np = cfg_.property_names.size();
  properties_ = Standardizer{std::vector<double>(np, 0.0), std::vector<double>(np, 1.0)};
}

Matrix LatentModel::selector() const {
  if (!scattering_) throw Error(ErrorKind::InvalidConfig, "model has no learned selector");
  ad::Tape tape;
  return ad::softmax_rows(tape.constant(selector_logits_.value)).value();
}

Matrix LatentModel::encode(const Matrix& raw_features) const {
  if (raw_features.cols() != cfg_.input_dim)
    throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(cfg_.input_dim) + " features, got " +
                                                  shape_string(raw_features));
  const Matrix h = encoder_.forward(features_.apply(raw_features));
  if (!cfg_.variational) return h;
  Matrix mu(h.rows(), cfg_.latent_dim);
  for (std::size_t r = 0; r < h.rows(); ++r)
    std::copy_n(h.row_span(r).begin(), cfg_.latent_dim, mu.row_span(r).begin());
  return mu;
}

std::vector<double> LatentModel::encode(std::span<const double> raw_feature) const {
  return encode(Matrix::row(raw_feature)).values();
}

Matrix LatentModel::decode(const Matrix& z) const {
  if (z.cols() != cfg_.latent_dim)
    throw Error(ErrorKind::DimensionMismatch, "latent codes must have " + std::to_string(cfg_.latent_dim) + " columns, got " + shape_string(z));
  return decoder_.forward(z);
}

Matrix LatentModel::predict_properties(const Matrix& raw_features) const {
  if (regressor_.empty()) return Matrix(raw_features.rows(), 0);
  return properties_.invert(regressor_.forward(encode(raw_features)));
}

std::vector<double> LatentModel::predict_property(const Matrix& raw_features, const std::string& name) const {
  const auto it = std::find(cfg_.property_names.begin(), cfg_.property_names.end(), name);
  if (it == cfg_.property_names.end()) throw Error(ErrorKind::UnknownProperty, "model does not predict '" + name + "'");
  const std::size_t k = static_cast<std::size_t>(it - cfg_.property_names.begin());
  const Matrix all = predict_properties(raw_features);
  std::vector<double> out(all.rows());
  for (std::size_t r = 0; r < all.rows(); ++r) out[r] = all(r, k);
  return out;
}

TapeOutputs LatentModel::encode(ad::Tape& tape, ad::Var standardized, Rng* noise) {
  TapeOutputs out;
  out.input = standardized;
  const ad::Var h = encoder_.forward(tape, standardized);
  if (!cfg_.variational) {
    out.z = out.mu = h;
    return out;
  }
  const std::size_t b = h.rows();
  const std::size_t L = cfg_.latent_dim;
  out.mu = ad::slice(h, 0, b, 0, L);
  out.logvar = ad::slice(h, 0, b, L, 2 * L);
  if (noise == nullptr) {
    out.z = out.mu;
    return out;
  }
  Matrix eps(b, L);
  for (double& e : eps.data()) e = noise->normal();
  out.z = out.mu + ad::mul(ad::exp(ad::scale(out.logvar, 0.5)), tape.constant(std::move(eps)));
  return out;
}

ad::Var LatentModel::decode(ad::Tape& tape, ad::Var z) { return decoder_.forward(tape, z); }

ad::Var LatentModel::decode_frozen(ad::Tape& tape, ad::Var z) const { return decoder_.forward_frozen(tape, z); }

ad::Var LatentModel::regress(ad::Tape& tape, ad::Var z) {
  if (regressor_.empty()) throw Error(ErrorKind::InvalidConfig, "model has no properties to regress");
  return regressor_.forward(tape, z);
}

ad::Var LatentModel::input_batch(ad::Tape& tape, const Dataset& data, std::span<const std::size_t> rows) {
  if (!scattering_) return tape.constant(features_.apply(take_rows(data.features, rows)));
  if (data.plans == nullptr || data.plans->size() != data.size())
    throw Error(ErrorKind::InvalidConfig, "learned scattering needs one plan per dataset row");
  const ad::Var selector = ad::softmax_rows(tape.leaf(selector_logits_));
  std::vector<ad::Var> moments;
  moments.reserve(rows.size());
  for (std::size_t r : rows) moments.push_back(scattering::scattering_moments(tape, selector, (*data.plans)[r], *scattering_));
  const ad::Var raw = rows.size() == 1 ? moments.front() : ad::concat_rows(moments);
  if (raw.cols() != cfg_.input_dim)
    throw Error(ErrorKind::DimensionMismatch, "scattering produced " + std::to_string(raw.cols()) + " features, model expects " +
                                                  std::to_string(cfg_.input_dim));
  Matrix shift(1, cfg_.input_dim);
  Matrix inv_scale(rows.size(), cfg_.input_dim);
  for (std::size_t c = 0; c < cfg_.input_dim; ++c) {
    shift(0, c) = -features_.mean[c];
    for (std::size_t r = 0; r < rows.size(); ++r) inv_scale(r, c) = 1.0 / features_.scale[c];
  }
  return ad::mul(ad::add_bias(raw, tape.constant(std::move(shift))), tape.constant(std::move(inv_scale)));
}

LossTerms LatentModel::loss(ad::Tape& tape, const Dataset& data, std::span<const std::size_t> rows, Rng* noise) {
  if (rows.empty()) throw Error(ErrorKind::EmptyBatch, "loss over an empty batch");
  LossTerms t;
  const TapeOutputs enc = encode(tape, input_batch(tape, data, rows), noise);
  t.reconstruction = reconstruction_loss(enc.input, decode(tape, enc.z));
  t.total = t.reconstruction;
  if (cfg_.regression_weight > 0.0) {
    const ad::Var targets = tape.constant(properties_.apply(take_rows(data.properties, rows)));
    t.property = property_loss(targets, regress(tape, enc.z));
    t.total = t.total + ad::scale(t.property, cfg_.regression_weight);
  }
  if (cfg_.variational) {
    t.kl = kl_loss(enc.mu, enc.logvar);
    t.total = t.total + ad::scale(t.kl, cfg_.kl_weight);
  }
  return t;
}

std::vector<ad::Parameter*> LatentModel::autoencoder_parameters() {
  std::vector<ad::Parameter*> out = encoder_.parameters();
  for (ad::Parameter* p : decoder_.parameters()) out.push_back(p);
  if (scattering_) out.push_back(&selector_logits_);
  return out;
}

std::vector<ad::Parameter*> LatentModel::regressor_parameters() { return regressor_.parameters(); }

std::vector<ad::Parameter*> LatentModel::parameters() {
  std::vector<ad::Parameter*> out = autoencoder_parameters();
  for (ad::Parameter* p : regressor_parameters()) out.push_back(p);
  return out;
}

std::vector<const ad::Parameter*> LatentModel::parameters() const {
  auto* self = const_cast<LatentModel*>(this);
  const auto all = self->parameters();
  return {all.begin(), all.end()};
}

void LatentModel::save(const std::filesystem::path& dir, const json& extra) const {
  std::filesystem::create_directories(dir);
  io::save_parameters(dir / "model.bin", parameters());
  json m{{"format", "grassy-latent-model"},
         {"version", 1},
         {"config", to_json(cfg_)},
         {"scattering", scattering_ ? to_json(*scattering_) : json(nullptr)},
         {"feature_stats", stats_json(features_)},
         {"property_stats", stats_json(properties_)},
         {"property_names", cfg_.property_names},
         {"epoch", trained_epoch},
         {"val_loss", best_val_loss},
         {"extra", extra}};
  io::atomic_write(dir / "model.json", m.dump(2) + "\n");
}

json LatentModel::manifest(const std::filesystem::path& dir) {
  try {
    return json::parse(io::read_file(dir / "model.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, (dir / "model.json").string() + ": " + e.what());
  }
}

LatentModel LatentModel::load(const std::filesystem::path& dir) {
  const json m = manifest(dir);
  try {
    if (m.at("format") != "grassy-latent-model") throw Error(ErrorKind::FormatError, "not a latent model manifest");
    std::optional<scattering::ScatteringConfig> learned;
    if (!m.at("scattering").is_null()) learned = scattering_config_from_json(m.at("scattering"));
    Rng rng(0);
    LatentModel model(latent_config_from_json(m.at("config")), rng, learned);
    model.features_ = stats_from_json(m.at("feature_stats"));
    model.properties_ = stats_from_json(m.at("property_stats"));
    model.trained_epoch = m.at("epoch").get<int>();
    model.best_val_loss = m.at("val_loss").get<double>();
    io::load_parameters(dir / "model.bin", model.parameters());
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, (dir / "model.json").string() + ": " + e.what());
  }
}

ad::Var reconstruction_loss(ad::Var input, ad::Var reconstruction) {
  const ad::Var d = input - reconstruction;
  return ad::mean(ad::mul(d, d));
}

ad::Var property_loss(ad::Var targets, ad::Var predictions) {
  const ad::Var d = targets - predictions;
  return ad::mean(ad::mul(d, d));
}

ad::Var kl_loss(ad::Var mu, ad::Var logvar) {
  if (!logvar.valid()) throw Error(ErrorKind::NotVariational, "KL term requires a variational encoder");
  // -1/2 sum(1 + lv - mu^2 - e^lv), averaged over the batch
  const ad::Var inner = ad::add_scalar(logvar - ad::mul(mu, mu) - ad::exp(logvar), 1.0);
  return ad::scale(ad::sum(inner), -0.5 / static_cast<double>(mu.rows()));
}

double kl_loss(const Matrix& mu, const Matrix& logvar) {
  ad::Tape tape;
  return kl_loss(tape.constant(mu), tape.constant(logvar)).item();
}

double reconstruction_loss(const LatentModel& m, const Matrix& raw_features) {
  if (raw_features.rows() == 0) throw Error(ErrorKind::EmptyBatch, "reconstruction loss over an empty batch");
  ad::Tape tape;
  const ad::Var x = tape.constant(m.feature_stats().apply(raw_features));
  return reconstruction_loss(x, tape.constant(m.decode(m.encode(raw_features)))).item();
}

double property_loss(const LatentModel& m, const Matrix& raw_features, const Matrix& raw_properties) {
  if (raw_features.rows() == 0) throw Error(ErrorKind::EmptyBatch, "property loss over an empty batch");
  if (m.config().property_names.empty()) throw Error(ErrorKind::InvalidConfig, "model has no properties");
  ad::Tape tape;
  const Matrix pred = m.property_stats().apply(m.predict_properties(raw_features));
  return property_loss(tape.constant(m.property_stats().apply(raw_properties)), tape.constant(pred)).item();
}

namespace {

struct Totals {
  double total = 0, recon = 0, prop = 0, kl = 0;
  double weight = 0;
  void add(const LossTerms& t, double w) {
    total += w * t.total.item();
    recon += w * t.reconstruction.item();
    if (t.property.valid()) prop += w * t.property.item();
    if (t.kl.valid()) kl += w * t.kl.item();
    weight += w;
  }
};

}  // namespace

TrainResult train(LatentModel& m, const Dataset& data, std::uint64_t seed) {
  if (data.size() < 10)
    throw Error(ErrorKind::DatasetTooSmall, "training needs at least 10 graphs, got " + std::to_string(data.size()));
  Rng rng(seed);
  const Split split = split_dataset(data.size(), rng);
  return train(m, data, split, rng.next_u64());
}

TrainResult train(LatentModel& m, const Dataset& data, const Split& split_in, std::uint64_t seed) {
  const LatentModelConfig& cfg = m.config();
  if (data.size() < 10)
    throw Error(ErrorKind::DatasetTooSmall, "training needs at least 10 graphs, got " + std::to_string(data.size()));
  if (data.features.cols() != cfg.input_dim)
    throw Error(ErrorKind::DimensionMismatch, "features " + shape_string(data.features) + " for a model with input_dim " +
                                                  std::to_string(cfg.input_dim));
  if (!cfg.property_names.empty() && (data.properties.rows() != data.size() || data.properties.cols() != cfg.property_names.size()))
    throw Error(ErrorKind::DimensionMismatch, "property matrix " + shape_string(data.properties) + " does not match " +
                                                  std::to_string(cfg.property_names.size()) + " properties");

  for (const auto* part : {&split_in.train, &split_in.val, &split_in.test})
    for (std::size_t i : *part)
      if (i >= data.size()) throw Error(ErrorKind::DimensionMismatch, "split index " + std::to_string(i) + " out of range");
  if (split_in.train.empty() || split_in.val.empty())
    throw Error(ErrorKind::DatasetTooSmall, "training needs nonempty train and validation splits");

  Rng rng(seed);
  TrainResult result;
  result.split = split_in;
  const Split& split = result.split;
  m.feature_stats() = Standardizer::fit(take_rows(data.features, split.train));
  if (!cfg.property_names.empty()) m.property_stats() = Standardizer::fit(take_rows(data.properties, split.train));

  std::vector<ad::Parameter*> params = m.autoencoder_parameters();
  if (cfg.regression_weight > 0.0)
    for (ad::Parameter* p : m.regressor_parameters()) params.push_back(p);
  ad::OptimizerState opt;
  opt.config.lr = cfg.lr;

  auto evaluate = [&](std::span<const std::size_t> rows) {
    ad::Tape tape;
    Totals t;
    t.add(m.loss(tape, data, rows, nullptr), 1.0);
    return t;
  };

  {
    EpochRecord r;
    const Totals init = evaluate(split.train);
    r.train_loss = init.total;
    r.reconstruction = init.recon;
    r.property = init.prop;
    r.kl = init.kl;
    r.val_loss = evaluate(split.val).total;
    r.best_val_loss = r.val_loss;
    result.history.push_back(r);
  }

  double best = result.history.front().val_loss;
  std::vector<Matrix> best_values = nn::snapshot(params);
  int stale = 0;
  Rng* noise = cfg.variational ? &rng : nullptr;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    rng.shuffle(order);
    Totals totals;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      ad::Tape tape;
      const LossTerms terms = m.loss(tape, data, rows, noise);
      ad::zero_grad(params);
      tape.backward(terms.total);
      ad::adam_step(params, opt);
      totals.add(terms, static_cast<double>(rows.size()));
    }
    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = totals.total / totals.weight;
    r.reconstruction = totals.recon / totals.weight;
    r.property = totals.prop / totals.weight;
    r.kl = totals.kl / totals.weight;
    r.val_loss = evaluate(split.val).total;
    if (r.val_loss < best) {
      best = r.val_loss;
      best_values = nn::snapshot(params);
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    r.best_val_loss = best;
    result.history.push_back(r);
    if (stale >= cfg.patience) break;
  }

  nn::restore(params, best_values);
  m.trained_epoch = result.best_epoch;
  m.best_val_loss = best;
  return result;
}

std::vector<EpochRecord> fit_probe(LatentModel& m, const Dataset& data, const Split& split, std::uint64_t seed) {
  const LatentModelConfig& cfg = m.config();
  if (cfg.property_names.empty()) throw Error(ErrorKind::InvalidConfig, "probe needs at least one property");
  if (split.train.empty() || split.val.empty()) throw Error(ErrorKind::DatasetTooSmall, "probe needs train and validation rows");
  Rng rng(seed);
  const Matrix z_all = m.encode(data.features);
  const Matrix targets = m.property_stats().apply(data.properties);
  std::vector<ad::Parameter*> params = m.regressor_parameters();
  ad::OptimizerState opt;
  opt.config.lr = cfg.lr;

  auto batch_loss = [&](ad::Tape& tape, std::span<const std::size_t> rows) {
    return property_loss(tape.constant(take_rows(targets, rows)), m.regress(tape, tape.constant(take_rows(z_all, rows))));
  };

  std::vector<EpochRecord> history;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_values = nn::snapshot(params);
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    rng.shuffle(order);
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      ad::Tape tape;
      const ad::Var loss = batch_loss(tape, rows);
      ad::zero_grad(params);
      tape.backward(loss);
      ad::adam_step(params, opt);
      sum += loss.item() * static_cast<double>(rows.size());
    }
    ad::Tape tape;
    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = r.property = sum / static_cast<double>(order.size());
    r.val_loss = batch_loss(tape, split.val).item();
    if (r.val_loss < best) {
      best = r.val_loss;
      best_values = nn::snapshot(params);
      stale = 0;
    } else {
      ++stale;
    }
    r.best_val_loss = best;
    history.push_back(r);
    if (stale >= cfg.patience) break;
  }
  nn::restore(params, best_values);
  return history;
}

}  // namespace grassy::latent
