// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "grassy/error.hpp"
#include "grassy/latent_model.hpp"
#include "grassy/serialize.hpp"
#include "support/fixture.hpp"

using namespace grassy;
using namespace grassy::latent;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::FormatError;
}

LatentModelConfig small_config(std::size_t input, std::vector<std::string> props) {
  LatentModelConfig c;
  c.input_dim = input;
  c.latent_dim = 8;
  c.hidden = {32};
  c.regressor_hidden = 16;
  c.property_names = std::move(props);
  c.regression_weight = c.property_names.empty() ? 0.0 : 1.0;
  return c;
}

Matrix rows_of(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c) out(i, c) = m(rows[i], c);
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  LatentModelConfig c = small_config(10, {"p"});
  CHECK_NOTHROW(c.validate());
  c.latent_dim = 10;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
  c = small_config(10, {});
  c.regression_weight = 1.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
  c = small_config(10, {"a", "a"});
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("config JSON round trip and field errors") {
  LatentModelConfig c = small_config(420, {"ring_count"});
  c.variational = true;
  c.kl_weight = 0.01;
  const LatentModelConfig back = latent_config_from_json(to_json(c));
  CHECK(back.latent_dim == c.latent_dim);
  CHECK(back.hidden == c.hidden);
  CHECK(back.variational);
  CHECK(back.kl_weight == 0.01);
  CHECK(back.property_names == c.property_names);

  nlohmann::json bad = to_json(c);
  bad["latent_dim"] = "wide";
  try {
    latent_config_from_json(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
    CHECK(std::string(e.what()).find("latent.latent_dim") != std::string::npos);
  }

  scattering::ScatteringConfig s;
  s.mode = scattering::Mode::Learned;
  s.J = 3;
  const auto s2 = scattering_config_from_json(to_json(s));
  CHECK(s2.mode == scattering::Mode::Learned);
  CHECK(s2.J == 3);
  nlohmann::json sj = to_json(s);
  sj["mode"] = "spline";
  CHECK(kind_of([&] { scattering_config_from_json(sj); }) == ErrorKind::ConfigInvalid);
}

TEST_CASE("standardizer") {
  Matrix x(4, 3);
  for (std::size_t r = 0; r < 4; ++r) {
    x(r, 0) = static_cast<double>(r);
    x(r, 1) = 7.0;
    x(r, 2) = -2.0 * static_cast<double>(r) + 1.0;
  }
  const Standardizer s = Standardizer::fit(x);
  CHECK(s.scale[1] == 1.0);
  const Matrix z = s.apply(x);
  for (std::size_t r = 0; r < 4; ++r) CHECK(z(r, 1) == 0.0);
  double mean = 0.0, var = 0.0;
  for (std::size_t r = 0; r < 4; ++r) mean += z(r, 0) / 4;
  for (std::size_t r = 0; r < 4; ++r) var += (z(r, 0) - mean) * (z(r, 0) - mean) / 4;
  CHECK(std::fabs(mean) < 1e-15);
  CHECK(var == doctest::Approx(1.0));
  CHECK(max_abs_diff(s.invert(z), x) < 1e-14);
  CHECK(kind_of([&] { s.apply(Matrix(2, 2)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("split is 80/10/10, disjoint and seeded") {
  Rng a(3), b(3), c(4);
  const Split s = split_dataset(64, a);
  CHECK(s.train.size() == 52);
  CHECK(s.val.size() == 6);
  CHECK(s.test.size() == 6);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 64);
  const Split t = split_dataset(64, b);
  CHECK(t.train == s.train);
  CHECK(split_dataset(64, c).train != s.train);
  Rng d(1);
  const Split tiny = split_dataset(10, d);
  CHECK(tiny.val.size() == 1);
  CHECK(tiny.test.size() == 1);
}

TEST_CASE("property matrix names the missing property") {
  const auto f = fixture::load("fixture64.jsonl", {"ring_count"});
  const std::vector<std::string> names{"qed"};
  try {
    property_matrix(f.graphs, names);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingProperty);
    CHECK(std::string(e.what()).find("qed") != std::string::npos);
  }
}

TEST_CASE("losses in closed form") {
  ad::Tape t;
  const Matrix zero(2, 3);
  CHECK(kl_loss(zero, zero) == 0.0);
  // One row: mu = 1, logvar = 0 gives 1/2.
  CHECK(kl_loss(Matrix(1, 1, 1.0), Matrix(1, 1, 0.0)) == doctest::Approx(0.5));
  // logvar = log 2, mu = 0: -1/2 (1 + log 2 - 2).
  CHECK(kl_loss(Matrix(1, 1, 0.0), Matrix(1, 1, std::log(2.0))) == doctest::Approx(-0.5 * (1 + std::log(2.0) - 2)));
  const ad::Var a = t.constant(Matrix(2, 2, std::vector<double>{1, 2, 3, 4}));
  const ad::Var b = t.constant(Matrix(2, 2, std::vector<double>{1, 0, 3, 2}));
  CHECK(reconstruction_loss(a, b).item() == doctest::Approx((4.0 + 4.0) / 4.0));
  CHECK(property_loss(a, b).item() == doctest::Approx(2.0));
  CHECK(kind_of([&] { kl_loss(a, ad::Var()); }) == ErrorKind::NotVariational);
}

TEST_CASE("encoding shapes and errors") {
  Rng rng(1);
  LatentModelConfig c = small_config(20, {"p", "q"});
  c.variational = true;
  LatentModel m(c, rng);
  Matrix x(5, 20, 0.3);
  CHECK(m.encode(x).rows() == 5);
  CHECK(m.encode(x).cols() == 8);
  CHECK(m.encode(x) == m.encode(x));
  CHECK(m.decode(m.encode(x)).cols() == 20);
  CHECK(m.predict_properties(x).cols() == 2);
  CHECK(kind_of([&] { m.encode(Matrix(1, 19)); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { m.predict_property(x, "r"); }) == ErrorKind::UnknownProperty);
  CHECK(m.predict_property(x, "q").size() == 5);
  CHECK(kind_of([&] { reconstruction_loss(m, Matrix(0, 20)); }) == ErrorKind::EmptyBatch);
}

TEST_CASE("autoencoder objective gradient, variational with fixed noise") {
  Rng rng(2);
  LatentModelConfig c = small_config(6, {"p"});
  c.latent_dim = 2;
  c.hidden = {5};
  c.regressor_hidden = 3;
  c.variational = true;
  c.kl_weight = 0.5;
  LatentModel m(c, rng);
  Dataset d;
  d.features = Matrix(4, 6);
  d.properties = Matrix(4, 1);
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : d.features.data()) v = u(g);
  for (double& v : d.properties.data()) v = u(g);
  const std::vector<std::size_t> rows{0, 1, 2, 3};
  const auto params = m.parameters();
  const auto r = ad::gradient_check(params, [&](ad::Tape& t) {
    Rng noise(99);
    return m.loss(t, d, rows, &noise).total;
  });
  CHECK(r.max_error < 1e-6);
}

TEST_CASE("training shrinks the loss below a tenth of its starting value") {
  auto f = fixture::load("fixture64.jsonl", {"ring_count", "heavy_atom_count"});
  LatentModelConfig c;
  c.input_dim = f.data.features.cols();
  c.property_names = {"ring_count", "heavy_atom_count"};
  c.max_epochs = 200;
  c.patience = 200;
  Rng rng(5);
  const Split split = split_dataset(f.data.size(), rng);
  LatentModel m(c, rng);
  const TrainResult r = train(m, f.data, split, rng.next_u64());
  REQUIRE(r.history.size() == 201);
  CHECK(r.history.front().epoch == 0);
  CHECK(r.history.back().train_loss < 0.1 * r.history.front().train_loss);
  for (std::size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i].best_val_loss <= r.history[i - 1].best_val_loss);
  // The model is left at the best validation checkpoint.
  ad::Tape t;
  const double val = m.loss(t, f.data, split.val, nullptr).total.item();
  CHECK(val == doctest::Approx(r.history[r.best_epoch].val_loss).epsilon(1e-12));
}

TEST_CASE("property-free plain autoencoder equals a hand-written reconstruction loop") {
  auto f = fixture::load("fixture64.jsonl", {});
  LatentModelConfig c = small_config(f.data.features.cols(), {});
  c.max_epochs = 12;
  c.patience = 3;
  c.batch_size = 16;
  Rng r1(9), r2(9);
  Rng sr(4);
  const Split split = split_dataset(f.data.size(), sr);
  LatentModel a(c, r1);
  LatentModel b(c, r2);
  const TrainResult res = train(a, f.data, split, 77);

  b.feature_stats() = Standardizer::fit(rows_of(f.data.features, split.train));
  const auto params = b.autoencoder_parameters();
  ad::OptimizerState opt;
  opt.config.lr = c.lr;
  Rng rng(77);
  auto val_loss = [&] {
    ad::Tape t;
    const ad::Var x = b.input_batch(t, f.data, split.val);
    return reconstruction_loss(x, b.decode(t, b.encode(t, x).z)).item();
  };
  double best = val_loss();
  auto best_values = nn::snapshot(params);
  int stale = 0;
  std::vector<double> train_losses;
  for (int epoch = 1; epoch <= c.max_epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t s = 0; s < order.size(); s += c.batch_size) {
      const std::span<const std::size_t> rows(order.data() + s, std::min(order.size(), s + c.batch_size) - s);
      ad::Tape t;
      const ad::Var x = b.input_batch(t, f.data, rows);
      const ad::Var loss = reconstruction_loss(x, b.decode(t, b.encode(t, x).z));
      ad::zero_grad(params);
      t.backward(loss);
      ad::adam_step(params, opt);
      total += loss.item() * static_cast<double>(rows.size());
    }
    train_losses.push_back(total / static_cast<double>(order.size()));
    const double v = val_loss();
    if (v < best) {
      best = v;
      best_values = nn::snapshot(params);
      stale = 0;
    } else if (++stale >= c.patience) {
      break;
    }
  }
  nn::restore(params, best_values);

  REQUIRE(res.history.size() == train_losses.size() + 1);
  for (std::size_t i = 0; i < train_losses.size(); ++i) CHECK(res.history[i + 1].train_loss == train_losses[i]);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
}

TEST_CASE("constant property is learned to zero error") {
  auto f = fixture::load("fixture64.jsonl", {"ring_count"});
  for (std::size_t r = 0; r < f.data.properties.rows(); ++r) f.data.properties(r, 0) = 3.0;
  LatentModelConfig c = small_config(f.data.features.cols(), {"ring_count"});
  c.max_epochs = 150;
  c.patience = 150;
  Rng rng(6);
  LatentModel m(c, rng);
  const TrainResult r = train(m, f.data, rng.next_u64());
  // Adam keeps the shared encoder moving, so the term jitters around zero.
  double lowest = r.history.front().property;
  for (const auto& h : r.history) lowest = std::min(lowest, h.property);
  CHECK(lowest < 1e-3);
  CHECK(r.history.back().property < 0.02 * r.history.front().property);
  const auto p = m.predict_property(rows_of(f.data.features, r.split.train), "ring_count");
  for (double v : p) CHECK(v == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("small datasets are refused") {
  auto f = fixture::load("fixture64.jsonl", {});
  Dataset d = f.data;
  d.features = rows_of(f.data.features, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  LatentModelConfig c = small_config(d.features.cols(), {});
  Rng rng(1);
  LatentModel m(c, rng);
  CHECK(kind_of([&] { train(m, d, 1); }) == ErrorKind::DatasetTooSmall);
}

TEST_CASE("probe trains only the regressor") {
  auto f = fixture::load("fixture64.jsonl", {"heavy_atom_count"});
  LatentModelConfig c = small_config(f.data.features.cols(), {"heavy_atom_count"});
  c.regression_weight = 0.0;
  c.max_epochs = 30;
  Rng rng(2);
  LatentModel m(c, rng);
  const TrainResult r = train(m, f.data, rng.next_u64());
  const auto enc_before = nn::snapshot(m.autoencoder_parameters());
  const auto reg_before = nn::snapshot(m.regressor_parameters());
  const auto hist = fit_probe(m, f.data, r.split, 3);
  CHECK(!hist.empty());
  const auto enc_after = nn::snapshot(m.autoencoder_parameters());
  for (std::size_t i = 0; i < enc_before.size(); ++i) CHECK(enc_before[i] == enc_after[i]);
  CHECK(nn::snapshot(m.regressor_parameters())[0] != reg_before[0]);
}

TEST_CASE("save and load reproduce the model bitwise") {
  auto f = fixture::load("fixture64.jsonl", {"ring_count"});
  LatentModelConfig c = small_config(f.data.features.cols(), {"ring_count"});
  c.max_epochs = 3;
  c.variational = true;
  Rng rng(3);
  LatentModel m(c, rng);
  train(m, f.data, 5);
  const auto dir = fixture::scratch("latent_save");
  m.save(dir, {{"note", "x"}});
  const LatentModel back = LatentModel::load(dir);
  CHECK(back.encode(f.data.features) == m.encode(f.data.features));
  CHECK(back.predict_properties(f.data.features) == m.predict_properties(f.data.features));
  CHECK(LatentModel::manifest(dir)["extra"]["note"] == "x");
  CHECK(LatentModel::manifest(dir)["format"] == "grassy-latent-model");

  std::string blob = io::read_file(dir / "model.bin");
  blob.resize(blob.size() - 3);
  io::atomic_write(dir / "model.bin", blob);
  CHECK(kind_of([&] { LatentModel::load(dir); }) == ErrorKind::FormatError);
}

TEST_CASE("learned scales: selector stays stochastic and receives gradient") {
  scattering::ScatteringConfig s;
  s.mode = scattering::Mode::Learned;
  s.J = 3;
  s.T = 8;
  const AtomAlphabet alphabet;
  auto f = fixture::load("fixture64.jsonl", {"ring_count"}, s);
  std::vector<scattering::ScatteringPlan> plans;
  for (const auto& g : f.graphs) plans.push_back(scattering::make_plan(g, alphabet, s));
  f.data.plans = &plans;
  LatentModelConfig c = small_config(f.data.features.cols(), {"ring_count"});
  c.max_epochs = 4;
  Rng rng(4);
  LatentModel m(c, rng, s);
  const Matrix before = m.selector();
  train(m, f.data, 8);
  const Matrix after = m.selector();
  CHECK(max_abs_diff(before, after) > 0.0);
  for (std::size_t r = 0; r < after.rows(); ++r) {
    double sum = 0.0;
    for (double v : after.row_span(r)) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fresh models are reproducible and losses are nonnegative") {
  auto f = fixture::load("fixture64.jsonl", {"ring_count"});
  LatentModelConfig c = small_config(f.data.features.cols(), {"ring_count"});
  c.variational = true;
  c.kl_weight = 0.1;
  Rng r1(4), r2(4);
  const LatentModel a(c, r1);
  LatentModel b(c, r2);
  CHECK(a.encode(f.data.features) == b.encode(f.data.features));
  b.feature_stats() = Standardizer::fit(f.data.features);
  b.property_stats() = Standardizer::fit(f.data.properties);
  const std::vector<std::size_t> rows{0, 5, 9, 17};
  ad::Tape t;
  Rng noise(3);
  const LossTerms terms = b.loss(t, f.data, rows, &noise);
  CHECK(terms.total.item() >= 0.0);
  CHECK(terms.reconstruction.item() >= 0.0);
  CHECK(terms.kl.item() >= -1e-12);
  CHECK(terms.property.item() >= 0.0);

  std::mt19937_64 g(8);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix mu(3, 4), lv(3, 4);
    for (double& v : mu.data()) v = n(g);
    for (double& v : lv.data()) v = n(g);
    CHECK(kl_loss(mu, lv) >= -1e-12);
  }
}

TEST_CASE("property term is absent without regression weight") {
  auto f = fixture::load("fixture64.jsonl", {"ring_count"});
  LatentModelConfig c = small_config(f.data.features.cols(), {"ring_count"});
  c.regression_weight = 0.0;
  Rng rng(5);
  LatentModel m(c, rng);
  m.feature_stats() = Standardizer::fit(f.data.features);
  m.property_stats() = Standardizer::fit(f.data.properties);
  const std::vector<std::size_t> rows{1, 2, 3};
  ad::Tape t;
  const LossTerms terms = m.loss(t, f.data, rows, nullptr);
  CHECK_FALSE(terms.property.valid());
  CHECK(terms.total.item() == terms.reconstruction.item());
}

TEST_CASE("a single repeated point is reconstructed exactly") {
  auto f = fixture::load("fixture64.jsonl", {});
  Dataset d;
  d.features = rows_of(f.data.features, std::vector<std::size_t>(12, 7));
  d.properties = Matrix(12, 0);
  LatentModelConfig c = small_config(d.features.cols(), {});
  c.max_epochs = 60;
  Rng rng(2);
  LatentModel m(c, rng);
  const TrainResult r = train(m, d, 4);
  CHECK(r.history.back().train_loss < 1e-6);
}

TEST_CASE("same seed gives the same history") {
  auto f = fixture::load("fixture64.jsonl", {"ring_count"});
  LatentModelConfig c = small_config(f.data.features.cols(), {"ring_count"});
  c.max_epochs = 6;
  Rng r1(8), r2(8);
  LatentModel a(c, r1), b(c, r2);
  const TrainResult ha = train(a, f.data, 31);
  const TrainResult hb = train(b, f.data, 31);
  REQUIRE(ha.history.size() == hb.history.size());
  for (std::size_t i = 0; i < ha.history.size(); ++i) {
    CHECK(ha.history[i].train_loss == hb.history[i].train_loss);
    CHECK(ha.history[i].val_loss == hb.history[i].val_loss);
  }
}

TEST_CASE("overfit ring-count regression is close on training graphs") {
  auto f = fixture::load("fixture64.jsonl", {"ring_count"});
  LatentModelConfig c;
  c.input_dim = f.data.features.cols();
  c.property_names = {"ring_count"};
  c.max_epochs = 200;
  c.patience = 200;
  Rng rng(10);
  LatentModel m(c, rng);
  const TrainResult r = train(m, f.data, rng.next_u64());
  const std::size_t row = r.split.train.front();
  const double p = m.predict_property(rows_of(f.data.features, {row}), "ring_count")[0];
  CHECK(std::fabs(p - f.data.properties(row, 0)) < 0.5);
}
