// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grassy/error.hpp"
#include "grassy/json_fields.hpp"
#include "grassy/serialize.hpp"

namespace grassy::gan {

using nlohmann::json;

void GeneratorConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (n_max == 1) bad("generator.n_max must be >= 2 (or 0 for automatic)");
  if (K < 1) bad("generator.K must be >= 1");
  if (!(w_m >= 0.0) || !(w_a >= 0.0) || !(w_s >= 0.0)) bad("generator loss weights must be >= 0");
  if (disc_hidden == 0) bad("generator.disc_hidden must be positive");
  for (std::size_t h : gen_hidden)
    if (h == 0) bad("generator.gen_hidden widths must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) bad("generator.threshold must lie in (0, 1)");
  if (!(sigma >= 0.0)) bad("generator.sigma must be >= 0");
  if (!(lr > 0.0) || !(disc_lr > 0.0)) bad("generator learning rates must be > 0");
  if (steps < 1) bad("generator.steps must be >= 1");
  if (pair_batch == 0) bad("generator.pair_batch must be >= 1");
}

json to_json(const GeneratorConfig& c) {
  return json{{"n_max", c.n_max},       {"K", c.K},           {"w_m", c.w_m},
              {"w_a", c.w_a},           {"w_s", c.w_s},       {"disc_hidden", c.disc_hidden},
              {"gen_hidden", c.gen_hidden}, {"threshold", c.threshold}, {"sigma", c.sigma},
              {"lr", c.lr},             {"disc_lr", c.disc_lr}, {"steps", c.steps},
              {"pair_batch", c.pair_batch}};
}

GeneratorConfig generator_config_from_json(const json& j, const std::string& path) {
  using json_fields::get;
  json_fields::require_object(j, path);
  GeneratorConfig c;
  c.n_max = get<std::size_t>(j, "n_max", c.n_max, path);
  c.K = get<int>(j, "K", c.K, path);
  c.w_m = get<double>(j, "w_m", c.w_m, path);
  c.w_a = get<double>(j, "w_a", c.w_a, path);
  c.w_s = get<double>(j, "w_s", c.w_s, path);
  c.disc_hidden = get<std::size_t>(j, "disc_hidden", c.disc_hidden, path);
  c.gen_hidden = get<std::vector<std::size_t>>(j, "gen_hidden", c.gen_hidden, path);
  c.threshold = get<double>(j, "threshold", c.threshold, path);
  c.sigma = get<double>(j, "sigma", c.sigma, path);
  c.lr = get<double>(j, "lr", c.lr, path);
  c.disc_lr = get<double>(j, "disc_lr", c.disc_lr, path);
  c.steps = get<int>(j, "steps", c.steps, path);
  c.pair_batch = get<std::size_t>(j, "pair_batch", c.pair_batch, path);
  return c;
}

std::vector<double> interpolate(std::span<const double> zi, std::span<const double> zj, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
  if (zi.size() != zj.size())
    throw Error(ErrorKind::DimensionMismatch, "latent codes of length " + std::to_string(zi.size()) + " and " +
                                                  std::to_string(zj.size()));
  std::vector<double> out(zi.size());
  if (alpha == 0.0) {
    std::copy(zi.begin(), zi.end(), out.begin());
  } else if (alpha == 1.0) {
    std::copy(zj.begin(), zj.end(), out.begin());
  } else {
    for (std::size_t k = 0; k < zi.size(); ++k) out[k] = (1.0 - alpha) * zi[k] + alpha * zj[k];
  }
  return out;
}

ad::Var trajectory(ad::Var zi, ad::Var zj, int K) {
  if (K < 1) throw Error(ErrorKind::InvalidConfig, "trajectory needs K >= 1");
  std::vector<ad::Var> rows;
  for (int k = 0; k <= K; ++k) {
    const double a = static_cast<double>(k) / K;
    if (k == 0) rows.push_back(zi);
    else if (k == K) rows.push_back(zj);
    else rows.push_back(ad::scale(zi, 1.0 - a) + ad::scale(zj, a));
  }
  return ad::concat_rows(rows);
}

Discriminator::Discriminator(std::size_t hidden, Rng& rng)
    : l1_(1, hidden, "disc.gcn1", rng), l2_(hidden, hidden, "disc.gcn2", rng), head_(hidden, 1, "disc.head", rng) {}

ad::Var gcn_propagation(ad::Tape& tape, ad::Var adjacency) {
  const ad::Var a = adjacency + tape.constant(Matrix::identity(adjacency.rows()));
  const ad::Var dinv = ad::pow(ad::sum_rows(a), -0.5);
  return ad::mul(a, ad::matmul(dinv, ad::transpose(dinv)));
}

ad::Var Discriminator::run(ad::Tape& tape, ad::Var adjacency, bool frozen) const {
  auto param = [&](const ad::Parameter& p) {
    return frozen ? tape.constant(p.value) : tape.leaf(const_cast<ad::Parameter&>(p));
  };
  const std::size_t n = adjacency.rows();
  const ad::Var prop = gcn_propagation(tape, adjacency);
  const ad::Var x = ad::sum_rows(adjacency);
  ad::Var h = ad::relu(ad::add_bias(ad::matmul(ad::matmul(prop, x), param(l1_.weight)), param(l1_.bias)));
  h = ad::relu(ad::add_bias(ad::matmul(ad::matmul(prop, h), param(l2_.weight)), param(l2_.bias)));
  const ad::Var pooled = ad::matmul(tape.constant(Matrix(1, n, 1.0 / static_cast<double>(n))), h);
  return ad::sigmoid(ad::add_bias(ad::matmul(pooled, param(head_.weight)), param(head_.bias)));
}

ad::Var Discriminator::forward(ad::Tape& tape, ad::Var adjacency) { return run(tape, adjacency, false); }

ad::Var Discriminator::forward_frozen(ad::Tape& tape, ad::Var adjacency) const { return run(tape, adjacency, true); }

double Discriminator::score(const Matrix& adjacency) const {
  ad::Tape tape;
  return forward_frozen(tape, tape.constant(adjacency)).item();
}

std::vector<ad::Parameter*> Discriminator::parameters() {
  return {&l1_.weight, &l1_.bias, &l2_.weight, &l2_.bias, &head_.weight, &head_.bias};
}

GeneratorModel::GeneratorModel(GeneratorConfig cfg, std::size_t latent_dim, std::size_t n_max, Rng& rng)
    : cfg_(std::move(cfg)), latent_dim_(latent_dim), n_max_(n_max) {
  cfg_.validate();
  if (n_max_ < 2) throw Error(ErrorKind::InvalidConfig, "generator needs n_max >= 2");
  if (latent_dim_ == 0) throw Error(ErrorKind::InvalidConfig, "generator needs a positive latent dimension");
  std::vector<std::size_t> dims{latent_dim_};
  dims.insert(dims.end(), cfg_.gen_hidden.begin(), cfg_.gen_hidden.end());
  dims.push_back(n_max_ * (n_max_ - 1) / 2);
  gen_ = nn::Mlp(dims, nn::Activation::Relu, nn::Activation::None, "generator", rng);
  disc_ = Discriminator(cfg_.disc_hidden, rng);
}

std::vector<ad::Var> GeneratorModel::to_adjacency(ad::Tape&, ad::Var logits) const {
  // Keep entries strictly inside (0, 1) even where the sigmoid saturates.
  const ad::Var probs =
      ad::clamp(ad::sigmoid(logits), std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
  std::vector<ad::Var> out;
  out.reserve(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r)
    out.push_back(ad::sym_from_upper(ad::slice(probs, r, r + 1, 0, probs.cols()), n_max_));
  return out;
}

std::vector<ad::Var> GeneratorModel::generate(ad::Tape& tape, ad::Var z) {
  if (z.cols() != latent_dim_)
    throw Error(ErrorKind::DimensionMismatch, "generator expects " + std::to_string(latent_dim_) + " latent columns, got " + shape_string(z.value()));
  return to_adjacency(tape, gen_.forward(tape, z));
}

std::vector<ad::Var> GeneratorModel::generate_frozen(ad::Tape& tape, ad::Var z) const {
  if (z.cols() != latent_dim_)
    throw Error(ErrorKind::DimensionMismatch, "generator expects " + std::to_string(latent_dim_) + " latent columns, got " + shape_string(z.value()));
  return to_adjacency(tape, gen_.forward_frozen(tape, z));
}

Matrix GeneratorModel::generate(std::span<const double> z) const {
  ad::Tape tape;
  return generate_frozen(tape, tape.constant(Matrix::row(z))).front().value();
}

std::vector<ad::Parameter*> GeneratorModel::parameters() {
  std::vector<ad::Parameter*> out = gen_.parameters();
  for (ad::Parameter* p : disc_.parameters()) out.push_back(p);
  return out;
}

void GeneratorModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto* self = const_cast<GeneratorModel*>(this);
  const auto params = self->parameters();
  io::save_parameters(dir / "gan.bin", std::vector<const ad::Parameter*>(params.begin(), params.end()));
  json m{{"format", "grassy-generator"},
         {"version", 1},
         {"config", to_json(cfg_)},
         {"latent_dim", latent_dim_},
         {"n_max", n_max_}};
  io::atomic_write(dir / "gan.json", m.dump(2) + "\n");
}

GeneratorModel GeneratorModel::load(const std::filesystem::path& dir) {
  try {
    const json m = json::parse(io::read_file(dir / "gan.json"));
    if (m.at("format") != "grassy-generator") throw Error(ErrorKind::FormatError, "not a generator manifest");
    Rng rng(0);
    GeneratorModel model(generator_config_from_json(m.at("config")), m.at("latent_dim").get<std::size_t>(),
                         m.at("n_max").get<std::size_t>(), rng);
    io::load_parameters(dir / "gan.bin", model.parameters());
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, (dir / "gan.json").string() + ": " + e.what());
  }
}

ad::Var loss_adjacency(ad::Tape& tape, ad::Var soft_i, ad::Var soft_j, const Matrix& padded_i, const Matrix& padded_j) {
  return ad::frobenius_norm(soft_i - tape.constant(padded_i)) + ad::frobenius_norm(soft_j - tape.constant(padded_j));
}

ad::Var loss_adversarial(ad::Var scores) {
  return ad::neg(ad::sum(ad::log(ad::clamp(scores, kScoreFloor, 1.0 - kScoreFloor))));
}

ad::Var loss_smoothness(ad::Var decoded) {
  const std::size_t points = decoded.rows();
  if (points < 2) throw Error(ErrorKind::InvalidConfig, "smoothness needs at least two trajectory points");
  const double K = static_cast<double>(points - 1);
  const std::size_t d = decoded.cols();
  const ad::Var diff = ad::scale(ad::slice(decoded, 1, points, 0, d) - ad::slice(decoded, 0, points - 1, 0, d), K);
  return ad::sum(ad::mul(diff, diff));
}

ad::Var discriminator_loss(ad::Var real_scores, ad::Var fake_scores) {
  const double total = static_cast<double>(real_scores.value().size() + fake_scores.value().size());
  const ad::Var real = ad::sum(ad::log(ad::clamp(real_scores, kScoreFloor, 1.0 - kScoreFloor)));
  const ad::Var fake = ad::sum(ad::log(ad::add_scalar(ad::neg(ad::clamp(fake_scores, kScoreFloor, 1.0 - kScoreFloor)), 1.0)));
  return ad::scale(real + fake, -1.0 / total);
}

namespace {

ad::Var scores_of(ad::Tape& tape, const Discriminator& d, const std::vector<ad::Var>& graphs, bool frozen) {
  std::vector<ad::Var> s;
  s.reserve(graphs.size());
  for (const ad::Var& g : graphs)
    s.push_back(frozen ? d.forward_frozen(tape, g) : const_cast<Discriminator&>(d).forward(tape, g));
  return s.size() == 1 ? s.front() : ad::concat_rows(s);
}

Matrix trajectory_rows(std::span<const double> zi, std::span<const double> zj, int K) {
  Matrix out(K + 1, zi.size());
  for (int k = 0; k <= K; ++k) {
    const auto z = interpolate(zi, zj, static_cast<double>(k) / K);
    std::copy(z.begin(), z.end(), out.row_span(k).begin());
  }
  return out;
}

}  // namespace

double loss_adjacency(const GeneratorModel& m, const MolecularGraph& gi, const MolecularGraph& gj,
                      std::span<const double> zi, std::span<const double> zj) {
  const Matrix pi = pad_adjacency(gi, m.n_max());
  const Matrix pj = pad_adjacency(gj, m.n_max());
  ad::Tape tape;
  return loss_adjacency(tape, tape.constant(m.generate(zi)), tape.constant(m.generate(zj)), pi, pj).item();
}

double loss_adversarial(const GeneratorModel& m, std::span<const double> zi, std::span<const double> zj) {
  ad::Tape tape;
  const auto soft = m.generate_frozen(tape, tape.constant(trajectory_rows(zi, zj, m.config().K)));
  return loss_adversarial(scores_of(tape, m.discriminator(), soft, true)).item();
}

double loss_smoothness(const latent::LatentModel& ae, std::span<const double> zi, std::span<const double> zj, int K) {
  ad::Tape tape;
  return loss_smoothness(tape.constant(ae.decode(trajectory_rows(zi, zj, K)))).item();
}

double discriminator_loss(const GeneratorModel& m, std::span<const Matrix> real, std::span<const Matrix> fake) {
  if (real.empty() || fake.empty()) throw Error(ErrorKind::EmptyBatch, "discriminator loss needs real and generated graphs");
  ad::Tape tape;
  std::vector<ad::Var> r, f;
  for (const Matrix& a : real) r.push_back(tape.constant(a));
  for (const Matrix& a : fake) f.push_back(tape.constant(a));
  return discriminator_loss(scores_of(tape, m.discriminator(), r, true), scores_of(tape, m.discriminator(), f, true)).item();
}

GanTrainResult train_gan(const GeneratorConfig& cfg, const latent::LatentModel& ae,
                         std::span<const MolecularGraph> graphs, const Matrix& features, std::uint64_t seed) {
  cfg.validate();
  if (graphs.size() < 2)
    throw Error(ErrorKind::DatasetTooSmall, "generator training needs at least 2 graphs, got " + std::to_string(graphs.size()));
  if (features.rows() != graphs.size())
    throw Error(ErrorKind::DimensionMismatch, "features " + shape_string(features) + " for " + std::to_string(graphs.size()) + " graphs");
  std::size_t n_max = cfg.n_max;
  if (n_max == 0)
    for (const MolecularGraph& g : graphs) n_max = std::max(n_max, g.n());
  n_max = std::max<std::size_t>(n_max, 2);
  std::vector<Matrix> padded;
  padded.reserve(graphs.size());
  for (const MolecularGraph& g : graphs) padded.push_back(pad_adjacency(g, n_max));

  const Matrix Z = ae.encode(features);
  const std::size_t L = Z.cols();
  const int K = cfg.K;
  const std::size_t N = graphs.size();
  const std::size_t B = cfg.pair_batch;

  Rng rng(seed);
  GanTrainResult result{GeneratorModel(cfg, L, n_max, rng), {}};
  GeneratorModel& model = result.model;
  const auto gen_params = model.generator_parameters();
  const auto disc_params = model.discriminator_parameters();
  ad::OptimizerState opt_g, opt_d;
  opt_g.config.lr = cfg.lr;
  opt_d.config.lr = cfg.disc_lr;

  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs(B);
    for (auto& [i, j] : pairs) {
      i = static_cast<std::size_t>(rng.below(N));
      j = static_cast<std::size_t>(rng.below(N));
    }
    GanStepRecord rec;
    rec.step = step;

    // Discriminator: real endpoints against one generated interpolant per pair.
    {
      Matrix zf(B, L);
      for (std::size_t b = 0; b < B; ++b) {
        const double a = static_cast<double>(rng.below(static_cast<std::uint64_t>(K) + 1)) / K;
        const auto z = interpolate(Z.row_span(pairs[b].first), Z.row_span(pairs[b].second), a);
        std::copy(z.begin(), z.end(), zf.row_span(b).begin());
      }
      ad::Tape tape;
      std::vector<ad::Var> real, fake;
      for (const ad::Var& w : model.generate_frozen(tape, tape.constant(zf))) fake.push_back(tape.constant(w.value()));
      for (const auto& [i, j] : pairs) real.push_back(tape.constant(padded[i]));
      const ad::Var loss = discriminator_loss(scores_of(tape, model.discriminator(), real, false),
                                              scores_of(tape, model.discriminator(), fake, false));
      ad::zero_grad(disc_params);
      tape.backward(loss);
      ad::adam_step(disc_params, opt_d);
      rec.d_loss = loss.item();
    }

    // Generator: all three terms along each pair's trajectory.
    {
      Matrix zt(B * (K + 1), L);
      for (std::size_t b = 0; b < B; ++b) {
        const Matrix rows = trajectory_rows(Z.row_span(pairs[b].first), Z.row_span(pairs[b].second), K);
        std::copy(rows.data().begin(), rows.data().end(), zt.row_span(b * (K + 1)).begin());
      }
      ad::Tape tape;
      const ad::Var zv = tape.constant(zt);
      const std::vector<ad::Var> soft = model.generate(tape, zv);
      const ad::Var decoded = ae.decode_frozen(tape, zv);
      std::vector<ad::Var> lm, ls;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t base = b * (K + 1);
        lm.push_back(loss_adjacency(tape, soft[base], soft[base + K], padded[pairs[b].first], padded[pairs[b].second]));
        ls.push_back(loss_smoothness(ad::slice(decoded, base, base + K + 1, 0, decoded.cols())));
      }
      const double inv_b = 1.0 / static_cast<double>(B);
      const ad::Var l_m = ad::scale(ad::sum(ad::concat_rows(lm)), inv_b);
      const ad::Var l_a = ad::scale(loss_adversarial(scores_of(tape, model.discriminator(), soft, true)), inv_b);
      const ad::Var l_s = ad::scale(ad::sum(ad::concat_rows(ls)), inv_b);
      const ad::Var total = ad::scale(l_m, cfg.w_m) + ad::scale(l_a, cfg.w_a) + ad::scale(l_s, cfg.w_s);
      ad::zero_grad(gen_params);
      tape.backward(total);
      ad::adam_step(gen_params, opt_g);
      rec.g_loss = total.item();
      rec.l_m = l_m.item();
      rec.l_a = l_a.item();
      rec.l_s = l_s.item();
    }
    result.history.push_back(rec);
  }
  return result;
}

std::vector<Sample> sample_molecules(const GeneratorModel& m, const latent::LatentModel& ae,
                                     std::span<const std::string> ids, const Matrix& features, std::size_t count,
                                     double sigma, SampleMode mode, Rng& rng) {
  std::vector<Sample> out;
  if (count == 0) return out;
  if (features.rows() == 0 || ids.size() != features.rows())
    throw Error(ErrorKind::DimensionMismatch, "sampling needs one id per feature row and at least one row");
  const Matrix Z = ae.encode(features);
  const std::size_t N = Z.rows();
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Sample smp;
    smp.sample_id = s;
    std::vector<double> z;
    if (mode == SampleMode::Perturb) {
      const std::size_t g = static_cast<std::size_t>(rng.below(N));
      z.assign(Z.row_span(g).begin(), Z.row_span(g).end());
      for (double& v : z) v += sigma * rng.normal();
      smp.source = ids[g];
      smp.sigma = sigma;
    } else {
      const std::size_t i = static_cast<std::size_t>(rng.below(N));
      const std::size_t j = static_cast<std::size_t>(rng.below(N));
      smp.alpha = rng.uniform();
      z = interpolate(Z.row_span(i), Z.row_span(j), smp.alpha);
      smp.source = ids[i];
      smp.source_j = ids[j];
    }
    smp.soft_adjacency = m.generate(z);
    out.push_back(std::move(smp));
  }
  return out;
}

}  // namespace grassy::gan
