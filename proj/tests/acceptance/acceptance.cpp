// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance criteria A1..A9. `grassy_acceptance A3` runs one criterion,
// no argument runs all of them. Each prints a single "Ax PASS ..." or
// "Ax FAIL ..." line.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "grassy/error.hpp"
#include "grassy/generator.hpp"
#include "grassy/latent_model.hpp"
#include "grassy/metrics.hpp"
#include "grassy/nn.hpp"
#include "grassy/pipeline.hpp"
#include "grassy/serialize.hpp"
#include "grassy/smiles.hpp"
#include "grassy/validity.hpp"
#include "support/fixture.hpp"
#include "support/oracles.hpp"

using namespace grassy;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double rel_diff(double a, double b) { return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}); }

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Uniform over labelled connected graphs on n nodes, by rejection.
oracle::Edges random_connected_uniform(int n, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> slots;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) slots.emplace_back(u, v);
  for (;;) {
    oracle::Edges e;
    for (const auto& s : slots)
      if (rng() & 1u) e.push_back(s);
    if (oracle::connected(n, e)) return e;
  }
}

oracle::Edges random_edges(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  oracle::Edges e;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng)) e.emplace_back(u, v);
  return e;
}

Matrix adjacency(std::size_t n, const oracle::Edges& edges) {
  Matrix a(n, n);
  for (auto [u, v] : edges) a(u, v) = a(v, u) = 1.0;
  return a;
}

// A1: permutation invariance and feature length.
Outcome a1() {
  Stopwatch clock;
  std::mt19937_64 rng(101);
  const AtomAlphabet alphabet;
  const scattering::ScatteringConfig cfg;
  const std::size_t expected = alphabet.size() * cfg.Q * (1 + cfg.J + cfg.J * cfg.J);
  double worst = 0.0;
  std::size_t bad_length = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const oracle::Edges edges = random_edges(n, 0.2, rng);
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng() % alphabet.size());
    const MolecularGraph g = build_graph(edges, labels, alphabet);
    const auto base = scattering::scattering_moments(g, alphabet, cfg);
    bad_length += base.size() != expected;
    for (int k = 0; k < 5; ++k) {
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const auto other = scattering::scattering_moments(permute(g, perm), alphabet, cfg);
      bad_length += other.size() != expected;
      for (std::size_t i = 0; i < std::min(base.size(), other.size()); ++i) worst = std::max(worst, rel_diff(base[i], other[i]));
    }
  }
  const double t = clock.seconds();
  return {worst <= 1e-9 && bad_length == 0 && t < 10.0,
          "max relative difference " + fmt(worst) + ", length mismatches " + std::to_string(bad_length) +
              ", feature length " + std::to_string(expected) + ", " + fmt(t) + " s"};
}

// A2: production moments against dense matrix powers; telescoping sum.
Outcome a2() {
  Stopwatch clock;
  std::mt19937_64 rng(202);
  const AtomAlphabet alphabet({"C", "N"});
  const scattering::ScatteringConfig cfg;
  double worst = 0.0, telescope = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const oracle::Edges edges = random_connected_uniform(n, rng);
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng() % 2);
    const MolecularGraph g = build_graph(edges, labels, alphabet);
    const auto got = scattering::scattering_moments(g, alphabet, cfg);
    const auto want = oracle::scattering(n, edges, labels, 2, cfg.J, cfg.Q);
    if (got.size() != want.size()) return {false, "feature length " + std::to_string(got.size()) + " vs " + std::to_string(want.size())};
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, rel_diff(got[i], want[i]));

    const DiffusionOperator p = lazy_walk(g);
    const scattering::WaveletBank bank = scattering::build_dyadic_bank(p, cfg.J);
    Matrix total = bank.psi(0);
    for (int j = 1; j <= cfg.J; ++j) total = total + bank.psi(j);
    const Matrix top = p.power(1u << cfg.J);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        telescope = std::max(telescope, std::fabs(total(r, c) - ((r == c ? 1.0 : 0.0) - top(r, c))));
  }
  const double t = clock.seconds();
  return {worst <= 1e-12 && telescope <= 1e-10 && t < 30.0,
          "max moment difference " + fmt(worst) + ", telescoping residual " + fmt(telescope) + ", " + fmt(t) + " s"};
}

// Fresh layers have zero biases, so a sample whose hidden row is all zero
// feeds exactly 0 into the next ReLU. Move every parameter off that point.
void jitter(const std::vector<ad::Parameter*>& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (ad::Parameter* p : params)
    for (double& v : p->value.data()) v += u(rng);
}

ad::Var weighted_sum(ad::Tape& t, ad::Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul(y, t.constant(random_matrix(y.rows(), y.cols(), rng))));
}

// A3: autodiff against central differences.
Outcome a3() {
  Stopwatch clock;
  std::mt19937_64 g(303);

  Rng r1(31);
  nn::Mlp mlp({5, 7, 6, 3}, nn::Activation::Tanh, nn::Activation::Sigmoid, "mlp", r1);
  const Matrix x = random_matrix(4, 5, g);
  jitter(mlp.parameters(), g);
  const auto mlp_check = ad::gradient_check(mlp.parameters(), [&](ad::Tape& t) {
    return weighted_sum(t, mlp.forward(t, t.constant(x)), 1);
  });

  latent::Dataset d;
  d.features = random_matrix(6, 8, g);
  d.properties = random_matrix(6, 2, g);
  const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
  latent::LatentModelConfig c;
  c.input_dim = 8;
  c.latent_dim = 3;
  c.hidden = {6};
  c.regressor_hidden = 4;
  c.property_names = {"p", "q"};
  Rng r2(32);
  latent::LatentModel ae(c, r2);
  jitter(ae.parameters(), g);
  const auto ae_check = ad::gradient_check(ae.parameters(), [&](ad::Tape& t) { return ae.loss(t, d, rows, nullptr).total; });
  c.variational = true;
  c.kl_weight = 0.3;
  Rng r3(33);
  latent::LatentModel vae(c, r3);
  jitter(vae.parameters(), g);
  const auto vae_check = ad::gradient_check(vae.parameters(), [&](ad::Tape& t) {
    Rng noise(7);
    return vae.loss(t, d, rows, &noise).total;
  });

  gan::GeneratorConfig gc;
  gc.gen_hidden = {6};
  gc.disc_hidden = 4;
  gc.K = 4;
  gc.w_m = 1.0;
  gc.w_s = 0.7;
  const std::size_t n_max = 5;
  Rng r4(34);
  gan::GeneratorModel gen(gc, c.latent_dim, n_max, r4);
  jitter(gen.generator_parameters(), g);
  const Matrix pi = adjacency(n_max, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
  const Matrix pj = adjacency(n_max, {{0, 1}, {1, 2}, {1, 3}});
  ad::Parameter zi("zi", random_matrix(1, c.latent_dim, g));
  ad::Parameter zj("zj", random_matrix(1, c.latent_dim, g));
  std::vector<ad::Parameter*> params = gen.generator_parameters();
  params.push_back(&zi);
  params.push_back(&zj);
  const auto gan_check = ad::gradient_check(params, [&](ad::Tape& t) {
    const ad::Var traj = gan::trajectory(t.leaf(zi), t.leaf(zj), gc.K);
    const auto soft = gen.generate(t, traj);
    const ad::Var lm = gan::loss_adjacency(t, soft.front(), soft.back(), pi, pj);
    const ad::Var ls = gan::loss_smoothness(ae.decode_frozen(t, traj));
    return ad::scale(lm, gc.w_m) + ad::scale(ls, gc.w_s);
  });

  const double t = clock.seconds();
  const double worst = std::max({mlp_check.max_error, ae_check.max_error, vae_check.max_error, gan_check.max_error});
  return {worst < 1e-4 && t < 10.0,
          "mlp " + fmt(mlp_check.max_error) + ", ae " + fmt(ae_check.max_error) + ", vae " + fmt(vae_check.max_error) +
              ", w_m L_m + w_s L_s " + fmt(gan_check.max_error) + ", " + fmt(t) + " s"};
}

pipeline::Options write_run(const fs::path& dir, const json& cfg) {
  io::atomic_write(dir / "config.json", cfg.dump(2));
  pipeline::Options o;
  o.config = dir / "config.json";
  o.out = dir / "run";
  return o;
}

// A4: property regression beats the post-hoc probe, and both beat the mean.
Outcome a4() {
  Stopwatch clock;
  const std::vector<std::string> props{"ring_count", "heavy_atom_count"};
  const json cfg{{"dataset", fixture::data_path("fixture200.jsonl").string()},
                 {"scattering", {{"J", 4}, {"Q", 2}}},
                 {"latent", {{"latent_dim", 32}, {"property_names", props}, {"max_epochs", 200}, {"patience", 20}}}};
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const fs::path dir = fixture::scratch("acceptance_a4_seed" + std::to_string(seed));
    pipeline::Options o = write_run(dir, cfg);
    o.seed = seed;
    std::ostringstream log;
    pipeline::cmd_featurize(o, log);
    pipeline::cmd_train_ae(o, log);
    pipeline::Options plain = o;
    plain.no_regr = true;
    pipeline::cmd_train_ae(plain, log);
    pipeline::cmd_metrics(o, log);
    const json report = json::parse(io::read_file(o.out / "report.json"));

    std::map<std::string, std::vector<double>> mae;
    for (const auto& m : report["models"])
      for (const auto& p : m["properties"]) mae[m["name"]].push_back(p["mae_mean"].get<double>());
    std::vector<double> base;
    for (const auto& b : report["mean_baseline"]) base.push_back(b["mae_mean"].get<double>());
    const auto& regr = mae["ae_regr"];
    const auto& probe = mae["ae"];
    const bool complete = regr.size() == props.size() && probe.size() == props.size() && base.size() == props.size();
    bool ok = complete;
    detail += " seed " + std::to_string(seed) + ":";
    for (std::size_t k = 0; complete && k < props.size(); ++k) {
      ok = ok && regr[k] < probe[k] && probe[k] < base[k] && regr[k] < base[k];
      detail += " " + props[k] + " " + fmt(regr[k]) + "/" + fmt(probe[k]) + "/" + fmt(base[k]);
    }
    wins += ok;
  }
  const double t = clock.seconds();
  return {wins >= 2 && t < 300.0,
          std::to_string(wins) + "/3 seeds ordered (regr/probe/mean MAE)" + detail + ", " + fmt(t) + " s"};
}

// A5: validity of generated samples after training on fixture64.
Outcome a5() {
  Stopwatch clock;
  const fs::path dir = fixture::scratch("acceptance_a5");
  json cfg = json::parse(std::ifstream(fixture::data_path("fixture_config.json")));
  cfg["dataset"] = fixture::data_path("fixture64.jsonl").string();
  const pipeline::Options o = write_run(dir, cfg);
  std::ostringstream log;
  pipeline::cmd_featurize(o, log);
  pipeline::cmd_train_ae(o, log);
  pipeline::cmd_train_gan(o, log);
  pipeline::cmd_generate(o, log);
  const json v = json::parse(io::read_file(o.out / "ae_regr/validity.json"));
  const std::size_t samples = v["samples"], valid = v["valid"];
  const double t = clock.seconds();
  return {samples == 100 && valid >= 50 && t < 600.0,
          std::to_string(valid) + "/" + std::to_string(samples) + " valid (min_atoms " +
              std::to_string(v["min_atoms"].get<std::size_t>()) + ", too_small " + std::to_string(v["too_small"].get<std::size_t>()) +
              ", ring_too_large " + std::to_string(v["ring_too_large"].get<std::size_t>()) + ", degree_too_high " +
              std::to_string(v["degree_too_high"].get<std::size_t>()) + "), " + fmt(t) + " s"};
}

// A6: smoothness properties on random latents.
Outcome a6() {
  std::mt19937_64 rng(606);
  const Matrix z = random_matrix(50, 4, rng);
  const metrics::SmoothnessConfig cfg;
  const std::vector<double> constant(50, 2.5);
  const double s_const = metrics::smoothness(z, constant, cfg);

  std::vector<double> p(50);
  std::normal_distribution<double> normal;
  for (double& v : p) v = normal(rng);
  const double s = metrics::smoothness(z, p, cfg);
  double scale_gap = 0.0;
  for (double c : {-3.0, 1e-3, 0.5, 7.0, 1e4}) {
    std::vector<double> q = p;
    for (double& v : q) v *= c;
    scale_gap = std::max(scale_gap, std::fabs(metrics::smoothness(z, q, cfg) - s));
  }

  const Matrix lap = metrics::latent_knn_laplacian(z, cfg);
  Eigen::MatrixXd l(50, 50);
  double asym = 0.0;
  for (int r = 0; r < 50; ++r)
    for (int c = 0; c < 50; ++c) {
      l(r, c) = lap(r, c);
      asym = std::max(asym, std::fabs(lap(r, c) - lap(c, r)));
    }
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l).eigenvalues().minCoeff();
  return {s_const == 0.0 && scale_gap <= 1e-12 && asym == 0.0 && min_eig > -1e-10,
          "constant " + fmt(s_const) + ", scale gap " + fmt(scale_gap) + ", asymmetry " + fmt(asym) +
              ", min eigenvalue " + fmt(min_eig)};
}

bool has_rule(const validity::ValidityVerdict& v, validity::Rule r) {
  return std::find(v.failed_rules.begin(), v.failed_rules.end(), r) != v.failed_rules.end();
}

// A7: ring lengths against cycle-space enumeration, plus three fixed graphs.
Outcome a7() {
  std::mt19937_64 rng(707);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    const oracle::Edges edges = random_connected_uniform(n, rng);
    const auto got = validity::ring_sizes(validity::from_adjacency(adjacency(n, edges)));
    mismatches += got != oracle::minimum_cycle_basis_lengths(n, edges);
  }
  validity::ValidityConfig cfg;
  cfg.min_atoms = 5;
  oracle::Edges star, c12, c6;
  for (int i = 1; i <= 6; ++i) star.emplace_back(0, i);
  for (int i = 0; i < 12; ++i) c12.emplace_back(i, (i + 1) % 12);
  for (int i = 0; i < 6; ++i) c6.emplace_back(i, (i + 1) % 6);
  const auto v_star = validity::check_soft(adjacency(7, star), cfg);
  const auto v_c12 = validity::check_soft(adjacency(12, c12), cfg);
  const auto v_c6 = validity::check_soft(adjacency(6, c6), cfg);
  const bool fixed = !v_star.valid && has_rule(v_star, validity::Rule::DegreeTooHigh) && !v_c12.valid &&
                     has_rule(v_c12, validity::Rule::RingTooLarge) && v_c6.valid;
  return {mismatches == 0 && fixed, std::to_string(mismatches) + "/300 ring mismatches, K_{1,6} " +
                                        (v_star.valid ? "accepted" : "rejected") + ", 12-cycle " +
                                        (v_c12.valid ? "accepted" : "rejected") + ", 6-cycle " +
                                        (v_c6.valid ? "accepted" : "rejected")};
}

std::vector<json> read_jsonl(const std::string& name) {
  std::ifstream in(fixture::data_path(name));
  std::vector<json> rows;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

// A8: SMILES corpus, rejections and fuzzing.
Outcome a8() {
  std::size_t corpus = 0, corpus_bad = 0;
  for (const auto& row : read_jsonl("smiles_corpus.jsonl")) {
    ++corpus;
    try {
      const MolecularGraph g = smiles::parse_smiles(row["smiles"].get<std::string>());
      const auto rings = validity::ring_sizes(validity::from_adjacency(g.adjacency));
      corpus_bad += g.n() != row["nodes"].get<std::size_t>() || g.edge_count() != row["edges"].get<std::size_t>() ||
                    rings != row["rings"].get<std::vector<std::size_t>>();
    } catch (const std::exception&) {
      ++corpus_bad;
    }
  }
  std::size_t rejections = 0, rejections_bad = 0;
  for (const auto& row : read_jsonl("smiles_rejections.jsonl")) {
    ++rejections;
    try {
      smiles::parse_smiles(row["smiles"].get<std::string>());
      ++rejections_bad;
    } catch (const smiles::SmilesError& e) {
      rejections_bad += std::string(to_string(e.kind())) != row["kind"].get<std::string>() ||
                        e.offset() != row["offset"].get<std::size_t>();
    }
  }
  std::mt19937_64 rng(808);
  const std::string biased = "CNOSPFIBrcl()=#-:%0123456789[]@+./\\*H";
  std::size_t panics = 0, parsed = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s(rng() % 65, ' ');
    for (char& c : s) c = (i % 2 == 0) ? biased[rng() % biased.size()] : static_cast<char>(rng() % 256);
    try {
      smiles::parse_smiles(s);
      ++parsed;
    } catch (const smiles::SmilesError& e) {
      panics += e.offset() > s.size();
    } catch (...) {
      ++panics;
    }
  }
  return {corpus >= 50 && corpus_bad == 0 && rejections > 0 && rejections_bad == 0 && panics == 0,
          std::to_string(corpus - corpus_bad) + "/" + std::to_string(corpus) + " corpus strings, " +
              std::to_string(rejections - rejections_bad) + "/" + std::to_string(rejections) +
              " rejections positioned, fuzz 100000 strings with " + std::to_string(panics) + " panics (" +
              std::to_string(parsed) + " parsed)"};
}

// A9: two identical runs produce identical files, at different thread counts.
Outcome a9() {
  const json cfg{{"seed", 19},
                 {"dataset", fixture::data_path("fixture64.jsonl").string()},
                 {"scattering", {{"J", 3}, {"Q", 2}}},
                 {"latent", {{"latent_dim", 8}, {"hidden", {32}}, {"max_epochs", 15}}},
                 {"generator", {{"steps", 30}, {"K", 4}, {"gen_hidden", {32, 64}}}},
                 {"validity", {{"tranche", "BBAB"}}},
                 {"generate", {{"count", 40}}}};
  std::vector<pipeline::Options> runs;
  for (const char* threads : {"1", "4"}) {
    setenv("GRASSY_THREADS", threads, 1);
    const fs::path dir = fixture::scratch(std::string("acceptance_a9_threads") + threads);
    const pipeline::Options o = write_run(dir, cfg);
    std::ostringstream log;
    pipeline::cmd_featurize(o, log);
    pipeline::cmd_train_ae(o, log);
    pipeline::cmd_train_gan(o, log);
    pipeline::cmd_generate(o, log);
    runs.push_back(o);
  }
  unsetenv("GRASSY_THREADS");
  std::string differing;
  for (const char* f : {"features.csv", "ae_regr/history.csv", "ae_regr/gan/history.csv", "ae_regr/samples.jsonl"}) {
    const std::string a = io::read_file(runs[0].out / f), b = io::read_file(runs[1].out / f);
    if (a.empty() || a != b) differing += std::string(" ") + f;
  }
  return {differing.empty(), differing.empty() ? "features.csv, history.csv (ae and gan), samples.jsonl byte-identical"
                                               : "differing or empty:" + differing};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5}, {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}};
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << id << (o.pass ? " PASS " : " FAIL ") << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
