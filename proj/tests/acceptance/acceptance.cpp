// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and time budgets are pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kcse/checkpoint.hpp"
#include "kcse/cse.hpp"
#include "kcse/distmult.hpp"
#include "kcse/edge_io.hpp"
#include "kcse/embedding_table.hpp"
#include "kcse/grad_check.hpp"
#include "kcse/kg_trainer.hpp"
#include "kcse/rng.hpp"
#include "kcse/subgraph.hpp"
#include "kcse/zsl.hpp"
#include "kcse_app/commands.hpp"
#include "kcse_app/config.hpp"
#include "kcse_app/synth.hpp"
#include "oracles/subgraph_oracle.hpp"
#include "support/cli.hpp"
#include "support/fixtures.hpp"

using namespace kcse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s [%.2fs, budget %.0fs%s]\n", pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs,
              budget_s, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

// 1 -------------------------------------------------------------------------

double kg_grad_error() {
  const auto g = fixtures::tiny_graph();
  auto model = GraphAutoencoder::initialize(g, RgcnDims{8, 8, 8, 0}, 1);
  Rng rng(2);
  const auto neg = sample_negatives(g, g.edges(), {}, rng, TripleSet(g.edges()));
  std::vector<std::uint32_t> h, r, t;
  std::vector<double> y;
  const auto push = [&](const Triple& e, double label) {
    h.push_back(e.head.value);
    r.push_back(e.relation.value);
    t.push_back(e.tail.value);
    y.push_back(label);
  };
  for (const auto& e : g.edges()) push(e, 1.0);
  for (const auto& e : neg) push(e, 0.0);
  const auto adj = model.encoder.adjacency(g);
  return finite_diff_check(
             [&](Tape& tape) {
               const Var emb = model.encoder.forward(tape, model.params, adj);
               return bce_with_logits(distmult_logits(emb, model.decoder.stacked(tape, model.params), h, r, t), y);
             },
             model.params, 1e-5)
      .max_relative_error;
}

double zsl_grad_error(ZslVariant variant, bool fused) {
  ZslArchitecture a;
  a.variant = variant;
  a.visual_dim = 6;
  a.semantic_dim = 5;
  a.secondary_dim = fused ? 4 : 0;
  a.fusion_semantic_width = 8;
  a.fusion_secondary_width = 8;
  a.hidden_width = 10;
  a.relation_width = 8;
  auto m = ZslModel::initialize(a, 3);
  Rng rng(4);
  for (auto& [name, p] : m.params)
    for (double& v : p.value.data()) v += rng.uniform(-0.2, 0.2);
  ClassInputs c;
  c.names = {"x", "y", "z"};
  c.primary = uniform_matrix(3, 5, -1, 1, rng);
  if (fused) c.secondary = uniform_matrix(3, 4, -1, 1, rng);
  const Matrix f = uniform_matrix(6, 6, 0, 1, rng);
  const std::uint32_t labels[] = {0, 1, 2, 2, 1, 0};
  return finite_diff_check([&](Tape& t) { return zsl_objective(m, t, m.params, c, f, labels); }, m.params, 1e-5)
      .max_relative_error;
}

Outcome gradients() {
  double worst = kg_grad_error();
  std::string parts = fmt::format("kg={:.2e}", worst);
  for (auto v : {ZslVariant::dezsl, ZslVariant::rn}) {
    for (bool fused : {false, true}) {
      const double e = zsl_grad_error(v, fused);
      worst = std::max(worst, e);
      parts += fmt::format(" {}{}={:.2e}", to_string(v), fused ? "+fusion" : "", e);
    }
  }
  return {worst < 1e-4, fmt::format("finite differences, max relative error {:.2e} < 1e-4 ({})", worst, parts)};
}

// 2 -------------------------------------------------------------------------

Outcome symmetry() {
  Rng rng(64);
  double worst = 0.0;
  std::vector<double> h(64), r(64), t(64);
  for (int i = 0; i < 1000; ++i) {
    for (std::size_t k = 0; k < 64; ++k) {
      h[k] = rng.uniform(-2, 2);
      r[k] = rng.uniform(-2, 2);
      t[k] = rng.uniform(-2, 2);
    }
    worst = std::max(worst, std::abs(score_triple(h, r, t) - score_triple(t, r, h)));
  }
  return {worst < 1e-12, fmt::format("DistMult score(h,r,t) vs score(t,r,h), 1000 cases d=64, max diff {:.1e} < 1e-12",
                                     worst)};
}

// 3 -------------------------------------------------------------------------

Outcome subgraph_oracle() {
  int mismatches = 0, checks = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng = Rng::stream(seed, "acceptance-graph");
    const std::size_t nodes = 20 + rng.uniform_index(181);
    const std::size_t rels = 1 + rng.uniform_index(5);
    const auto g = fixtures::random_graph(seed, nodes, rels, nodes + rng.uniform_index(2 * nodes));
    std::vector<std::string> seeds;
    for (int k = 0; k < 3; ++k) seeds.push_back(g.concept_name(ConceptId{static_cast<std::uint32_t>(rng.uniform_index(nodes))}));
    for (int radius = 0; radius <= 3; ++radius) {
      const auto got = neighborhood_subgraph(g, seeds, radius);
      const auto want = oracle::brute_force_subgraph(g, seeds, radius);
      ++checks;
      if (oracle::named_edges(got.graph) != want.edges || oracle::node_names(got.graph) != want.nodes) ++mismatches;
    }
  }
  return {mismatches == 0,
          fmt::format("radius subgraph vs Floyd-Warshall oracle, {} graph/radius pairs, {} mismatches", checks,
                      mismatches)};
}

// 4 -------------------------------------------------------------------------

app::RunConfig scenario_config(const app::SynthScenario& scenario, std::uint64_t seed) {
  app::RunConfig c;
  c.merge_text(scenario.recommended_config, scenario.name);
  c.set("run.seed", std::to_string(seed));
  return c;
}

Outcome cse_paths() {
  const auto& scenario = app::synth_scenario("separable");
  const auto data = app::generate_synth(scenario, 1);
  auto cfg = app::kg_train_config(scenario_config(scenario, 1));
  cfg.epochs = 50;
  const auto model = train_kg(data.graph, cfg).model;
  const auto classes = data.split.all();
  const Matrix full = encode(data.graph, model.encoder, model.params);
  std::size_t differing = 0;
  for (const auto& name : classes) {
    const auto local = extract_cse(model, data.graph, name);
    const auto row = full.row(data.graph.find_concept(name)->value);
    if (!std::equal(local.begin(), local.end(), row.begin(), row.end())) ++differing;
  }
  return {differing == 0, fmt::format("per-class radius-{} CSE vs full-graph encode row, {} classes, {} differ (exact)",
                                      kCseRadius, classes.size(), differing)};
}

// 5 -------------------------------------------------------------------------

Outcome link_prediction() {
  const auto planted = fixtures::planted_bipartite(1);
  KgTrainConfig cfg;  // library defaults
  cfg.seed = 1;
  const auto trained = train_kg(planted.train, cfg);
  Rng rng = Rng::stream(1, "evaluation");
  const TripleSet known(planted.all_edges);
  const auto m = evaluate_link_prediction(trained.model, planted.train, planted.held_out, 10, rng, &known);
  return {m.auc >= 0.90 && trained.loss_history.size() <= 2000,
          fmt::format("planted 60-node 2-relation graph, {} held-out edges, {} epochs, AUC {:.4f} >= 0.90",
                      planted.held_out.size(), trained.loss_history.size(), m.auc)};
}

// 6, 7 ----------------------------------------------------------------------

struct Sources {
  bool attributes = true;
  const EmbeddingTable* cse = nullptr;
};

double zsl_top1(const app::SynthData& data, const app::RunConfig& config, const Sources& src) {
  const SemanticSources view{src.attributes ? &data.attributes : nullptr, nullptr, src.cse};
  const auto classes = assemble_class_inputs(view, data.split.all());
  const auto seen = classes.select(data.split.seen);
  const auto train = data.visual.subset(data.split.seen);
  const auto arch = app::zsl_architecture(config, data.visual.dim(), classes);
  const auto model = train_zsl(arch, seen, train, app::zsl_train_config(config)).model;
  const auto candidates = classes.select(data.split.unseen);
  const auto test = data.visual.subset(data.split.unseen);
  std::vector<std::string> predicted;
  for (auto j : zsl_predict(model, candidates, test.features)) predicted.push_back(candidates.names[j]);
  return top1_accuracy(predicted, test.labels);
}

Outcome separable() {
  const auto& scenario = app::synth_scenario("separable");
  const auto data = app::generate_synth(scenario, 1);
  auto config = scenario_config(scenario, 1);
  const double dezsl = zsl_top1(data, config, {});
  config.set("zsl.variant", "rn");
  const double rn = zsl_top1(data, config, {});
  return {dezsl >= 0.90 && rn >= 0.80,
          fmt::format("separable unseen top-1: DeZSL+HA {:.3f} >= 0.90, RN+HA {:.3f} >= 0.80", dezsl, rn)};
}

Outcome cse_benefit() {
  const auto& scenario = app::synth_scenario("degraded-attributes");
  double ha_sum = 0.0, cse_sum = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = app::generate_synth(scenario, seed);
    const auto config = scenario_config(scenario, seed);
    const auto kg = train_kg(data.graph, app::kg_train_config(config)).model;
    const auto cse = extract_all(kg, data.graph, data.split.all());
    const double ha = zsl_top1(data, config, {});
    const double ha_cse = zsl_top1(data, config, {true, &cse});
    ha_sum += ha;
    cse_sum += ha_cse;
    per_seed += fmt::format(" {:.2f}/{:.2f}", ha, ha_cse);
  }
  const double ha = ha_sum / 5, ha_cse = cse_sum / 5;
  return {ha_cse >= ha + 0.03,
          fmt::format("degraded-attributes DeZSL mean top-1 over 5 seeds: HA {:.3f}, HA+CSE {:.3f} >= HA+0.03 (per seed"
                      " HA/HA+CSE:{})",
                      ha, ha_cse, per_seed)};
}

// 8 -------------------------------------------------------------------------

Outcome landmarks() {
  const std::vector<double> half(8, 0.5), labels{1, 0, 1, 0, 1, 1, 0, 0};
  const double kg = kg_loss(half, labels);
  const Matrix scores{{0.5, 0.5}};
  const std::uint32_t y[] = {0};
  const double rn = rn_loss(scores, y);
  const Matrix f{{1, 0}, {0, 1}}, protos{{0, 0}, {0, 0}};
  const double de = dezsl_loss(f, protos);
  const double e1 = std::abs(kg - std::log(2.0)), e2 = std::abs(rn - 0.5), e3 = std::abs(de - 1.0);
  return {e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-12,
          fmt::format("kg_loss(all 0.5) - ln2 = {:.1e}, rn_loss - 0.5 = {:.1e}, dezsl_loss - 1 = {:.1e} (<= 1e-12)", e1,
                      e2, e3)};
}

// 9 -------------------------------------------------------------------------

std::string result_section(const std::filesystem::path& manifest) {
  const std::string text = cli::slurp(manifest);
  const auto at = text.find("[result]");
  return at == std::string::npos ? std::string() : text.substr(at);
}

Outcome manifest_replay() {
  namespace fs = std::filesystem;
  const auto root = fixtures::scratch_dir("acceptance-replay");
  const auto q = [](const fs::path& p) { return cli::quote(p.string()); };
  const std::string fast = " --set kg.epochs=40 --set zsl.epochs=60";
  if (cli::run("synth --scenario separable --seed 5 --out-dir " + q(root / "data")).exit_code != 0) {
    return {false, "synth failed"};
  }
  const auto conf = q(root / "data" / "kcse.conf");
  struct Step {
    std::string command, dir, extra;
    std::vector<std::string> artifacts;
  };
  const std::vector<Step> steps = {
      {"train-kg", "kg", "", {"kg.params", "kg_loss.txt"}},
      {"extract-cse", "cse", " --checkpoint " + q(root / "kg" / "kg.params"), {"cse.txt"}},
      {"train-zsl", "zsl", " --sources ha,cse --cse " + q(root / "cse" / "cse.txt"), {"zsl.params", "zsl_loss.txt"}},
      {"eval-zsl", "eval",
       " --sources ha,cse --cse " + q(root / "cse" / "cse.txt") + " --zsl-checkpoint " + q(root / "zsl" / "zsl.params"),
       {"predictions.txt"}},
  };
  std::size_t compared = 0;
  for (const auto& s : steps) {
    const auto first = root / s.dir;
    if (cli::run(s.command + " --config " + conf + fast + s.extra + " --out-dir " + q(first)).exit_code != 0) {
      return {false, s.command + " failed"};
    }
    const auto manifest = first / (s.command + ".manifest");
    const auto again = root / (s.dir + "-replay");
    if (cli::run(s.command + " --config " + q(manifest) + " --out-dir " + q(again)).exit_code != 0) {
      return {false, s.command + " replay failed"};
    }
    for (const auto& a : s.artifacts) {
      ++compared;
      if (cli::slurp(first / a) != cli::slurp(again / a) || cli::slurp(first / a).empty()) {
        return {false, fmt::format("{} differs after replaying {}", a, s.command)};
      }
    }
    ++compared;
    if (result_section(manifest) != result_section(again / (s.command + ".manifest"))) {
      return {false, fmt::format("{} manifest results differ", s.command)};
    }
  }
  return {true, fmt::format("train-kg, extract-cse, train-zsl, eval-zsl replayed from manifests: {} artifacts "
                            "bit-identical",
                            compared)};
}

// 10 ------------------------------------------------------------------------

Outcome round_trips() {
  const auto dir = fixtures::scratch_dir("acceptance-io");
  std::size_t edge_mismatch = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = fixtures::random_graph(seed, 150, 5, 400);
    write_edge_file(g, dir / "g.tsv");
    const auto back = parse_edge_file(dir / "g.tsv", EdgeFormat::simple_tsv);
    if (oracle::named_edges(back) != oracle::named_edges(g) || back.num_edges() != g.num_edges()) ++edge_mismatch;
  }
  Rng rng(10);
  EmbeddingTable table(128);
  std::vector<double> v(128);
  for (int i = 0; i < 200; ++i) {
    for (double& x : v) x = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
    table.add(fmt::format("c{}", i), v);
  }
  save_embedding_table(dir / "e.txt", table);
  const auto back = load_embedding_table(dir / "e.txt");
  double worst = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t k = 0; k < 128; ++k) worst = std::max(worst, std::abs(table.row(i)[k] - back.row(i)[k]));
  const auto model = GraphAutoencoder::initialize(fixtures::tiny_graph(), {16, 16, 16, 0}, 3);
  save_params(dir / "m.params", model.params);
  const bool params_exact = load_params(dir / "m.params").same_values(model.params);
  return {edge_mismatch == 0 && worst < 1e-12 && back.names() == table.names() && params_exact,
          fmt::format("10 graphs: {} edge-set mismatches; 200x128 embeddings max error {:.1e} < 1e-12; checkpoint {}",
                      edge_mismatch, worst, params_exact ? "exact" : "differs")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  report(1, 10, gradients);
  report(2, 10, symmetry);
  report(3, 30, subgraph_oracle);
  report(4, 10, cse_paths);
  report(5, 120, link_prediction);
  report(6, 300, separable);
  report(7, 900, cse_benefit);
  report(8, 10, landmarks);
  report(9, 300, manifest_replay);
  report(10, 30, round_trips);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
