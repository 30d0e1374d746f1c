#include <string>
#include <vector>

#include <benchmark/benchmark.h>
#include <fmt/format.h>

#include "kcse/edge_io.hpp"
#include "kcse/kg_trainer.hpp"
#include "kcse/matrix.hpp"
#include "kcse/param_store.hpp"
#include "kcse/rgcn.hpp"
#include "kcse/rng.hpp"
#include "kcse/subgraph.hpp"
#include "kcse/zsl.hpp"

using namespace kcse;

namespace {

KnowledgeGraph random_graph(std::size_t nodes, std::size_t relations, std::size_t edges) {
  Rng rng(1);
  GraphBuilder b;
  for (std::size_t i = 0; i < nodes; ++i) b.add_concept(fmt::format("n{}", i));
  for (std::size_t r = 0; r < relations; ++r) b.add_relation(fmt::format("r{}", r));
  for (std::size_t e = 0; e < edges; ++e) {
    b.add_edge(ConceptId{static_cast<std::uint32_t>(rng.uniform_index(nodes))},
               RelationId{static_cast<std::uint32_t>(rng.uniform_index(relations))},
               ConceptId{static_cast<std::uint32_t>(rng.uniform_index(nodes))});
  }
  return std::move(b).build();
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Matrix a = uniform_matrix(n, n, -1, 1, rng), b = uniform_matrix(n, n, -1, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

static void BM_RgcnEncode(benchmark::State& state) {
  const auto nodes = static_cast<std::size_t>(state.range(0));
  const auto g = random_graph(nodes, 5, 4 * nodes);
  const auto model = GraphAutoencoder::initialize(g, RgcnDims{64, 64, 64, 0}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(encode(g, model.encoder, model.params));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.num_edges()));
}
BENCHMARK(BM_RgcnEncode)->Arg(500)->Arg(2000);

static void BM_KgTrainingEpoch(benchmark::State& state) {
  const auto g = random_graph(500, 5, 2000);
  KgTrainConfig cfg;
  cfg.dims = {32, 32, 32, 0};
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_kg(g, cfg));
}
BENCHMARK(BM_KgTrainingEpoch)->Unit(benchmark::kMillisecond);

static void BM_Subgraph(benchmark::State& state) {
  const auto g = random_graph(20000, 5, 80000);
  const std::vector<std::string> seeds{"n1", "n2", "n3", "n4", "n5"};
  const int radius = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(neighborhood_subgraph(g, seeds, radius));
}
BENCHMARK(BM_Subgraph)->Arg(1)->Arg(2)->Arg(3);

static void BM_ParseEdges(benchmark::State& state) {
  std::string text;
  Rng rng(3);
  for (int i = 0; i < 50000; ++i) {
    text += fmt::format("rel{}\tconcept_{}\tconcept_{}\t1\n", rng.uniform_index(10), rng.uniform_index(20000),
                        rng.uniform_index(20000));
  }
  for (auto _ : state) benchmark::DoNotOptimize(parse_edges(text, EdgeFormat::simple_tsv));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseEdges)->Unit(benchmark::kMillisecond);

static void BM_NearestPrototype(benchmark::State& state) {
  Rng rng(4);
  const Matrix protos = uniform_matrix(50, 2048, 0, 1, rng), f = uniform_matrix(1000, 2048, 0, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_prototype(protos, f));
}
BENCHMARK(BM_NearestPrototype)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
