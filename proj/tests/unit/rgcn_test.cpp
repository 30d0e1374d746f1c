#include <gtest/gtest.h>

#include "kcse/error.hpp"
#include "kcse/grad_check.hpp"
#include "kcse/rgcn.hpp"
#include "kcse/rng.hpp"
#include "kcse/subgraph.hpp"
#include "oracles/dense_rgcn.hpp"
#include "support/fixtures.hpp"

using namespace kcse;

namespace {

struct Built {
  RgcnEncoder encoder;
  ParamStore params;
};

Built build(const KnowledgeGraph& g, RgcnDims dims, std::uint64_t seed) {
  Built b{RgcnEncoder::for_graph(g, dims), {}};
  Rng rng = Rng::stream(seed, "init");
  b.encoder.init_params(b.params, rng);
  return b;
}

Matrix feature_rows(const KnowledgeGraph& g, const Built& b) {
  const Matrix& table = b.params.value(RgcnEncoder::kFeatureTable);
  Matrix out(g.num_concepts(), table.cols());
  for (std::uint32_t i = 0; i < g.num_concepts(); ++i) {
    const auto row = *b.encoder.concepts().find(g.concept_name(ConceptId{i}));
    for (std::size_t k = 0; k < table.cols(); ++k) out(i, k) = table(row, k);
  }
  return out;
}

}  // namespace

class DenseOracle : public ::testing::TestWithParam<int> {};

TEST_P(DenseOracle, BothLayersMatchDenseAlgebra) {
  const auto seed = static_cast<std::uint64_t>(GetParam());
  const auto g = fixtures::random_graph(seed, 12, 3, 30);
  const auto b = build(g, RgcnDims{6, 5, 4, 0}, seed);
  const auto& rels = g.relations().names();
  const auto x = oracle::to_dense(feature_rows(g, b));
  const auto h1 = oracle::rgcn_layer(g, x, b.params, rels, 1);
  const auto h2 = oracle::rgcn_layer(g, h1, b.params, rels, 2);
  EXPECT_LT(oracle::max_abs_diff(h1, rgcn_layer_forward(g, feature_rows(g, b), b.encoder, b.params, 1)), 1e-12);
  EXPECT_LT(oracle::max_abs_diff(h2, encode(g, b.encoder, b.params)), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, DenseOracle, ::testing::Range(1, 9));

TEST(Rgcn, IsolatedNodeSeesOnlyItsSelfConnection) {
  GraphBuilder gb;
  gb.add_edge("a", "r", "b");
  gb.add_concept("lonely");
  const auto g = std::move(gb).build();
  const auto b = build(g, RgcnDims{4, 4, 4, 0}, 3);
  const auto id = g.find_concept("lonely")->value;
  const Matrix x = feature_rows(g, b);
  const Matrix h = rgcn_layer_forward(g, x, b.encoder, b.params, 1);
  const Matrix& w0 = b.params.value("layer1.W0");
  for (std::size_t o = 0; o < 4; ++o) {
    double s = 0;
    for (std::size_t k = 0; k < 4; ++k) s += w0(o, k) * x(id, k);
    EXPECT_NEAR(h(id, o), std::max(0.0, s), 1e-14);
  }
}

TEST(Rgcn, ZeroParametersGiveZeroEmbeddings) {
  const auto g = fixtures::tiny_graph();
  auto b = build(g, RgcnDims{5, 5, 5, 0}, 1);
  for (auto& [name, p] : b.params) {
    if (name != RgcnEncoder::kFeatureTable) p.value.fill(0.0);
  }
  const Matrix h = encode(g, b.encoder, b.params);
  EXPECT_EQ(h, Matrix(g.num_concepts(), 5));
}

TEST(Rgcn, IdentityMessageAveragesNeighbours) {
  // One relation, W0 = 0, W_r = I, W_r.inv = 0: output is the mean of the
  // in-neighbour features (inputs kept positive so relu is inert).
  GraphBuilder gb;
  gb.add_edge("a", "r", "c");
  gb.add_edge("b", "r", "c");
  const auto g = std::move(gb).build();
  auto b = build(g, RgcnDims{3, 3, 3, 0}, 2);
  b.params.value("layer1.W0").fill(0.0);
  b.params.value("layer1.W.r") = Matrix::identity(3);
  b.params.value("layer1.W.r.inv").fill(0.0);
  const auto a = g.find_concept("a")->value, bb = g.find_concept("b")->value, c = g.find_concept("c")->value;
  Matrix x(3, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    x(a, k) = 1.0 + static_cast<double>(k);
    x(bb, k) = 3.0 - static_cast<double>(k);
    x(c, k) = 9.0;
  }
  const Matrix h = rgcn_layer_forward(g, x, b.encoder, b.params, 1);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(h(c, k), 2.0);
  EXPECT_EQ(h(a, 0), 0.0);
}

TEST(Rgcn, NodeRelabellingPermutesRows) {
  const auto g = fixtures::random_graph(5, 10, 2, 25);
  const auto b = build(g, RgcnDims{4, 4, 4, 0}, 5);
  // Same edges, concepts interned in reverse order.
  GraphBuilder gb;
  for (std::size_t i = g.num_concepts(); i-- > 0;) gb.add_concept(g.concept_name(ConceptId{static_cast<std::uint32_t>(i)}));
  for (const auto& rel : g.relations().names()) gb.add_relation(rel);
  for (const auto& e : g.edges()) gb.add_edge(g.concept_name(e.head), g.relation_name(e.relation), g.concept_name(e.tail));
  const auto g2 = std::move(gb).build();
  const Matrix h1 = encode(g, b.encoder, b.params), h2 = encode(g2, b.encoder, b.params);
  for (std::uint32_t i = 0; i < g.num_concepts(); ++i) {
    const auto j = g2.find_concept(g.concept_name(ConceptId{i}))->value;
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(h1(i, k), h2(j, k), 1e-12);
  }
}

TEST(Rgcn, TwoLayersSeeExactlyTwoHops) {
  // Chain a-b-c-d: perturbing d's features moves b (two hops) but not a.
  GraphBuilder gb;
  gb.add_edge("a", "r", "b");
  gb.add_edge("b", "r", "c");
  gb.add_edge("c", "r", "d");
  const auto g = std::move(gb).build();
  auto b = build(g, RgcnDims{4, 4, 4, 0}, 9);
  const Matrix before = encode(g, b.encoder, b.params);
  auto& table = b.params.value(RgcnEncoder::kFeatureTable);
  for (std::size_t k = 0; k < 4; ++k) table(*b.encoder.concepts().find("d"), k) += 1.0;
  const Matrix after = encode(g, b.encoder, b.params);
  const auto a = g.find_concept("a")->value;
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(before(a, k), after(a, k));
}

TEST(Rgcn, EmbeddingOfACentreDependsOnlyOnItsBall) {
  const auto g = fixtures::random_graph(21, 40, 3, 70);
  const auto b = build(g, RgcnDims{5, 5, 5, 0}, 21);
  const Matrix full = encode(g, b.encoder, b.params);
  for (std::uint32_t i = 0; i < g.num_concepts(); i += 7) {
    const std::string name = g.concept_name(ConceptId{i});
    const auto sub = neighborhood_subgraph(g, std::vector<std::string>{name}, 2);
    const Matrix local = encode(sub.graph, b.encoder, b.params);
    const auto row = sub.graph.find_concept(name)->value;
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(full(i, k), local(row, k)) << name;
  }
}

TEST(Rgcn, GradientsMatchFiniteDifferences) {
  for (std::size_t bases : {0u, 2u}) {
    const auto g = fixtures::tiny_graph();
    auto b = build(g, RgcnDims{4, 3, 3, bases}, 13);
    const auto adj = b.encoder.adjacency(g);
    Rng rng(17);
    const Matrix weights = uniform_matrix(g.num_concepts(), 3, -1, 1, rng);
    const auto report = finite_diff_check(
        [&](Tape& t) { return sum(mul(b.encoder.forward(t, b.params, adj), t.constant(weights))); }, b.params);
    EXPECT_LT(report.max_relative_error, 1e-4) << "bases=" << bases << " worst " << report.worst_parameter;
  }
}

TEST(Rgcn, BasisParametersAreNamedPerLayer) {
  const auto g = fixtures::tiny_graph();
  const auto b = build(g, RgcnDims{4, 3, 2, 2}, 1);
  EXPECT_EQ(b.params.value("layer1.bases").rows(), 2u);
  EXPECT_EQ(b.params.value("layer1.bases").cols(), 12u);
  EXPECT_EQ(b.params.value("layer2.coeff.r1.inv").cols(), 2u);
  EXPECT_FALSE(b.params.contains("layer1.W.r1"));
}

TEST(Rgcn, RejectsUnknownConceptsAndBadShapes) {
  const auto g = fixtures::tiny_graph();
  auto b = build(g, RgcnDims{4, 4, 4, 0}, 1);
  GraphBuilder gb;
  gb.add_edge("a", "r1", "stranger");
  const auto other = std::move(gb).build();
  EXPECT_THROW(encode(other, b.encoder, b.params), DataError);
  b.params.value("layer2.W0") = Matrix(3, 4);
  EXPECT_THROW(b.encoder.check_params(b.params), DimensionError);
  EXPECT_THROW(RgcnEncoder::for_graph(g, RgcnDims{0, 4, 4, 0}), UsageError);
}

TEST(Rgcn, InitialisationIsSeedDeterministic) {
  const auto g = fixtures::tiny_graph();
  EXPECT_TRUE(build(g, {}, 4).params.same_values(build(g, {}, 4).params));
  EXPECT_FALSE(build(g, {}, 4).params.same_values(build(g, {}, 5).params));
}
