#include "kcse/rgcn.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kcse/error.hpp"
#include "kcse/rng.hpp"

namespace kcse {

RgcnEncoder::RgcnEncoder(Vocabulary concepts, Vocabulary relations, RgcnDims dims)
    : concepts_(std::move(concepts)), relations_(std::move(relations)), dims_(dims) {
  if (dims_.input == 0 || dims_.hidden == 0 || dims_.output == 0) {
    throw UsageError("encoder dimensions must be positive");
  }
}

RgcnEncoder RgcnEncoder::for_graph(const KnowledgeGraph& graph, RgcnDims dims) {
  return RgcnEncoder(graph.concepts(), graph.relations(), dims);
}

std::string RgcnEncoder::self_weight_name(int layer) const { return fmt::format("layer{}.W0", layer); }

std::string RgcnEncoder::relation_weight_name(int layer, std::string_view relation, bool inverse) const {
  if (dims_.num_bases > 0) return fmt::format("layer{}.coeff.{}{}", layer, relation, inverse ? ".inv" : "");
  return fmt::format("layer{}.W.{}{}", layer, relation, inverse ? ".inv" : "");
}

void RgcnEncoder::init_params(ParamStore& params, Rng& rng) const {
  // Scaled so initial DistMult logits are O(1) whatever the width.
  const double g_bound = 1.0 / std::sqrt(static_cast<double>(dims_.input));
  params.add(kFeatureTable, uniform_matrix(concepts_.size(), dims_.input, -g_bound, g_bound, rng));
  for (int layer = 1; layer <= 2; ++layer) {
    const std::size_t in = layer_input(layer), out = layer_output(layer);
    params.add(self_weight_name(layer), xavier_uniform(out, in, rng));
    if (dims_.num_bases > 0) {
      const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
      params.add(fmt::format("layer{}.bases", layer), uniform_matrix(dims_.num_bases, out * in, -bound, bound, rng));
    }
    for (const auto& rel : relations_.names()) {
      for (bool inverse : {false, true}) {
        if (dims_.num_bases > 0) {
          params.add(relation_weight_name(layer, rel, inverse), xavier_uniform(1, dims_.num_bases, rng));
        } else {
          params.add(relation_weight_name(layer, rel, inverse), xavier_uniform(out, in, rng));
        }
      }
    }
  }
}

void RgcnEncoder::check_params(const ParamStore& params) const {
  const auto expect = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    if (!params.contains(name)) throw DimensionError(fmt::format("checkpoint lacks parameter '{}'", name));
    const auto& v = params.value(name);
    if (v.rows() != rows || v.cols() != cols) {
      throw DimensionError(
          fmt::format("parameter '{}' is {}x{}, encoder expects {}x{}", name, v.rows(), v.cols(), rows, cols));
    }
  };
  expect(std::string(kFeatureTable), concepts_.size(), dims_.input);
  for (int layer = 1; layer <= 2; ++layer) {
    const std::size_t in = layer_input(layer), out = layer_output(layer);
    expect(self_weight_name(layer), out, in);
    if (dims_.num_bases > 0) expect(fmt::format("layer{}.bases", layer), dims_.num_bases, out * in);
    for (const auto& rel : relations_.names()) {
      for (bool inverse : {false, true}) {
        if (dims_.num_bases > 0) {
          expect(relation_weight_name(layer, rel, inverse), 1, dims_.num_bases);
        } else {
          expect(relation_weight_name(layer, rel, inverse), out, in);
        }
      }
    }
  }
}

RelationalAdjacency RgcnEncoder::adjacency(const KnowledgeGraph& graph) const {
  RelationalAdjacency adj;
  adj.num_nodes = graph.num_concepts();
  adj.feature_rows.reserve(adj.num_nodes);
  for (const auto& name : graph.concepts().names()) {
    const auto row = concepts_.find(name);
    if (!row) throw DataError(fmt::format("concept '{}' is not in the encoder vocabulary", name));
    adj.feature_rows.push_back(*row);
  }
  for (const auto& name : graph.relations().names()) {
    if (!relations_.contains(name)) throw DataError(fmt::format("relation '{}' is not in the encoder vocabulary", name));
  }

  for (std::uint32_t r = 0; r < relations_.size(); ++r) {
    const auto graph_rel = graph.find_relation(relations_.name(r));
    for (bool inverse : {false, true}) {
      RelationalAdjacency::Channel ch;
      ch.relation = r;
      ch.inverse = inverse;
      ch.rows.num_cols = adj.num_nodes;
      if (graph_rel) {
        // Forward channel: messages from heads of incoming edges.
        const Direction dir = inverse ? Direction::out : Direction::in;
        for (std::uint32_t i = 0; i < adj.num_nodes; ++i) {
          const auto nbrs = graph.neighbors(ConceptId{i}, *graph_rel, dir);
          if (nbrs.empty()) continue;
          const double coeff = 1.0 / static_cast<double>(nbrs.size());
          ch.targets.push_back(i);
          for (auto j : nbrs) {
            ch.rows.cols.push_back(j.value);
            ch.rows.coeffs.push_back(coeff);
          }
          ch.rows.offsets.push_back(ch.rows.cols.size());
        }
      }
      if (!ch.targets.empty()) adj.channels.push_back(std::move(ch));
    }
  }
  return adj;
}

Var RgcnEncoder::relation_weight(Tape& tape, ParamStore& params, int layer, std::uint32_t relation,
                                 bool inverse) const {
  const auto name = relation_weight_name(layer, relations_.name(relation), inverse);
  if (dims_.num_bases == 0) return tape.param(params, name);
  const Var bases = tape.param(params, fmt::format("layer{}.bases", layer));
  const Var coeff = tape.param(params, name);
  return reshape(matmul(coeff, bases), layer_output(layer), layer_input(layer));
}

Var RgcnEncoder::layer_forward(Tape& tape, ParamStore& params, const RelationalAdjacency& adj, Var features,
                               int layer) const {
  if (features.rows() != adj.num_nodes || features.cols() != layer_input(layer)) {
    throw DimensionError(fmt::format("layer {} expects {}x{} features, got {}x{}", layer, adj.num_nodes,
                                     layer_input(layer), features.rows(), features.cols()));
  }
  Var out = matmul_bt(features, tape.param(params, self_weight_name(layer)));
  for (const auto& ch : adj.channels) {
    const Var aggregated = sparse_aggregate(ch.rows, features);
    const Var messages = matmul_bt(aggregated, relation_weight(tape, params, layer, ch.relation, ch.inverse));
    out = index_add_rows(out, ch.targets, messages);
  }
  return relu(out);
}

Var RgcnEncoder::forward(Tape& tape, ParamStore& params, const RelationalAdjacency& adj) const {
  const Var g = gather_rows(tape.param(params, kFeatureTable), adj.feature_rows);
  const Var h1 = layer_forward(tape, params, adj, g, 1);
  return layer_forward(tape, params, adj, h1, 2);
}

Matrix rgcn_layer_forward(const KnowledgeGraph& graph, const Matrix& features, const RgcnEncoder& encoder,
                          const ParamStore& params, int layer) {
  // Forward-only use: the tape reads parameters but never writes gradients.
  auto& store = const_cast<ParamStore&>(params);
  const auto adj = encoder.adjacency(graph);
  Tape tape;
  return encoder.layer_forward(tape, store, adj, tape.constant(features), layer).value();
}

Matrix encode(const KnowledgeGraph& graph, const RgcnEncoder& encoder, const ParamStore& params) {
  auto& store = const_cast<ParamStore&>(params);
  const auto adj = encoder.adjacency(graph);
  Tape tape;
  return encoder.forward(tape, store, adj).value();
}

}  // namespace kcse
