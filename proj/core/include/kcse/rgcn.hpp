#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kcse/autodiff.hpp"
#include "kcse/knowledge_graph.hpp"
#include "kcse/param_store.hpp"
#include "kcse/vocabulary.hpp"

namespace kcse {

class Rng;

struct RgcnDims {
  std::size_t input = 128;
  std::size_t hidden = 128;
  std::size_t output = 128;
  /// 0 keeps a full weight matrix per relation; B > 0 expresses every
  /// relation matrix as a learned mix of B shared bases.
  std::size_t num_bases = 0;
};

/// Message-passing structure of one graph, resolved against an encoder's
/// vocabularies.
///
/// Every original relation r contributes two channels: `r` gathers from
/// the heads of edges ending at a node, `r.inv` from the tails of edges
/// leaving it. Channels follow the encoder's relation order; within a
/// channel only nodes with at least one neighbour appear, each normalised
/// by its neighbour count.
struct RelationalAdjacency {
  struct Channel {
    std::uint32_t relation = 0;  // encoder relation index
    bool inverse = false;
    std::vector<std::uint32_t> targets;
    SparseRows rows;
  };

  std::size_t num_nodes = 0;
  std::vector<std::uint32_t> feature_rows;  // graph node -> row of the feature table
  std::vector<Channel> channels;
};

/// Two stacked relational graph-convolution layers over a trainable
/// initial feature table `g`.
///
/// The encoder is a description (vocabularies, widths, parameter naming);
/// values live in a ParamStore under `g`, `layer{1,2}.W0`,
/// `layer{1,2}.W.<relation>[.inv]` (or `layer{1,2}.bases` and
/// `layer{1,2}.coeff.<relation>[.inv]` with basis decomposition).
class RgcnEncoder {
 public:
  RgcnEncoder() = default;
  RgcnEncoder(Vocabulary concepts, Vocabulary relations, RgcnDims dims);
  static RgcnEncoder for_graph(const KnowledgeGraph& graph, RgcnDims dims);

  const Vocabulary& concepts() const { return concepts_; }
  const Vocabulary& relations() const { return relations_; }
  const RgcnDims& dims() const { return dims_; }
  std::size_t layer_input(int layer) const { return layer == 1 ? dims_.input : dims_.hidden; }
  std::size_t layer_output(int layer) const { return layer == 1 ? dims_.hidden : dims_.output; }

  static constexpr std::string_view kFeatureTable = "g";
  std::string self_weight_name(int layer) const;
  std::string relation_weight_name(int layer, std::string_view relation, bool inverse) const;

  /// Adds freshly initialised parameters: Xavier-uniform weights and a
  /// feature table uniform in +-1/sqrt(input width).
  void init_params(ParamStore& params, Rng& rng) const;

  /// Checks that `params` holds every tensor this encoder needs with the
  /// right shape. Throws DimensionError naming the first mismatch.
  void check_params(const ParamStore& params) const;

  /// Throws DataError if the graph uses a concept or relation unknown to
  /// the encoder.
  RelationalAdjacency adjacency(const KnowledgeGraph& graph) const;

  Var layer_forward(Tape& tape, ParamStore& params, const RelationalAdjacency& adj, Var features, int layer) const;
  /// Output rows follow graph node ids.
  Var forward(Tape& tape, ParamStore& params, const RelationalAdjacency& adj) const;

 private:
  Var relation_weight(Tape& tape, ParamStore& params, int layer, std::uint32_t relation, bool inverse) const;

  Vocabulary concepts_;
  Vocabulary relations_;
  RgcnDims dims_;
};

/// One relu(sum_r sum_j W_r x_j / c_ir + W_0 x_i) layer on plain matrices,
/// with `features` indexed by graph node id.
Matrix rgcn_layer_forward(const KnowledgeGraph& graph, const Matrix& features, const RgcnEncoder& encoder,
                          const ParamStore& params, int layer);

/// Both layers on `graph`; row i is the embedding of graph node i.
Matrix encode(const KnowledgeGraph& graph, const RgcnEncoder& encoder, const ParamStore& params);

}  // namespace kcse
