#pragma once

#include <cstdint>
#include <span>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "kcse/distmult.hpp"
#include "kcse/knowledge_graph.hpp"
#include "kcse/param_store.hpp"
#include "kcse/rgcn.hpp"

namespace kcse {

class Rng;

/// Encoder, decoder and the single ParamStore holding both.
struct GraphAutoencoder {
  RgcnEncoder encoder;
  RelationDiagonals decoder;
  ParamStore params;

  static GraphAutoencoder initialize(const KnowledgeGraph& graph, const RgcnDims& dims, std::uint64_t seed);
  /// Rebuilds a trained model from checkpointed parameters; widths are read
  /// off the parameter shapes. Throws DimensionError on any mismatch.
  static GraphAutoencoder from_params(const KnowledgeGraph& graph, ParamStore params);
};

/// Probability of replacing the head, tail or relation of a positive.
struct CorruptionWeights {
  double head = 1.0 / 3.0;
  double tail = 1.0 / 3.0;
  double relation = 1.0 / 3.0;
};

struct KgTrainConfig {
  RgcnDims dims;
  std::size_t epochs = 500;
  double learning_rate = 1e-2;
  CorruptionWeights corruption;
  /// Fraction of training edges held out of message passing each epoch and
  /// used as that epoch's positives. 0 trains on reconstructing every edge.
  double edge_dropout = 0.2;
  double validation_fraction = 0.0;
  /// Early-stopping patience in epochs on validation AUC.
  std::size_t patience = 50;
  /// 0 = full batch; otherwise positives per optimizer step.
  std::size_t batch_size = 0;
  /// Draw fresh negatives every epoch (otherwise once, before training).
  bool resample_negatives = true;
  std::uint64_t seed = 0;

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

class TripleSet {
 public:
  TripleSet() = default;
  explicit TripleSet(std::span<const Triple> triples);
  void insert(const Triple& t) { set_.insert(key(t)); }
  bool contains(const Triple& t) const { return set_.contains(key(t)); }
  std::size_t size() const { return set_.size(); }

 private:
  using Key = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;
  struct Hash {
    std::size_t operator()(const Key& k) const;
  };
  static Key key(const Triple& t) { return {t.head.value, t.relation.value, t.tail.value}; }
  std::unordered_set<Key, Hash> set_;
};

/// One corrupted triple per positive: a position is drawn from `weights`
/// and replaced by a uniform draw from the matching vocabulary. Draws that
/// hit a known edge are retried (position included) up to 100 times, after
/// which the last draw is kept and counted in `unresolved`.
std::vector<Triple> sample_negatives(const KnowledgeGraph& graph, std::span<const Triple> positives,
                                     const CorruptionWeights& weights, Rng& rng, const TripleSet& known,
                                     std::size_t* unresolved = nullptr);
std::vector<Triple> sample_negatives(const KnowledgeGraph& graph, std::span<const Triple> positives,
                                     const CorruptionWeights& weights, Rng& rng);

/// Mean binary cross-entropy of probabilities against 0/1 labels.
double kg_loss(std::span<const double> scores, std::span<const double> labels);
double kg_loss_from_logits(std::span<const double> logits, std::span<const double> labels);

struct KgTrainResult {
  GraphAutoencoder model;
  std::vector<double> loss_history;
  std::vector<double> validation_auc;  // empty without a validation split
  std::vector<Triple> validation_edges;
  std::size_t best_epoch = 0;
  std::size_t unresolved_negatives = 0;
};

/// Trains encoder and decoder for link prediction on `graph`.
KgTrainResult train_kg(const KnowledgeGraph& graph, const KgTrainConfig& config);

/// Same concepts and relations (same ids) as `like`, with only `edges`.
KnowledgeGraph with_edges(const KnowledgeGraph& like, std::span<const Triple> edges);

/// P(random positive outscores random negative), ties counting one half.
double auc_score(std::span<const double> positives, std::span<const double> negatives);

struct LinkPredictionMetrics {
  double auc = 0.0;
  double mean_rank = 0.0;  // 1 = every positive beats all of its negatives
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Scores held-out triples against `negatives_per_positive` corruptions
/// each. `message_graph` supplies the encoder's neighbourhoods and must not
/// contain the held-out triples; corruptions avoid `known` (or the message
/// graph plus the held-out set when `known` is null).
LinkPredictionMetrics evaluate_link_prediction(const GraphAutoencoder& model, const KnowledgeGraph& message_graph,
                                               std::span<const Triple> held_out, std::size_t negatives_per_positive,
                                               Rng& rng, const TripleSet* known = nullptr,
                                               const CorruptionWeights& weights = {});

/// Probabilities for triples of `graph` under the trained model.
std::vector<double> score_triples(const GraphAutoencoder& model, const KnowledgeGraph& message_graph,
                                  std::span<const Triple> triples);

/// True when the mean loss over the second half of the final `fraction` of
/// epochs is no higher than over the first half.
bool tail_loss_non_increasing(std::span<const double> history, double fraction = 0.1);

}  // namespace kcse
