#include "kcse/kg_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "kcse/adam.hpp"
#include "kcse/error.hpp"
#include "kcse/rng.hpp"

namespace kcse {

GraphAutoencoder GraphAutoencoder::initialize(const KnowledgeGraph& graph, const RgcnDims& dims, std::uint64_t seed) {
  GraphAutoencoder model;
  model.encoder = RgcnEncoder::for_graph(graph, dims);
  model.decoder = RelationDiagonals(graph.relations(), dims.output);
  Rng rng = Rng::stream(seed, "init");
  model.encoder.init_params(model.params, rng);
  model.decoder.init_params(model.params, rng);
  return model;
}

GraphAutoencoder GraphAutoencoder::from_params(const KnowledgeGraph& graph, ParamStore params) {
  const auto shape = [&](std::string_view name) -> const Matrix& {
    if (!params.contains(name)) throw DimensionError(fmt::format("checkpoint lacks parameter '{}'", name));
    return params.value(name);
  };
  RgcnDims dims;
  const Matrix& g = shape(RgcnEncoder::kFeatureTable);
  if (g.rows() != graph.num_concepts()) {
    throw DimensionError(fmt::format("checkpoint feature table has {} rows but the graph has {} concepts", g.rows(),
                                     graph.num_concepts()));
  }
  dims.input = g.cols();
  dims.hidden = shape("layer1.W0").rows();
  dims.output = shape("layer2.W0").rows();
  if (params.contains("layer1.bases")) dims.num_bases = params.value("layer1.bases").rows();

  // Relation order: the graph's first, then any extra checkpoint relations.
  constexpr std::string_view prefix = "distmult.R.";
  Vocabulary relations = graph.relations();
  for (const auto& name : params.names()) {
    if (name.starts_with(prefix)) relations.intern(std::string_view(name).substr(prefix.size()));
  }

  GraphAutoencoder model;
  model.encoder = RgcnEncoder(graph.concepts(), relations, dims);
  model.decoder = RelationDiagonals(relations, dims.output);
  model.encoder.check_params(params);
  model.decoder.check_params(params);
  model.params = std::move(params);
  return model;
}

void KgTrainConfig::validate() const {
  const auto& c = corruption;
  if (c.head < 0 || c.tail < 0 || c.relation < 0 || std::abs(c.head + c.tail + c.relation - 1.0) > 1e-9) {
    throw UsageError(fmt::format("corruption probabilities must be non-negative and sum to 1 (got {}, {}, {})",
                                 c.head, c.tail, c.relation));
  }
  if (!(edge_dropout >= 0.0 && edge_dropout < 1.0)) throw UsageError("edge dropout must lie in [0, 1)");
  if (!(validation_fraction >= 0.0 && validation_fraction < 0.5)) {
    throw UsageError("validation fraction must lie in [0, 0.5)");
  }
  if (!(learning_rate >= 0.0)) throw UsageError("learning rate must be non-negative");
  if (epochs == 0) throw UsageError("epochs must be positive");
}

std::size_t TripleSet::Hash::operator()(const Key& k) const {
  std::uint64_t h = std::get<0>(k);
  h = h * 0x9e3779b97f4a7c15ULL ^ std::get<1>(k);
  h = h * 0x9e3779b97f4a7c15ULL ^ std::get<2>(k);
  return static_cast<std::size_t>(h ^ (h >> 31));
}

TripleSet::TripleSet(std::span<const Triple> triples) {
  set_.reserve(triples.size());
  for (const auto& t : triples) insert(t);
}

std::vector<Triple> sample_negatives(const KnowledgeGraph& graph, std::span<const Triple> positives,
                                     const CorruptionWeights& weights, Rng& rng, const TripleSet& known,
                                     std::size_t* unresolved) {
  if (graph.num_concepts() == 0 || graph.num_relations() == 0) throw DataError("cannot corrupt triples of an empty graph");
  constexpr int kMaxAttempts = 100;
  const auto concepts = static_cast<std::uint64_t>(graph.num_concepts());
  const auto relations = static_cast<std::uint64_t>(graph.num_relations());
  std::vector<Triple> out;
  out.reserve(positives.size());
  std::size_t failures = 0;
  for (const auto& pos : positives) {
    Triple neg = pos;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      neg = pos;
      const double u = rng.uniform();
      if (u < weights.head) {
        neg.head = ConceptId{static_cast<std::uint32_t>(rng.uniform_index(concepts))};
      } else if (u < weights.head + weights.tail) {
        neg.tail = ConceptId{static_cast<std::uint32_t>(rng.uniform_index(concepts))};
      } else {
        neg.relation = RelationId{static_cast<std::uint32_t>(rng.uniform_index(relations))};
      }
      ok = !known.contains(neg);
    }
    if (!ok) ++failures;
    neg.weight = 1.0;
    out.push_back(neg);
  }
  if (failures > 0) {
    spdlog::warn("{} negative sample(s) still collide with known edges after {} attempts", failures, kMaxAttempts);
  }
  if (unresolved) *unresolved = failures;
  return out;
}

std::vector<Triple> sample_negatives(const KnowledgeGraph& graph, std::span<const Triple> positives,
                                     const CorruptionWeights& weights, Rng& rng) {
  const TripleSet known(graph.edges());
  return sample_negatives(graph, positives, weights, rng, known);
}

double kg_loss_from_logits(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size()) {
    throw DimensionError(fmt::format("kg_loss: {} scores vs {} labels", logits.size(), labels.size()));
  }
  if (logits.empty()) throw DimensionError("kg_loss: no scores");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += softplus - labels[i] * z;
  }
  return total / static_cast<double>(logits.size());
}

double kg_loss(std::span<const double> scores, std::span<const double> labels) {
  std::vector<double> logits;
  logits.reserve(scores.size());
  for (double s : scores) {
    if (!(s > 0.0 && s < 1.0)) throw DataError(fmt::format("kg_loss: score {} outside (0, 1)", s));
    logits.push_back(std::log(s) - std::log1p(-s));
  }
  return kg_loss_from_logits(logits, labels);
}

KnowledgeGraph with_edges(const KnowledgeGraph& like, std::span<const Triple> edges) {
  GraphBuilder builder;
  for (const auto& name : like.concepts().names()) builder.add_concept(name);
  for (const auto& name : like.relations().names()) builder.add_relation(name);
  for (const auto& e : edges) builder.add_edge(e.head, e.relation, e.tail, e.weight);
  return std::move(builder).build();
}

namespace {

struct TripleIndex {
  std::vector<std::uint32_t> heads, relations, tails;
  std::vector<double> labels;

  void add(const Triple& t, double label) {
    heads.push_back(t.head.value);
    relations.push_back(t.relation.value);
    tails.push_back(t.tail.value);
    labels.push_back(label);
  }
};

// Graph relation ids -> encoder/decoder relation ids.
std::vector<std::uint32_t> relation_map(const KnowledgeGraph& graph, const Vocabulary& model_relations) {
  std::vector<std::uint32_t> map;
  for (const auto& name : graph.relations().names()) {
    const auto id = model_relations.find(name);
    if (!id) throw DataError(fmt::format("relation '{}' is unknown to the model", name));
    map.push_back(*id);
  }
  return map;
}

Var batch_loss(const GraphAutoencoder& model, ParamStore& params, Tape& tape, const RelationalAdjacency& adj,
               const TripleIndex& batch) {
  const Var h = model.encoder.forward(tape, params, adj);
  const Var d = model.decoder.stacked(tape, params);
  const Var logits = distmult_logits(h, d, batch.heads, batch.relations, batch.tails);
  return bce_with_logits(logits, batch.labels);
}

}  // namespace

std::vector<double> score_triples(const GraphAutoencoder& model, const KnowledgeGraph& message_graph,
                                  std::span<const Triple> triples) {
  const auto rel_map = relation_map(message_graph, model.decoder.relations());
  const Matrix h = encode(message_graph, model.encoder, model.params);
  std::vector<std::span<const double>> diag;
  for (const auto& name : model.decoder.relations().names()) {
    diag.push_back(model.params.value(model.decoder.param_name(name)).row(0));
  }
  std::vector<double> scores;
  scores.reserve(triples.size());
  for (const auto& t : triples) {
    scores.push_back(score_triple(h.row(t.head.value), diag[rel_map.at(t.relation.value)], h.row(t.tail.value)));
  }
  return scores;
}

double auc_score(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw DataError("AUC needs at least one positive and one negative");
  // Mann-Whitney U over the pooled ranking with midranks for ties.
  std::vector<std::pair<double, bool>> pooled;
  pooled.reserve(positives.size() + negatives.size());
  for (double s : positives) pooled.emplace_back(s, true);
  for (double s : negatives) pooled.emplace_back(s, false);
  std::sort(pooled.begin(), pooled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) {
      pos_in_group += pooled[j].second ? 1 : 0;
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

LinkPredictionMetrics evaluate_link_prediction(const GraphAutoencoder& model, const KnowledgeGraph& message_graph,
                                               std::span<const Triple> held_out, std::size_t negatives_per_positive,
                                               Rng& rng, const TripleSet* known, const CorruptionWeights& weights) {
  if (held_out.empty()) throw DataError("link prediction needs at least one held-out triple");
  if (negatives_per_positive == 0) throw UsageError("negatives_per_positive must be positive");
  const TripleSet message_set(message_graph.edges());
  for (const auto& t : held_out) {
    if (message_set.contains(t)) throw DataError("held-out triple is also a message-passing edge");
  }
  TripleSet fallback;
  if (!known) {
    fallback = message_set;
    for (const auto& t : held_out) fallback.insert(t);
    known = &fallback;
  }

  std::vector<Triple> negatives;
  negatives.reserve(held_out.size() * negatives_per_positive);
  for (std::size_t k = 0; k < negatives_per_positive; ++k) {
    auto batch = sample_negatives(message_graph, held_out, weights, rng, *known);
    negatives.insert(negatives.end(), batch.begin(), batch.end());
  }
  const auto pos_scores = score_triples(model, message_graph, held_out);
  const auto neg_scores = score_triples(model, message_graph, negatives);

  LinkPredictionMetrics m;
  m.positives = pos_scores.size();
  m.negatives = neg_scores.size();
  m.auc = auc_score(pos_scores, neg_scores);
  double rank_total = 0.0;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    double rank = 1.0;
    for (std::size_t k = 0; k < negatives_per_positive; ++k) {
      const double s = neg_scores[k * held_out.size() + i];
      if (s > pos_scores[i]) rank += 1.0;
      else if (s == pos_scores[i]) rank += 0.5;
    }
    rank_total += rank;
  }
  m.mean_rank = rank_total / static_cast<double>(held_out.size());
  return m;
}

bool tail_loss_non_increasing(std::span<const double> history, double fraction) {
  const auto window = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(fraction * history.size())));
  if (history.size() < window) return true;
  const auto tail = history.subspan(history.size() - window);
  const std::size_t half = window / 2;
  const double first = std::accumulate(tail.begin(), tail.begin() + half, 0.0) / static_cast<double>(half);
  const double second =
      std::accumulate(tail.begin() + half, tail.end(), 0.0) / static_cast<double>(window - half);
  return second <= first;
}

KgTrainResult train_kg(const KnowledgeGraph& graph, const KgTrainConfig& config) {
  config.validate();
  if (graph.num_edges() == 0) throw DataError("cannot train on a graph without edges");

  KgTrainResult result;
  result.model = GraphAutoencoder::initialize(graph, config.dims, config.seed);
  auto& model = result.model;

  Rng split_rng = Rng::stream(config.seed, "split");
  Rng dropout_rng = Rng::stream(config.seed, "dropout");
  Rng negative_rng = Rng::stream(config.seed, "negatives");
  Rng validation_rng = Rng::stream(config.seed, "validation");

  std::vector<Triple> train_edges(graph.edges().begin(), graph.edges().end());
  if (config.validation_fraction > 0.0 && train_edges.size() >= 2) {
    std::vector<std::size_t> order(train_edges.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[split_rng.uniform_index(i)]);
    const auto n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(order.size()))), 1,
        order.size() - 1);
    std::vector<char> is_val(order.size(), 0);
    for (std::size_t k = 0; k < n_val; ++k) is_val[order[k]] = 1;
    std::vector<Triple> kept;
    for (std::size_t i = 0; i < train_edges.size(); ++i) {
      (is_val[i] ? result.validation_edges : kept).push_back(train_edges[i]);
    }
    train_edges = std::move(kept);
  }

  const TripleSet known(graph.edges());
  const KnowledgeGraph full_train_graph = with_edges(graph, train_edges);

  std::vector<Triple> validation_negatives;
  if (!result.validation_edges.empty()) {
    validation_negatives =
        sample_negatives(graph, result.validation_edges, config.corruption, validation_rng, known);
  }

  std::vector<Triple> fixed_negatives;
  if (!config.resample_negatives) {
    fixed_negatives = sample_negatives(graph, train_edges, config.corruption, negative_rng, known);
  }

  AdamState adam(AdamConfig{.learning_rate = config.learning_rate});
  ParamStore best_params;
  double best_auc = -1.0;
  std::vector<std::size_t> order(train_edges.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<Triple> positives;
    std::vector<Triple> message;
    if (config.edge_dropout > 0.0) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[dropout_rng.uniform_index(i)]);
      const auto n_drop = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(config.edge_dropout * static_cast<double>(order.size()))), 1,
          order.size());
      std::vector<char> dropped(order.size(), 0);
      for (std::size_t k = 0; k < n_drop; ++k) dropped[order[k]] = 1;
      for (std::size_t i = 0; i < train_edges.size(); ++i) {
        (dropped[i] ? positives : message).push_back(train_edges[i]);
      }
    } else {
      positives = train_edges;
      message = train_edges;
    }

    const KnowledgeGraph message_graph = with_edges(graph, message);
    const RelationalAdjacency adj = model.encoder.adjacency(message_graph);

    std::vector<Triple> negatives;
    if (config.resample_negatives) {
      std::size_t unresolved = 0;
      negatives = sample_negatives(graph, positives, config.corruption, negative_rng, known, &unresolved);
      result.unresolved_negatives += unresolved;
    } else if (config.edge_dropout > 0.0) {
      // Fixed negatives are paired with positives by position in train_edges.
      for (std::size_t i = 0, p = 0; i < train_edges.size() && p < positives.size(); ++i) {
        if (p < positives.size() && train_edges[i].head == positives[p].head &&
            train_edges[i].relation == positives[p].relation && train_edges[i].tail == positives[p].tail) {
          negatives.push_back(fixed_negatives[i]);
          ++p;
        }
      }
    } else {
      negatives = fixed_negatives;
    }

    const std::size_t batch = config.batch_size == 0 ? positives.size() : config.batch_size;
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < positives.size(); start += batch) {
      const std::size_t end = std::min(positives.size(), start + batch);
      TripleIndex index;
      for (std::size_t i = start; i < end; ++i) index.add(positives[i], 1.0);
      for (std::size_t i = start; i < end; ++i) index.add(negatives[i], 0.0);
      Tape tape;
      const Var loss = batch_loss(model, model.params, tape, adj, index);
      tape.backward(loss);
      adam_step(adam, model.params);
      epoch_loss += loss.scalar();
      ++batches;
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(batches));

    if (!result.validation_edges.empty()) {
      const auto pos = score_triples(model, full_train_graph, result.validation_edges);
      const auto neg = score_triples(model, full_train_graph, validation_negatives);
      const double auc = auc_score(pos, neg);
      result.validation_auc.push_back(auc);
      if (auc > best_auc) {
        best_auc = auc;
        best_params = model.params;
        result.best_epoch = epoch;
      } else if (epoch - result.best_epoch >= config.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (!result.validation_edges.empty()) model.params = std::move(best_params);
  model.params.zero_grad();
  return result;
}

}  // namespace kcse
