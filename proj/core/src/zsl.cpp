#include "kcse/zsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "kcse/adam.hpp"
#include "kcse/error.hpp"
#include "kcse/parallel.hpp"
#include "kcse/rng.hpp"
#include "kcse/text.hpp"

namespace kcse {

ZslVariant parse_zsl_variant(std::string_view tag) {
  if (tag == "dezsl") return ZslVariant::dezsl;
  if (tag == "rn") return ZslVariant::rn;
  throw UsageError(fmt::format("unknown ZSL variant '{}' (expected dezsl or rn)", tag));
}

std::string_view to_string(ZslVariant variant) { return variant == ZslVariant::dezsl ? "dezsl" : "rn"; }

std::size_t ZslArchitecture::secondary_width() const {
  return variant == ZslVariant::dezsl ? visual_dim : fusion_secondary_width;
}

std::size_t ZslArchitecture::class_input_dim() const {
  return fused() ? fusion_semantic_width + secondary_width() : semantic_dim;
}

void ZslArchitecture::validate() const {
  if (visual_dim == 0 || semantic_dim == 0) throw UsageError("visual and semantic dimensions must be positive");
  if (hidden_width == 0) throw UsageError("hidden width must be positive");
  if (fused() && (fusion_semantic_width == 0 || secondary_width() == 0)) {
    throw UsageError("fusion widths must be positive");
  }
  if (variant == ZslVariant::rn && relation_width == 0) throw UsageError("relation width must be positive");
}

ClassInputs ClassInputs::select(std::span<const std::string> subset) const {
  ClassInputs out;
  out.primary = Matrix(subset.size(), primary.cols());
  if (secondary.size() > 0) out.secondary = Matrix(subset.size(), secondary.cols());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const auto it = std::find(names.begin(), names.end(), subset[k]);
    if (it == names.end()) throw DataError(fmt::format("class '{}' has no class inputs", subset[k]));
    const auto i = static_cast<std::size_t>(it - names.begin());
    out.names.push_back(subset[k]);
    std::copy(primary.row(i).begin(), primary.row(i).end(), out.primary.row(k).begin());
    if (secondary.size() > 0) std::copy(secondary.row(i).begin(), secondary.row(i).end(), out.secondary.row(k).begin());
  }
  return out;
}

ClassInputs assemble_class_inputs(const SemanticSources& sources, std::span<const std::string> classes) {
  std::vector<std::pair<const EmbeddingTable*, std::string_view>> tables;
  if (sources.attributes) tables.emplace_back(sources.attributes, "attributes");
  if (sources.word_vectors) tables.emplace_back(sources.word_vectors, "word vectors");
  if (sources.cse) tables.emplace_back(sources.cse, "commonsense embeddings");
  if (tables.empty()) throw UsageError("no semantic embedding source configured");

  std::vector<std::string> keys;
  for (const auto& c : classes) keys.push_back(normalize_concept(c));
  std::vector<Matrix> blocks;
  for (const auto& [table, what] : tables) blocks.push_back(table->select(keys, what));

  const auto hconcat = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
      std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
      std::copy(b.row(r).begin(), b.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
  };

  ClassInputs inputs;
  inputs.names = keys;
  switch (blocks.size()) {
    case 1:
      inputs.primary = std::move(blocks[0]);
      break;
    case 2:
      inputs.primary = std::move(blocks[0]);
      inputs.secondary = std::move(blocks[1]);
      break;
    default:
      inputs.primary = hconcat(blocks[0], blocks[1]);
      inputs.secondary = std::move(blocks[2]);
      break;
  }
  return inputs;
}

namespace {

void add_fc(ParamStore& params, std::string_view prefix, std::size_t out, std::size_t in, Rng& rng) {
  params.add(fmt::format("{}.W", prefix), xavier_uniform(out, in, rng));
  params.add(fmt::format("{}.b", prefix), Matrix(1, out));
}

Var fc(Tape& tape, ParamStore& params, std::string_view prefix, Var x, Activation act = Activation::relu) {
  return fc_forward(tape.param(params, fmt::format("{}.W", prefix)), tape.param(params, fmt::format("{}.b", prefix)),
                    x, act);
}

const Matrix& shape_of(const ParamStore& params, std::string_view name) {
  if (!params.contains(name)) throw DimensionError(fmt::format("ZSL checkpoint lacks parameter '{}'", name));
  return params.value(name);
}

ParamStore& mutable_params(const ZslModel& model) {
  // Forward-only use: tapes read parameter values and never write gradients.
  return const_cast<ParamStore&>(model.params);
}

}  // namespace

ZslModel ZslModel::initialize(const ZslArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  ZslModel model;
  model.arch = arch;
  Rng rng = Rng::stream(seed, "init");
  auto& p = model.params;
  if (arch.fused()) {
    add_fc(p, "fuse.e", arch.fusion_semantic_width, arch.semantic_dim, rng);
    add_fc(p, "fuse.f", arch.secondary_width(), arch.secondary_dim, rng);
  }
  const std::size_t in = arch.class_input_dim();
  if (arch.variant == ZslVariant::dezsl) {
    add_fc(p, "dezsl.a", arch.hidden_width, in, rng);
    add_fc(p, "dezsl.b", arch.visual_dim, arch.hidden_width, rng);
  } else {
    add_fc(p, "rn.c", arch.hidden_width, in, rng);
    // FC_d over [theta(s), f] stored as its two column blocks.
    const Matrix w = xavier_uniform(arch.relation_width, arch.hidden_width + arch.visual_dim, rng);
    Matrix w_sem(arch.relation_width, arch.hidden_width), w_vis(arch.relation_width, arch.visual_dim);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < arch.hidden_width; ++c) w_sem(r, c) = w(r, c);
      for (std::size_t c = 0; c < arch.visual_dim; ++c) w_vis(r, c) = w(r, arch.hidden_width + c);
    }
    p.add("rn.d.W_sem", std::move(w_sem));
    p.add("rn.d.W_vis", std::move(w_vis));
    p.add("rn.d.b", Matrix(1, arch.relation_width));
    add_fc(p, "rn.out", 1, arch.relation_width, rng);
  }
  return model;
}

namespace {

// Preactivations of one FC layer over `x`; dead units get a bias shift.
Matrix revive_layer(ParamStore& params, std::string_view prefix, const Matrix& x) {
  const Matrix& w = params.value(fmt::format("{}.W", prefix));
  Matrix& b = params.value(fmt::format("{}.b", prefix));
  Matrix z = matmul_bt(x, w);
  for (std::size_t k = 0; k < z.cols(); ++k) {
    double hi = -std::numeric_limits<double>::infinity(), mean = 0.0;
    for (std::size_t j = 0; j < z.rows(); ++j) {
      const double v = z(j, k) + b(0, k);
      hi = std::max(hi, v);
      mean += v / static_cast<double>(z.rows());
    }
    if (hi > 0.0) continue;
    b(0, k) -= mean;
    if (hi - mean <= 0.0) b(0, k) += 1e-3;  // no spread across classes
  }
  for (std::size_t j = 0; j < z.rows(); ++j)
    for (std::size_t k = 0; k < z.cols(); ++k) z(j, k) = std::max(0.0, z(j, k) + b(0, k));
  return z;
}

}  // namespace

ZslModel ZslModel::initialize(const ZslArchitecture& arch, std::uint64_t seed, const ClassInputs& calibration) {
  ZslModel model = initialize(arch, seed);
  if (calibration.size() == 0) return model;
  auto& p = model.params;
  Matrix side = calibration.primary;
  if (arch.fused()) {
    revive_layer(p, "fuse.e", calibration.primary);
    revive_layer(p, "fuse.f", calibration.secondary);
    side = class_side(model, calibration);
  }
  if (side.cols() != arch.class_input_dim()) {
    throw DimensionError(fmt::format("model expects {}-dimensional class inputs, got {}", arch.class_input_dim(),
                                     side.cols()));
  }
  if (arch.variant == ZslVariant::dezsl) {
    revive_layer(p, "dezsl.b", revive_layer(p, "dezsl.a", side));
  } else {
    revive_layer(p, "rn.c", side);
  }
  return model;
}

ZslModel ZslModel::from_params(ParamStore params) {
  ZslArchitecture arch;
  const bool dezsl = params.contains("dezsl.a.W");
  if (!dezsl && !params.contains("rn.c.W")) {
    throw DimensionError("parameters describe neither a DeZSL nor a relation-network model");
  }
  arch.variant = dezsl ? ZslVariant::dezsl : ZslVariant::rn;
  const Matrix& first = shape_of(params, dezsl ? "dezsl.a.W" : "rn.c.W");
  arch.hidden_width = first.rows();
  if (params.contains("fuse.e.W")) {
    const Matrix& e = shape_of(params, "fuse.e.W");
    const Matrix& f = shape_of(params, "fuse.f.W");
    arch.semantic_dim = e.cols();
    arch.fusion_semantic_width = e.rows();
    arch.secondary_dim = f.cols();
    arch.fusion_secondary_width = f.rows();
  } else {
    arch.semantic_dim = first.cols();
  }
  if (dezsl) {
    arch.visual_dim = shape_of(params, "dezsl.b.W").rows();
  } else {
    const Matrix& vis = shape_of(params, "rn.d.W_vis");
    arch.visual_dim = vis.cols();
    arch.relation_width = vis.rows();
  }
  // Re-derive every expected shape and compare.
  arch.validate();
  const ZslModel expected = initialize(arch, 0);
  for (const auto& [name, p] : expected.params) {
    const Matrix& have = shape_of(params, name);
    if (!have.same_shape(p.value)) {
      throw DimensionError(fmt::format("ZSL parameter '{}' is {}x{}, expected {}x{}", name, have.rows(), have.cols(),
                                       p.value.rows(), p.value.cols()));
    }
  }
  if (params.size() != expected.params.size()) {
    throw DimensionError(fmt::format("ZSL checkpoint has {} parameters, expected {}", params.size(),
                                     expected.params.size()));
  }
  ZslModel model;
  model.arch = arch;
  model.params = std::move(params);
  return model;
}

Var zsl_class_side(const ZslModel& model, Tape& tape, ParamStore& params, const ClassInputs& classes) {
  const auto& arch = model.arch;
  if (classes.primary.cols() != arch.semantic_dim) {
    throw DimensionError(fmt::format("model expects {}-dimensional semantic vectors, got {}", arch.semantic_dim,
                                     classes.primary.cols()));
  }
  const Var primary = tape.constant(classes.primary);
  if (!arch.fused()) {
    if (classes.secondary.size() > 0) {
      throw DimensionError("model has no fusion layers but a secondary embedding was supplied");
    }
    return primary;
  }
  if (classes.secondary.cols() != arch.secondary_dim || classes.secondary.rows() != classes.primary.rows()) {
    throw DimensionError(fmt::format("model fuses {}-dimensional secondary vectors, got {}x{}", arch.secondary_dim,
                                     classes.secondary.rows(), classes.secondary.cols()));
  }
  const Var e = fc(tape, params, "fuse.e", primary);
  const Var f = fc(tape, params, "fuse.f", tape.constant(classes.secondary));
  return concat_cols(e, f);
}

Var dezsl_prototypes(const ZslModel& model, Tape& tape, ParamStore& params, Var class_side) {
  if (model.arch.variant != ZslVariant::dezsl) throw UsageError("dezsl_prototypes on a relation-network model");
  return fc(tape, params, "dezsl.b", fc(tape, params, "dezsl.a", class_side));
}

Var rn_pair_logits(const ZslModel& model, Tape& tape, ParamStore& params, Var class_side, Var features) {
  if (model.arch.variant != ZslVariant::rn) throw UsageError("rn_pair_logits on a DeZSL model");
  if (features.cols() != model.arch.visual_dim) {
    throw DimensionError(fmt::format("model expects {}-dimensional visual features, got {}", model.arch.visual_dim,
                                     features.cols()));
  }
  const Var theta = fc(tape, params, "rn.c", class_side);
  const Var sem = matmul_bt(theta, tape.param(params, "rn.d.W_sem"));
  const Var vis = matmul_bt(features, tape.param(params, "rn.d.W_vis"));
  const Var gamma = relu(add_row(pairwise_add(sem, vis), tape.param(params, "rn.d.b")));
  return fc(tape, params, "rn.out", gamma, Activation::none);
}

Var dezsl_loss(Var prototypes, Var features, std::span<const std::uint32_t> labels) {
  if (labels.empty()) throw DataError("dezsl_loss on an empty batch");
  if (features.rows() != labels.size()) {
    throw DimensionError(fmt::format("{} feature rows vs {} labels", features.rows(), labels.size()));
  }
  const Var residual = sub(features, gather_rows(prototypes, labels));
  return scale(sum(square(residual)), 1.0 / static_cast<double>(labels.size()));
}

Var rn_loss(Var pair_logits, std::size_t num_classes, std::span<const std::uint32_t> labels) {
  if (labels.empty()) throw DataError("rn_loss on an empty batch");
  if (pair_logits.rows() != labels.size() * num_classes) {
    throw DimensionError(fmt::format("{} pair scores for {} images and {} classes", pair_logits.rows(), labels.size(),
                                     num_classes));
  }
  Matrix target(pair_logits.rows(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) target(i * num_classes + labels[i], 0) = 1.0;
  const Var residual = sub(sigmoid(pair_logits), pair_logits.tape().constant(std::move(target)));
  return scale(sum(square(residual)), 1.0 / static_cast<double>(labels.size()));
}

Var zsl_objective(const ZslModel& model, Tape& tape, ParamStore& params, const ClassInputs& classes,
                  const Matrix& features, std::span<const std::uint32_t> labels) {
  const Var side = zsl_class_side(model, tape, params, classes);
  const Var f = tape.constant(features);
  if (model.arch.variant == ZslVariant::dezsl) {
    if (features.cols() != model.arch.visual_dim) {
      throw DimensionError(fmt::format("model expects {}-dimensional visual features, got {}", model.arch.visual_dim,
                                       features.cols()));
    }
    return dezsl_loss(dezsl_prototypes(model, tape, params, side), f, labels);
  }
  return rn_loss(rn_pair_logits(model, tape, params, side, f), classes.size(), labels);
}

Matrix fuse(const ZslModel& model, const Matrix& primary, const Matrix& secondary) {
  if (!model.arch.fused()) throw UsageError("model has no fusion layers");
  ClassInputs inputs;
  inputs.names.resize(primary.rows());
  inputs.primary = primary;
  inputs.secondary = secondary;
  return class_side(model, inputs);
}

Matrix class_side(const ZslModel& model, const ClassInputs& classes) {
  Tape tape;
  return zsl_class_side(model, tape, mutable_params(model), classes).value();
}

Matrix dezsl_forward(const ZslModel& model, const Matrix& class_side) {
  Tape tape;
  return dezsl_prototypes(model, tape, mutable_params(model), tape.constant(class_side)).value();
}

Matrix rn_score(const ZslModel& model, const Matrix& class_side, const Matrix& features) {
  Tape tape;
  const Var logits =
      rn_pair_logits(model, tape, mutable_params(model), tape.constant(class_side), tape.constant(features));
  const Matrix& z = sigmoid(logits).value();
  return Matrix(features.rows(), class_side.rows(), std::vector<double>(z.data().begin(), z.data().end()));
}

double dezsl_loss(const Matrix& features, const Matrix& prototypes_per_image) {
  if (features.rows() == 0) throw DataError("dezsl_loss on an empty batch");
  if (!features.same_shape(prototypes_per_image)) throw DimensionError("dezsl_loss: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double d = features.data()[i] - prototypes_per_image.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(features.rows());
}

double rn_loss(const Matrix& scores, std::span<const std::uint32_t> labels) {
  if (scores.rows() == 0) throw DataError("rn_loss on an empty batch");
  if (scores.rows() != labels.size()) throw DimensionError("rn_loss: one label per score row required");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (labels[i] >= scores.cols()) throw DataError(fmt::format("label {} out of range", labels[i]));
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      const double d = scores(i, j) - (j == labels[i] ? 1.0 : 0.0);
      total += d * d;
    }
  }
  return total / static_cast<double>(scores.rows());
}

std::vector<std::uint32_t> nearest_prototype(const Matrix& prototypes, const Matrix& features, std::size_t threads) {
  if (prototypes.rows() == 0) throw DataError("no candidate classes");
  if (prototypes.cols() != features.cols()) {
    throw DimensionError(fmt::format("prototypes are {}-dimensional, features {}", prototypes.cols(), features.cols()));
  }
  std::vector<std::uint32_t> out(features.rows());
  parallel_for(features.rows(), threads, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    const auto f = features.row(i);
    for (std::size_t j = 0; j < prototypes.rows(); ++j) {
      const auto p = prototypes.row(j);
      double d = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) d += (f[k] - p[k]) * (f[k] - p[k]);
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(j);
      }
    }
    out[i] = arg;
  });
  return out;
}

std::vector<std::uint32_t> argmax_rows(const Matrix& scores) {
  if (scores.cols() == 0) throw DataError("no candidate classes");
  std::vector<std::uint32_t> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    out[i] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<std::uint32_t> zsl_predict(const ZslModel& model, const ClassInputs& candidates, const Matrix& features,
                                       std::size_t threads) {
  if (candidates.size() == 0) throw DataError("no candidate classes");
  if (features.cols() != model.arch.visual_dim) {
    throw DimensionError(fmt::format("model expects {}-dimensional visual features, got {}", model.arch.visual_dim,
                                     features.cols()));
  }
  const Matrix side = class_side(model, candidates);
  if (model.arch.variant == ZslVariant::dezsl) return nearest_prototype(dezsl_forward(model, side), features, threads);
  return argmax_rows(rn_score(model, side, features));
}

double top1_accuracy(std::span<const std::string> predicted, std::span<const std::string> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError(fmt::format("{} predictions vs {} labels", predicted.size(), truth.size()));
  }
  if (predicted.empty()) throw DataError("top-1 accuracy of an empty prediction list");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

void ZslTrainConfig::validate() const {
  if (epochs == 0) throw UsageError("epochs must be positive");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (!(learning_rate >= 0.0)) throw UsageError("learning rate must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 0.5)) {
    throw UsageError("validation fraction must lie in [0, 0.5)");
  }
}

namespace {

struct Batch {
  Matrix features;
  std::vector<std::uint32_t> labels;
};

Batch gather(const VisualSet& set, std::span<const std::uint32_t> labels, std::span<const std::size_t> rows) {
  Batch b;
  b.features = Matrix(rows.size(), set.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = set.features.row(rows[k]);
    std::copy(src.begin(), src.end(), b.features.row(k).begin());
    b.labels.push_back(labels[rows[k]]);
  }
  return b;
}

}  // namespace

ZslTrainResult train_zsl(const ZslArchitecture& arch, const ClassInputs& seen, const VisualSet& train,
                         const ZslTrainConfig& config) {
  config.validate();
  if (train.size() == 0) throw DataError("no training images");
  if (train.dim() != arch.visual_dim) {
    throw DimensionError(fmt::format("visual features are {}-dimensional, model expects {}", train.dim(),
                                     arch.visual_dim));
  }
  std::unordered_map<std::string, std::uint32_t> class_index;
  for (std::size_t j = 0; j < seen.size(); ++j) class_index.emplace(seen.names[j], static_cast<std::uint32_t>(j));
  std::vector<std::uint32_t> labels;
  labels.reserve(train.size());
  for (const auto& label : train.labels) {
    const auto it = class_index.find(label);
    if (it == class_index.end()) throw DataError(fmt::format("training image labelled '{}', not a seen class", label));
    labels.push_back(it->second);
  }

  ZslTrainResult result;
  result.model = ZslModel::initialize(arch, config.seed, seen);
  auto& model = result.model;

  // Stratified validation split.
  Rng split_rng = Rng::stream(config.seed, "validation");
  std::vector<std::vector<std::size_t>> by_class(seen.size());
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> train_rows, val_rows;
  for (auto& rows : by_class) {
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[split_rng.uniform_index(i)]);
    std::size_t n_val = 0;
    if (config.validation_fraction > 0.0 && rows.size() >= 2) {
      n_val = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(rows.size()))));
    }
    val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  const Batch validation = gather(train, labels, val_rows);

  Rng batch_rng = Rng::stream(config.seed, "batches");
  AdamState adam(AdamConfig{.learning_rate = config.learning_rate});
  ParamStore best = model.params;
  double best_val = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = train_rows.size(); i > 1; --i) std::swap(train_rows[i - 1], train_rows[batch_rng.uniform_index(i)]);
    double total = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
      const std::size_t end = std::min(train_rows.size(), start + config.batch_size);
      const Batch batch = gather(train, labels, std::span(train_rows).subspan(start, end - start));
      Tape tape;
      const Var loss = zsl_objective(model, tape, model.params, seen, batch.features, batch.labels);
      tape.backward(loss);
      adam_step(adam, model.params);
      total += loss.scalar() * static_cast<double>(end - start);
    }
    result.loss_history.push_back(total / static_cast<double>(train_rows.size()));

    if (!val_rows.empty()) {
      Tape tape;
      const double val = zsl_objective(model, tape, model.params, seen, validation.features, validation.labels).scalar();
      result.validation_loss.push_back(val);
      if (val < best_val) {
        best_val = val;
        best = model.params;
        result.best_epoch = epoch;
      } else if (epoch - result.best_epoch >= config.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (!val_rows.empty()) model.params = std::move(best);
  model.params.zero_grad();
  return result;
}

}  // namespace kcse
