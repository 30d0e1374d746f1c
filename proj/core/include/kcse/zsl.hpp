#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kcse/autodiff.hpp"
#include "kcse/dataset.hpp"
#include "kcse/embedding_table.hpp"
#include "kcse/param_store.hpp"

namespace kcse {

enum class ZslVariant { dezsl, rn };

ZslVariant parse_zsl_variant(std::string_view tag);
std::string_view to_string(ZslVariant variant);

/// Layer widths of a ZSL model.
///
/// The class-side input is either the primary semantic vector alone
/// (`secondary_dim == 0`) or the fusion relu(FC_e s) ++ relu(FC_f c) of a
/// primary vector s and a secondary vector c.
struct ZslArchitecture {
  ZslVariant variant = ZslVariant::dezsl;
  std::size_t visual_dim = 0;     // m
  std::size_t semantic_dim = 0;   // primary class-vector width
  std::size_t secondary_dim = 0;  // 0 disables fusion
  std::size_t fusion_semantic_width = 1024;
  /// Ignored for DeZSL, where the secondary branch is as wide as the
  /// visual features.
  std::size_t fusion_secondary_width = 1024;
  std::size_t hidden_width = 1024;    // FC_a (DeZSL) or FC_c (RN)
  std::size_t relation_width = 1024;  // FC_d (RN only)

  bool fused() const { return secondary_dim > 0; }
  std::size_t secondary_width() const;
  /// Width of the class-side vector fed to the first non-fusion layer.
  std::size_t class_input_dim() const;
  /// Throws UsageError on zero widths.
  void validate() const;
};

/// Per-class vectors, rows aligned with `names`.
struct ClassInputs {
  std::vector<std::string> names;
  Matrix primary;
  Matrix secondary;  // empty without fusion

  std::size_t size() const { return names.size(); }
  /// The rows of `names` (which must all be present), same order.
  ClassInputs select(std::span<const std::string> subset) const;
};

/// Which class-level embedding tables feed the model. One source is used
/// directly; two are fused (first is primary); attributes + word vectors
/// + CSE fuse the concatenated attributes and word vectors with CSE.
struct SemanticSources {
  const EmbeddingTable* attributes = nullptr;
  const EmbeddingTable* word_vectors = nullptr;
  const EmbeddingTable* cse = nullptr;
};

/// Throws DataError listing classes missing from any configured table and
/// UsageError when no table is configured.
ClassInputs assemble_class_inputs(const SemanticSources& sources, std::span<const std::string> classes);

struct ZslModel {
  ZslArchitecture arch;
  ParamStore params;

  /// Xavier-uniform weights, zero biases, from stream `seed:init`.
  static ZslModel initialize(const ZslArchitecture& arch, std::uint64_t seed);
  /// Same draw, then every class-side relu unit that is off for all of
  /// `calibration`'s classes gets its bias shifted so the unit is centred on
  /// them. A unit dead on every class never receives a gradient.
  static ZslModel initialize(const ZslArchitecture& arch, std::uint64_t seed, const ClassInputs& calibration);
  /// Reads the variant and every width off the parameter names and shapes.
  static ZslModel from_params(ParamStore params);
};

// Differentiable building blocks; all take and return batched rows.
Var zsl_class_side(const ZslModel& model, Tape& tape, ParamStore& params, const ClassInputs& classes);
Var dezsl_prototypes(const ZslModel& model, Tape& tape, ParamStore& params, Var class_side);
/// Logits for every (image, class) pair; row i * M + j pairs image i with
/// class j.
Var rn_pair_logits(const ZslModel& model, Tape& tape, ParamStore& params, Var class_side, Var features);
/// (1/N) sum_i ||f_i - prototype_{y_i}||^2.
Var dezsl_loss(Var prototypes, Var features, std::span<const std::uint32_t> labels);
/// (1/N) sum_i sum_j (sigmoid(logit_ij) - [y_i == j])^2.
Var rn_loss(Var pair_logits, std::size_t num_classes, std::span<const std::uint32_t> labels);
/// Full objective of `model` on a batch, built on `tape` over `params`.
Var zsl_objective(const ZslModel& model, Tape& tape, ParamStore& params, const ClassInputs& classes,
                  const Matrix& features, std::span<const std::uint32_t> labels);

// Plain-value forms.
Matrix fuse(const ZslModel& model, const Matrix& primary, const Matrix& secondary);
/// Class-side vectors (fused when the model fuses).
Matrix class_side(const ZslModel& model, const ClassInputs& classes);
Matrix dezsl_forward(const ZslModel& model, const Matrix& class_side);
/// Relation scores in (0, 1): images x classes.
Matrix rn_score(const ZslModel& model, const Matrix& class_side, const Matrix& features);
double dezsl_loss(const Matrix& features, const Matrix& prototypes_per_image);
double rn_loss(const Matrix& scores, std::span<const std::uint32_t> labels);

/// Index of the nearest prototype (squared Euclidean) per image; ties go
/// to the lower index.
std::vector<std::uint32_t> nearest_prototype(const Matrix& prototypes, const Matrix& features, std::size_t threads = 1);
/// Index of the highest score per row; ties go to the lower index.
std::vector<std::uint32_t> argmax_rows(const Matrix& scores);

/// Predicted candidate index per image.
std::vector<std::uint32_t> zsl_predict(const ZslModel& model, const ClassInputs& candidates, const Matrix& features,
                                       std::size_t threads = 1);

double top1_accuracy(std::span<const std::string> predicted, std::span<const std::string> truth);

struct ZslTrainConfig {
  std::size_t epochs = 2000;
  double learning_rate = 1e-5;
  std::size_t batch_size = 64;
  /// Per-class fraction of training images held out for early stopping.
  double validation_fraction = 0.1;
  std::size_t patience = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ZslTrainResult {
  ZslModel model;
  std::vector<double> loss_history;     // mean training loss per epoch
  std::vector<double> validation_loss;  // empty without validation
  std::size_t best_epoch = 0;
};

/// Trains on images of the classes in `seen` only; every training label must
/// be one of them.
ZslTrainResult train_zsl(const ZslArchitecture& arch, const ClassInputs& seen, const VisualSet& train,
                         const ZslTrainConfig& config);

}  // namespace kcse
