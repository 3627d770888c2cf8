#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evtax/encoder.hpp"
#include "evtax/ingestion.hpp"
#include "evtax/jsonl.hpp"
#include "evtax/taxonomy.hpp"
#include "evtax/textprep.hpp"

namespace evtax {

enum class FeaturizerKind { kEncoderCls, kHashedNgram };

struct FeaturizerConfig {
  FeaturizerKind kind = FeaturizerKind::kHashedNgram;
  // hashed-ngram
  std::size_t num_buckets = 2048;
  std::vector<int> orders = {1, 2};
  std::uint64_t hash_seed = 0;
  // encoder-cls
  std::string weights_path;
  std::string vocab_path;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t model_dim = 0;  // recorded at train time, checked at load
};

Json to_json(const FeaturizerConfig& cfg);
/// Relative weight/vocab paths resolve against `base_dir`.
FeaturizerConfig featurizer_config_from_json(const Json& j,
                                             const std::filesystem::path& base_dir = {});
FeaturizerConfig load_featurizer_config(const std::filesystem::path& path);

std::size_t ngram_bucket(std::string_view ngram, std::size_t num_buckets, std::uint64_t seed);

/// Word n-gram counts hashed into buckets, then L2-normalized (a zero vector
/// stays zero).
Eigen::VectorXd hashed_ngram_features(std::string_view text, std::size_t num_buckets,
                                      const std::vector<int>& orders, std::uint64_t seed);

class Featurizer {
 public:
  /// Loads encoder weights and vocabulary for encoder-cls; throws when
  /// either file is missing or they disagree.
  explicit Featurizer(FeaturizerConfig cfg);

  std::size_t dim() const;
  const FeaturizerConfig& config() const { return cfg_; }
  Eigen::VectorXd operator()(std::string_view text) const;
  Eigen::VectorXd operator()(const CleanEvent& event) const { return (*this)(event.text); }

 private:
  FeaturizerConfig cfg_;
  std::shared_ptr<const EncoderWeights<double>> weights_;
  std::shared_ptr<const Vocabulary> vocab_;
};

/// One row per event.
Eigen::MatrixXd featurize_all(const std::vector<CleanEvent>& events, const Featurizer& featurizer);

/// 1 / (1 + e^-z) without overflow for large |z|.
double logistic(double z);

struct TrainingMeta {
  std::size_t epochs = 0;
  double learning_rate = 0;
  std::size_t batch_size = 0;
  double l2 = 0;
  std::uint64_t seed = 0;
  std::vector<double> class_weights;
  double final_loss = 0;
};

/// Multinomial logistic head. Row c of `coefficients` is the coefficient
/// vector of classes[c]; its last entry multiplies a constant 1 (intercept).
struct ClassifierModel {
  Eigen::MatrixXd coefficients;
  std::vector<CategoryId> classes;
  TrainingMeta meta;

  std::size_t feature_dim() const { return static_cast<std::size_t>(coefficients.cols()) - 1; }
  std::size_t class_index(CategoryId id) const;
};

Eigen::VectorXd logits(const Eigen::VectorXd& x, const ClassifierModel& model);
Eigen::VectorXd predict_proba(const Eigen::VectorXd& x, const ClassifierModel& model);

/// Class-weighted mean cross-entropy plus (l2/2)||coefficients without the
/// intercept column||^2. `targets` are row indices into the coefficient
/// matrix; `class_weights` is indexed the same way.
double weighted_loss(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& features,
                     const std::vector<std::size_t>& targets,
                     const std::vector<double>& class_weights, double l2);

Eigen::MatrixXd weighted_loss_gradient(const Eigen::MatrixXd& coefficients,
                                       const Eigen::MatrixXd& features,
                                       const std::vector<std::size_t>& targets,
                                       const std::vector<double>& class_weights, double l2);

enum class ClassWeighting { kInverseFrequency, kNone, kExplicit };

struct TrainOptions {
  std::size_t epochs = 60;
  double learning_rate = 1.0;
  std::size_t batch_size = 32;  // 0 = full batch
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  ClassWeighting weighting = ClassWeighting::kInverseFrequency;
  std::map<CategoryId, double> explicit_weights;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<double> loss_history;  // full-data loss after each epoch
  double final_loss = 0;
};

/// n / (C * n_c) for each class.
std::vector<double> inverse_frequency_weights(const std::vector<CategoryId>& labels,
                                              const std::vector<CategoryId>& classes);

/// Mini-batch gradient descent from all-zero coefficients. Batches are drawn
/// from a seeded shuffle each epoch. Throws when a class has no examples, a
/// label is not in `classes`, or the loss stops being finite.
TrainResult train(const Eigen::MatrixXd& features, const std::vector<CategoryId>& labels,
                  const std::vector<CategoryId>& classes, const TrainOptions& options);

/// First-level head plus, for each first-level branch whose training labels
/// reach deeper, a head over that branch's second-level children.
struct HierarchicalModel {
  FeaturizerConfig featurizer;
  ClassifierModel root;
  std::map<CategoryId, ClassifierModel> branches;
};

HierarchicalModel train_hierarchical(const Eigen::MatrixXd& features,
                                     const std::vector<CategoryId>& labels,
                                     const Taxonomy& taxonomy, const TrainOptions& options,
                                     FeaturizerConfig featurizer);

void save_model(const HierarchicalModel& model, const std::filesystem::path& path);
HierarchicalModel load_model(const std::filesystem::path& path);

// --- cascade -----------------------------------------------------------------

enum class Method { kRuleSource, kRuleVenue, kModel };
std::string to_string(Method method);
Method parse_method(std::string_view text);

struct Prediction {
  std::size_t event_index = 0;
  std::string source_id;
  std::optional<std::string> external_id;
  std::vector<CategoryId> classes;  // columns of scores/probabilities
  std::vector<double> scores;       // raw logits; empty for rule paths
  std::vector<double> probabilities;
  CategoryId predicted = 0;
  std::optional<CategoryId> actual;
  Method method = Method::kModel;
  std::string text;
  std::optional<std::string> split;
};

Json to_json(const Prediction& p);
Prediction prediction_from_json(const Json& j);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds);
ReadResult<Prediction> read_predictions(const std::filesystem::path& path);

class SourceIndex {
 public:
  SourceIndex() = default;
  explicit SourceIndex(const std::vector<SourceDescriptor>& sources);
  const SourceDescriptor* find(const std::string& source_id) const;

 private:
  std::map<std::string, SourceDescriptor> by_id_;
};

/// Source trust rule, then venue rule, then the model. The model and the
/// featurizer are only touched on the third path; model_calls() counts those.
class CascadeClassifier {
 public:
  CascadeClassifier(const HierarchicalModel& model, const Featurizer& featurizer,
                    SourceIndex sources, const Taxonomy& taxonomy);

  Prediction classify(const CleanEvent& event, std::size_t event_index = 0) const;
  std::size_t model_calls() const { return model_calls_.load(); }

 private:
  const HierarchicalModel& model_;
  const Featurizer& featurizer_;
  SourceIndex sources_;
  mutable std::atomic<std::size_t> model_calls_{0};
};

Prediction classify_event(const CleanEvent& event, const SourceIndex& sources,
                          const HierarchicalModel& model, const Featurizer& featurizer,
                          const Taxonomy& taxonomy);

}  // namespace evtax
