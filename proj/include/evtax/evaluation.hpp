#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evtax/classifier.hpp"
#include "evtax/taxonomy.hpp"

namespace evtax {

struct SplitResult {
  std::vector<std::size_t> train;  // ascending indices
  std::vector<std::size_t> test;
};

/// Largest-remainder allocation of round(N * fraction) test slots across
/// classes in proportion to their sizes; ties go to the earlier class.
std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& class_sizes,
                                                double test_fraction);

/// Deterministic per seed. Stratified splits need at least two items per class.
SplitResult split(const std::vector<CategoryId>& labels, double test_fraction, std::uint64_t seed,
                  bool stratified);

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Rows are actual classes, columns predicted.
struct ConfusionMatrix {
  std::vector<CategoryId> classes;
  CountMatrix counts;

  explicit ConfusionMatrix(std::vector<CategoryId> class_ids = {});
  std::size_t index_of(CategoryId id) const;
  void add(CategoryId actual, CategoryId predicted);
  std::int64_t total() const { return counts.sum(); }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

/// Every prediction must carry an actual label inside `classes`.
ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const std::vector<CategoryId>& classes);
ConfusionMatrix confusion(const std::vector<CategoryId>& actual,
                          const std::vector<CategoryId>& predicted,
                          const std::vector<CategoryId>& classes);

/// Row-wise division by the row sum; empty rows stay zero.
Eigen::MatrixXd normalize_rows(const ConfusionMatrix& m);

struct ClassMetrics {
  CategoryId id = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::int64_t support = 0;
  // Set when the metric hit a zero denominator and was defined as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& m);

struct Averages {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct EvalReport {
  std::vector<ClassMetrics> classes;
  double accuracy = 0;
  Averages macro;
  Averages weighted;
  std::int64_t total_support = 0;
};

/// Macro and support-weighted averages. Accuracy is the support-weighted
/// recall, which is trace/total for metrics taken from a confusion matrix.
EvalReport aggregate(const std::vector<ClassMetrics>& per_class);
EvalReport evaluate(const ConfusionMatrix& m);

/// Fixed-width classification report. Rates are rounded half-up to two
/// decimals at render time only.
std::string render_report(const EvalReport& report, const Taxonomy& taxonomy);
std::string format_rate(double value);

/// Header of class names, then one row per actual class.
std::string confusion_csv(const ConfusionMatrix& m, const Taxonomy& taxonomy);
std::string normalized_confusion_csv(const ConfusionMatrix& m, const Taxonomy& taxonomy);

/// Maps actual and predicted labels to their first-level ancestors.
std::vector<Prediction> roll_up(std::vector<Prediction> predictions, const Taxonomy& taxonomy);

}  // namespace evtax
