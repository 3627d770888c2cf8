#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evtax/catalog.hpp"
#include "evtax/classifier.hpp"
#include "evtax/corpus.hpp"
#include "evtax/encoder.hpp"
#include "evtax/evaluation.hpp"

namespace evtax {

/// Raised for problems with the configuration itself (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct PipelinePaths {
  std::filesystem::path taxonomy;
  std::filesystem::path sources;
  std::filesystem::path raw_store;
  std::filesystem::path clean_store;
  std::filesystem::path vocab;
  std::filesystem::path encoder_weights;
  std::filesystem::path features;
  std::filesystem::path split;
  std::filesystem::path model;
  std::filesystem::path predictions;
  std::filesystem::path report;
  std::filesystem::path confusion;
  std::filesystem::path normalized_confusion;
  std::filesystem::path catalog;
  std::filesystem::path catalog_csv;
};

struct PipelineConfig {
  PipelinePaths paths;
  std::uint64_t seed = 0;  // split, training and encoder initialisation
  std::size_t parallel = 4;
  std::int64_t fetch_time_ms = 0;
  std::size_t max_chars = kDefaultMaxChars;
  std::size_t vocab_size = 8000;
  std::size_t min_freq = 1;
  EncoderConfig encoder;
  FeaturizerConfig featurizer;
  TrainOptions training;
  Json class_weights = "auto";  // "auto", "none" or {category: weight}
  double test_fraction = 0.2;
  bool stratified = true;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

/// Keys are documented in the README. Relative paths resolve against
/// `base_dir`; artifact paths default to fixed names under "workdir".
/// EVTAX_<KEY> variables (EVTAX_WORKDIR, EVTAX_TAXONOMY, EVTAX_RAW_STORE, ...)
/// override paths and nothing else. Throws ConfigError.
PipelineConfig pipeline_config_from_json(const Json& j, const std::filesystem::path& base_dir,
                                         const EnvLookup& env = process_env);
PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                    const EnvLookup& env = process_env);

Json to_json(const TrainOptions& options);
/// Epochs, learning rate, batch size and l2; class weights are set apart.
TrainOptions train_options_from_json(const Json& j);
/// "auto" (inverse frequency), "none", or an object keyed by category id or
/// name.
void set_class_weights(TrainOptions& options, const Json& spec, const Taxonomy& taxonomy);
Json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const Json& j);

// --- stores ------------------------------------------------------------------

void write_clean_store(const std::filesystem::path& path, const std::vector<CleanEvent>& events);
ReadResult<CleanEvent> read_clean_store(const std::filesystem::path& path);

/// Binary row-major matrix with a small versioned header.
void save_features(const Eigen::MatrixXd& features, const std::filesystem::path& path);
Eigen::MatrixXd load_features(const std::filesystem::path& path);

void save_split(const SplitResult& split, const std::filesystem::path& path);
SplitResult load_split(const std::filesystem::path& path);

void write_catalog(const std::filesystem::path& path, const Catalog& catalog, CatalogFormat format);
Catalog read_catalog(const std::filesystem::path& path, const Taxonomy& taxonomy);

// --- stage helpers -------------------------------------------------------------

struct CleanRun {
  std::vector<CleanEvent> events;
  std::size_t duplicates = 0;
};
CleanRun clean_all(const std::vector<RawEvent>& raw, std::size_t max_chars);

/// Vocabulary over the `text` of every event.
Vocabulary vocab_from_events(const std::vector<CleanEvent>& events, std::size_t max_size,
                             std::size_t min_freq);

/// Order-preserving, parallel over events.
std::vector<Prediction> classify_all(const std::vector<CleanEvent>& events,
                                     const CascadeClassifier& cascade);

/// Rolls up to first level and scores the predictions that carry an actual
/// label (and, when `split` is set, that tag).
ConfusionMatrix confusion_for(const std::vector<Prediction>& predictions, const Taxonomy& taxonomy,
                              const std::optional<std::string>& split = {});

// --- runner ----------------------------------------------------------------------

struct StageSummary {
  int index = 0;
  std::string name;
  bool ok = false;
  std::vector<std::pair<std::string, std::string>> counts;
  std::string error;
};

std::string format_stage_line(const StageSummary& s);

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 config error, 3 stage failure
  std::vector<StageSummary> stages;
  std::optional<EvalReport> report;
  std::string report_text;
};

/// ingest, clean, vocab, featurize, split, train, classify, evaluate, catalog.
/// Every stage reads and writes files only; stage lines go to `out` as they
/// finish, then the report.
RunResult run_all(const PipelineConfig& config, std::ostream& out);

/// Writes a corpus, sources file and config under `workdir`, then runs
/// everything with a fixed fetch time.
RunResult run_demo(const SyntheticCorpusSpec& spec, const std::filesystem::path& workdir,
                   std::ostream& out);

}  // namespace evtax
