#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "evtax/pipeline.hpp"
#include "evtax/random.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(EVTAX_FIXTURE_DIR) / name;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("evtax-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const evtax::Taxonomy& default_taxonomy() {
  static const evtax::Taxonomy t = evtax::load_taxonomy_file(evtax::default_taxonomy_path());
  return t;
}

inline const evtax::Taxonomy& two_level_taxonomy() {
  static const evtax::Taxonomy t = evtax::load_taxonomy_file(fixture("taxonomy_two_level.txt"));
  return t;
}

// Per-class rows of the published classification report.
struct ReportRow {
  evtax::CategoryId id;
  double precision, recall, f1;
  std::int64_t support;
};

inline const std::vector<ReportRow>& table2() {
  static const std::vector<ReportRow> rows = {
      {0, 0.87, 0.92, 0.90, 43839}, {1, 0.88, 0.84, 0.86, 38372}, {2, 0.88, 0.87, 0.88, 30088},
      {3, 0.97, 0.97, 0.97, 20546}, {4, 0.81, 0.80, 0.80, 20337}, {5, 0.84, 0.85, 0.84, 11567},
      {6, 0.76, 0.78, 0.77, 8426},
  };
  return rows;
}

inline std::vector<evtax::ClassMetrics> table2_metrics() {
  std::vector<evtax::ClassMetrics> out;
  for (const auto& r : table2()) {
    evtax::ClassMetrics m;
    m.id = r.id;
    m.precision = r.precision;
    m.recall = r.recall;
    m.f1 = r.f1;
    m.support = r.support;
    out.push_back(m);
  }
  return out;
}

// Fig. 3 events as upstream delivers them, cleaned and with their categories.
inline std::vector<evtax::CleanEvent> fig3_events() {
  evtax::SourceDescriptor src;
  src.source_id = "fig3";
  src.location = fixture("fig3_events.json").string();
  std::vector<evtax::CleanEvent> out;
  for (const auto& raw : evtax::fetch_source(src).events) out.push_back(evtax::clean_event(raw));
  return out;
}

inline std::vector<evtax::Prediction> predictions_from_labels(
    const std::vector<evtax::CleanEvent>& events) {
  std::vector<evtax::Prediction> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    evtax::Prediction p;
    p.event_index = i;
    p.source_id = events[i].source_id;
    p.predicted = events[i].label.value();
    p.actual = events[i].label;
    p.method = evtax::Method::kRuleSource;
    out.push_back(p);
  }
  return out;
}

inline evtax::SyntheticCorpusSpec small_spec(std::uint64_t seed, std::size_t per_class = 40) {
  evtax::SyntheticCorpusSpec s;
  s.seed = seed;
  s.keyword_pools[0] = {"concert", "guitar", "orchestra", "jazz", "choir", "album"};
  s.keyword_pools[1] = {"theatre", "ballet", "opera", "actor", "stage", "comedy"};
  s.keyword_pools[3] = {"marathon", "football", "tennis", "league", "stadium", "cycling"};
  s.events_per_class = {{0, 2 * per_class}, {1, per_class}, {3, per_class}};
  s.noise_vocabulary = {"the", "city", "night", "annual", "free", "weekend", "tickets", "live"};
  s.noise_ratio = 0.3;
  return s;
}

}  // namespace testing
