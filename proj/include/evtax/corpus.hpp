#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evtax/ingestion.hpp"
#include "evtax/jsonl.hpp"

namespace evtax {

/// Seeded generator of keyword-separable labeled events. Each content word is
/// drawn from the noise vocabulary with probability `noise_ratio`, otherwise
/// from the event's class pool.
struct SyntheticCorpusSpec {
  std::map<CategoryId, std::size_t> events_per_class;
  std::map<CategoryId, std::vector<std::string>> keyword_pools;
  std::vector<std::string> noise_vocabulary;
  double noise_ratio = 0.3;
  double accent_rate = 0.05;         // per word: one vowel gets an acute accent
  double contamination_rate = 0.1;   // per event: markup, escapes, e-mail or URL
  std::size_t title_words = 4;
  std::size_t description_words = 16;
  std::string source_id = "synthetic";
  std::uint64_t seed = 0;

  /// Pools non-empty, pairwise disjoint and ASCII lowercase; every counted
  /// class has a pool; rates in range with noise_ratio < 1.
  void validate() const;
};

Json to_json(const SyntheticCorpusSpec& spec);
SyntheticCorpusSpec corpus_spec_from_json(const Json& j);
SyntheticCorpusSpec load_corpus_spec(const std::filesystem::path& path);
std::filesystem::path default_corpus_spec_path();

struct SyntheticCorpus {
  std::vector<RawEvent> events;    // labeled, in a seeded shuffled order
  std::vector<bool> contaminated;  // parallel to events
};

SyntheticCorpus generate_corpus(const SyntheticCorpusSpec& spec);

/// The events as an api-dump payload ({"events": [...]}) readable by
/// parse_api_dump, labels included.
std::string corpus_to_api_dump(const std::vector<RawEvent>& events);

}  // namespace evtax
