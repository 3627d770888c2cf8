#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evtax/common.hpp"
#include "evtax/jsonl.hpp"
#include "evtax/taxonomy.hpp"

namespace evtax {

enum class SourceKind { kApiDump, kFeed, kScrapedPageSet };

std::string to_string(SourceKind kind);
SourceKind parse_source_kind(std::string_view text);

struct SourceDescriptor {
  std::string source_id;
  SourceKind kind = SourceKind::kApiDump;
  std::string location;  // file path, directory, or http(s) URL
  std::optional<CategoryId> trust;
  std::map<std::string, CategoryId> venue_rules;  // keys lowercased
  std::optional<std::string> locale_hint;
};

struct RawEvent {
  std::string source_id;
  std::optional<std::string> external_id;
  std::string title_raw;
  std::string description_raw;
  std::optional<std::string> starts_raw;
  std::optional<std::string> ends_raw;
  std::optional<std::string> lat_raw;
  std::optional<std::string> lon_raw;
  std::optional<std::string> city_raw;
  std::optional<std::string> venue_raw;
  std::optional<std::string> locale;
  std::int64_t fetched_at_ms = 0;
  std::optional<CategoryId> label;

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

Json to_json(const RawEvent& event);
RawEvent raw_event_from_json(const Json& j);

/// Reads the source configuration ({"sources": [...]} or a bare array).
/// Relative locations resolve against `base_dir`; trust and venue
/// categories must resolve in `taxonomy`.
std::vector<SourceDescriptor> load_sources(std::string_view document,
                                           const Taxonomy& taxonomy,
                                           const std::filesystem::path& base_dir = {});
std::vector<SourceDescriptor> load_sources_file(const std::filesystem::path& path,
                                                const Taxonomy& taxonomy);

struct FetchResult {
  std::vector<RawEvent> events;
  std::size_t skipped_missing_title = 0;
};

/// Parses one source into events in payload order. Throws Error when the
/// location cannot be read or the payload does not parse at the top level.
/// fetched_at is left at zero; the ingest run stamps it.
FetchResult fetch_source(const SourceDescriptor& source);

/// Payload parsers, exposed for connectors that already hold the bytes.
FetchResult parse_api_dump(std::string_view payload, const SourceDescriptor& source);
FetchResult parse_feed(std::string_view payload, const SourceDescriptor& source);
FetchResult parse_page(std::string_view html, const SourceDescriptor& source,
                       std::string page_id);

struct SourceReport {
  std::string source_id;
  std::size_t fetched = 0;
  std::size_t skipped_missing_title = 0;
  std::optional<std::string> error;
};

struct IngestResult {
  std::vector<RawEvent> events;  // config order, then payload order
  std::vector<SourceReport> reports;
};

/// Fetches every source with at most `parallel` concurrent fetches. A failing
/// source is reported and skipped. fetched_at is assigned after the merge as
/// `fetch_time_ms + k` for the k-th event, so it increases strictly within a run.
IngestResult fetch_all(const std::vector<SourceDescriptor>& sources,
                       std::size_t parallel, std::int64_t fetch_time_ms);

/// Dedupe key: (source_id, external_id) when external_id is present,
/// otherwise the FNV-1a hash of (title_raw, starts_raw, city_raw).
std::string dedupe_key(const RawEvent& event);
std::uint64_t content_hash(const RawEvent& event);

/// Keeps the first occurrence of every key.
std::vector<RawEvent> dedupe(const std::vector<RawEvent>& events);

/// Appends one line per event and returns the number written.
std::size_t append_raw(const std::filesystem::path& store,
                       const std::vector<RawEvent>& events);

/// Records in append order; corrupt lines are reported and skipped.
ReadResult<RawEvent> read_raw(const std::filesystem::path& store,
                              const std::optional<std::string>& source_id = {});

}  // namespace evtax
