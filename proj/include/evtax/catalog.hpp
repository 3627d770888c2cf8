#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evtax/classifier.hpp"
#include "evtax/taxonomy.hpp"
#include "evtax/textprep.hpp"
#include "evtax/timestamp.hpp"

namespace evtax {

struct CatalogEntry {
  std::string title;
  std::string description;
  CategoryId category = 0;
  std::vector<std::string> path;  // canonical names, root first
  std::string label;              // leaf name as shown in the catalog
  std::optional<Timestamp> starts;
  std::optional<Timestamp> ends;
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::string city;
  std::string source_id;
  std::optional<Method> method;

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

using Catalog = std::vector<CatalogEntry>;

/// One entry per event, matched to predictions by event index; sorted by
/// (starts, title) with undated entries last.
Catalog build_catalog(const std::vector<CleanEvent>& events,
                      const std::vector<Prediction>& predictions, const Taxonomy& taxonomy);

struct BoundingBox {
  double lat_min, lat_max, lon_min, lon_max;
};

struct CatalogQuery {
  std::optional<std::set<CategoryId>> include;  // subtrees
  std::optional<std::set<CategoryId>> exclude;  // subtrees, applied after include
  std::optional<std::string> city;              // case-insensitive
  std::optional<BoundingBox> bbox;
  std::optional<Timestamp> from;  // [starts, ends] must intersect [from, to]
  std::optional<Timestamp> to;

  bool empty() const { return !include && !exclude && !city && !bbox && !from && !to; }
};

/// Entry kept iff it passes every clause present. Throws on an unknown
/// category id or a badly ordered bbox/date range.
Catalog filter(const Catalog& catalog, const CatalogQuery& query, const Taxonomy& taxonomy);
bool matches(const CatalogEntry& entry, const CatalogQuery& query, const Taxonomy& taxonomy);

enum class CatalogFormat { kJsonl, kCsv };
CatalogFormat parse_catalog_format(std::string_view text);

inline constexpr std::string_view kCatalogCsvHeader =
    "title,description,taxonomy,starts,ends,latitude,longitude,city";

std::string export_catalog(const Catalog& catalog, CatalogFormat format);

struct ImportResult {
  Catalog catalog;
  std::vector<std::string> corrections;  // one line per coordinate swap
};

/// CSV columns are located by header name, so a file may list longitude
/// before latitude. When some rows only make sense with the two coordinates
/// exchanged and no row contradicts that, the whole file is treated as
/// swapped; otherwise a single row is swapped only when just the exchanged
/// order is in range. Throws Error naming the row for malformed input.
ImportResult import_catalog(std::string_view bytes, CatalogFormat format, const Taxonomy& taxonomy);

std::vector<std::vector<std::string>> parse_csv(std::string_view bytes);

}  // namespace evtax
