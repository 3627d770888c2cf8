#include "evtax/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

namespace evtax {

namespace {

bool lat_ok(double v) { return v >= -90.0 && v <= 90.0; }
bool lon_ok(double v) { return v >= -180.0 && v <= 180.0; }

bool entry_before(const CatalogEntry& a, const CatalogEntry& b) {
  if (a.starts.has_value() != b.starts.has_value()) return a.starts.has_value();
  if (a.starts && *a.starts != *b.starts) return *a.starts < *b.starts;
  return a.title < b.title;
}

}  // namespace

Catalog build_catalog(const std::vector<CleanEvent>& events,
                      const std::vector<Prediction>& predictions, const Taxonomy& taxonomy) {
  if (events.size() != predictions.size())
    throw Error("catalog: " + std::to_string(events.size()) + " events but " +
                std::to_string(predictions.size()) + " predictions");
  std::vector<const Prediction*> by_event(events.size(), nullptr);
  for (const auto& p : predictions) {
    if (p.event_index >= events.size() || by_event[p.event_index])
      throw Error("catalog: prediction refers to event " + std::to_string(p.event_index) +
                  " which is missing or already predicted");
    if (p.source_id != events[p.event_index].source_id)
      throw Error("catalog: prediction/event source mismatch at event " +
                  std::to_string(p.event_index));
    by_event[p.event_index] = &p;
  }
  Catalog out;
  out.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const CleanEvent& e = events[i];
    const Prediction& p = *by_event[i];
    const TaxonomyNode& node = taxonomy.resolve(p.predicted);
    CatalogEntry entry;
    entry.title = e.title;
    entry.description = e.description;
    entry.category = node.id;
    entry.path = taxonomy.name_path(node.id);
    entry.label = node.catalog_label();
    entry.starts = e.starts;
    entry.ends = e.ends;
    entry.latitude = e.latitude;
    entry.longitude = e.longitude;
    entry.city = e.city.value_or("");
    entry.source_id = e.source_id;
    entry.method = p.method;
    out.push_back(std::move(entry));
  }
  std::stable_sort(out.begin(), out.end(), entry_before);
  return out;
}

namespace {

void validate_query(const CatalogQuery& q, const Taxonomy& taxonomy) {
  for (const auto* set : {&q.include, &q.exclude})
    if (*set)
      for (CategoryId id : **set) taxonomy.resolve(id);
  if (q.bbox && (q.bbox->lat_min > q.bbox->lat_max || q.bbox->lon_min > q.bbox->lon_max))
    throw Error("catalog query: bounding box is not well ordered");
  if (q.from && q.to && *q.to < *q.from) throw Error("catalog query: from is after to");
}

bool within_any(const Taxonomy& taxonomy, CategoryId id, const std::set<CategoryId>& roots) {
  for (CategoryId p : taxonomy.path(id))
    if (roots.contains(p)) return true;
  return false;
}

}  // namespace

bool matches(const CatalogEntry& e, const CatalogQuery& q, const Taxonomy& taxonomy) {
  if (q.include && !within_any(taxonomy, e.category, *q.include)) return false;
  if (q.exclude && within_any(taxonomy, e.category, *q.exclude)) return false;
  if (q.city && to_lower_ascii(e.city) != to_lower_ascii(*q.city)) return false;
  if (q.bbox) {
    if (!e.latitude || !e.longitude) return false;
    if (*e.latitude < q.bbox->lat_min || *e.latitude > q.bbox->lat_max ||
        *e.longitude < q.bbox->lon_min || *e.longitude > q.bbox->lon_max)
      return false;
  }
  if (q.from || q.to) {
    if (!e.starts) return false;
    const Timestamp end = e.ends.value_or(*e.starts);
    if (q.to && *q.to < *e.starts) return false;
    if (q.from && end < *q.from) return false;
  }
  return true;
}

Catalog filter(const Catalog& catalog, const CatalogQuery& query, const Taxonomy& taxonomy) {
  validate_query(query, taxonomy);
  Catalog out;
  for (const auto& e : catalog)
    if (matches(e, query, taxonomy)) out.push_back(e);
  return out;
}

CatalogFormat parse_catalog_format(std::string_view text) {
  if (text == "jsonl") return CatalogFormat::kJsonl;
  if (text == "csv") return CatalogFormat::kCsv;
  throw Error("unknown catalog format '" + std::string(text) + "'");
}

namespace {

std::string format_degrees(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Json entry_json(const CatalogEntry& e) {
  Json j = Json::object();
  j["title"] = e.title;
  j["description"] = e.description;
  j["taxonomy"] = {{"id", e.category}, {"path", e.path}, {"label", e.label}};
  j["starts"] = e.starts ? Json(format_timestamp(*e.starts)) : Json(nullptr);
  j["ends"] = e.ends ? Json(format_timestamp(*e.ends)) : Json(nullptr);
  j["latitude"] = e.latitude ? Json(*e.latitude) : Json(nullptr);
  j["longitude"] = e.longitude ? Json(*e.longitude) : Json(nullptr);
  j["city"] = e.city;
  j["source_id"] = e.source_id;
  j["method"] = e.method ? Json(to_string(*e.method)) : Json(nullptr);
  return j;
}

}  // namespace

std::string export_catalog(const Catalog& catalog, CatalogFormat format) {
  std::string out;
  if (format == CatalogFormat::kJsonl) {
    for (const auto& e : catalog) out += dump_record(entry_json(e)) + "\n";
    return out;
  }
  out = std::string(kCatalogCsvHeader) + "\n";
  for (const auto& e : catalog) {
    out += csv_cell(e.title) + "," + csv_cell(e.description) + "," + csv_cell(e.label) + ",";
    out += (e.starts ? format_timestamp(*e.starts) : "") + ",";
    out += (e.ends ? format_timestamp(*e.ends) : "") + ",";
    out += (e.latitude ? format_degrees(*e.latitude) : "") + ",";
    out += (e.longitude ? format_degrees(*e.longitude) : "") + ",";
    out += csv_cell(e.city) + "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view bytes) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    char c = bytes[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    if (c == '"' && cell.empty()) {
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < bytes.size() && bytes[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
      ++line;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw Error("csv: unterminated quoted field near line " + std::to_string(line));
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

struct RawRow {
  std::size_t number;
  CatalogEntry entry;
};

std::optional<double> parse_degrees(const std::string& s, std::size_t row) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw Error("catalog row " + std::to_string(row) + ": bad coordinate '" + s + "'");
  return v;
}

std::optional<Timestamp> parse_time(const std::string& s, std::size_t row) {
  if (s.empty()) return std::nullopt;
  auto ts = parse_timestamp(s);
  if (!ts) throw Error("catalog row " + std::to_string(row) + ": bad timestamp '" + s + "'");
  return ts;
}

void fix_coordinates(std::vector<RawRow>& rows, std::vector<std::string>& log) {
  bool some_only_swapped = false, some_only_plain = false;
  for (const auto& r : rows) {
    const auto& e = r.entry;
    if (!e.latitude || !e.longitude) continue;
    bool plain = lat_ok(*e.latitude) && lon_ok(*e.longitude);
    bool swapped = lat_ok(*e.longitude) && lon_ok(*e.latitude);
    if (!plain && !swapped)
      throw Error("catalog row " + std::to_string(r.number) + ": coordinates out of range");
    some_only_swapped |= !plain && swapped;
    some_only_plain |= plain && !swapped;
  }
  const bool swap_all = some_only_swapped && !some_only_plain;
  for (auto& r : rows) {
    auto& e = r.entry;
    if (!e.latitude || !e.longitude) continue;
    bool plain = lat_ok(*e.latitude) && lon_ok(*e.longitude);
    bool swapped = lat_ok(*e.longitude) && lon_ok(*e.latitude);
    if ((swap_all && swapped) || (!plain && swapped)) {
      std::swap(*e.latitude, *e.longitude);
      log.push_back("row " + std::to_string(r.number) + ": swapped coordinates to latitude " +
                    format_degrees(*e.latitude) + ", longitude " + format_degrees(*e.longitude) +
                    (swap_all ? " (columns swapped file-wide)" : ""));
    }
  }
}

void check_entry(const CatalogEntry& e, std::size_t row) {
  if (e.starts && e.ends && *e.ends < *e.starts)
    throw Error("catalog row " + std::to_string(row) + ": ends before starts");
}

}  // namespace

ImportResult import_catalog(std::string_view bytes, CatalogFormat format, const Taxonomy& taxonomy) {
  std::vector<RawRow> rows;
  if (format == CatalogFormat::kJsonl) {
    std::size_t number = 0, start = 0;
    while (start < bytes.size()) {
      std::size_t end = bytes.find('\n', start);
      if (end == std::string_view::npos) end = bytes.size();
      std::string_view text = bytes.substr(start, end - start);
      start = end + 1;
      ++number;
      if (text.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      auto where = "catalog row " + std::to_string(number) + ": ";
      Json j = Json::parse(text, nullptr, false);
      if (j.is_discarded() || !j.is_object()) throw Error(where + "not a JSON object");
      try {
        CatalogEntry e;
        e.title = j.at("title").get<std::string>();
        e.description = j.value("description", std::string{});
        const Json& t = j.at("taxonomy");
        e.category = taxonomy.resolve(t.at("id").get<CategoryId>()).id;
        e.path = t.value("path", taxonomy.name_path(e.category));
        e.label = t.value("label", taxonomy.resolve(e.category).catalog_label());
        auto str = [&](const char* key) {
          return j.contains(key) && !j[key].is_null() ? j[key].get<std::string>() : std::string{};
        };
        e.starts = parse_time(str("starts"), number);
        e.ends = parse_time(str("ends"), number);
        if (j.contains("latitude") && !j["latitude"].is_null()) e.latitude = j["latitude"].get<double>();
        if (j.contains("longitude") && !j["longitude"].is_null()) e.longitude = j["longitude"].get<double>();
        e.city = j.value("city", std::string{});
        e.source_id = j.value("source_id", std::string{});
        if (j.contains("method") && !j["method"].is_null())
          e.method = parse_method(j["method"].get<std::string>());
        check_entry(e, number);
        rows.push_back({number, std::move(e)});
      } catch (const Error&) {
        throw;
      } catch (const std::exception& ex) {
        throw Error(where + ex.what());
      }
    }
  } else {
    auto table = parse_csv(bytes);
    if (table.empty()) throw Error("catalog row 1: missing header");
    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < table[0].size(); ++c) col[to_lower_ascii(table[0][c])] = c;
    for (const char* required : {"title", "description", "taxonomy", "starts", "ends", "latitude",
                                 "longitude", "city"})
      if (!col.contains(required))
        throw Error(std::string("catalog row 1: header lacks column '") + required + "'");
    for (std::size_t r = 1; r < table.size(); ++r) {
      const auto& cells = table[r];
      const std::size_t number = r + 1;
      if (cells.size() != table[0].size())
        throw Error("catalog row " + std::to_string(number) + ": expected " +
                    std::to_string(table[0].size()) + " fields, found " +
                    std::to_string(cells.size()));
      auto cell = [&](const char* name) { return cells[col.at(name)]; };
      CatalogEntry e;
      e.title = cell("title");
      e.description = cell("description");
      e.label = cell("taxonomy");
      try {
        const TaxonomyNode& node = taxonomy.resolve(e.label);
        e.category = node.id;
        e.path = taxonomy.name_path(node.id);
      } catch (const Error& ex) {
        throw Error("catalog row " + std::to_string(number) + ": " + ex.what());
      }
      e.starts = parse_time(cell("starts"), number);
      e.ends = parse_time(cell("ends"), number);
      e.latitude = parse_degrees(cell("latitude"), number);
      e.longitude = parse_degrees(cell("longitude"), number);
      e.city = cell("city");
      check_entry(e, number);
      rows.push_back({number, std::move(e)});
    }
  }
  ImportResult out;
  fix_coordinates(rows, out.corrections);
  for (auto& r : rows) out.catalog.push_back(std::move(r.entry));
  return out;
}

}  // namespace evtax
