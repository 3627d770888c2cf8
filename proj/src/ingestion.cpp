#include "evtax/ingestion.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "httplib.h"

namespace evtax {

namespace pt = boost::property_tree;

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kApiDump: return "api-dump";
    case SourceKind::kFeed: return "feed";
    case SourceKind::kScrapedPageSet: return "scraped-page-set";
  }
  return "api-dump";
}

SourceKind parse_source_kind(std::string_view text) {
  if (text == "api-dump") return SourceKind::kApiDump;
  if (text == "feed") return SourceKind::kFeed;
  if (text == "scraped-page-set") return SourceKind::kScrapedPageSet;
  throw Error("unknown source kind '" + std::string(text) + "'");
}

namespace {

void put_opt(Json& j, const char* key, const std::optional<std::string>& v) {
  j[key] = v ? Json(*v) : Json(nullptr);
}

std::optional<std::string> get_opt(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

Json to_json(const RawEvent& e) {
  Json j = Json::object();
  j["source_id"] = e.source_id;
  put_opt(j, "external_id", e.external_id);
  j["title_raw"] = e.title_raw;
  j["description_raw"] = e.description_raw;
  put_opt(j, "starts_raw", e.starts_raw);
  put_opt(j, "ends_raw", e.ends_raw);
  put_opt(j, "lat_raw", e.lat_raw);
  put_opt(j, "lon_raw", e.lon_raw);
  put_opt(j, "city_raw", e.city_raw);
  put_opt(j, "venue_raw", e.venue_raw);
  put_opt(j, "locale", e.locale);
  j["fetched_at"] = e.fetched_at_ms;
  j["label"] = e.label ? Json(*e.label) : Json(nullptr);
  return j;
}

RawEvent raw_event_from_json(const Json& j) {
  RawEvent e;
  e.source_id = j.at("source_id").get<std::string>();
  e.external_id = get_opt(j, "external_id");
  e.title_raw = j.at("title_raw").get<std::string>();
  if (blank(e.title_raw)) throw Error("empty title_raw");
  e.description_raw = j.value("description_raw", std::string{});
  e.starts_raw = get_opt(j, "starts_raw");
  e.ends_raw = get_opt(j, "ends_raw");
  e.lat_raw = get_opt(j, "lat_raw");
  e.lon_raw = get_opt(j, "lon_raw");
  e.city_raw = get_opt(j, "city_raw");
  e.venue_raw = get_opt(j, "venue_raw");
  e.locale = get_opt(j, "locale");
  e.fetched_at_ms = j.value("fetched_at", std::int64_t{0});
  if (j.contains("label") && !j["label"].is_null())
    e.label = j["label"].get<CategoryId>();
  return e;
}

std::vector<SourceDescriptor> load_sources(std::string_view document,
                                           const Taxonomy& taxonomy,
                                           const std::filesystem::path& base_dir) {
  Json doc = Json::parse(document, nullptr, false);
  if (doc.is_discarded()) throw Error("sources: not valid JSON");
  const Json& list = doc.is_object() ? doc.at("sources") : doc;
  if (!list.is_array()) throw Error("sources: expected an array");

  auto category = [&](const Json& v) -> CategoryId {
    if (v.is_number_integer()) return taxonomy.resolve(v.get<CategoryId>()).id;
    return taxonomy.resolve_key(v.get<std::string>()).id;
  };

  std::vector<SourceDescriptor> out;
  std::unordered_set<std::string> ids;
  for (const Json& s : list) {
    SourceDescriptor d;
    d.source_id = s.at("source_id").get<std::string>();
    if (!ids.insert(d.source_id).second)
      throw Error("sources: duplicate source_id '" + d.source_id + "'");
    d.kind = parse_source_kind(s.at("kind").get<std::string>());
    d.location = s.at("location").get<std::string>();
    bool remote = d.location.starts_with("http://") || d.location.starts_with("https://");
    if (!remote && !base_dir.empty() && std::filesystem::path(d.location).is_relative())
      d.location = (base_dir / d.location).lexically_normal().string();
    if (s.contains("trust") && !s["trust"].is_null()) d.trust = category(s["trust"]);
    if (s.contains("venue_rules")) {
      for (const auto& [venue, cat] : s["venue_rules"].items())
        d.venue_rules[to_lower_ascii(venue)] = category(cat);
    }
    if (s.contains("locale_hint") && !s["locale_hint"].is_null())
      d.locale_hint = s["locale_hint"].get<std::string>();
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<SourceDescriptor> load_sources_file(const std::filesystem::path& path,
                                                const Taxonomy& taxonomy) {
  return load_sources(read_file(path), taxonomy, path.parent_path());
}

namespace {

std::optional<std::string> json_field(const Json& item,
                                      std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = item.find(key);
    if (it == item.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number() || it->is_boolean()) return it->dump();
  }
  return std::nullopt;
}

std::string fetch_url(const std::string& url) {
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end + 3);
  std::string origin = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client client(origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  client.set_follow_location(true);
  auto res = client.Get(path);
  if (!res) throw Error("unreachable: " + url + " (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw Error("unreachable: " + url + " (HTTP " + std::to_string(res->status) + ")");
  return res->body;
}

std::string read_location(const std::string& location) {
  if (location.starts_with("http://") || location.starts_with("https://"))
    return fetch_url(location);
  if (!std::filesystem::is_regular_file(location))
    throw Error("unreachable: " + location);
  return read_file(location);
}

RawEvent base_event(const SourceDescriptor& source) {
  RawEvent e;
  e.source_id = source.source_id;
  e.locale = source.locale_hint;
  return e;
}

}  // namespace

FetchResult parse_api_dump(std::string_view payload, const SourceDescriptor& source) {
  Json doc = Json::parse(payload, nullptr, false);
  if (doc.is_discarded()) throw Error("unparseable api dump from " + source.source_id);
  const Json* items = &doc;
  if (doc.is_object()) {
    if (!doc.contains("events") || !doc["events"].is_array())
      throw Error("api dump from " + source.source_id + " has no events array");
    items = &doc["events"];
  }
  if (!items->is_array()) throw Error("api dump from " + source.source_id + " is not an array");

  FetchResult out;
  for (const Json& item : *items) {
    if (!item.is_object()) {
      ++out.skipped_missing_title;
      continue;
    }
    RawEvent e = base_event(source);
    e.title_raw = json_field(item, {"title", "name"}).value_or("");
    if (blank(e.title_raw)) {
      ++out.skipped_missing_title;
      continue;
    }
    e.external_id = json_field(item, {"external_id", "id", "uid"});
    e.description_raw = json_field(item, {"description", "summary", "body"}).value_or("");
    e.starts_raw = json_field(item, {"starts", "start", "start_date"});
    e.ends_raw = json_field(item, {"ends", "end", "end_date"});
    e.lat_raw = json_field(item, {"latitude", "lat"});
    e.lon_raw = json_field(item, {"longitude", "lon", "lng"});
    e.city_raw = json_field(item, {"city"});
    e.venue_raw = json_field(item, {"venue", "location"});
    if (auto loc = json_field(item, {"language", "locale"})) e.locale = loc;
    if (item.contains("label") && item["label"].is_number_integer())
      e.label = item["label"].get<CategoryId>();
    out.events.push_back(std::move(e));
  }
  return out;
}

namespace {

std::optional<std::string> xml_child(const pt::ptree& node,
                                     std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (auto child = node.get_child_optional(pt::ptree::path_type(name, '\0'))) {
      std::string text = child->data();
      if (!blank(text)) return text;
    }
  }
  return std::nullopt;
}

std::optional<std::string> atom_link(const pt::ptree& entry) {
  for (const auto& [name, child] : entry) {
    if (name != "link") continue;
    if (auto href = child.get_optional<std::string>("<xmlattr>.href")) return *href;
  }
  return std::nullopt;
}

RawEvent feed_item(const pt::ptree& item, const SourceDescriptor& source, bool atom) {
  RawEvent e = base_event(source);
  e.title_raw = xml_child(item, {"title"}).value_or("");
  e.description_raw =
      xml_child(item, {"description", "content:encoded", "summary", "content"}).value_or("");
  e.external_id = xml_child(item, {"guid", "id"});
  if (!e.external_id) e.external_id = atom ? atom_link(item) : xml_child(item, {"link"});
  e.starts_raw = xml_child(item, {"ev:startdate", "ev:starts", "startDate"});
  e.ends_raw = xml_child(item, {"ev:enddate", "ev:ends", "endDate"});
  e.lat_raw = xml_child(item, {"geo:lat"});
  e.lon_raw = xml_child(item, {"geo:long", "geo:lon"});
  e.city_raw = xml_child(item, {"ev:city", "city"});
  e.venue_raw = xml_child(item, {"ev:venue", "ev:location", "venue"});
  if (auto label = xml_child(item, {"ev:label"})) {
    try {
      e.label = std::stoi(*label);
    } catch (const std::exception&) {
    }
  }
  return e;
}

}  // namespace

FetchResult parse_feed(std::string_view payload, const SourceDescriptor& source) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(payload)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error("unparseable feed from " + source.source_id + ": " + e.message());
  }
  FetchResult out;
  auto take = [&](const pt::ptree& parent, const char* tag, bool atom) {
    for (const auto& [name, child] : parent) {
      if (name != tag) continue;
      RawEvent e = feed_item(child, source, atom);
      if (blank(e.title_raw)) {
        ++out.skipped_missing_title;
        continue;
      }
      out.events.push_back(std::move(e));
    }
  };
  if (auto channel = tree.get_child_optional("rss.channel")) {
    take(*channel, "item", false);
  } else if (auto rdf = tree.get_child_optional(pt::ptree::path_type("rdf:RDF", '\0'))) {
    take(*rdf, "item", false);
  } else if (auto feed = tree.get_child_optional("feed")) {
    take(*feed, "entry", true);
  } else {
    throw Error("feed from " + source.source_id + " is neither RSS nor Atom");
  }
  return out;
}

namespace {

std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from = 0) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k)
      match = std::tolower(static_cast<unsigned char>(hay[i + k])) ==
              std::tolower(static_cast<unsigned char>(needle[k]));
    if (match) return i;
  }
  return std::string_view::npos;
}

std::optional<std::string> element_text(std::string_view html, std::string_view tag) {
  std::string open = "<" + std::string(tag);
  std::size_t start = ifind(html, open);
  while (start != std::string_view::npos) {
    char next = start + open.size() < html.size() ? html[start + open.size()] : '\0';
    if (next == '>' || std::isspace(static_cast<unsigned char>(next))) break;
    start = ifind(html, open, start + 1);
  }
  if (start == std::string_view::npos) return std::nullopt;
  std::size_t body = html.find('>', start);
  if (body == std::string_view::npos) return std::nullopt;
  std::size_t end = ifind(html, "</" + std::string(tag), body);
  if (end == std::string_view::npos) end = html.size();
  return std::string(html.substr(body + 1, end - body - 1));
}

// name="value" pairs of one tag; names lowercased
std::map<std::string, std::string> tag_attributes(std::string_view tag) {
  std::map<std::string, std::string> out;
  std::size_t i = tag.find_first_of(" \t\r\n");
  while (i < tag.size()) {
    while (i < tag.size() && (std::isspace(static_cast<unsigned char>(tag[i])) || tag[i] == '/')) ++i;
    std::size_t key_start = i;
    while (i < tag.size() && tag[i] != '=' && !std::isspace(static_cast<unsigned char>(tag[i])) && tag[i] != '>') ++i;
    std::string key = to_lower_ascii(tag.substr(key_start, i - key_start));
    if (i >= tag.size() || tag[i] != '=') {
      if (!key.empty()) out[key] = "";
      if (i < tag.size() && tag[i] == '>') break;
      continue;
    }
    ++i;
    std::string value;
    if (i < tag.size() && (tag[i] == '"' || tag[i] == '\'')) {
      char q = tag[i++];
      std::size_t end = tag.find(q, i);
      if (end == std::string_view::npos) end = tag.size();
      value = tag.substr(i, end - i);
      i = end + 1;
    } else {
      std::size_t end = i;
      while (end < tag.size() && !std::isspace(static_cast<unsigned char>(tag[end])) && tag[end] != '>') ++end;
      value = tag.substr(i, end - i);
      i = end;
    }
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> meta_tags(std::string_view html) {
  std::map<std::string, std::string> out;
  for (std::size_t pos = ifind(html, "<meta"); pos != std::string_view::npos;
       pos = ifind(html, "<meta", pos + 1)) {
    std::size_t end = html.find('>', pos);
    if (end == std::string_view::npos) break;
    auto attrs = tag_attributes(html.substr(pos, end - pos + 1));
    std::string key = attrs.contains("name") ? attrs["name"] : attrs["property"];
    if (!key.empty() && attrs.contains("content"))
      out.emplace(to_lower_ascii(key), attrs["content"]);
  }
  return out;
}

}  // namespace

FetchResult parse_page(std::string_view html, const SourceDescriptor& source,
                       std::string page_id) {
  FetchResult out;
  RawEvent e = base_event(source);
  auto meta = meta_tags(html);
  auto meta_value = [&](std::initializer_list<const char*> keys) -> std::optional<std::string> {
    for (const char* k : keys)
      if (auto it = meta.find(k); it != meta.end() && !blank(it->second)) return it->second;
    return std::nullopt;
  };
  e.title_raw = meta_value({"og:title"}).value_or(
      element_text(html, "title").value_or(element_text(html, "h1").value_or("")));
  if (blank(e.title_raw)) {
    out.skipped_missing_title = 1;
    return out;
  }
  e.external_id = std::move(page_id);
  e.description_raw = meta_value({"description", "og:description"})
                          .value_or(element_text(html, "body").value_or(""));
  e.starts_raw = meta_value({"event:starts", "event:start_date"});
  e.ends_raw = meta_value({"event:ends", "event:end_date"});
  e.city_raw = meta_value({"event:city", "geo.placename"});
  e.venue_raw = meta_value({"event:venue"});
  if (auto pos = meta_value({"geo.position"})) {
    auto semi = pos->find(';');
    if (semi != std::string::npos) {
      e.lat_raw = pos->substr(0, semi);
      e.lon_raw = pos->substr(semi + 1);
    }
  }
  if (auto label = meta_value({"event:label"})) {
    try {
      e.label = std::stoi(*label);
    } catch (const std::exception&) {
    }
  }
  out.events.push_back(std::move(e));
  return out;
}

FetchResult fetch_source(const SourceDescriptor& source) {
  switch (source.kind) {
    case SourceKind::kApiDump:
      return parse_api_dump(read_location(source.location), source);
    case SourceKind::kFeed:
      return parse_feed(read_location(source.location), source);
    case SourceKind::kScrapedPageSet: {
      std::filesystem::path dir(source.location);
      if (!std::filesystem::is_directory(dir)) throw Error("unreachable: " + source.location);
      std::vector<std::filesystem::path> pages;
      for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        auto ext = to_lower_ascii(entry.path().extension().string());
        if (entry.is_regular_file() && (ext == ".html" || ext == ".htm"))
          pages.push_back(entry.path());
      }
      std::sort(pages.begin(), pages.end());
      FetchResult out;
      for (const auto& page : pages) {
        FetchResult one = parse_page(read_file(page), source, page.stem().string());
        out.skipped_missing_title += one.skipped_missing_title;
        for (auto& e : one.events) out.events.push_back(std::move(e));
      }
      return out;
    }
  }
  throw Error("unknown source kind");
}

IngestResult fetch_all(const std::vector<SourceDescriptor>& sources, std::size_t parallel,
                       std::int64_t fetch_time_ms) {
  std::vector<FetchResult> results(sources.size());
  std::vector<std::optional<std::string>> errors(sources.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      try {
        results[i] = fetch_source(sources[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::size_t threads = std::clamp<std::size_t>(parallel, 1, std::max<std::size_t>(1, sources.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  IngestResult out;
  std::int64_t clock = fetch_time_ms;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    out.reports.push_back({sources[i].source_id, results[i].events.size(),
                           results[i].skipped_missing_title, errors[i]});
    for (auto& e : results[i].events) {
      e.fetched_at_ms = clock++;
      out.events.push_back(std::move(e));
    }
  }
  return out;
}

std::uint64_t content_hash(const RawEvent& e) {
  std::uint64_t h = fnv1a(e.title_raw);
  h = fnv1a("\x1f", h);
  h = fnv1a(e.starts_raw.value_or(""), h);
  h = fnv1a("\x1f", h);
  return fnv1a(e.city_raw.value_or(""), h);
}

std::string dedupe_key(const RawEvent& e) {
  if (e.external_id) return "id\x1f" + e.source_id + "\x1f" + *e.external_id;
  return "h\x1f" + std::to_string(content_hash(e));
}

std::vector<RawEvent> dedupe(const std::vector<RawEvent>& events) {
  std::unordered_set<std::string> seen;
  std::vector<RawEvent> out;
  for (const auto& e : events)
    if (seen.insert(dedupe_key(e)).second) out.push_back(e);
  return out;
}

std::size_t append_raw(const std::filesystem::path& store, const std::vector<RawEvent>& events) {
  JsonlWriter writer(store, true);
  for (const auto& e : events) writer.write(to_json(e));
  return writer.written();
}

ReadResult<RawEvent> read_raw(const std::filesystem::path& store,
                              const std::optional<std::string>& source_id) {
  auto result = read_jsonl_as<RawEvent>(store, raw_event_from_json);
  if (source_id)
    std::erase_if(result.records, [&](const RawEvent& e) { return e.source_id != *source_id; });
  return result;
}

}  // namespace evtax
