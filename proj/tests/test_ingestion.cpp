#include <thread>

#include "doctest.h"

#include "support.hpp"

// after Eigen: <resolv.h> defines a _res macro
#include "httplib.h"

using namespace evtax;
using testing::fixture;

namespace {

SourceDescriptor feed(const std::string& id, const std::string& file) {
  SourceDescriptor s;
  s.source_id = id;
  s.kind = SourceKind::kFeed;
  s.location = fixture(file).string();
  return s;
}

RawEvent ev(std::string source, std::optional<std::string> ext, std::string title,
            std::optional<std::string> starts = {}, std::optional<std::string> city = {}) {
  RawEvent e;
  e.source_id = std::move(source);
  e.external_id = std::move(ext);
  e.title_raw = std::move(title);
  e.starts_raw = std::move(starts);
  e.city_raw = std::move(city);
  return e;
}

// Pairwise: i survives iff no earlier j is the same event.
bool same_event(const RawEvent& a, const RawEvent& b) {
  if (a.external_id && b.external_id)
    return a.source_id == b.source_id && *a.external_id == *b.external_id;
  if (a.external_id || b.external_id) return false;
  return a.title_raw == b.title_raw && a.starts_raw == b.starts_raw && a.city_raw == b.city_raw;
}

std::vector<RawEvent> pairwise_dedupe(const std::vector<RawEvent>& in) {
  std::vector<RawEvent> out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    bool dup = false;
    for (std::size_t j = 0; j < i && !dup; ++j) dup = same_event(in[i], in[j]);
    if (!dup) out.push_back(in[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("rss feed keeps every item in order") {
  auto r = fetch_source(feed("rss", "feed_rss.xml"));
  REQUIRE(r.events.size() == 5);
  CHECK(r.skipped_missing_title == 0);
  CHECK(r.events[0].external_id == "rss-1");
  CHECK(r.events[0].title_raw == "Jazz night at the Blue Room");
  CHECK(r.events[0].starts_raw == "2019-11-05T20:00:00+00:00");
  CHECK(r.events[0].ends_raw == "2019-11-05T23:00:00+00:00");
  CHECK(r.events[0].venue_raw == "Blue Room");
  CHECK(r.events[0].lat_raw == "55.8642");
  CHECK(r.events[0].lon_raw == "-4.2518");
  CHECK(r.events[3].external_id == "https://example.org/events/4");
  CHECK(r.events[4].title_raw == "Fireworks over the river");
  for (const auto& e : r.events) CHECK(e.source_id == "rss");

  auto cleaned = clean_event(r.events[0]);
  CHECK(cleaned.description == "Quartet guests, free entry");
}

TEST_CASE("atom entry with a blank title is skipped") {
  auto r = fetch_source(feed("atom", "feed_atom.xml"));
  CHECK(r.skipped_missing_title == 1);
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].title_raw == "Opera gala");
  CHECK(r.events[0].description_raw == "An evening of arias");
  CHECK(r.events[1].title_raw == "Robotics expo");
  CHECK(r.events[1].description_raw == "Industry stands and talks");
}

TEST_CASE("scraped page set") {
  SourceDescriptor s;
  s.source_id = "pages";
  s.kind = SourceKind::kScrapedPageSet;
  s.location = fixture("pages").string();
  auto r = fetch_source(s);
  CHECK(r.skipped_missing_title == 1);
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].title_raw == "Symphony in the park");
  CHECK(r.events[0].external_id == "a_concert");
  CHECK(r.events[1].title_raw == "Tech Summit 2019");
  CHECK(r.events[1].starts_raw == "2019-10-01T09:00:00+02:00");
  CHECK(r.events[1].city_raw == "Madrid");
  CHECK(r.events[1].venue_raw == "IFEMA");
  CHECK(clean_event(r.events[1]).description == "Keynotes, workshops an expo floor");
}

TEST_CASE("api dump with the five catalog events") {
  SourceDescriptor s;
  s.source_id = "fig3";
  s.location = fixture("fig3_events.json").string();
  auto r = fetch_source(s);
  REQUIRE(r.events.size() == 5);
  CHECK(r.events[0].title_raw == "London Dungeon LATES with Cocktail");
  CHECK(r.events[1].title_raw == "Drumchapel & West Winterfest Fireworks");
  CHECK(r.events[2].title_raw == "MEGALAND 2019");
  CHECK(r.events[3].title_raw == "Extravaganza");
  CHECK(r.events[4].title_raw == "A Nightmare on Duddell's Street");
  CHECK(r.events[2].city_raw == "Bogotá");
  CHECK(r.events[0].label == 4);
}

TEST_CASE("fetch is deterministic over fixtures") {
  for (int i = 0; i < 3; ++i) {
    CHECK(fetch_source(feed("rss", "feed_rss.xml")).events ==
          fetch_source(feed("rss", "feed_rss.xml")).events);
  }
}

TEST_CASE("unreadable sources and payloads") {
  CHECK_THROWS_AS(fetch_source(feed("x", "does_not_exist.xml")), Error);
  SourceDescriptor s;
  s.source_id = "bad";
  CHECK_THROWS_AS(parse_api_dump("{not json", s), Error);
  CHECK_THROWS_AS(parse_feed("<rss><channel><item>", s), Error);
}

TEST_CASE("fetch_all stamps a strictly increasing clock and isolates failures") {
  std::vector<SourceDescriptor> sources = {feed("rss", "feed_rss.xml"), feed("gone", "missing.xml"),
                                           feed("atom", "feed_atom.xml")};
  auto r = fetch_all(sources, 3, 1000);
  REQUIRE(r.reports.size() == 3);
  CHECK(r.reports[0].fetched == 5);
  CHECK(r.reports[1].error.has_value());
  CHECK(r.reports[2].skipped_missing_title == 1);
  REQUIRE(r.events.size() == 7);
  CHECK(r.events[0].source_id == "rss");
  CHECK(r.events[6].source_id == "atom");
  for (std::size_t k = 0; k < r.events.size(); ++k)
    CHECK(r.events[k].fetched_at_ms == 1000 + static_cast<std::int64_t>(k));

  auto serial = fetch_all(sources, 1, 1000);
  CHECK(serial.events == r.events);
}

TEST_CASE("source configuration") {
  const auto& t = testing::default_taxonomy();
  auto sources = load_sources(R"({"sources":[
    {"source_id":"a","kind":"feed","location":"feed.xml","trust":"music"},
    {"source_id":"b","kind":"api-dump","location":"/abs/dump.json",
     "venue_rules":{"IFEMA":"trade fairs and conferences","Stadium":3}}]})",
                              t, "/base");
  REQUIRE(sources.size() == 2);
  CHECK(sources[0].location == "/base/feed.xml");
  CHECK(sources[0].trust == 0);
  CHECK(sources[1].location == "/abs/dump.json");
  CHECK(sources[1].venue_rules.at("ifema") == 5);
  CHECK(sources[1].venue_rules.at("stadium") == 3);
  CHECK_THROWS_AS(load_sources(R"([{"source_id":"a","kind":"feed","location":"x","trust":"ballet"}])", t),
                  Error);
  CHECK_THROWS_AS(load_sources(R"([{"source_id":"a","kind":"rss","location":"x"}])", t), Error);
  CHECK_THROWS_AS(load_sources(R"([{"source_id":"a","kind":"feed","location":"x"},
                                   {"source_id":"a","kind":"feed","location":"y"}])",
                               t),
                  Error);
}

TEST_CASE("dedupe") {
  SUBCASE("exact duplicate from one source") {
    auto e = ev("s", "1", "Gig");
    CHECK(dedupe({e, e}).size() == 1);
  }
  SUBCASE("same title from two sources with their own ids") {
    CHECK(dedupe({ev("s1", "1", "Gig"), ev("s2", "1", "Gig")}).size() == 2);
  }
  SUBCASE("content hash pair") {
    std::vector<RawEvent> in = {ev("s1", {}, "Gig", "2019-01-01", "Rome"),
                                ev("s2", {}, "Other", "2019-01-01", "Rome"),
                                ev("s3", {}, "Gig", "2019-01-01", "Rome")};
    auto out = dedupe(in);
    CHECK(out.size() == 2);
    CHECK(out == pairwise_dedupe(in));
  }
  SUBCASE("fuzzed against the pairwise oracle, and idempotent") {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 200; ++round) {
      std::vector<RawEvent> in;
      std::size_t n = uniform_below(rng, 30);
      for (std::size_t i = 0; i < n; ++i) {
        std::optional<std::string> ext;
        if (uniform_below(rng, 2)) ext = std::to_string(uniform_below(rng, 4));
        std::optional<std::string> starts;
        if (uniform_below(rng, 2)) starts = "2019-01-0" + std::to_string(1 + uniform_below(rng, 2));
        in.push_back(ev("s" + std::to_string(uniform_below(rng, 2)), ext,
                        "t" + std::to_string(uniform_below(rng, 3)), starts,
                        uniform_below(rng, 2) ? std::optional<std::string>("Rome") : std::nullopt));
      }
      auto once = dedupe(in);
      CHECK(once == pairwise_dedupe(in));
      CHECK(dedupe(once) == once);
    }
  }
}

TEST_CASE("raw store round trip") {
  testing::TempDir dir;
  auto store = dir / "raw.jsonl";
  std::vector<RawEvent> batch;
  for (int i = 0; i < 10; ++i) {
    RawEvent e = ev("s", std::to_string(i), "Event \"" + std::to_string(i) + "\"\nline", "2019-01-01",
                    "Zürich");
    e.description_raw = "<b>x</b> \\u00e9";
    e.lat_raw = "47.37";
    e.lon_raw = "8.54";
    e.venue_raw = "Hall";
    e.locale = "de";
    e.fetched_at_ms = i;
    if (i % 2) e.label = i % 7;
    batch.push_back(e);
  }
  CHECK(append_raw(store, batch) == 10);
  auto back = read_raw(store);
  CHECK(back.errors.empty());
  CHECK(back.records == batch);

  CHECK(append_raw(store, batch) == 10);
  CHECK(read_raw(store).records.size() == 20);
  CHECK(read_raw(store, std::string("s")).records.size() == 20);
  CHECK(read_raw(store, std::string("other")).records.empty());
}

TEST_CASE("corrupt line in the raw store is reported and skipped") {
  auto r = read_raw(fixture("raw_store_corrupt.jsonl"));
  CHECK(r.records.size() == 3);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].line == 3);
  CHECK(r.records[2].title_raw == "Fourth");
  CHECK(r.records[2].label == 3);
}

TEST_CASE("live feed over http") {
  httplib::Server server;
  const std::string body = read_file(fixture("feed_rss.xml"));
  server.Get("/feed.xml", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(body, "application/rss+xml");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  SourceDescriptor s = feed("live", "unused");
  s.location = "http://127.0.0.1:" + std::to_string(port) + "/feed.xml";
  auto live = fetch_source(s);
  auto local = fetch_source(feed("live", "feed_rss.xml"));
  CHECK(live.events == local.events);

  s.location = "http://127.0.0.1:" + std::to_string(port) + "/missing.xml";
  CHECK_THROWS_AS(fetch_source(s), Error);

  server.stop();
  worker.join();
}
