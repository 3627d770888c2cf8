#include "evtax/corpus.hpp"

#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "evtax/random.hpp"

namespace evtax {

void SyntheticCorpusSpec::validate() const {
  if (events_per_class.empty()) throw Error("corpus spec: no classes");
  if (!(noise_ratio >= 0.0 && noise_ratio < 1.0)) throw Error("corpus spec: noise_ratio must be in [0, 1)");
  if (!(accent_rate >= 0.0 && accent_rate <= 1.0)) throw Error("corpus spec: accent_rate must be in [0, 1]");
  if (!(contamination_rate >= 0.0 && contamination_rate <= 1.0))
    throw Error("corpus spec: contamination_rate must be in [0, 1]");
  if (title_words == 0) throw Error("corpus spec: title_words must be positive");
  if (noise_ratio > 0 && noise_vocabulary.empty())
    throw Error("corpus spec: noise_ratio > 0 needs a noise vocabulary");
  auto check_word = [](const std::string& w) {
    if (w.empty()) throw Error("corpus spec: empty word");
    for (char c : w)
      if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')))
        throw Error("corpus spec: word '" + w + "' is not lowercase ASCII");
  };
  for (const auto& w : noise_vocabulary) check_word(w);
  std::map<std::string, CategoryId> owner;
  for (const auto& [id, pool] : keyword_pools) {
    for (const auto& w : pool) {
      check_word(w);
      auto [it, fresh] = owner.emplace(w, id);
      if (!fresh && it->second != id)
        throw Error("corpus spec: keyword '" + w + "' is in the pools of " +
                    std::to_string(it->second) + " and " + std::to_string(id));
    }
  }
  for (const auto& [id, n] : events_per_class) {
    (void)n;
    auto it = keyword_pools.find(id);
    if (it == keyword_pools.end() || it->second.empty())
      throw Error("corpus spec: class " + std::to_string(id) + " has no keyword pool");
  }
}

Json to_json(const SyntheticCorpusSpec& spec) {
  Json classes = Json::array();
  for (const auto& [id, pool] : spec.keyword_pools) {
    auto n = spec.events_per_class.find(id);
    classes.push_back({{"id", id},
                       {"events", n == spec.events_per_class.end() ? 0 : n->second},
                       {"keywords", pool}});
  }
  return {{"seed", spec.seed},
          {"source_id", spec.source_id},
          {"noise_ratio", spec.noise_ratio},
          {"accent_rate", spec.accent_rate},
          {"contamination_rate", spec.contamination_rate},
          {"title_words", spec.title_words},
          {"description_words", spec.description_words},
          {"classes", classes},
          {"noise", spec.noise_vocabulary}};
}

SyntheticCorpusSpec corpus_spec_from_json(const Json& j) {
  SyntheticCorpusSpec s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.source_id = j.value("source_id", s.source_id);
    s.noise_ratio = j.value("noise_ratio", s.noise_ratio);
    s.accent_rate = j.value("accent_rate", s.accent_rate);
    s.contamination_rate = j.value("contamination_rate", s.contamination_rate);
    s.title_words = j.value("title_words", s.title_words);
    s.description_words = j.value("description_words", s.description_words);
    s.noise_vocabulary = j.value("noise", std::vector<std::string>{});
    for (const Json& c : j.at("classes")) {
      CategoryId id = c.at("id").get<CategoryId>();
      if (s.keyword_pools.contains(id)) throw Error("corpus spec: class " + std::to_string(id) + " listed twice");
      s.events_per_class[id] = c.at("events").get<std::size_t>();
      s.keyword_pools[id] = c.at("keywords").get<std::vector<std::string>>();
    }
  } catch (const Json::exception& e) {
    throw Error(std::string("corpus spec: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticCorpusSpec load_corpus_spec(const std::filesystem::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("corpus spec " + path.string() + " is not a JSON object");
  return corpus_spec_from_json(j);
}

std::filesystem::path default_corpus_spec_path() {
  return std::filesystem::path(EVTAX_DATA_DIR) / "demo_corpus.json";
}

namespace {

struct City {
  const char* name;
  double lat, lon;
  const char* offset;
};

constexpr City kCities[] = {
    {"London", 51.5074, -0.1278, "+00:00"},     {"Madrid", 40.4168, -3.7038, "+01:00"},
    {"Paris", 48.8566, 2.3522, "+01:00"},       {"Berlin", 52.52, 13.405, "+01:00"},
    {"New York", 40.7128, -74.006, "-05:00"},   {"Tokyo", 35.6762, 139.6503, "+09:00"},
    {"Sydney", -33.8688, 151.2093, "+11:00"},   {"Buenos Aires", -34.6037, -58.3816, "-03:00"},
};

// Acute vowels as UTF-8 and as \u escapes.
constexpr const char* kAccented[] = {"\xC3\xA1", "\xC3\xA9", "\xC3\xAD", "\xC3\xB3", "\xC3\xBA"};
constexpr const char* kEscaped[] = {"\\u00e1", "\\u00e9", "\\u00ed", "\\u00f3", "\\u00fa"};

int vowel_index(char c) {
  switch (c) {
    case 'a': return 0;
    case 'e': return 1;
    case 'i': return 2;
    case 'o': return 3;
    case 'u': return 4;
    default: return -1;
  }
}

// Replaces the first vowel; words without one come back unchanged.
std::string accent(const std::string& word, const char* const* table) {
  for (std::size_t i = 0; i < word.size(); ++i) {
    int v = vowel_index(word[i]);
    if (v >= 0) return word.substr(0, i) + table[v] + word.substr(i + 1);
  }
  return word;
}

class Generator {
 public:
  Generator(const SyntheticCorpusSpec& spec) : spec_(spec), rng_(spec.seed) {}

  std::vector<std::string> words(CategoryId id, std::size_t n) {
    const auto& pool = spec_.keyword_pools.at(id);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
      const bool noise = uniform_unit(rng_) < spec_.noise_ratio;
      const auto& from = noise ? spec_.noise_vocabulary : pool;
      std::string w = from[uniform_below(rng_, from.size())];
      if (uniform_unit(rng_) < spec_.accent_rate) w = accent(w, kAccented);
      out.push_back(std::move(w));
    }
    return out;
  }

  static std::string join(const std::vector<std::string>& ws) {
    std::string s;
    for (const auto& w : ws) s += (s.empty() ? "" : " ") + w;
    return s;
  }

  void contaminate(RawEvent& e, std::vector<std::string>& desc) {
    switch (uniform_below(rng_, 5)) {
      case 0:
        e.title_raw = "<b>" + e.title_raw + "</b>";
        e.description_raw = "<p>" + join(desc) + "</p><br/>";
        return;
      case 1: {
        std::size_t at = desc.empty() ? 0 : uniform_below(rng_, desc.size());
        desc.insert(desc.begin() + static_cast<std::ptrdiff_t>(at), "&amp;&nbsp;");
        break;
      }
      case 2:
        if (desc.empty()) {
          desc.push_back("\\u00a0");
        } else {
          auto& w = desc[uniform_below(rng_, desc.size())];
          w = accent(w, kEscaped);
        }
        break;
      case 3:
        desc.push_back("tickets@" + spec_.source_id + ".example.org");
        break;
      default:
        desc.push_back("https://tickets.example.org/e/" + std::to_string(uniform_below(rng_, 100000)));
        break;
    }
    e.description_raw = join(desc);
  }

  RawEvent event(CategoryId id, bool& contaminated) {
    RawEvent e;
    e.source_id = spec_.source_id;
    e.label = id;
    auto title = words(id, spec_.title_words);
    title[0][0] = static_cast<char>(title[0][0] >= 'a' && title[0][0] <= 'z' ? title[0][0] - 32 : title[0][0]);
    e.title_raw = join(title);
    auto desc = words(id, spec_.description_words);
    e.description_raw = join(desc);

    const City& city = kCities[uniform_below(rng_, std::size(kCities))];
    const double lat = city.lat + (uniform_unit(rng_) - 0.5) * 0.1;
    const double lon = city.lon + (uniform_unit(rng_) - 0.5) * 0.1;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", lat);
    e.lat_raw = buf;
    std::snprintf(buf, sizeof buf, "%.6f", lon);
    e.lon_raw = buf;
    e.city_raw = city.name;

    using namespace std::chrono;
    const std::chrono::year_month_day day{sys_days{2024y / January / 1} +
                                          days{uniform_below(rng_, 366)}};
    const int hour = 9 + static_cast<int>(uniform_below(rng_, 13));
    const int length = 1 + static_cast<int>(uniform_below(rng_, 4));
    auto stamp = [&](int h) {
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00%s", static_cast<int>(day.year()),
                    static_cast<unsigned>(day.month()), static_cast<unsigned>(day.day()), h,
                    city.offset);
      return std::string(buf);
    };
    e.starts_raw = stamp(hour);
    if (hour + length <= 23) e.ends_raw = stamp(hour + length);

    contaminated = uniform_unit(rng_) < spec_.contamination_rate;
    if (contaminated) contaminate(e, desc);
    return e;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  const SyntheticCorpusSpec& spec_;
  std::mt19937_64 rng_;
};

}  // namespace

SyntheticCorpus generate_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Generator gen(spec);
  std::vector<RawEvent> events;
  std::vector<bool> dirty;
  for (const auto& [id, n] : spec.events_per_class) {
    for (std::size_t i = 0; i < n; ++i) {
      bool c = false;
      events.push_back(gen.event(id, c));
      dirty.push_back(c);
    }
  }
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  seeded_shuffle(order, gen.rng());
  SyntheticCorpus out;
  out.events.reserve(events.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    RawEvent e = std::move(events[order[k]]);
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", k + 1);
    e.external_id = id;
    out.events.push_back(std::move(e));
    out.contaminated.push_back(dirty[order[k]]);
  }
  return out;
}

std::string corpus_to_api_dump(const std::vector<RawEvent>& events) {
  Json items = Json::array();
  for (const auto& e : events) {
    Json j = {{"title", e.title_raw}, {"description", e.description_raw}};
    if (e.external_id) j["id"] = *e.external_id;
    if (e.starts_raw) j["starts"] = *e.starts_raw;
    if (e.ends_raw) j["ends"] = *e.ends_raw;
    if (e.lat_raw) j["latitude"] = *e.lat_raw;
    if (e.lon_raw) j["longitude"] = *e.lon_raw;
    if (e.city_raw) j["city"] = *e.city_raw;
    if (e.venue_raw) j["venue"] = *e.venue_raw;
    if (e.locale) j["language"] = *e.locale;
    if (e.label) j["label"] = *e.label;
    items.push_back(std::move(j));
  }
  Json doc = {{"events", std::move(items)}};
  return doc.dump(1) + "\n";
}

}  // namespace evtax
