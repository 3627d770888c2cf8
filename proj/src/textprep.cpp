#include "evtax/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace evtax {

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::optional<char32_t> hex4(std::string_view s, std::size_t pos) {
  if (pos + 4 > s.size()) return std::nullopt;
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + 4, v, 16);
  if (ec != std::errc{} || ptr != s.data() + pos + 4) return std::nullopt;
  return static_cast<char32_t>(v);
}

std::string decode_unicode_escapes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == 'u') {
      if (auto cp = hex4(s, i + 2)) {
        std::size_t used = 6;
        char32_t value = *cp;
        if (value >= 0xD800 && value <= 0xDBFF) {
          auto low = (i + 12 <= s.size() && s[i + 6] == '\\' && s[i + 7] == 'u')
                         ? hex4(s, i + 8)
                         : std::nullopt;
          if (low && *low >= 0xDC00 && *low <= 0xDFFF) {
            value = 0x10000 + ((value - 0xD800) << 10) + (*low - 0xDC00);
            used = 12;
          } else {
            value = 0xFFFD;
          }
        } else if (value >= 0xDC00 && value <= 0xDFFF) {
          value = 0xFFFD;
        }
        append_utf8(out, value);
        i += used;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

const Json* find_string_field(const Json& j, const char* key) {
  if (j.is_object()) {
    if (auto it = j.find(key); it != j.end() && it->is_string()) return &*it;
    for (const auto& [k, v] : j.items())
      if (const Json* hit = find_string_field(v, key)) return hit;
  } else if (j.is_array()) {
    for (const auto& v : j)
      if (const Json* hit = find_string_field(v, key)) return hit;
  }
  return nullptr;
}

// A payload that is itself a JSON object carrying title/description.
std::optional<std::string> embedded_json_text(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos || s[first] != '{') return std::nullopt;
  Json j = Json::parse(s.substr(first), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const Json* title = find_string_field(j, "title");
  const Json* description = find_string_field(j, "description");
  if (!title && !description) return std::nullopt;
  std::string out = title ? title->get<std::string>() : "";
  if (description) out += " " + description->get<std::string>();
  return out;
}

bool tag_start(std::string_view s, std::size_t i) {
  if (s[i] != '<' || i + 1 >= s.size()) return false;
  char c = s[i + 1];
  return std::isalpha(static_cast<unsigned char>(c)) || c == '/' || c == '!' || c == '?';
}

std::string strip_tags(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (tag_start(s, i)) {
      std::size_t close = s.find('>', i + 1);
      if (close != std::string_view::npos) {
        out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string decode_entities(std::string_view s) {
  static const std::map<std::string_view, std::string_view> kNamed = {
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      std::size_t semi = s.find(';', i + 1);
      if (semi != std::string_view::npos && semi - i <= 10) {
        std::string_view name = s.substr(i + 1, semi - i - 1);
        if (auto it = kNamed.find(name); it != kNamed.end()) {
          out += it->second;
          i = semi + 1;
          continue;
        }
        if (name.size() >= 2 && name[0] == '#') {
          bool hex = name[1] == 'x' || name[1] == 'X';
          std::string_view digits = name.substr(hex ? 2 : 1);
          unsigned v = 0;
          auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v,
                                           hex ? 16 : 10);
          if (!digits.empty() && ec == std::errc{} && ptr == digits.data() + digits.size()) {
            if (v == 0 || v > 0x10FFFF || (v >= 0xD800 && v <= 0xDFFF)) v = 0xFFFD;
            append_utf8(out, static_cast<char32_t>(v));
            i = semi + 1;
            continue;
          }
        }
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

bool is_ascii_control(unsigned char c) { return c < 0x20 || c == 0x7F; }

std::string fold_to_ascii(std::string_view s) {
  bool ascii = std::all_of(s.begin(), s.end(), [](char c) { return (c & 0x80) == 0; });
  std::string out;
  out.reserve(s.size());
  if (ascii) {
    for (char c : s) out.push_back(is_ascii_control(static_cast<unsigned char>(c)) ? ' ' : c);
    return out;
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFD normalizer unavailable");
  icu::UnicodeString decomposed =
      nfd->normalize(icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size()))), status);
  if (U_FAILURE(status)) throw Error("ICU normalization failed");
  for (int32_t i = 0; i < decomposed.length();) {
    UChar32 cp = decomposed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_charType(cp) == U_NON_SPACING_MARK) continue;
    if (cp < 0x80 && !is_ascii_control(static_cast<unsigned char>(cp)))
      out.push_back(static_cast<char>(cp));
    else
      out.push_back(' ');
  }
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_email_local(char c) {
  return is_alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}
bool is_domain_char(char c) { return is_alnum(c) || c == '.' || c == '-'; }

// Returns the end of a valid domain starting at `from`, or npos.
std::size_t email_domain_end(std::string_view s, std::size_t from) {
  std::size_t r = from;
  while (r < s.size() && is_domain_char(s[r])) ++r;
  // labels separated by single dots; stop at the first empty label
  std::vector<std::pair<std::size_t, std::size_t>> labels;
  std::size_t start = from;
  for (std::size_t i = from; i <= r; ++i) {
    if (i == r || s[i] == '.') {
      if (i == start) break;
      labels.emplace_back(start, i);
      start = i + 1;
    }
  }
  while (labels.size() >= 2) {
    auto [b, e] = labels.back();
    bool alpha = e - b >= 2 && std::all_of(s.begin() + b, s.begin() + e,
                                           [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
    if (alpha) return e;
    labels.pop_back();
  }
  return std::string_view::npos;
}

std::string remove_emails(std::string_view s) {
  std::string out(s);
  for (std::size_t at = out.find('@'); at != std::string::npos; at = out.find('@', at + 1)) {
    std::size_t l = at;
    while (l > 0 && is_email_local(out[l - 1])) --l;
    if (l == at) continue;
    std::size_t r = email_domain_end(out, at + 1);
    if (r == std::string::npos) continue;
    out.replace(l, r - l, " ");
    at = l;
  }
  return out;
}

bool istarts_with(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k)
    if (std::tolower(static_cast<unsigned char>(s[pos + k])) != prefix[k]) return false;
  return true;
}

std::string remove_urls(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (istarts_with(s, i, "http://") || istarts_with(s, i, "https://") ||
        istarts_with(s, i, "www.")) {
      while (i < s.size() && !is_space(s[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string map_punctuation(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (std::ispunct(static_cast<unsigned char>(c)) && c != '.' && c != ',' && c != '-' &&
        c != '\'')
      c = ' ';
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] != '\'') continue;
    bool inner = i > 0 && i + 1 < out.size() && is_alnum(out[i - 1]) && is_alnum(out[i + 1]);
    if (!inner) out[i] = ' ';
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string clean_text(std::string_view raw) {
  std::string s = decode_unicode_escapes(raw);
  if (auto embedded = embedded_json_text(s)) return clean_text(*embedded);
  s = decode_entities(strip_tags(s));
  s = fold_to_ascii(s);
  s = remove_urls(remove_emails(s));
  return collapse_whitespace(map_punctuation(s));
}

std::string build_text(std::string_view title, std::string_view description,
                       std::size_t max_chars) {
  std::string text(title);
  if (!description.empty()) {
    if (!text.empty()) text.push_back(' ');
    text += description;
  }
  if (text.size() <= max_chars) return text;
  std::size_t cut = max_chars;
  if (text[cut] != ' ') {
    std::size_t space = text.rfind(' ', cut);
    if (space != std::string::npos) cut = space;
  }
  while (cut > 0 && text[cut - 1] == ' ') --cut;
  return text.substr(0, cut);
}

namespace {

std::optional<double> parse_degrees(const std::optional<std::string>& raw) {
  if (!raw) return std::nullopt;
  std::string s = *raw;
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::string> trimmed(const std::optional<std::string>& raw) {
  if (!raw) return std::nullopt;
  std::string s = collapse_whitespace(*raw);
  if (s.empty()) return std::nullopt;
  return s;
}

bool lat_ok(double v) { return v >= -90.0 && v <= 90.0; }
bool lon_ok(double v) { return v >= -180.0 && v <= 180.0; }

}  // namespace

CleanEvent clean_event(const RawEvent& raw, std::size_t max_chars) {
  CleanEvent e;
  e.source_id = raw.source_id;
  e.external_id = raw.external_id;
  e.title = clean_text(raw.title_raw);
  e.description = clean_text(raw.description_raw);
  e.text = build_text(e.title, e.description, max_chars);
  e.language = raw.locale;
  if (raw.starts_raw) e.starts = parse_timestamp(*raw.starts_raw);
  if (raw.ends_raw) e.ends = parse_timestamp(*raw.ends_raw);
  if (e.starts && e.ends && *e.ends < *e.starts) e.ends.reset();
  auto lat = parse_degrees(raw.lat_raw);
  auto lon = parse_degrees(raw.lon_raw);
  if (lat && lon) {
    if (lat_ok(*lat) && lon_ok(*lon)) {
      e.latitude = lat;
      e.longitude = lon;
    } else if (lat_ok(*lon) && lon_ok(*lat)) {
      e.latitude = lon;
      e.longitude = lat;
    }
  }
  e.city = trimmed(raw.city_raw);
  e.venue = trimmed(raw.venue_raw);
  e.label = raw.label;
  return e;
}

namespace {

template <typename T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<std::string> opt_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

std::optional<Timestamp> opt_time(const Json& j, const char* key) {
  auto s = opt_string(j, key);
  if (!s) return std::nullopt;
  auto ts = parse_timestamp(*s);
  if (!ts) throw Error(std::string("bad timestamp in ") + key);
  return ts;
}

std::optional<double> opt_double(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

Json to_json(const CleanEvent& e) {
  Json j = Json::object();
  j["source_id"] = e.source_id;
  j["external_id"] = opt_json(e.external_id);
  j["title"] = e.title;
  j["description"] = e.description;
  j["text"] = e.text;
  j["language"] = opt_json(e.language);
  j["starts"] = e.starts ? Json(format_timestamp(*e.starts)) : Json(nullptr);
  j["ends"] = e.ends ? Json(format_timestamp(*e.ends)) : Json(nullptr);
  j["latitude"] = opt_json(e.latitude);
  j["longitude"] = opt_json(e.longitude);
  j["city"] = opt_json(e.city);
  j["venue"] = opt_json(e.venue);
  j["label"] = opt_json(e.label);
  return j;
}

CleanEvent clean_event_from_json(const Json& j) {
  CleanEvent e;
  e.source_id = j.at("source_id").get<std::string>();
  e.external_id = opt_string(j, "external_id");
  e.title = j.at("title").get<std::string>();
  e.description = j.value("description", std::string{});
  e.text = j.at("text").get<std::string>();
  e.language = opt_string(j, "language");
  e.starts = opt_time(j, "starts");
  e.ends = opt_time(j, "ends");
  e.latitude = opt_double(j, "latitude");
  e.longitude = opt_double(j, "longitude");
  if (e.latitude && !lat_ok(*e.latitude)) throw Error("latitude out of range");
  if (e.longitude && !lon_ok(*e.longitude)) throw Error("longitude out of range");
  e.city = opt_string(j, "city");
  e.venue = opt_string(j, "venue");
  if (j.contains("label") && !j["label"].is_null()) e.label = j["label"].get<CategoryId>();
  return e;
}

// --- vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_ = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  tokens_.insert(tokens_.end(), std::make_move_iterator(tokens.begin()),
                 std::make_move_iterator(tokens.end()));
  for (std::size_t i = kNumSpecial; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("vocabulary: empty token at id " + std::to_string(i));
    if (!ids_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second)
      throw Error("vocabulary: duplicate token '" + tokens_[i] + "'");
  }
}

std::int32_t Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw Error("vocabulary: id out of range " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return {tokens_.begin() + kNumSpecial, tokens_.end()};
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t max_size,
                       std::size_t min_freq) {
  if (corpus.empty()) throw Error("vocabulary: empty corpus");
  if (max_size < static_cast<std::size_t>(kNumSpecial))
    throw Error("vocabulary: max_size must be at least 4");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (auto& w : split_words(doc)) ++counts[to_lower_ascii(w)];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts)
    if (n >= std::max<std::size_t>(min_freq, 1)) ranked.emplace_back(token, n);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::size_t keep = std::min(ranked.size(), max_size - kNumSpecial);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(ranked[i].first));
  return Vocabulary(std::move(tokens));
}

std::string serialize_vocab(const Vocabulary& vocab) {
  std::string out;
  for (const auto& t : vocab.regular_tokens()) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

Vocabulary parse_vocab(std::string_view document) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < document.size()) {
    std::size_t end = document.find('\n', start);
    if (end == std::string_view::npos) end = document.size();
    std::string token(document.substr(start, end - start));
    if (!token.empty() && token.back() == '\r') token.pop_back();
    tokens.push_back(std::move(token));
    start = end + 1;
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary load_vocab_file(const std::filesystem::path& path) {
  return parse_vocab(read_file(path));
}

std::size_t TokenSequence::real_length() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 3) throw Error("tokenize: max_len must be at least 3");
  TokenSequence seq;
  seq.ids.assign(max_len, kPadId);
  seq.mask.assign(max_len, 0);
  auto words = split_words(text);
  std::size_t n = std::min(words.size(), max_len - 2);
  seq.ids[0] = kClsId;
  for (std::size_t i = 0; i < n; ++i) seq.ids[i + 1] = vocab.id_of(to_lower_ascii(words[i]));
  seq.ids[n + 1] = kSepId;
  std::fill(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(n + 2), 1);
  return seq;
}

}  // namespace evtax
