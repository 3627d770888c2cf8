#include <unordered_map>

#include "doctest.h"

#include "oracles.hpp"
#include "support.hpp"

using namespace evtax;

namespace {

std::vector<std::string> fixture_lines(const char* group) {
  Json j = Json::parse(read_file(testing::fixture("fig5_lines.json")));
  return j.at(group).get<std::vector<std::string>>();
}

// Random text built from the characters the cleaner cares about.
std::string fuzz_text(std::mt19937_64& rng) {
  static const std::vector<std::string> atoms = {
      "a", "B", "7", " ", "  ", "\t", "\n", "<", ">", "<b>", "</p>", "<!--", "-->", "&", ";", "&amp;",
      "&#233;", "&#x4e2d;", "&nbsp;", "#", "\\u00e9", "\\u003c", "\\ud83c\\udfb5", "\\u", "@", ".",
      "x@y.io", "http://", "www.", "https://a.b/c?d=1", "'", "don't", ",", "-", "é", "ñ", "中",
      "\xF0\x9F\x8E\xB5", "\"", "{", "}", ":", "title", "€", "\xE2\x80\x9C"};
  std::string s;
  std::size_t n = uniform_below(rng, 25);
  for (std::size_t i = 0; i < n; ++i) s += atoms[uniform_below(rng, atoms.size())];
  return s;
}

bool printable_ascii(const std::string& s) {
  for (unsigned char c : s)
    if (c < 0x20 || c > 0x7E) return false;
  return true;
}

}  // namespace

TEST_CASE("stated cleaning examples") {
  CHECK(clean_text("Works by Jean-Philippe Rameau, François Couperin and Marin Marais "
                   "\\u003cbr /\\u003e") ==
        "Works by Jean-Philippe Rameau, Francois Couperin and Marin Marais");
  CHECK(clean_text("<p style=\"text-align:center\">Marni Jazz<br>Festival") == "Marni Jazz Festival");
  CHECK(clean_text("") == "");
  CHECK(clean_text("contact info@fest.io now!") == "contact now");
  CHECK(clean_text("see https://x.org/a?b=c or www.y.com today") == "see or today");
  CHECK(clean_text("Crème brûlée") == "Creme brulee");
  CHECK(clean_text("rock'n'roll 'tis o' clock") == "rock'n'roll tis o clock");
}

TEST_CASE("fixture lines match the rule-by-rule reference") {
  for (const char* group : {"paper", "derived"}) {
    for (const auto& line : fixture_lines(group)) {
      CAPTURE(line);
      std::string out = clean_text(line);
      CHECK(out == oracle::reference_clean(line));
      CHECK(clean_text(out) == out);
      CHECK_FALSE(oracle::has_residue(out));
      CHECK(printable_ascii(out));
    }
  }
}

TEST_CASE("embedded JSON payload is reduced to title and description") {
  auto lines = fixture_lines("derived");
  CHECK(clean_text(lines[0]) == "Mika Tour Italy Low Res Fades-2 Live at the Arena");
}

TEST_CASE("fuzzed cleaning is idempotent and matches the reference") {
  std::mt19937_64 rng(20191130);
  for (int i = 0; i < 3000; ++i) {
    std::string s = fuzz_text(rng);
    CAPTURE(s);
    std::string out = clean_text(s);
    REQUIRE(clean_text(out) == out);
    REQUIRE(out == oracle::reference_clean(s));
    REQUIRE(printable_ascii(out));
    REQUIRE(out.find('<') == std::string::npos);
    REQUIRE(out.find('>') == std::string::npos);
    REQUIRE_FALSE(oracle::has_residue(out));
  }
}

TEST_CASE("invalid UTF-8 does not throw") {
  std::string bad = "abc\xC3 \xFF\xFE def \xE2\x82";
  std::string out = clean_text(bad);
  CHECK(printable_ascii(out));
  CHECK(clean_text(out) == out);
}

TEST_CASE("build_text") {
  CHECK(build_text("Rigoletto Komische Oper Berlin", "A comic opera that...", 1000) ==
        "Rigoletto Komische Oper Berlin A comic opera that...");
  CHECK(build_text("T", "", 1000) == "T");
  CHECK(build_text("", "only description", 1000) == "only description");

  std::string words;
  while (words.size() < 10000) words += "lorem ipsum dolorsit ";
  std::string text = build_text("Title", words, 512);
  CHECK(text.size() <= 512);
  CHECK(text.back() != ' ');
  std::string full = "Title " + words;
  CHECK(full.compare(0, text.size(), text) == 0);
  CHECK(full[text.size()] == ' ');

  CHECK(build_text(std::string(40, 'x'), "", 10) == std::string(10, 'x'));
}

TEST_CASE("clean_event") {
  RawEvent raw;
  raw.source_id = "s";
  raw.title_raw = "<b>Opéra</b> night";
  raw.description_raw = "Tickets &amp; more";
  raw.starts_raw = "Sat, 30 Nov 2019 13:00:18 +0000";
  raw.ends_raw = "garbage";
  raw.lat_raw = "-0.119252";
  raw.lon_raw = "51.50282";
  raw.city_raw = "  London ";
  auto e = clean_event(raw);
  CHECK(e.title == "Opera night");
  CHECK(e.description == "Tickets more");
  CHECK(e.text == "Opera night Tickets more");
  REQUIRE(e.starts.has_value());
  CHECK(format_timestamp(*e.starts) == "2019-11-30T13:00:18+00:00");
  CHECK_FALSE(e.ends.has_value());
  CHECK(e.latitude == doctest::Approx(-0.119252));
  CHECK(e.longitude == doctest::Approx(51.50282));
  CHECK(e.city == "London");

  raw.lat_raw = "172.702541";
  raw.lon_raw = "-43.567162";
  e = clean_event(raw);
  CHECK(e.latitude == doctest::Approx(-43.567162));
  CHECK(e.longitude == doctest::Approx(172.702541));

  raw.lat_raw = "200";
  raw.lon_raw = "200";
  e = clean_event(raw);
  CHECK_FALSE(e.latitude.has_value());
  CHECK_FALSE(e.longitude.has_value());

  CHECK(clean_event_from_json(to_json(e)) == e);
}

TEST_CASE("vocabulary") {
  auto v = build_vocab({"a a b"}, 100);
  CHECK(v.size() == 6);
  CHECK(v.id_of("a") == 4);
  CHECK(v.id_of("b") == 5);
  CHECK(v.id_of("zzz") == kUnkId);
  CHECK(v.token_of(kPadId) == "[PAD]");

  auto tie = build_vocab({"y x y x"}, 100);
  CHECK(tie.id_of("x") == 4);
  CHECK(tie.id_of("y") == 5);

  auto cut = build_vocab({"a a a b b c"}, 100, 2);
  CHECK(cut.regular_tokens() == std::vector<std::string>{"a", "b"});
  CHECK(build_vocab({"A a"}, 100).regular_tokens() == std::vector<std::string>{"a"});

  CHECK(parse_vocab(serialize_vocab(v)).regular_tokens() == v.regular_tokens());
}

TEST_CASE("vocabulary counts match a brute-force counter") {
  std::mt19937_64 rng(3);
  std::vector<std::string> docs;
  for (int d = 0; d < 1000; ++d) {
    std::string doc;
    std::size_t n = 1 + uniform_below(rng, 12);
    for (std::size_t i = 0; i < n; ++i) {
      // skewed word distribution so frequencies differ
      std::uint64_t r = uniform_below(rng, 2000);
      doc += "w" + std::to_string(r * r / 2000) + " ";
    }
    docs.push_back(doc);
  }
  auto v = build_vocab(docs, 500);
  REQUIRE(v.size() == 500);

  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& doc : docs) {
    std::istringstream in(doc);
    std::string w;
    while (in >> w) ++freq[w];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  auto tokens = v.regular_tokens();
  REQUIRE(tokens.size() == 496);
  for (std::size_t i = 0; i < tokens.size(); ++i) CHECK(tokens[i] == ranked[i].first);
}

TEST_CASE("tokenize") {
  Vocabulary v({"a", "b"});
  auto s = tokenize("a b", v, 6);
  CHECK(s.ids == std::vector<std::int32_t>{2, 4, 5, 3, 0, 0});
  CHECK(s.mask == std::vector<std::uint8_t>{1, 1, 1, 1, 0, 0});
  CHECK(s.real_length() == 4);

  auto empty = tokenize("", v, 5);
  CHECK(empty.ids == std::vector<std::int32_t>{2, 3, 0, 0, 0});
  CHECK(empty.mask == std::vector<std::uint8_t>{1, 1, 0, 0, 0});

  CHECK(tokenize("a zzz", v, 5).ids[2] == kUnkId);
  CHECK(tokenize("A B", v, 5).ids[1] == 4);
  CHECK(tokenize("a b a b a b", v, 4).ids == std::vector<std::int32_t>{2, 4, 5, 3});
  CHECK_THROWS_AS(tokenize("a", v, 1), Error);
}

TEST_CASE("tokenize round trip and mask property") {
  Vocabulary v({"the", "jazz", "night", "opera"});
  std::mt19937_64 rng(11);
  const std::vector<std::string> words = {"the", "jazz", "night", "opera", "zzz", "qq"};
  for (int round = 0; round < 300; ++round) {
    std::vector<std::string> in;
    std::size_t n = uniform_below(rng, 20);
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
      in.push_back(words[uniform_below(rng, words.size())]);
      text += in.back() + " ";
    }
    std::size_t max_len = 3 + uniform_below(rng, 16);
    auto seq = tokenize(text, v, max_len);
    REQUIRE(seq.ids.size() == max_len);
    std::vector<std::string> back;
    for (std::size_t i = 0; i < max_len; ++i) {
      if (!seq.mask[i]) CHECK(seq.ids[i] == kPadId);
      if (seq.ids[i] >= kNumSpecial || seq.ids[i] == kUnkId) back.push_back(v.token_of(seq.ids[i]));
    }
    std::vector<std::string> expect;
    for (std::size_t i = 0; i < std::min(in.size(), max_len - 2); ++i)
      expect.push_back(v.id_of(in[i]) == kUnkId ? v.token_of(kUnkId) : in[i]);
    CHECK(back == expect);
  }
}
