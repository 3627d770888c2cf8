#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evtax/common.hpp"
#include "evtax/ingestion.hpp"
#include "evtax/jsonl.hpp"
#include "evtax/timestamp.hpp"

namespace evtax {

struct CleanEvent {
  std::string source_id;
  std::optional<std::string> external_id;
  std::string title;
  std::string description;
  std::string text;  // model input
  std::optional<std::string> language;
  std::optional<Timestamp> starts;
  std::optional<Timestamp> ends;
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::optional<std::string> city;
  std::optional<std::string> venue;
  std::optional<CategoryId> label;

  friend bool operator==(const CleanEvent&, const CleanEvent&) = default;
};

Json to_json(const CleanEvent& event);
CleanEvent clean_event_from_json(const Json& j);

/// Total and idempotent. In order:
///  1. decode \uXXXX escapes (surrogate pairs included); a payload that is a
///     JSON object is replaced by its first "title" and "description" values
///  2. replace tags (<x ...>, </x>, <!...>) by a space, then decode
///     &amp; &lt; &gt; &quot; &apos; &nbsp; &#NN; &#xHH;
///  3. canonical decomposition, drop combining marks, turn every other
///     non-ASCII code point and control character into a space
///  4. remove e-mail addresses and URLs (http://, https://, www.)
///  5. punctuation other than . , - becomes a space; an apostrophe survives
///     only between two letters or digits
///  6. collapse whitespace runs and trim
std::string clean_text(std::string_view raw);

/// title + " " + description, cut back to the last word boundary that fits
/// in max_chars. A single word longer than max_chars is hard-cut.
std::string build_text(std::string_view title, std::string_view description,
                       std::size_t max_chars);

inline constexpr std::size_t kDefaultMaxChars = 1000;
inline constexpr std::size_t kDefaultMaxLen = 128;

/// Cleans text fields, parses dates, range-checks coordinates (swapping the
/// pair when only the swapped order is valid) and builds `text`.
CleanEvent clean_event(const RawEvent& raw, std::size_t max_chars = kDefaultMaxChars);

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kClsId = 2;
inline constexpr std::int32_t kSepId = 3;
inline constexpr std::int32_t kNumSpecial = 4;

class Vocabulary {
 public:
  Vocabulary();
  /// Regular tokens in id order (ids start at 4).
  explicit Vocabulary(std::vector<std::string> tokens);

  std::int32_t id_of(std::string_view token) const;  // kUnkId when absent
  const std::string& token_of(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  /// Regular tokens only, in id order.
  std::vector<std::string> regular_tokens() const;

 private:
  std::vector<std::string> tokens_;  // index = id, specials included
  std::unordered_map<std::string, std::int32_t> ids_;
};

/// Lowercase whitespace tokens ranked by frequency, ties broken
/// lexicographically; tokens under min_freq are dropped and at most
/// max_size - 4 are kept.
Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t max_size,
                       std::size_t min_freq = 1);

/// Token per line; line n holds id n + 4.
std::string serialize_vocab(const Vocabulary& vocab);
Vocabulary parse_vocab(std::string_view document);
Vocabulary load_vocab_file(const std::filesystem::path& path);

struct TokenSequence {
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> mask;

  std::size_t real_length() const;
};

/// [CLS] word ids [SEP] then PAD up to max_len; words beyond max_len - 2 are
/// dropped.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

std::vector<std::string> split_words(std::string_view text);

}  // namespace evtax
