#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace hner {

// The 13-label NER tag set. Enumerator order fixes one-hot indices and is
// part of the checkpoint contract.
enum class Tag : std::uint8_t {
  Person,
  Organization,
  Location,
  Abbreviation,
  Brand,
  TitlePerson,
  TitleObject,
  Time,
  Number,
  Measure,
  Designation,
  Terms,
  Other,
};

inline constexpr std::size_t kNumTags = 13;
inline constexpr std::size_t kOtherIndex = 12;

inline constexpr std::array<std::string_view, kNumTags> kTagNames = {
    "person", "organization", "location", "abbreviation", "brand",       "title-person", "title-object",
    "time",   "number",       "measure",  "designation",  "terms",       "other",
};

constexpr std::size_t tag_index(Tag t) { return static_cast<std::size_t>(t); }
constexpr Tag tag_from_index(std::size_t i) { return static_cast<Tag>(i); }
constexpr std::string_view tag_name(Tag t) { return kTagNames[tag_index(t)]; }
constexpr bool is_entity(Tag t) { return t != Tag::Other; }

inline std::optional<Tag> parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kNumTags; ++i) {
    if (kTagNames[i] == name) return tag_from_index(i);
  }
  return std::nullopt;
}

}  // namespace hner
