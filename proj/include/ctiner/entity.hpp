#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctiner/error.hpp"
#include "ctiner/utf8.hpp"

namespace ctiner {

using Json = nlohmann::ordered_json;

/// An extraction source: a single uppercase letter plus a readable name.
struct SourceId {
  char code = 'H';
  std::string name = "heuristic";

  friend bool operator==(const SourceId&, const SourceId&) = default;
  friend auto operator<=>(const SourceId&, const SourceId&) = default;
};

namespace sources {
inline const SourceId heuristic{'H', "heuristic"};
inline const SourceId transformer{'T', "transformer"};
inline const SourceId flair{'F', "flair"};
inline const SourceId spacy{'S', "spacy"};
}  // namespace sources

/// Known sources in registration order. Codes and names are unique.
class SourceRegistry {
 public:
  SourceRegistry() = default;

  static SourceRegistry builtin() {
    SourceRegistry r;
    r.add(sources::heuristic);
    r.add(sources::transformer);
    r.add(sources::flair);
    r.add(sources::spacy);
    return r;
  }

  const SourceId& add(SourceId source) {
    if (source.code < 'A' || source.code > 'Z')
      throw Error(ErrorCode::InvalidConfig, std::string("source code must be an uppercase letter, got '") + source.code + "'");
    if (source.name.empty()) throw Error(ErrorCode::InvalidConfig, "source name must not be empty");
    for (const auto& s : entries_) {
      if (s.code == source.code) throw Error(ErrorCode::DuplicateSourceCode, std::string("code '") + source.code + "' already registered");
      if (s.name == source.name) throw Error(ErrorCode::InvalidConfig, "source name '" + source.name + "' already registered");
    }
    entries_.push_back(std::move(source));
    return entries_.back();
  }

  std::optional<SourceId> find(char code) const {
    for (const auto& s : entries_)
      if (s.code == code) return s;
    return std::nullopt;
  }

  std::optional<SourceId> find_by_name(std::string_view name) const {
    for (const auto& s : entries_)
      if (s.name == name) return s;
    return std::nullopt;
  }

  /// Position in registration order, or npos.
  std::size_t position(const SourceId& source) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i] == source) return i;
    return npos;
  }

  const std::vector<SourceId>& entries() const noexcept { return entries_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<SourceId> entries_;
};

/// Raw report text with a code point index. Immutable once built; copies
/// share the index.
class DocumentText {
 public:
  DocumentText() : index_(std::make_shared<const Utf8Index>()) {}
  DocumentText(std::string doc_id, std::string text)
      : doc_id_(std::move(doc_id)), text_(std::move(text)), index_(std::make_shared<const Utf8Index>(text_)) {}

  const std::string& doc_id() const noexcept { return doc_id_; }
  const std::string& text() const noexcept { return text_; }

  /// Length in code points.
  std::size_t length() const noexcept { return index_->size(); }

  const Utf8Index& index() const noexcept { return *index_; }

  /// Substring between code point offsets [start, end).
  std::string slice(std::size_t start, std::size_t end) const {
    if (start > end || end > length())
      throw Error(ErrorCode::OffsetOutOfRange, "slice [" + std::to_string(start) + "," + std::to_string(end) +
                                                   ") outside text of length " + std::to_string(length()));
    const auto b = index_->byte_offset(start);
    return text_.substr(b, index_->byte_offset(end) - b);
  }

 private:
  std::string doc_id_;
  std::string text_;
  std::shared_ptr<const Utf8Index> index_;
};

/// A labeled character span. Offsets are code points, end exclusive.
struct EntityMention {
  std::string mention;
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;
  double confidence = 1.0;
  SourceId source;

  std::size_t length() const noexcept { return end - start; }

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

inline EntityMention new_mention(const DocumentText& text, std::string label, std::size_t start, std::size_t end,
                                 double confidence, SourceId source) {
  if (start == end) throw Error(ErrorCode::EmptySpan, "zero-length span at " + std::to_string(start));
  if (start > end || end > text.length())
    throw Error(ErrorCode::OffsetOutOfRange, "span [" + std::to_string(start) + "," + std::to_string(end) +
                                                 ") outside text of length " + std::to_string(text.length()));
  if (!(confidence >= 0.0 && confidence <= 1.0))
    throw Error(ErrorCode::BadConfidence, "confidence " + std::to_string(confidence) + " not in [0,1]");
  return EntityMention{text.slice(start, end), std::move(label), start, end, confidence, std::move(source)};
}

/// True iff the two ranges share at least one character.
constexpr bool overlaps(std::size_t a_start, std::size_t a_end, std::size_t b_start, std::size_t b_end) noexcept {
  return std::max(a_start, b_start) < std::min(a_end, b_end);
}

inline bool overlaps(const EntityMention& a, const EntityMention& b) noexcept {
  return overlaps(a.start, a.end, b.start, b.end);
}

/// Set of pairwise disjoint half-open ranges with O(log n) collision tests.
class DisjointRanges {
 public:
  bool collides(std::size_t start, std::size_t end) const {
    auto it = ranges_.lower_bound(end);  // first range starting at or after `end`
    if (it == ranges_.begin()) return false;
    --it;
    return it->second > start;
  }

  /// Inserts [start, end) unless it collides; returns whether it was inserted.
  bool try_insert(std::size_t start, std::size_t end) {
    if (collides(start, end)) return false;
    ranges_.emplace(start, end);
    return true;
  }

 private:
  std::map<std::size_t, std::size_t> ranges_;
};

/// Orders by (start, end), then the remaining fields so the order is total.
inline bool position_less(const EntityMention& a, const EntityMention& b) {
  if (a.start != b.start) return a.start < b.start;
  if (a.end != b.end) return a.end < b.end;
  if (a.label != b.label) return a.label < b.label;
  if (a.confidence != b.confidence) return a.confidence < b.confidence;
  if (a.mention != b.mention) return a.mention < b.mention;
  return a.source < b.source;
}

/// The closed label set used to validate annotated corpora.
struct CyberLabelSet {
  static constexpr std::array<std::string_view, 5> classes{"Malware", "Indicator", "System", "Organization",
                                                           "Vulnerability"};

  static bool contains(std::string_view label) {
    return std::find(classes.begin(), classes.end(), label) != classes.end();
  }
};

// Serialized form: {"mention","label","start","end","confidence","source"}.
inline Json to_json(const EntityMention& m, bool with_source = true) {
  Json j = {{"mention", m.mention}, {"label", m.label}, {"start", m.start},
                      {"end", m.end},         {"confidence", m.confidence}};
  if (with_source) j["source"] = m.source.name;
  return j;
}

}  // namespace ctiner
