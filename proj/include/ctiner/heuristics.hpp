#pragma once

// Indicator-of-compromise extraction from a registry of named patterns.
//
// Each pattern carries a precedence rank and a boundary mode. Matches from all
// enabled patterns are pooled and resolved like a lexer would: the longest
// match wins, ties go to the stronger (lower) precedence, then to the earlier
// start. The result is sorted by start and pairwise non-overlapping.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/regex.hpp>

#include "ctiner/entity.hpp"
#include "ctiner/error.hpp"

namespace ctiner {

enum class BoundaryMode {
  /// Not preceded or followed by [A-Za-z0-9_].
  WordBoundary,
  /// Pattern written with ^/$ anchors for whole-string input; the anchors are
  /// rewritten into token-boundary assertions so it matches in running text.
  AnchoredAdapted,
  /// Pattern used verbatim.
  Raw,
};

constexpr std::string_view to_string(BoundaryMode mode) noexcept {
  switch (mode) {
    case BoundaryMode::WordBoundary: return "word-boundary";
    case BoundaryMode::AnchoredAdapted: return "anchored-adapted";
    case BoundaryMode::Raw: return "raw";
  }
  return "raw";
}

inline BoundaryMode parse_boundary_mode(std::string_view s) {
  if (s == "word-boundary") return BoundaryMode::WordBoundary;
  if (s == "anchored-adapted") return BoundaryMode::AnchoredAdapted;
  if (s == "raw") return BoundaryMode::Raw;
  throw Error(ErrorCode::BadPattern, "unknown boundary mode '" + std::string(s) + "'");
}

struct PatternSpec {
  std::string name;
  std::string pattern;
  int precedence = 0;
  BoundaryMode boundary = BoundaryMode::WordBoundary;

  friend bool operator==(const PatternSpec&, const PatternSpec&) = default;
};

namespace detail {

inline constexpr std::string_view kWordLead = R"((?<![A-Za-z0-9_]))";
inline constexpr std::string_view kWordTrail = R"((?![A-Za-z0-9_]))";
// A dotted token (IPv4) must not continue with ".<alnum>" on either side.
inline constexpr std::string_view kTokenLead = R"((?<![A-Za-z0-9_.]))";
inline constexpr std::string_view kTokenEnd = R"((?![A-Za-z0-9_]|\.[A-Za-z0-9_]))";

// Rewrites unescaped ^ and $ outside character classes.
inline std::string adapt_anchors(std::string_view pattern) {
  std::string out;
  bool in_class = false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char c = pattern[i];
    if (c == '\\' && i + 1 < pattern.size()) {
      out += c;
      out += pattern[++i];
      continue;
    }
    if (in_class) {
      if (c == ']') in_class = false;
      out += c;
      continue;
    }
    if (c == '[') {
      in_class = true;
      out += c;
      // a leading ']' or '^]' is literal inside the class
      if (i + 1 < pattern.size() && pattern[i + 1] == '^') out += pattern[++i];
      if (i + 1 < pattern.size() && pattern[i + 1] == ']') out += pattern[++i];
      continue;
    }
    if (c == '^') out += kTokenLead;
    else if (c == '$') out += kTokenEnd;
    else out += c;
  }
  return out;
}

inline std::string effective_pattern(const PatternSpec& spec) {
  switch (spec.boundary) {
    case BoundaryMode::WordBoundary:
      return std::string(kWordLead) + "(?:" + spec.pattern + ")" + std::string(kWordTrail);
    case BoundaryMode::AnchoredAdapted:
      return adapt_anchors(spec.pattern);
    case BoundaryMode::Raw:
      return spec.pattern;
  }
  return spec.pattern;
}

}  // namespace detail

/// The built-in indicator patterns, in precedence order.
inline std::vector<PatternSpec> builtin_patterns() {
  using B = BoundaryMode;
  return {
      {"SHA256", "[a-f0-9]{64}|[A-F0-9]{64}", 0, B::WordBoundary},
      {"SHA1", "[a-f0-9]{40}|[A-F0-9]{40}", 1, B::WordBoundary},
      {"MD5", "[a-f0-9]{32}|[A-F0-9]{32}", 2, B::WordBoundary},
      {"CVE", "CVE-[0-9]{4}-[0-9]{4,7}", 3, B::WordBoundary},
      {"IPv4", R"(^((25[0-5]|(2[0-4]|1\d|[1-9]|)\d)(\.(?!$)|$)){4}$)", 4, B::AnchoredAdapted},
      {"Email", R"((?i)[a-z][_a-z0-9.-]+@[a-z0-9-]+(?:\.[a-z0-9-]+)*[a-z])", 5, B::WordBoundary},
      {"URL", R"((?i:https?|ftp)://[^\s]*[^\s.,;:!?'"()\[\]{}<>])", 6, B::WordBoundary},
      // file extensions that double as TLDs are excluded
      {"DomainName",
       R"((?i)(?:[a-z0-9](?:[a-z0-9-]{0,61}[a-z0-9])?\.)+)"
       R"((?!(?:exe|dll|sys|bat|cmd|ps1|vbs|js|jar|apk|dex|so|elf|bin|dat|tmp|log|ini|cfg|txt|doc|docx|xls|xlsx|pdf|rtf|html?|php|aspx?|py|sh|pl|lnk|scr|msi)(?![a-z]))[a-z]{2,24})",
       7, B::WordBoundary},
      // Windows drive paths and Unix paths share one label
      {"FilePath", R"([a-zA-Z]:\\(?:[\w$~.-]+\\)*[\w$~.-]*[\w$~-]|/[^\s]*[^\s.,;:!?'"()\[\]{}<>])", 8,
       B::WordBoundary},
  };
}

struct HeuristicConfig {
  /// Pattern names to run; empty means all.
  std::set<std::string> enabled_patterns;
  bool defang_normalization = false;
};

/// A raw regex hit before resolution. Offsets are code points.
struct IocCandidate {
  std::size_t start = 0;
  std::size_t end = 0;
  int precedence = 0;
  std::string label;

  friend bool operator==(const IocCandidate&, const IocCandidate&) = default;
};

/// Longest match first, then precedence, then earliest start; accepted
/// candidates never overlap. Returned sorted by start.
inline std::vector<IocCandidate> resolve_candidates(std::vector<IocCandidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const IocCandidate& a, const IocCandidate& b) {
    const auto la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    if (a.precedence != b.precedence) return a.precedence < b.precedence;
    if (a.start != b.start) return a.start < b.start;
    return a.label < b.label;
  });
  std::vector<IocCandidate> accepted;
  DisjointRanges taken;
  for (auto& c : candidates)
    if (taken.try_insert(c.start, c.end)) accepted.push_back(std::move(c));
  std::sort(accepted.begin(), accepted.end(),
            [](const IocCandidate& a, const IocCandidate& b) { return a.start < b.start; });
  return accepted;
}

/// Immutable set of compiled patterns. Safe to share between threads.
class PatternRegistry {
 public:
  explicit PatternRegistry(std::vector<PatternSpec> specs) : specs_(std::move(specs)) {
    std::set<std::string> names;
    std::set<int> ranks;
    compiled_.reserve(specs_.size());
    for (const auto& s : specs_) {
      if (s.name.empty()) throw Error(ErrorCode::BadPattern, "pattern name must not be empty");
      if (!names.insert(s.name).second) throw Error(ErrorCode::DuplicatePattern, "duplicate pattern name '" + s.name + "'");
      if (!ranks.insert(s.precedence).second)
        throw Error(ErrorCode::DuplicatePattern, "duplicate precedence " + std::to_string(s.precedence) + " for '" + s.name + "'");
      try {
        compiled_.emplace_back(detail::effective_pattern(s), boost::regex::perl);
      } catch (const boost::regex_error& e) {
        throw Error(ErrorCode::BadPattern, "pattern '" + s.name + "' does not compile: " + e.what());
      }
    }
  }

  static const PatternRegistry& builtin() {
    static const PatternRegistry registry(builtin_patterns());
    return registry;
  }

  const std::vector<PatternSpec>& specs() const noexcept { return specs_; }

  const PatternSpec* find(std::string_view name) const {
    for (const auto& s : specs_)
      if (s.name == name) return &s;
    return nullptr;
  }

  /// Every boundary-respecting match of every enabled pattern.
  std::vector<IocCandidate> candidates(std::string_view text, const Utf8Index& index,
                                       const std::set<std::string>& enabled = {}) const {
    for (const auto& name : enabled)
      if (!find(name)) throw Error(ErrorCode::UnknownPattern, "no pattern named '" + name + "'");
    std::vector<IocCandidate> out;
    for (std::size_t p = 0; p < specs_.size(); ++p) {
      if (!enabled.empty() && !enabled.count(specs_[p].name)) continue;
      boost::cregex_iterator it(text.data(), text.data() + text.size(), compiled_[p]);
      for (; it != boost::cregex_iterator(); ++it) {
        const auto& m = (*it)[0];
        if (m.length() == 0) continue;
        const auto b0 = static_cast<std::size_t>(m.first - text.data());
        const auto b1 = static_cast<std::size_t>(m.second - text.data());
        const auto cp0 = index.code_point_at(b0), cp1 = index.code_point_at(b1);
        // byte classes can split a multibyte sequence; such hits are dropped
        if (cp0 == Utf8Index::npos || cp1 == Utf8Index::npos) continue;
        out.push_back({cp0, cp1, specs_[p].precedence, specs_[p].name});
      }
    }
    return out;
  }

  // Plain-text table, one pattern per line:
  //   name <TAB> precedence <TAB> boundary-mode <TAB> pattern
  // Blank lines and lines starting with '#' are ignored on import.
  std::string to_table() const {
    std::ostringstream os;
    os << "# name\tprecedence\tboundary\tpattern\n";
    for (const auto& s : specs_) os << s.name << '\t' << s.precedence << '\t' << to_string(s.boundary) << '\t' << s.pattern << '\n';
    return os.str();
  }

  static PatternRegistry from_table(std::string_view table) {
    std::vector<PatternSpec> specs;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= table.size()) {
      auto nl = table.find('\n', pos);
      if (nl == std::string_view::npos) nl = table.size();
      std::string_view line = table.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty() || line.front() == '#') continue;
      std::string_view fields[3];
      for (auto& f : fields) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos)
          throw Error(ErrorCode::BadPattern, "line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
        f = line.substr(0, tab);
        line.remove_prefix(tab + 1);
      }
      int precedence = 0;
      try {
        std::size_t used = 0;
        precedence = std::stoi(std::string(fields[1]), &used);
        if (used != fields[1].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw Error(ErrorCode::BadPattern, "line " + std::to_string(line_no) + ": bad precedence '" + std::string(fields[1]) + "'");
      }
      specs.push_back({std::string(fields[0]), std::string(line), precedence, parse_boundary_mode(fields[2])});
    }
    return PatternRegistry(std::move(specs));
  }

 private:
  std::vector<PatternSpec> specs_;
  std::vector<boost::regex> compiled_;
};

/// Maps each code point of a normalized string to the code point range of
/// the original text it came from.
class OffsetMap {
 public:
  OffsetMap() = default;

  static OffsetMap identity(std::size_t length) {
    OffsetMap m;
    m.original_length_ = length;
    m.starts_.resize(length);
    m.ends_.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
      m.starts_[i] = i;
      m.ends_[i] = i + 1;
    }
    return m;
  }

  void push(std::size_t original_start, std::size_t original_end) {
    starts_.push_back(original_start);
    ends_.push_back(original_end);
  }
  void set_original_length(std::size_t n) noexcept { original_length_ = n; }

  std::size_t size() const noexcept { return starts_.size(); }
  std::size_t original_length() const noexcept { return original_length_; }

  /// Original-text range covering normalized range [start, end).
  std::pair<std::size_t, std::size_t> project(std::size_t start, std::size_t end) const {
    if (start >= end || end > size())
      throw Error(ErrorCode::OffsetOutOfRange, "cannot project [" + std::to_string(start) + "," + std::to_string(end) + ")");
    return {starts_[start], ends_[end - 1]};
  }

  const std::vector<std::size_t>& starts() const noexcept { return starts_; }

 private:
  std::vector<std::size_t> starts_;
  std::vector<std::size_t> ends_;
  std::size_t original_length_ = 0;
};

struct DefangResult {
  std::string normalized;
  OffsetMap offsets;
};

/// Undoes common defanging: hxxp -> http (case kept per letter), [.] and (.)
/// -> ".". Matching is case-insensitive.
inline DefangResult normalize_defang(std::string_view text) {
  const Utf8Index index(text);
  DefangResult r;
  r.normalized.reserve(text.size());
  auto lower_at = [&](std::size_t byte) { return static_cast<char>(std::tolower(static_cast<unsigned char>(text[byte]))); };
  auto starts_with_ci = [&](std::size_t byte, std::string_view what) {
    if (byte + what.size() > text.size()) return false;
    for (std::size_t k = 0; k < what.size(); ++k)
      if (lower_at(byte + k) != what[k]) return false;
    return true;
  };

  std::size_t cp = 0;
  while (cp < index.size()) {
    const auto b = index.byte_offset(cp);
    if (starts_with_ci(b, "hxxp")) {
      for (std::size_t k = 0; k < 4; ++k) {
        char c = text[b + k];
        if (k == 1 || k == 2) c = std::isupper(static_cast<unsigned char>(c)) ? 'T' : 't';
        r.normalized += c;
        r.offsets.push(cp + k, cp + k + 1);
      }
      cp += 4;
    } else if (starts_with_ci(b, "[.]") || starts_with_ci(b, "(.)")) {
      r.normalized += '.';
      r.offsets.push(cp, cp + 3);
      cp += 3;
    } else {
      const auto e = index.byte_offset(cp + 1);
      r.normalized.append(text.substr(b, e - b));
      r.offsets.push(cp, cp + 1);
      ++cp;
    }
  }
  r.offsets.set_original_length(index.size());
  return r;
}

/// Runs the heuristic extractors over a document. Every mention has source H
/// and confidence 1.0; output is sorted by start and non-overlapping.
inline std::vector<EntityMention> extract_iocs(const DocumentText& doc, const HeuristicConfig& config = {},
                                               const PatternRegistry& registry = PatternRegistry::builtin()) {
  std::vector<EntityMention> out;
  if (!config.defang_normalization) {
    for (auto& c : resolve_candidates(registry.candidates(doc.text(), doc.index(), config.enabled_patterns)))
      out.push_back(new_mention(doc, std::move(c.label), c.start, c.end, 1.0, sources::heuristic));
    return out;
  }
  const auto defanged = normalize_defang(doc.text());
  const Utf8Index index(defanged.normalized);
  for (auto& c : resolve_candidates(registry.candidates(defanged.normalized, index, config.enabled_patterns))) {
    const auto [s, e] = defanged.offsets.project(c.start, c.end);
    out.push_back(new_mention(doc, std::move(c.label), s, e, 1.0, sources::heuristic));
  }
  return out;
}

}  // namespace ctiner
