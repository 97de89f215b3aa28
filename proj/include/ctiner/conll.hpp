#pragma once

// CoNLL-2003 style two-column corpora with IOB2 tags.
//
//   <token>\t<tag>
//   <token>\t<tag>
//   <blank line ends a sentence>
//   -DOCSTART-\tO   (ends a document)
//
// Reading splits on any whitespace run and accepts files with or without
// -DOCSTART- markers. Documents read from CoNLL get synthetic offsets: tokens
// are joined by one space and sentences by one newline.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ctiner/entity.hpp"
#include "ctiner/error.hpp"
#include "ctiner/utf8.hpp"

namespace ctiner {

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<std::string> tags;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct TaggedDocument {
  std::string doc_id;
  std::vector<Sentence> sentences;

  std::size_t token_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.tokens.size();
    return n;
  }

  /// Classes appearing in any B-/I- tag.
  std::set<std::string> classes() const;

  /// The document text the token offsets refer to.
  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (i) out += '\n';
      for (std::size_t k = 0; k < sentences[i].tokens.size(); ++k) {
        if (k) out += ' ';
        out += sentences[i].tokens[k].surface;
      }
    }
    return out;
  }

  friend bool operator==(const TaggedDocument&, const TaggedDocument&) = default;
};

/// A decoded entity over token indices [begin, end).
struct TagSpan {
  std::string label;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const TagSpan&, const TagSpan&) = default;
  friend auto operator<=>(const TagSpan&, const TagSpan&) = default;
};

enum class DecodeMode { Lenient, Strict };

// ---------------------------------------------------------------------------
// Tags

struct ParsedTag {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string_view label;
};

inline std::optional<ParsedTag> parse_tag(std::string_view tag) {
  if (tag == "O") return ParsedTag{'O', {}};
  if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') return std::nullopt;
  return ParsedTag{tag[0], tag.substr(2)};
}

inline bool is_valid_tag(std::string_view tag) { return parse_tag(tag).has_value(); }

inline ParsedTag require_tag(std::string_view tag, std::size_t position) {
  auto parsed = parse_tag(tag);
  if (!parsed) throw Error(ErrorCode::BadTagSyntax, "tag '" + std::string(tag) + "' at position " + std::to_string(position));
  return *parsed;
}

inline std::set<std::string> TaggedDocument::classes() const {
  std::set<std::string> out;
  for (const auto& s : sentences)
    for (const auto& t : s.tags)
      if (auto p = parse_tag(t); p && p->prefix != 'O') out.emplace(p->label);
  return out;
}

/// Decodes IOB2 tags into entity spans.
///
/// Lenient mode follows the usual evaluation convention: an I-X that does not
/// continue an X entity opens a new one. Strict mode reports it instead
/// (DanglingITag after O or at the start, TypeSwitchInsideEntity after a
/// different class).
inline std::vector<TagSpan> bio_to_spans(std::span<const std::string> tags, DecodeMode mode = DecodeMode::Lenient) {
  std::vector<TagSpan> spans;
  std::optional<TagSpan> open;
  auto close = [&](std::size_t at) {
    if (open) {
      open->end = at;
      spans.push_back(std::move(*open));
      open.reset();
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto tag = require_tag(tags[i], i);
    if (tag.prefix == 'O') {
      close(i);
    } else if (tag.prefix == 'B') {
      close(i);
      open = TagSpan{std::string(tag.label), i, i};
    } else if (open && open->label == tag.label) {
      // continuation
    } else {
      if (mode == DecodeMode::Strict) {
        if (open)
          throw Error(ErrorCode::TypeSwitchInsideEntity, "I-" + std::string(tag.label) + " at " + std::to_string(i) +
                                                             " inside " + open->label + " entity");
        throw Error(ErrorCode::DanglingITag, "I-" + std::string(tag.label) + " at " + std::to_string(i) + " has no B- tag");
      }
      close(i);
      open = TagSpan{std::string(tag.label), i, i};
    }
  }
  close(tags.size());
  return spans;
}

inline std::vector<TagSpan> bio_to_spans(std::span<const Token> tokens, std::span<const std::string> tags,
                                         DecodeMode mode = DecodeMode::Lenient) {
  if (tokens.size() != tags.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(tokens.size()) + " tokens vs " + std::to_string(tags.size()) + " tags");
  return bio_to_spans(tags, mode);
}

/// Encodes token spans as IOB2 tags over `token_count` tokens.
inline std::vector<std::string> spans_to_tags(std::span<const TagSpan> spans, std::size_t token_count) {
  std::vector<std::string> tags(token_count, "O");
  std::vector<bool> used(token_count, false);
  for (const auto& s : spans) {
    if (s.begin >= s.end || s.end > token_count)
      throw Error(ErrorCode::OffsetOutOfRange, "token span [" + std::to_string(s.begin) + "," + std::to_string(s.end) + ")");
    if (s.label.empty()) throw Error(ErrorCode::BadTagSyntax, "empty entity class");
    for (std::size_t i = s.begin; i < s.end; ++i) {
      if (used[i]) throw Error(ErrorCode::OverlappingMentions, "token " + std::to_string(i) + " covered twice");
      used[i] = true;
      tags[i] = (i == s.begin ? "B-" : "I-") + s.label;
    }
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Tokenization

inline bool is_ascii_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Whitespace tokenization, grouped by line. Offsets are code points.
inline std::vector<std::vector<Token>> tokenize_lines(const DocumentText& doc) {
  std::vector<std::vector<Token>> lines(1);
  const auto& text = doc.text();
  const auto& index = doc.index();
  std::size_t cp = 0;
  while (cp < index.size()) {
    const char c = text[index.byte_offset(cp)];
    if (c == '\n') {
      if (!lines.back().empty()) lines.emplace_back();
      ++cp;
      continue;
    }
    if (is_ascii_space(c)) {
      ++cp;
      continue;
    }
    const auto start = cp;
    while (cp < index.size() && !is_ascii_space(text[index.byte_offset(cp)])) ++cp;
    lines.back().push_back({doc.slice(start, cp), start, cp});
  }
  if (lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<Token> tokenize_whitespace(const DocumentText& doc) {
  std::vector<Token> out;
  for (auto& line : tokenize_lines(doc))
    for (auto& t : line) out.push_back(std::move(t));
  return out;
}

/// Tags each token by the mentions covering it. Every mention must be a union
/// of whole tokens, and mentions must not overlap.
inline std::vector<std::string> spans_to_bio(const DocumentText& doc, std::span<const EntityMention> mentions,
                                             std::span<const Token> tokens) {
  for (const auto& t : tokens)
    if (t.end > doc.length()) throw Error(ErrorCode::OffsetOutOfRange, "token '" + t.surface + "' beyond text end");
  std::vector<TagSpan> spans;
  spans.reserve(mentions.size());
  for (const auto& m : mentions) {
    // first token ending after the mention start
    auto first = std::partition_point(tokens.begin(), tokens.end(), [&](const Token& t) { return t.end <= m.start; });
    auto last = first;
    while (last != tokens.end() && last->start < m.end) ++last;
    if (first == last || first->start != m.start || std::prev(last)->end != m.end)
      throw Error(ErrorCode::MisalignedSpan, "mention '" + m.mention + "' [" + std::to_string(m.start) + "," +
                                                 std::to_string(m.end) + ") does not align with token boundaries");
    spans.push_back({m.label, static_cast<std::size_t>(first - tokens.begin()), static_cast<std::size_t>(last - tokens.begin())});
  }
  std::sort(spans.begin(), spans.end(), [](const TagSpan& a, const TagSpan& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < spans.size(); ++i)
    if (spans[i].begin < spans[i - 1].end)
      throw Error(ErrorCode::OverlappingMentions, spans[i - 1].label + " and " + spans[i].label + " share tokens");
  return spans_to_tags(spans, tokens.size());
}

inline std::vector<std::string> spans_to_bio(const DocumentText& doc, std::span<const EntityMention> mentions) {
  const auto tokens = tokenize_whitespace(doc);
  return spans_to_bio(doc, mentions, tokens);
}

// ---------------------------------------------------------------------------
// Reading and writing

/// Builds a sentence, assigning offsets that continue from `cursor`.
inline Sentence make_sentence(std::span<const std::string> surfaces, std::vector<std::string> tags, std::size_t cursor = 0) {
  Sentence s;
  s.tags = std::move(tags);
  for (const auto& w : surfaces) {
    const auto len = Utf8Index(w).size();
    s.tokens.push_back({w, cursor, cursor + len});
    cursor += len + 1;
  }
  return s;
}

/// Recomputes synthetic offsets: single spaces within, newlines between sentences.
inline void assign_offsets(TaggedDocument& doc) {
  std::size_t cursor = 0;
  for (auto& s : doc.sentences) {
    for (auto& t : s.tokens) {
      t.start = cursor;
      t.end = cursor + Utf8Index(t.surface).size();
      cursor = t.end + 1;
    }
  }
}

inline constexpr std::string_view kDocStart = "-DOCSTART-";

inline std::vector<TaggedDocument> read_conll(std::istream& in, std::string_view doc_id_prefix = "doc") {
  std::vector<TaggedDocument> docs;
  TaggedDocument doc;
  Sentence sentence;
  std::vector<std::string> surfaces;
  std::size_t line_no = 0;
  bool any_token = false;

  auto end_sentence = [&] {
    if (!surfaces.empty()) {
      sentence.tokens.clear();
      doc.sentences.push_back(make_sentence(surfaces, std::move(sentence.tags)));
      sentence = {};
      surfaces.clear();
    }
  };
  auto end_document = [&] {
    end_sentence();
    if (!doc.sentences.empty()) {
      doc.doc_id = std::string(doc_id_prefix) + "-" + std::to_string(docs.size());
      assign_offsets(doc);
      docs.push_back(std::move(doc));
    }
    doc = {};
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols;
    {
      std::istringstream fields(line);
      std::string f;
      while (fields >> f) cols.push_back(std::move(f));
    }
    if (cols.empty()) {
      end_sentence();
      continue;
    }
    if (cols[0] == kDocStart) {
      end_document();
      continue;
    }
    if (cols.size() != 2)
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": expected 2 columns, found " + std::to_string(cols.size()));
    if (!is_valid_tag(cols[1]))
      throw Error(ErrorCode::BadTagSyntax, "line " + std::to_string(line_no) + ": tag '" + cols[1] + "'");
    try {
      Utf8Index check(cols[0]);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidUtf8, "line " + std::to_string(line_no) + ": " + e.what());
    }
    surfaces.push_back(std::move(cols[0]));
    sentence.tags.push_back(std::move(cols[1]));
    any_token = true;
  }
  end_document();
  if (!any_token) throw Error(ErrorCode::EmptyInput, "no tokens in CoNLL input");
  return docs;
}

inline std::vector<TaggedDocument> read_conll(std::string_view content, std::string_view doc_id_prefix = "doc") {
  std::istringstream in{std::string(content)};
  return read_conll(in, doc_id_prefix);
}

inline std::vector<TaggedDocument> read_conll_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_conll(in, path.stem().string());
}

inline void write_conll(std::ostream& out, std::span<const TaggedDocument> docs) {
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (d) out << kDocStart << "\tO\n\n";
    for (const auto& s : docs[d].sentences) {
      if (s.tokens.size() != s.tags.size())
        throw Error(ErrorCode::LengthMismatch, "sentence in '" + docs[d].doc_id + "' has mismatched tokens and tags");
      for (std::size_t i = 0; i < s.tokens.size(); ++i) out << s.tokens[i].surface << '\t' << s.tags[i] << '\n';
      out << '\n';
    }
  }
}

inline std::string write_conll(std::span<const TaggedDocument> docs) {
  std::ostringstream out;
  write_conll(out, docs);
  return out.str();
}

// ---------------------------------------------------------------------------
// Corpus statistics

struct Corpus {
  std::map<std::string, std::vector<TaggedDocument>> splits;
};

struct SplitStats {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::map<std::string, std::size_t> entities;

  std::size_t total_entities() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, c] : entities) n += c;
    return n;
  }

  void add(const SplitStats& o) {
    documents += o.documents;
    sentences += o.sentences;
    tokens += o.tokens;
    for (const auto& [k, v] : o.entities) entities[k] += v;
  }
};

struct StatsReport {
  std::vector<std::pair<std::string, SplitStats>> splits;  // train, dev, test, then others
  SplitStats total;

  /// The five cyber classes first, then any other observed class.
  std::vector<std::string> classes() const {
    std::vector<std::string> out(CyberLabelSet::classes.begin(), CyberLabelSet::classes.end());
    for (const auto& [k, _] : total.entities)
      if (!CyberLabelSet::contains(k)) out.push_back(k);
    return out;
  }

  const SplitStats* split(std::string_view name) const {
    for (const auto& [n, s] : splits)
      if (n == name) return &s;
    return nullptr;
  }
};

inline SplitStats document_stats(const TaggedDocument& doc) {
  SplitStats st;
  st.documents = 1;
  st.sentences = doc.sentences.size();
  for (const auto& s : doc.sentences) {
    st.tokens += s.tokens.size();
    for (const auto& span : bio_to_spans(s.tags, DecodeMode::Lenient)) ++st.entities[span.label];
  }
  return st;
}

inline StatsReport corpus_stats(const Corpus& corpus) {
  StatsReport report;
  std::vector<std::string> order;
  for (const char* known : {"train", "dev", "test"})
    if (corpus.splits.count(known)) order.emplace_back(known);
  for (const auto& [name, _] : corpus.splits)
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  for (const auto& name : order) {
    SplitStats st;
    for (const auto& doc : corpus.splits.at(name)) st.add(document_stats(doc));
    report.total.add(st);
    report.splits.emplace_back(name, std::move(st));
  }
  return report;
}

/// Loads train/dev/test from `dir`. Each split is either a subdirectory of
/// CoNLL files (read in name order) or a single `<split>.txt` file; `valid`
/// is accepted for dev. Missing splits are left out.
inline Corpus load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  Corpus corpus;
  const std::pair<const char*, std::vector<const char*>> layout[] = {
      {"train", {"train"}}, {"dev", {"dev", "valid"}}, {"test", {"test"}}};
  for (const auto& [split, aliases] : layout) {
    for (const char* alias : aliases) {
      std::vector<fs::path> files;
      if (fs::is_directory(dir / alias)) {
        for (const auto& e : fs::directory_iterator(dir / alias))
          if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
      } else {
        for (const char* ext : {".txt", ".conll", ""})
          if (fs::is_regular_file(dir / (std::string(alias) + ext))) {
            files.push_back(dir / (std::string(alias) + ext));
            break;
          }
      }
      if (files.empty()) continue;
      auto& docs = corpus.splits[split];
      for (const auto& f : files)
        for (auto& d : read_conll_file(f)) docs.push_back(std::move(d));
      break;
    }
  }
  if (corpus.splits.empty()) throw Error(ErrorCode::EmptyInput, "no train/dev/test data under " + dir.string());
  return corpus;
}

inline std::string render_stats_table(const StatsReport& report) {
  const auto classes = report.classes();
  std::vector<std::string> header{"Split"};
  header.insert(header.end(), classes.begin(), classes.end());
  header.push_back("Entities");
  header.push_back("Tokens");

  std::vector<std::vector<std::string>> rows;
  auto row_for = [&](std::string name, const SplitStats& st) {
    if (!name.empty()) name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    std::vector<std::string> row{std::move(name)};
    for (const auto& c : classes) {
      auto it = st.entities.find(c);
      row.push_back(std::to_string(it == st.entities.end() ? 0 : it->second));
    }
    row.push_back(std::to_string(st.total_entities()));
    row.push_back(std::to_string(st.tokens));
    rows.push_back(std::move(row));
  };
  for (const auto& [name, st] : report.splits) row_for(name, st);
  row_for("total", report.total);

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        os << r[c] << std::string(width[c] - r[c].size(), ' ');
      } else {
        os << "  " << std::string(width[c] - r[c].size(), ' ') << r[c];
      }
    }
    os << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return os.str();
}

inline Json to_json(const SplitStats& st) {
  Json entities = Json::object();
  for (const auto& [k, v] : st.entities) entities[k] = v;
  return Json{{"documents", st.documents}, {"sentences", st.sentences}, {"tokens", st.tokens},
              {"entities", entities},     {"total_entities", st.total_entities()}};
}

inline Json to_json(const StatsReport& report) {
  Json splits = Json::object();
  for (const auto& [name, st] : report.splits) splits[name] = to_json(st);
  return Json{{"splits", splits}, {"total", to_json(report.total)}};
}

}  // namespace ctiner
