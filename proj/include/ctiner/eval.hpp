#pragma once

// Span-level evaluation of IOB2 taggings: exact (class, start, end) matches
// per sentence, pooled into micro precision/recall/F1 and per-class scores.
// Spans are decoded leniently. Any 0/0 ratio is 0.

#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctiner/conll.hpp"
#include "ctiner/entity.hpp"
#include "ctiner/error.hpp"

namespace ctiner {

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double safe_ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline Scores scores_from(const MatchCounts& c) noexcept {
  Scores s;
  s.precision = safe_ratio(c.tp, c.tp + c.fp);
  s.recall = safe_ratio(c.tp, c.tp + c.fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

struct ClassReport {
  Scores scores;
  MatchCounts counts;
  std::size_t support = 0;  // gold spans
};

struct EvalReport {
  Scores micro;
  MatchCounts counts;
  std::size_t support = 0;
  std::map<std::string, ClassReport> per_class;  // every class seen in gold or pred
};

using TagSequences = std::vector<std::vector<std::string>>;

namespace detail {
inline void check_shape(std::span<const std::vector<std::string>> gold, std::span<const std::vector<std::string>> pred) {
  if (gold.size() != pred.size())
    throw Error(ErrorCode::ShapeMismatch, std::to_string(gold.size()) + " gold sentences vs " + std::to_string(pred.size()) + " predicted");
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i].size() != pred[i].size())
      throw Error(ErrorCode::ShapeMismatch, "sentence " + std::to_string(i) + ": " + std::to_string(gold[i].size()) +
                                                " gold tags vs " + std::to_string(pred[i].size()) + " predicted");
}
}  // namespace detail

inline EvalReport evaluate(std::span<const std::vector<std::string>> gold, std::span<const std::vector<std::string>> pred) {
  detail::check_shape(gold, pred);
  EvalReport report;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = bio_to_spans(gold[i]);
    const auto p = bio_to_spans(pred[i]);
    const std::set<TagSpan> gold_set(g.begin(), g.end());
    for (const auto& span : g) {
      auto& cls = report.per_class[span.label];
      ++cls.support;
    }
    std::set<TagSpan> matched;
    for (const auto& span : p) {
      auto& cls = report.per_class[span.label];
      if (gold_set.count(span)) {
        ++cls.counts.tp;
        matched.insert(span);
      } else {
        ++cls.counts.fp;
      }
    }
    for (const auto& span : g)
      if (!matched.count(span)) ++report.per_class[span.label].counts.fn;
  }
  for (auto& [_, cls] : report.per_class) {
    cls.scores = scores_from(cls.counts);
    report.counts.tp += cls.counts.tp;
    report.counts.fp += cls.counts.fp;
    report.counts.fn += cls.counts.fn;
    report.support += cls.support;
  }
  report.micro = scores_from(report.counts);
  return report;
}

/// Key: (gold class, predicted class); nullopt stands for "no span".
using ConfusionKey = std::pair<std::optional<std::string>, std::optional<std::string>>;
using ConfusionSummary = std::map<ConfusionKey, std::size_t>;

/// Pairs gold and predicted spans with identical token boundaries regardless
/// of class; leftovers count against "none".
inline ConfusionSummary confusion_summary(std::span<const std::vector<std::string>> gold,
                                          std::span<const std::vector<std::string>> pred) {
  detail::check_shape(gold, pred);
  ConfusionSummary out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = bio_to_spans(gold[i]);
    const auto p = bio_to_spans(pred[i]);
    std::map<std::pair<std::size_t, std::size_t>, const TagSpan*> by_range;
    for (const auto& s : p) by_range[{s.begin, s.end}] = &s;
    for (const auto& s : g) {
      auto it = by_range.find({s.begin, s.end});
      if (it == by_range.end()) {
        ++out[{s.label, std::nullopt}];
      } else {
        ++out[{s.label, it->second->label}];
        by_range.erase(it);
      }
    }
    for (const auto& [_, s] : by_range) ++out[{std::nullopt, s->label}];
  }
  return out;
}

/// Flattens documents into per-sentence tag sequences.
inline TagSequences tag_sequences(std::span<const TaggedDocument> docs) {
  TagSequences out;
  for (const auto& d : docs)
    for (const auto& s : d.sentences) out.push_back(s.tags);
  return out;
}

namespace detail {
inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}
}  // namespace detail

/// Aligned table: one row per class, then the micro average. Scores are
/// percentages with two decimals.
inline std::string render_eval_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [name, cls] : report.per_class)
    rows.push_back({name, detail::percent(cls.scores.precision), detail::percent(cls.scores.recall),
                    detail::percent(cls.scores.f1), std::to_string(cls.support)});
  const std::vector<std::string> micro{"micro avg", detail::percent(report.micro.precision),
                                       detail::percent(report.micro.recall), detail::percent(report.micro.f1),
                                       std::to_string(report.support)};
  const std::vector<std::string> header{"Class", "Precision", "Recall", "F1-score", "Support"};

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = std::max(header[c].size(), micro[c].size());
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& r) {
    os << r[0] << std::string(width[0] - r[0].size(), ' ');
    for (std::size_t c = 1; c < r.size(); ++c) os << "  " << std::string(width[c] - r[c].size(), ' ') << r[c];
    os << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  os << '\n';
  emit(micro);
  return os.str();
}

inline Json to_json(const Scores& s) { return Json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}}; }

inline Json to_json(const EvalReport& report) {
  Json per_class = Json::object();
  for (const auto& [name, cls] : report.per_class) {
    auto j = to_json(cls.scores);
    j["support"] = cls.support;
    j["tp"] = cls.counts.tp;
    j["fp"] = cls.counts.fp;
    j["fn"] = cls.counts.fn;
    per_class[name] = std::move(j);
  }
  auto micro = to_json(report.micro);
  micro["support"] = report.support;
  micro["tp"] = report.counts.tp;
  micro["fp"] = report.counts.fp;
  micro["fn"] = report.counts.fn;
  return Json{{"micro", micro}, {"per_class", per_class}};
}

inline std::string render_confusion(const ConfusionSummary& summary) {
  std::ostringstream os;
  os << "gold\tpredicted\tcount\n";
  for (const auto& [key, n] : summary)
    os << key.first.value_or("none") << '\t' << key.second.value_or("none") << '\t' << n << '\n';
  return os.str();
}

}  // namespace ctiner
