#pragma once

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ctiner/entity.hpp"

namespace ctiner::testing {

// ---------------------------------------------------------------------------
// Merge: exhaustive subset search.
//
// Mentions are ranked by (priority, start, end, remaining fields). Among all
// conflict-free subsets, the greedy-by-rank result is the one whose membership
// vector, read in rank order, is lexicographically largest.

inline std::vector<EntityMention> brute_force_merge(const std::vector<EntityMention>& all,
                                                    const std::vector<SourceId>& priority) {
  auto rank_of = [&](const SourceId& s) {
    return static_cast<std::size_t>(std::find(priority.begin(), priority.end(), s) - priority.begin());
  };
  std::vector<EntityMention> ranked = all;
  std::sort(ranked.begin(), ranked.end(), [&](const EntityMention& a, const EntityMention& b) {
    return std::make_tuple(rank_of(a.source), a.start, a.end, a.label, a.confidence, a.mention) <
           std::make_tuple(rank_of(b.source), b.start, b.end, b.label, b.confidence, b.mention);
  });
  const std::size_t n = ranked.size();
  auto conflict_free = [&](unsigned mask) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if ((mask >> i & 1u) && (mask >> j & 1u)) {
          const auto lo = std::max(ranked[i].start, ranked[j].start);
          const auto hi = std::min(ranked[i].end, ranked[j].end);
          if (lo < hi) return false;
        }
    return true;
  };
  // bit i of the key is the membership of ranked[i], most significant first
  auto key = [&](unsigned mask) {
    unsigned k = 0;
    for (std::size_t i = 0; i < n; ++i) k = (k << 1) | (mask >> i & 1u);
    return k;
  };
  unsigned best = 0;
  unsigned best_key = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask)
    if (conflict_free(mask) && key(mask) >= best_key) {
      best = mask;
      best_key = key(mask);
    }
  std::vector<EntityMention> out;
  for (std::size_t i = 0; i < n; ++i)
    if (best >> i & 1u) out.push_back(ranked[i]);
  return out;  // already ordered by (priority, start)
}

// ---------------------------------------------------------------------------
// Span extraction by the chunk start/end rules of the common reference scorer.

struct RefSpan {
  std::string type;
  std::size_t begin;
  std::size_t last;  // inclusive
  friend auto operator<=>(const RefSpan&, const RefSpan&) = default;
};

inline bool ref_end_of_chunk(char prev_tag, char tag, const std::string& prev_type, const std::string& type) {
  bool end = false;
  if (prev_tag == 'B' && (tag == 'B' || tag == 'O')) end = true;
  if (prev_tag == 'I' && (tag == 'B' || tag == 'O')) end = true;
  if (prev_tag != 'O' && prev_type != type) end = true;
  return end;
}

inline bool ref_start_of_chunk(char prev_tag, char tag, const std::string& prev_type, const std::string& type) {
  bool start = false;
  if (tag == 'B') start = true;
  if (prev_tag == 'O' && tag == 'I') start = true;
  if (tag != 'O' && prev_type != type) start = true;
  return start;
}

inline std::vector<RefSpan> ref_entities(std::vector<std::string> seq) {
  seq.push_back("O");
  std::vector<RefSpan> chunks;
  char prev_tag = 'O';
  std::string prev_type;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const char tag = seq[i][0];
    std::string type = seq[i].size() > 2 ? seq[i].substr(2) : "_";
    if (ref_end_of_chunk(prev_tag, tag, prev_type, type)) chunks.push_back({prev_type, begin, i - 1});
    if (ref_start_of_chunk(prev_tag, tag, prev_type, type)) begin = i;
    prev_tag = tag;
    prev_type = type;
  }
  return chunks;
}

struct RefCounts {
  std::size_t tp = 0, pred = 0, gold = 0;
};

struct RefScores {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t support = 0;
};

inline RefScores ref_scores(const RefCounts& c) {
  RefScores s;
  s.precision = c.pred ? static_cast<double>(c.tp) / static_cast<double>(c.pred) : 0.0;
  s.recall = c.gold ? static_cast<double>(c.tp) / static_cast<double>(c.gold) : 0.0;
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  s.support = c.gold;
  return s;
}

/// Returns per-class scores; the key "" holds the micro average.
inline std::map<std::string, RefScores> brute_force_scores(const std::vector<std::vector<std::string>>& gold,
                                                           const std::vector<std::vector<std::string>>& pred) {
  std::set<std::tuple<std::size_t, RefSpan>> g, p;
  for (std::size_t s = 0; s < gold.size(); ++s)
    for (const auto& e : ref_entities(gold[s])) g.insert({s, e});
  for (std::size_t s = 0; s < pred.size(); ++s)
    for (const auto& e : ref_entities(pred[s])) p.insert({s, e});
  std::map<std::string, RefCounts> counts;
  RefCounts micro;
  for (const auto& x : g) {
    ++counts[std::get<1>(x).type].gold;
    ++micro.gold;
  }
  for (const auto& x : p) {
    ++counts[std::get<1>(x).type].pred;
    ++micro.pred;
    if (g.count(x)) {
      ++counts[std::get<1>(x).type].tp;
      ++micro.tp;
    }
  }
  std::map<std::string, RefScores> out;
  for (const auto& [k, c] : counts) out[k] = ref_scores(c);
  out[""] = ref_scores(micro);
  return out;
}

// ---------------------------------------------------------------------------
// Random generators

inline const std::vector<std::string> kClasses = {"Malware", "Indicator", "System", "Organization", "Vulnerability"};

/// Arbitrary tag soup, including ill-formed I- continuations.
inline std::vector<std::string> random_tags(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<int> kind(0, 2), cls(0, 4);
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < len; ++i) {
    const int k = kind(rng);
    tags.push_back(k == 0 ? "O" : std::string(k == 1 ? "B-" : "I-") + kClasses[cls(rng)]);
  }
  return tags;
}

/// Well-formed IOB2: every entity opens with B-.
inline std::vector<std::string> random_iob2(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<int> coin(0, 2), cls(0, 4);
  std::vector<std::string> tags;
  std::string open;
  for (std::size_t i = 0; i < len; ++i) {
    const int k = coin(rng);
    if (k == 0) {
      tags.push_back("O");
      open.clear();
    } else if (k == 1 || open.empty()) {
      open = kClasses[cls(rng)];
      tags.push_back("B-" + open);
    } else {
      tags.push_back("I-" + open);
    }
  }
  return tags;
}

inline std::string random_word(std::mt19937_64& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-.,:/";
  std::uniform_int_distribution<std::size_t> len(1, 8), pick(0, alphabet.size() - 1), uni(0, 9);
  std::string w;
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) w += alphabet[pick(rng)];
  if (uni(rng) == 0) w += "\xC3\xA9";  // é, to exercise code point offsets
  return w;
}

/// A document of `length` filler characters, long enough for any span the
/// merge generators produce.
inline DocumentText filler_doc(std::size_t length) { return DocumentText("synthetic", std::string(length, 'x')); }

inline const std::vector<SourceId> kMergeSources = {sources::heuristic, sources::transformer, sources::flair};

/// `n` random mentions with offsets in [0, max_offset] spread over kMergeSources.
inline std::vector<EntityMention> random_mentions(std::mt19937_64& rng, const DocumentText& doc, std::size_t n,
                                                  std::size_t max_offset) {
  std::uniform_int_distribution<std::size_t> pos(0, max_offset - 1), src(0, kMergeSources.size() - 1), cls(0, 4);
  std::uniform_int_distribution<int> conf(1, 100);
  std::vector<EntityMention> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto start = pos(rng);
    std::uniform_int_distribution<std::size_t> end(start + 1, max_offset);
    out.push_back(new_mention(doc, kClasses[cls(rng)], start, end(rng), conf(rng) / 100.0, kMergeSources[src(rng)]));
  }
  return out;
}

/// Calls `fn` once for every multiset of at most `max_count` mentions drawn
/// from all spans in [0, max_offset] times all kMergeSources. Returns the
/// number of cases visited.
template <typename Fn>
std::size_t for_each_small_merge_case(const DocumentText& doc, std::size_t max_count, std::size_t max_offset, Fn&& fn) {
  std::vector<EntityMention> atoms;
  for (std::size_t s = 0; s < max_offset; ++s)
    for (std::size_t e = s + 1; e <= max_offset; ++e)
      for (std::size_t k = 0; k < kMergeSources.size(); ++k)
        atoms.push_back(new_mention(doc, kClasses[k], s, e, 1.0, kMergeSources[k]));
  std::size_t visited = 0;
  std::vector<EntityMention> current;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    fn(static_cast<const std::vector<EntityMention>&>(current));
    ++visited;
    if (current.size() == max_count) return;
    for (std::size_t i = from; i < atoms.size(); ++i) {
      current.push_back(atoms[i]);
      self(self, i);
      current.pop_back();
    }
  };
  rec(rec, 0);
  return visited;
}

}  // namespace ctiner::testing
