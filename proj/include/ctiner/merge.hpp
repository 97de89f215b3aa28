#pragma once

// Priority-based merging of per-source entity lists.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctiner/entity.hpp"
#include "ctiner/error.hpp"

namespace ctiner {

/// Sources in decreasing priority. Non-empty, no duplicates.
class MergePolicy {
 public:
  explicit MergePolicy(std::vector<SourceId> order) : order_(std::move(order)) {
    if (order_.empty()) throw Error(ErrorCode::EmptyPolicy, "merge policy needs at least one source");
    for (std::size_t i = 0; i < order_.size(); ++i)
      for (std::size_t j = i + 1; j < order_.size(); ++j)
        if (order_[i].code == order_[j].code)
          throw Error(ErrorCode::DuplicateSourceCode, std::string("source '") + order_[i].code + "' listed twice");
  }

  const std::vector<SourceId>& order() const noexcept { return order_; }

  /// Priority rank of `source` (0 = highest), or npos.
  std::size_t rank(const SourceId& source) const noexcept {
    for (std::size_t i = 0; i < order_.size(); ++i)
      if (order_[i] == source) return i;
    return npos;
  }

  /// The letters of the policy, e.g. "HTFS".
  std::string code() const {
    std::string s;
    for (const auto& src : order_) s += src.code;
    return s;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<SourceId> order_;
};

/// Builds a policy from a priority code such as "HTFS".
///
/// Letters registered but not in `available` are skipped, so the default
/// "HTFS" works when only some sources are enabled. Available sources the
/// code leaves out are appended in registration order.
inline MergePolicy parse_priority(std::string_view code, std::span<const SourceId> available,
                                  const SourceRegistry& registry = SourceRegistry::builtin()) {
  if (code.empty()) throw Error(ErrorCode::EmptyPolicy, "priority code is empty");
  auto is_available = [&](const SourceId& s) { return std::find(available.begin(), available.end(), s) != available.end(); };
  for (const auto& s : available)
    if (registry.position(s) == SourceRegistry::npos)
      throw Error(ErrorCode::UnknownSourceCode, std::string("source '") + s.code + "' (" + s.name + ") is not registered");

  std::vector<SourceId> order;
  std::string seen;
  for (const char letter : code) {
    if (seen.find(letter) != std::string::npos)
      throw Error(ErrorCode::DuplicateSourceCode, std::string("letter '") + letter + "' repeated in priority '" + std::string(code) + "'");
    seen += letter;
    const auto source = registry.find(letter);
    if (!source) throw Error(ErrorCode::UnknownSourceCode, std::string("no source registered for letter '") + letter + "'");
    if (is_available(*source)) order.push_back(*source);
  }
  for (const auto& s : registry.entries())
    if (is_available(s) && std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  return MergePolicy(std::move(order));
}

using MergeInput = std::map<SourceId, std::vector<EntityMention>>;

/// Greedy priority merge.
///
/// Sources are visited in policy order and each source's mentions by
/// (start, end). A mention is kept iff it overlaps nothing kept so far. The
/// result is grouped by priority rank and sorted by start within a group.
/// Sources present in `input` but absent from the policy rank last, by code.
inline std::vector<EntityMention> merge(const MergeInput& input, const MergePolicy& policy) {
  std::vector<SourceId> visit = policy.order();
  for (const auto& [source, mentions] : input) {
    for (const auto& m : mentions)
      if (m.source != source)
        throw Error(ErrorCode::InconsistentSource, "mention '" + m.mention + "' from '" + m.source.name +
                                                       "' filed under '" + source.name + "'");
    if (std::find(visit.begin(), visit.end(), source) == visit.end()) visit.push_back(source);
  }

  std::vector<EntityMention> out;
  DisjointRanges taken;
  for (const auto& source : visit) {
    const auto it = input.find(source);
    if (it == input.end()) continue;
    std::vector<const EntityMention*> ordered;
    ordered.reserve(it->second.size());
    for (const auto& m : it->second) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(), [](const EntityMention* a, const EntityMention* b) { return position_less(*a, *b); });
    for (const auto* m : ordered)
      if (taken.try_insert(m->start, m->end)) out.push_back(*m);
  }
  return out;
}

/// Convenience: files each mention under its own source.
inline MergeInput group_by_source(std::span<const EntityMention> mentions) {
  MergeInput input;
  for (const auto& m : mentions) input[m.source].push_back(m);
  return input;
}

/// Document-order view of a merged list.
inline std::vector<EntityMention> sort_by_position(std::vector<EntityMention> mentions) {
  std::stable_sort(mentions.begin(), mentions.end(), position_less);
  return mentions;
}

}  // namespace ctiner
