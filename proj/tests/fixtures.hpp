#pragma once

// Shared inputs for the unit and acceptance suites.

#include <string>
#include <vector>

#include "ctiner/entity.hpp"

namespace ctiner::testing {

inline const std::string kReportText =
    "Proofpoint report mentions that the German-language messages were turned off once the UK messages were "
    "established, indicating a conscious effort to spread FluBot "
    "446833e3f8b04d4c3c2d2288e456328266524e396adbfeba3769d00727481e80 in Android phones.";

inline const std::string kReportHash = "446833e3f8b04d4c3c2d2288e456328266524e396adbfeba3769d00727481e80";

inline DocumentText report_doc() { return DocumentText("report", kReportText); }

inline std::vector<EntityMention> transformer_mentions(const DocumentText& doc) {
  const auto& T = sources::transformer;
  return {new_mention(doc, "Organization", 0, 10, 0.82, T), new_mention(doc, "Malware", 156, 162, 0.92, T),
          new_mention(doc, "Indicator", 163, 227, 0.90, T), new_mention(doc, "System", 231, 238, 1.0, T)};
}

inline std::vector<EntityMention> flair_mentions(const DocumentText& doc) {
  const auto& F = sources::flair;
  return {new_mention(doc, "MISC", 36, 51, 1.0, F), new_mention(doc, "LOC", 86, 88, 1.0, F)};
}

inline const std::vector<std::string> kTransformerLines = {
    "Mention: Proofpoint, Class: Organization, Start: 0, End: 10, Confidence: 0.82",
    "Mention: FluBot, Class: Malware, Start: 156, End: 162, Confidence: 0.92",
    "Mention: 446833e3f8b04d4c3c2d2288e456328266524e396adbfeba3769d00727481e80, Class: Indicator, Start: 163, End: 227, Confidence: 0.90",
    "Mention: Android, Class: System, Start: 231, End: 238, Confidence: 1.00",
};

inline const std::vector<std::string> kHeuristicTransformerLines = {
    "Mention: 446833e3f8b04d4c3c2d2288e456328266524e396adbfeba3769d00727481e80, Class: SHA256, Start: 163, End: 227, Confidence: 1.00",
    "Mention: Proofpoint, Class: Organization, Start: 0, End: 10, Confidence: 0.82",
    "Mention: FluBot, Class: Malware, Start: 156, End: 162, Confidence: 0.92",
    "Mention: Android, Class: System, Start: 231, End: 238, Confidence: 1.00",
};

inline std::vector<std::string> all_sources_lines() {
  auto lines = kHeuristicTransformerLines;
  lines.push_back("Mention: German-language, Class: MISC, Start: 36, End: 51, Confidence: 1.00");
  lines.push_back("Mention: UK, Class: LOC, Start: 86, End: 88, Confidence: 1.00");
  return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// The CoNLL example sentence (DroidJack) with its tags.
inline const std::vector<std::string> kDroidJackTokens = {"Proofpoint", "wrote", "about",   "the", "DroidJack", "RAT",
                                                          "side-loaded", "with", "Pokemon", "GO",  "."};
inline const std::vector<std::string> kDroidJackTags = {"B-Organization", "O", "O",         "O",        "B-Malware", "I-Malware",
                                                        "O",              "O", "B-System", "I-System", "O"};

inline std::string droidjack_conll() {
  std::string out;
  for (std::size_t i = 0; i < kDroidJackTokens.size(); ++i) out += kDroidJackTokens[i] + "\t" + kDroidJackTags[i] + "\n";
  return out + "\n";
}

}  // namespace ctiner::testing
