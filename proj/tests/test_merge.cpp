#include <algorithm>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "ctiner/heuristics.hpp"
#include "ctiner/merge.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace ctiner {
namespace {

using testing::kMergeSources;

MergePolicy htf() { return MergePolicy({sources::heuristic, sources::transformer, sources::flair}); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

TEST(Merge, HeuristicBeatsTransformerOnHash) {
  const auto doc = testing::report_doc();
  MergeInput input;
  input[sources::heuristic] = extract_iocs(doc);
  input[sources::transformer] = testing::transformer_mentions(doc);
  const auto policy = parse_priority("HT", std::vector<SourceId>{sources::heuristic, sources::transformer});
  const auto out = merge(input, policy);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].label, "SHA256");
  EXPECT_EQ(out[0].source, sources::heuristic);
  EXPECT_EQ(out[1].mention, "Proofpoint");
  EXPECT_EQ(out[2].mention, "FluBot");
  EXPECT_EQ(out[3].mention, "Android");
  for (const auto& m : out) EXPECT_NE(m.label, "Indicator");
}

TEST(Merge, ThreeSources) {
  const auto doc = testing::report_doc();
  MergeInput input;
  input[sources::heuristic] = extract_iocs(doc);
  input[sources::transformer] = testing::transformer_mentions(doc);
  input[sources::flair] = testing::flair_mentions(doc);
  const auto out = merge(input, htf());
  std::vector<std::string> labels;
  for (const auto& m : out) labels.push_back(m.label);
  EXPECT_EQ(labels, (std::vector<std::string>{"SHA256", "Organization", "Malware", "System", "MISC", "LOC"}));
}

TEST(Merge, EmptyInput) {
  EXPECT_TRUE(merge({}, htf()).empty());
  MergeInput input;
  input[sources::transformer] = {};
  EXPECT_TRUE(merge(input, htf()).empty());
}

TEST(Merge, HigherPriorityBlocksOverlap) {
  const auto doc = testing::filler_doc(60);
  MergeInput input;
  input[sources::heuristic] = {new_mention(doc, "URL", 10, 20, 1.0, sources::heuristic)};
  input[sources::transformer] = {new_mention(doc, "Malware", 15, 30, 0.9, sources::transformer),
                                 new_mention(doc, "System", 40, 50, 0.9, sources::transformer)};
  const auto out = merge(input, htf());
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].start, 10u);
  EXPECT_EQ(out[0].source, sources::heuristic);
  EXPECT_EQ(out[1].start, 40u);
  EXPECT_EQ(out[1].source, sources::transformer);
}

TEST(Merge, TouchingSpansBothSurvive) {
  const auto doc = testing::filler_doc(20);
  MergeInput input;
  input[sources::heuristic] = {new_mention(doc, "A", 0, 5, 1.0, sources::heuristic)};
  input[sources::transformer] = {new_mention(doc, "B", 5, 9, 1.0, sources::transformer)};
  EXPECT_EQ(merge(input, htf()).size(), 2u);
}

TEST(Merge, SourceMissingFromPolicyRanksLast) {
  const auto doc = testing::filler_doc(20);
  MergeInput input;
  input[sources::spacy] = {new_mention(doc, "A", 0, 5, 1.0, sources::spacy)};
  input[sources::transformer] = {new_mention(doc, "B", 2, 9, 1.0, sources::transformer)};
  const auto out = merge(input, MergePolicy({sources::transformer}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].source, sources::transformer);
}

TEST(Merge, InconsistentSource) {
  const auto doc = testing::filler_doc(20);
  MergeInput input;
  input[sources::heuristic] = {new_mention(doc, "A", 0, 5, 1.0, sources::transformer)};
  EXPECT_EQ(code_of([&] { merge(input, htf()); }), ErrorCode::InconsistentSource);
}

TEST(MergePolicy, Validation) {
  EXPECT_EQ(code_of([] { MergePolicy({}); }), ErrorCode::EmptyPolicy);
  EXPECT_EQ(code_of([] { MergePolicy({sources::heuristic, sources::heuristic}); }), ErrorCode::DuplicateSourceCode);
  EXPECT_EQ(htf().code(), "HTF");
  EXPECT_EQ(htf().rank(sources::flair), 2u);
  EXPECT_EQ(htf().rank(sources::spacy), MergePolicy::npos);
}

TEST(ParsePriority, Examples) {
  const std::vector<SourceId> all = {sources::heuristic, sources::transformer, sources::flair, sources::spacy};
  EXPECT_EQ(parse_priority("HTFS", all).code(), "HTFS");
  EXPECT_EQ(parse_priority("TH", std::vector<SourceId>{sources::heuristic, sources::transformer}).code(), "TH");
  // registered but disabled letters are skipped
  EXPECT_EQ(parse_priority("HTFS", std::vector<SourceId>{sources::heuristic, sources::transformer}).code(), "HT");
  // enabled sources left out of the code go last, in registration order
  EXPECT_EQ(parse_priority("F", all).code(), "FHTS");
  EXPECT_EQ(code_of([&] { parse_priority("HXT", all); }), ErrorCode::UnknownSourceCode);
  EXPECT_EQ(code_of([&] { parse_priority("HTH", all); }), ErrorCode::DuplicateSourceCode);
  EXPECT_EQ(code_of([&] { parse_priority("", all); }), ErrorCode::EmptyPolicy);
  EXPECT_EQ(code_of([&] { parse_priority("T", std::vector<SourceId>{SourceId{'Q', "quux"}}); }), ErrorCode::UnknownSourceCode);
}

TEST(ParsePriority, CustomRegisteredSource) {
  auto registry = SourceRegistry::builtin();
  const auto gpt = registry.add(SourceId{'G', "gpt"});
  const std::vector<SourceId> enabled = {sources::heuristic, gpt};
  EXPECT_EQ(parse_priority("GH", enabled, registry).code(), "GH");
}

TEST(MergeProperties, OracleEquivalenceExhaustiveSmall) {
  const auto doc = testing::filler_doc(4);
  const auto policy = htf();
  const auto visited = testing::for_each_small_merge_case(doc, 2, 4, [&](const std::vector<EntityMention>& all) {
    ASSERT_EQ(merge(group_by_source(all), policy), testing::brute_force_merge(all, kMergeSources));
  });
  EXPECT_GT(visited, 400u);
}

class RandomMerge : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};
  DocumentText doc = testing::filler_doc(30);
};

TEST_F(RandomMerge, MatchesOracle) {
  std::uniform_int_distribution<std::size_t> count(0, 6);
  for (int iter = 0; iter < 3000; ++iter) {
    const auto all = testing::random_mentions(rng, doc, count(rng), 30);
    ASSERT_EQ(merge(group_by_source(all), htf()), testing::brute_force_merge(all, kMergeSources));
  }
}

TEST_F(RandomMerge, StructuralProperties) {
  std::uniform_int_distribution<std::size_t> count(0, 12);
  for (int iter = 0; iter < 3000; ++iter) {
    auto all = testing::random_mentions(rng, doc, count(rng), 30);
    const auto out = merge(group_by_source(all), htf());

    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = i + 1; j < out.size(); ++j) ASSERT_FALSE(overlaps(out[i], out[j]));
    for (const auto& m : out) ASSERT_NE(std::find(all.begin(), all.end(), m), all.end());
    // maximal: anything dropped collides with something kept
    for (const auto& m : all) {
      if (std::find(out.begin(), out.end(), m) == out.end()) {
        ASSERT_TRUE(std::any_of(out.begin(), out.end(), [&](const EntityMention& k) { return overlaps(k, m); }));
      }
    }
    // the top source is merged as if it were alone
    std::vector<EntityMention> top_only, top_kept;
    for (const auto& m : all)
      if (m.source == sources::heuristic) top_only.push_back(m);
    for (const auto& m : out)
      if (m.source == sources::heuristic) top_kept.push_back(m);
    ASSERT_EQ(top_kept, merge(group_by_source(top_only), htf()));
    // input order does not matter
    std::shuffle(all.begin(), all.end(), rng);
    ASSERT_EQ(merge(group_by_source(all), htf()), out);
  }
}

TEST(SortByPosition, OrdersByStart) {
  const auto doc = testing::report_doc();
  MergeInput input;
  input[sources::heuristic] = extract_iocs(doc);
  input[sources::transformer] = testing::transformer_mentions(doc);
  const auto sorted = sort_by_position(merge(input, htf()));
  for (std::size_t i = 1; i < sorted.size(); ++i) EXPECT_LT(sorted[i - 1].start, sorted[i].start);
}

}  // namespace
}  // namespace ctiner
