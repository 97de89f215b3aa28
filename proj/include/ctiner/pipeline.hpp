#pragma once

// Extraction pipeline: heuristics plus any number of backends, merged under a
// priority code. Also the output renderers used by the command-line tool.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctiner/conll.hpp"
#include "ctiner/entity.hpp"
#include "ctiner/error.hpp"
#include "ctiner/gateway.hpp"
#include "ctiner/heuristics.hpp"
#include "ctiner/merge.hpp"

namespace ctiner {

struct PipelineConfig {
  bool heuristic = true;
  HeuristicConfig heuristics;
  std::shared_ptr<const PatternRegistry> patterns;  // null means the built-in registry
  std::vector<BackendDescriptor> backends;
  std::string priority = "HTFS";
  bool skip_unready = false;
  SourceRegistry registry = SourceRegistry::builtin();

  std::vector<SourceId> enabled_sources() const {
    std::vector<SourceId> out;
    if (heuristic) out.push_back(sources::heuristic);
    for (const auto& b : backends) out.push_back(b.source);
    return out;
  }

  const PatternRegistry& pattern_registry() const { return patterns ? *patterns : PatternRegistry::builtin(); }

  /// Throws InvalidConfig (or a priority error) when the config cannot run.
  MergePolicy validate() const {
    const auto enabled = enabled_sources();
    if (enabled.empty()) throw Error(ErrorCode::InvalidConfig, "no extraction source enabled");
    for (std::size_t i = 0; i < enabled.size(); ++i)
      for (std::size_t j = i + 1; j < enabled.size(); ++j)
        if (enabled[i].code == enabled[j].code)
          throw Error(ErrorCode::DuplicateSourceCode, std::string("source '") + enabled[i].code + "' enabled twice");
    for (const auto& b : backends)
      if (b.source == sources::heuristic) throw Error(ErrorCode::InvalidConfig, "a backend cannot use the heuristic source");
    return parse_priority(priority, enabled, registry);
  }
};

struct ExtractResult {
  std::vector<EntityMention> entities;
  std::vector<std::string> warnings;
};

/// Runs every enabled source on `doc` and merges the results. Backends are
/// queried concurrently; the merge does not depend on completion order.
/// Backend errors propagate unless `skip_unready` is set, in which case the
/// failing source is dropped with a warning.
inline ExtractResult extract_pipeline(const DocumentText& doc, const PipelineConfig& config) {
  const auto policy = config.validate();
  ExtractResult result;
  MergeInput input;

  std::vector<std::future<std::vector<EntityMention>>> pending;
  pending.reserve(config.backends.size());
  for (const auto& backend : config.backends)
    pending.push_back(std::async(std::launch::async, [&backend, &doc] { return request_entities(backend, doc); }));

  if (config.heuristic) input[sources::heuristic] = extract_iocs(doc, config.heuristics, config.pattern_registry());

  std::optional<Error> first_error;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    try {
      input[config.backends[i].source] = pending[i].get();
    } catch (const Error& e) {
      if (!config.skip_unready) {
        if (!first_error) first_error = e;
        continue;
      }
      result.warnings.push_back("skipping " + config.backends[i].source.name + ": " + e.what());
    }
  }
  if (first_error) throw *first_error;

  result.entities = merge(input, policy);
  return result;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string format_confidence(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", c);
  return buf;
}

inline std::string render_text(const EntityMention& m) {
  return "Mention: " + m.mention + ", Class: " + m.label + ", Start: " + std::to_string(m.start) +
         ", End: " + std::to_string(m.end) + ", Confidence: " + format_confidence(m.confidence);
}

/// One line per mention, each newline-terminated.
inline std::string render_text(std::span<const EntityMention> mentions) {
  std::string out;
  for (const auto& m : mentions) {
    out += render_text(m);
    out += '\n';
  }
  return out;
}

inline Json render_json(const std::string& doc_id, std::span<const EntityMention> mentions) {
  Json entities = Json::array();
  for (const auto& m : mentions) entities.push_back(to_json(m));
  return Json{{"doc_id", doc_id}, {"entities", std::move(entities)}};
}

struct ConllRendering {
  std::string conll;
  std::vector<EntityMention> skipped;  // mentions that cut through a token
};

/// Whitespace-tokenized CoNLL, one sentence per non-empty line of the text.
inline ConllRendering render_conll(const DocumentText& doc, std::span<const EntityMention> mentions) {
  const auto lines = tokenize_lines(doc);
  std::vector<Token> tokens;
  for (const auto& line : lines) tokens.insert(tokens.end(), line.begin(), line.end());

  ConllRendering out;
  std::vector<EntityMention> aligned;
  for (const auto& m : mentions) {
    try {
      const EntityMention one[] = {m};
      (void)spans_to_bio(doc, one, tokens);
      aligned.push_back(m);
    } catch (const Error&) {
      out.skipped.push_back(m);
    }
  }
  const auto tags = spans_to_bio(doc, aligned, tokens);

  TaggedDocument tagged;
  tagged.doc_id = doc.doc_id();
  std::size_t k = 0;
  for (const auto& line : lines) {
    Sentence s;
    for (const auto& t : line) {
      s.tokens.push_back(t);
      s.tags.push_back(tags[k++]);
    }
    tagged.sentences.push_back(std::move(s));
  }
  const TaggedDocument docs[] = {std::move(tagged)};
  out.conll = write_conll(docs);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration file
//
// {
//   "priority": "HTFS",
//   "heuristic": true,
//   "defang": false,
//   "patterns": ["SHA256", "CVE"],          // optional subset
//   "pattern_table": "extra_patterns.tsv",  // optional, replaces the built-ins
//   "backends": [
//     {"code": "T", "name": "transformer", "endpoint": "http://127.0.0.1:8000",
//      "timeout_ms": 5000, "label_map": {"ORG": "Organization"}}
//   ]
// }

inline std::shared_ptr<const PatternRegistry> load_pattern_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open pattern table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return std::make_shared<const PatternRegistry>(PatternRegistry::from_table(ss.str()));
}

/// Registers `code` under `name` if needed and returns the source.
inline SourceId ensure_source(SourceRegistry& registry, char code, const std::string& name) {
  if (auto existing = registry.find(code)) {
    if (!name.empty() && existing->name != name)
      throw Error(ErrorCode::InvalidConfig, std::string("code '") + code + "' is already '" + existing->name + "', not '" + name + "'");
    return *existing;
  }
  if (name.empty()) throw Error(ErrorCode::UnknownSourceCode, std::string("code '") + code + "' needs a name to register");
  return registry.add(SourceId{code, name});
}

inline BackendDescriptor backend_from_json(const nlohmann::json& j, SourceRegistry& registry) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "backend entry must be an object");
  const auto code = j.value("code", std::string{});
  if (code.size() != 1) throw Error(ErrorCode::InvalidConfig, "backend \"code\" must be a single letter");
  BackendDescriptor b;
  b.source = ensure_source(registry, code[0], j.value("name", std::string{}));
  b.endpoint = j.value("endpoint", std::string{});
  if (b.endpoint.empty()) throw Error(ErrorCode::InvalidConfig, "backend '" + b.source.name + "' has no endpoint");
  const auto timeout = j.value("timeout_ms", 5000);
  if (timeout <= 0) throw Error(ErrorCode::InvalidConfig, "backend '" + b.source.name + "' timeout must be positive");
  b.timeout = std::chrono::milliseconds{timeout};
  if (j.contains("label_map")) {
    if (!j["label_map"].is_object()) throw Error(ErrorCode::InvalidConfig, "\"label_map\" must be an object");
    for (auto it = j["label_map"].begin(); it != j["label_map"].end(); ++it) b.label_map[it.key()] = it.value().get<std::string>();
  }
  return b;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, path.string() + ": top level must be an object");
  PipelineConfig cfg;
  try {
    cfg.priority = j.value("priority", cfg.priority);
    cfg.heuristic = j.value("heuristic", cfg.heuristic);
    cfg.heuristics.defang_normalization = j.value("defang", false);
    if (j.contains("patterns"))
      for (const auto& p : j["patterns"]) cfg.heuristics.enabled_patterns.insert(p.get<std::string>());
    if (j.contains("pattern_table")) {
      std::filesystem::path table = j["pattern_table"].get<std::string>();
      if (table.is_relative()) table = path.parent_path() / table;
      cfg.patterns = load_pattern_table(table);
    }
    if (j.contains("backends"))
      for (const auto& b : j["backends"]) {
        auto backend = backend_from_json(b, cfg.registry);
        // "mock:<script>" endpoints are resolved relative to the config file
        constexpr std::string_view mock = "mock:";
        if (backend.endpoint.rfind(mock, 0) == 0) {
          std::filesystem::path script = backend.endpoint.substr(mock.size());
          if (script.is_relative()) backend.endpoint = std::string(mock) + (path.parent_path() / script).string();
        }
        cfg.backends.push_back(std::move(backend));
      }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return cfg;
}

}  // namespace ctiner
