// ctiner: entity extraction, evaluation and corpus statistics for CTI text.
//
// Exit codes: 0 success, 1 usage error, 2 backend failure, 3 data-format error.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ctiner/ctiner.hpp"

namespace {

using namespace ctiner;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBackend = 2;
constexpr int kExitData = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Timeout:
    case ErrorCode::ConnectionFailed:
    case ErrorCode::MalformedResponse:
    case ErrorCode::OffsetMismatch:
      return kExitBackend;
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownSourceCode:
    case ErrorCode::DuplicateSourceCode:
    case ErrorCode::EmptyPolicy:
    case ErrorCode::UnknownPattern:
    case ErrorCode::DuplicatePattern:
    case ErrorCode::BadPattern:
      return kExitUsage;
    default:
      return kExitData;
  }
}

std::string read_all(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_all(in);
}

// "T=http://host:port", "T=mock:script.json" or "X:name=endpoint".
BackendDescriptor parse_backend_flag(const std::string& spec, SourceRegistry& registry, std::chrono::milliseconds timeout) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::InvalidConfig, "backend '" + spec + "' must look like CODE=ENDPOINT");
  const std::string head = spec.substr(0, eq);
  std::string name;
  if (head.size() > 2 && head[1] == ':') name = head.substr(2);
  else if (head.size() != 1) throw Error(ErrorCode::InvalidConfig, "backend code '" + head + "' must be one letter");
  BackendDescriptor b;
  b.source = ensure_source(registry, head[0], name);
  b.endpoint = spec.substr(eq + 1);
  b.timeout = timeout;
  return b;
}

// Starts an in-process mock for every "mock:<script>" endpoint.
std::vector<std::unique_ptr<MockBackend>> start_mocks(std::vector<BackendDescriptor>& backends) {
  std::vector<std::unique_ptr<MockBackend>> mocks;
  for (auto& b : backends) {
    constexpr std::string_view prefix = "mock:";
    if (b.endpoint.rfind(prefix, 0) != 0) continue;
    auto [script, model] = load_mock_script(b.endpoint.substr(prefix.size()));
    mocks.push_back(std::make_unique<MockBackend>(std::move(script), model));
    b.endpoint = mocks.back()->endpoint();
  }
  return mocks;
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> backend_flags;
  int timeout_ms = 5000;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON config file (default: $CTINER_CONFIG)");
  cmd->add_option("--backends", opt.backend_flags, "Backends as CODE=ENDPOINT, CODE:name=ENDPOINT or CODE=mock:script.json")
      ->delimiter(',');
  cmd->add_option("--timeout-ms", opt.timeout_ms, "Timeout for backends given on the command line")
      ->check(CLI::PositiveNumber);
}

PipelineConfig base_config(const CommonOptions& opt) {
  PipelineConfig cfg;
  std::string path = opt.config_path;
  if (path.empty())
    if (const char* env = std::getenv("CTINER_CONFIG"); env && *env) path = env;
  if (!path.empty()) cfg = load_pipeline_config(path);
  if (!opt.backend_flags.empty()) {
    cfg.backends.clear();
    for (const auto& spec : opt.backend_flags)
      cfg.backends.push_back(parse_backend_flag(spec, cfg.registry, std::chrono::milliseconds{opt.timeout_ms}));
  }
  return cfg;
}

// ---------------------------------------------------------------------------

struct ExtractOptions {
  CommonOptions common;
  std::optional<std::string> text;
  std::vector<std::string> files;
  bool from_stdin = false;
  std::string doc_id;
  std::optional<std::string> priority;
  bool no_heuristic = false;
  bool defang = false;
  std::string pattern_table;
  std::vector<std::string> patterns;
  std::string format = "text";
  bool skip_unready = false;
  bool sort_by_position = false;
  unsigned jobs = 0;
};

int run_extract(const ExtractOptions& opt) {
  auto cfg = base_config(opt.common);
  if (opt.priority) cfg.priority = *opt.priority;
  if (opt.no_heuristic) cfg.heuristic = false;
  if (opt.defang) cfg.heuristics.defang_normalization = true;
  if (opt.skip_unready) cfg.skip_unready = true;
  if (!opt.pattern_table.empty()) cfg.patterns = load_pattern_table(opt.pattern_table);
  if (!opt.patterns.empty()) cfg.heuristics.enabled_patterns = {opt.patterns.begin(), opt.patterns.end()};
  for (const auto& name : cfg.heuristics.enabled_patterns)
    if (!cfg.pattern_registry().find(name)) throw Error(ErrorCode::UnknownPattern, "no pattern named '" + name + "'");

  const int sources = (opt.text ? 1 : 0) + (opt.files.empty() ? 0 : 1) + (opt.from_stdin ? 1 : 0);
  if (sources != 1) throw Error(ErrorCode::InvalidConfig, "give exactly one of --text, --file or --stdin");

  auto mocks = start_mocks(cfg.backends);
  (void)cfg.validate();

  std::vector<DocumentText> docs;
  if (opt.text) docs.emplace_back(opt.doc_id.empty() ? "text" : opt.doc_id, *opt.text);
  if (opt.from_stdin) docs.emplace_back(opt.doc_id.empty() ? "stdin" : opt.doc_id, read_all(std::cin));
  for (const auto& f : opt.files) docs.emplace_back(std::filesystem::path(f).filename().string(), read_file(f));

  std::vector<std::optional<ExtractResult>> results(docs.size());
  std::vector<std::optional<Error>> errors(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        results[i] = extract_pipeline(docs[i], cfg);
      } catch (const Error& e) {
        errors[i] = e;
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs ? opt.jobs : std::thread::hardware_concurrency(),
                                                        static_cast<unsigned>(docs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < docs.size(); ++i)
    if (errors[i]) throw *errors[i];

  std::ostringstream out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& w : results[i]->warnings) std::cerr << "warning: " << docs[i].doc_id() << ": " << w << '\n';
    auto entities = std::move(results[i]->entities);
    if (opt.sort_by_position) entities = sort_by_position(std::move(entities));
    if (opt.format == "json") {
      out << render_json(docs[i].doc_id(), entities).dump() << '\n';
    } else if (opt.format == "conll") {
      if (i) out << kDocStart << "\tO\n\n";
      auto rendered = render_conll(docs[i], entities);
      for (const auto& m : rendered.skipped)
        std::cerr << "warning: " << docs[i].doc_id() << ": '" << m.mention << "' does not align with whitespace tokens\n";
      out << rendered.conll;
    } else {
      if (docs.size() > 1) out << (i ? "\n" : "") << "==> " << docs[i].doc_id() << " <==\n";
      out << render_text(entities);
    }
  }
  std::cout << out.str() << std::flush;
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_eval(const std::string& gold_path, const std::string& pred_path, const std::string& format, bool confusion) {
  const auto gold = tag_sequences(read_conll_file(gold_path));
  const auto pred = tag_sequences(read_conll_file(pred_path));
  const auto report = evaluate(gold, pred);
  if (format == "json") {
    auto j = to_json(report);
    if (confusion) {
      Json rows = Json::array();
      for (const auto& [key, n] : confusion_summary(gold, pred))
        rows.push_back({{"gold", key.first ? Json(*key.first) : Json(nullptr)},
                        {"pred", key.second ? Json(*key.second) : Json(nullptr)},
                        {"count", n}});
      j["confusion"] = std::move(rows);
    }
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << render_eval_table(report);
    if (confusion) std::cout << '\n' << render_confusion(confusion_summary(gold, pred));
  }
  return kExitOk;
}

int run_stats(const std::string& dir, const std::string& format) {
  const auto report = corpus_stats(load_corpus(dir));
  if (format == "json") std::cout << to_json(report).dump(2) << '\n';
  else std::cout << render_stats_table(report);
  return kExitOk;
}

int run_backends_check(const CommonOptions& opt) {
  auto cfg = base_config(opt);
  if (cfg.backends.empty()) throw Error(ErrorCode::InvalidConfig, "no backends configured");
  auto mocks = start_mocks(cfg.backends);
  bool all_ready = true;
  for (const auto& b : cfg.backends) {
    const auto status = health_check(b);
    std::cout << b.source.code << ' ' << b.source.name << ' ' << b.endpoint << ' ';
    if (status.ready) {
      std::cout << "ready\n";
    } else {
      all_ready = false;
      std::cout << "unready (" << to_string(*status.reason) << ": " << status.detail << ")\n";
    }
  }
  return all_ready ? kExitOk : kExitBackend;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity extraction for cyber threat intelligence text"};
  app.require_subcommand(1);

  ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Extract entities from text");
  add_common(extract, ex.common);
  extract->add_option("--text", ex.text, "Text to analyse");
  extract->add_option("--file", ex.files, "Input file(s)")->check(CLI::ExistingFile);
  extract->add_flag("--stdin", ex.from_stdin, "Read text from standard input");
  extract->add_option("--doc-id", ex.doc_id, "Document id sent to backends (for --text/--stdin)");
  extract->add_option("--priority", ex.priority, "Priority code, e.g. HTFS");
  extract->add_flag("--no-heuristic", ex.no_heuristic, "Disable the heuristic extractors");
  extract->add_flag("--defang", ex.defang, "Normalize defanged indicators before matching");
  extract->add_option("--patterns", ex.pattern_table, "Pattern table replacing the built-in patterns")
      ->check(CLI::ExistingFile);
  extract->add_option("--pattern", ex.patterns, "Only run these patterns");
  extract->add_option("--format", ex.format, "Output format")->check(CLI::IsMember({"text", "json", "conll"}));
  extract->add_flag("--skip-unready", ex.skip_unready, "Continue without failing backends");
  extract->add_flag("--sort-by-position", ex.sort_by_position, "Print in document order instead of priority order");
  extract->add_option("--jobs", ex.jobs, "Documents processed concurrently (default: hardware threads)");

  std::string gold, pred, eval_format = "text";
  bool confusion = false;
  auto* eval = app.add_subcommand("eval", "Span-level precision/recall/F1 of CoNLL predictions");
  eval->add_option("--gold", gold, "Gold CoNLL file")->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", pred, "Predicted CoNLL file")->required()->check(CLI::ExistingFile);
  eval->add_option("--format", eval_format, "Output format")->check(CLI::IsMember({"text", "json"}));
  eval->add_flag("--confusion", confusion, "Also print the span confusion summary");

  std::string corpus_dir, stats_format = "text";
  auto* stats = app.add_subcommand("stats", "Entity and token counts per split");
  stats->add_option("--corpus", corpus_dir, "Directory with train/dev/test data")->required()->check(CLI::ExistingDirectory);
  stats->add_option("--format", stats_format, "Output format")->check(CLI::IsMember({"text", "json"}));

  CommonOptions check_opt;
  auto* backends = app.add_subcommand("backends", "Backend utilities");
  backends->require_subcommand(1);
  auto* check = backends->add_subcommand("check", "Probe each configured backend");
  add_common(check, check_opt);

  std::string patterns_table;
  auto* patterns = app.add_subcommand("patterns", "Print the pattern table");
  patterns->add_option("--patterns", patterns_table, "Pattern table to print instead of the built-ins")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) return run_extract(ex);
    if (*eval) return run_eval(gold, pred, eval_format, confusion);
    if (*stats) return run_stats(corpus_dir, stats_format);
    if (*check) return run_backends_check(check_opt);
    if (*patterns) {
      std::cout << (patterns_table.empty() ? PatternRegistry::builtin().to_table() : load_pattern_table(patterns_table)->to_table());
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
