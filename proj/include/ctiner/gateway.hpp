#pragma once

// Client for external NER backends, plus an in-process mock server.
//
// Wire protocol (UTF-8 JSON over HTTP):
//   POST <endpoint>/v1/predict  {"doc_id": str, "text": str}
//     -> {"model_name": str,
//         "entities": [{"mention","label","start","end","confidence"}]}
//   GET  <endpoint>/v1/health   -> {"status": "ok"}
// Offsets are code point indices into "text", end exclusive.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ctiner/entity.hpp"
#include "ctiner/error.hpp"

namespace ctiner {

struct BackendDescriptor {
  SourceId source;
  std::string endpoint;  // http://host:port[/prefix]
  std::chrono::milliseconds timeout{5000};
  std::map<std::string, std::string> label_map;  // external label -> canonical; identity when absent
};

struct PredictionResponse {
  std::string model_name;
  std::vector<EntityMention> entities;
  std::chrono::milliseconds latency{0};
};

namespace detail {

struct ParsedEndpoint {
  std::string host_port;  // scheme://host:port
  std::string prefix;     // path without trailing slash
};

inline ParsedEndpoint parse_endpoint(std::string_view endpoint) {
  constexpr std::string_view scheme = "http://";
  if (endpoint.substr(0, scheme.size()) != scheme)
    throw Error(ErrorCode::InvalidConfig, "unsupported backend endpoint '" + std::string(endpoint) + "' (expected http://host:port)");
  const auto slash = endpoint.find('/', scheme.size());
  ParsedEndpoint p;
  p.host_port = std::string(endpoint.substr(0, slash));
  if (slash != std::string_view::npos) p.prefix = std::string(endpoint.substr(slash));
  while (!p.prefix.empty() && p.prefix.back() == '/') p.prefix.pop_back();
  if (p.host_port.size() == scheme.size()) throw Error(ErrorCode::InvalidConfig, "backend endpoint has no host");
  return p;
}

inline httplib::Client make_client(const ParsedEndpoint& ep, std::chrono::milliseconds timeout) {
  httplib::Client cli(ep.host_port);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  cli.set_keep_alive(false);
  return cli;
}

inline Error transport_error(const BackendDescriptor& backend, httplib::Error err, std::chrono::steady_clock::duration elapsed) {
  const std::string where = backend.source.name + " at " + backend.endpoint;
  if (err == httplib::Error::ConnectionTimeout || ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= backend.timeout))
    return Error(ErrorCode::Timeout, where + " did not answer within " + std::to_string(backend.timeout.count()) + " ms");
  return Error(ErrorCode::ConnectionFailed, where + ": " + httplib::to_string(err));
}

}  // namespace detail

/// Validates a predict response against the request text. Any entity that
/// breaks the mention invariants rejects the whole response.
inline PredictionResponse parse_prediction_response(const DocumentText& doc, std::string_view body,
                                                    const BackendDescriptor& backend) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, backend.source.name + ": response is not JSON: " + e.what());
  }
  auto malformed = [&](const std::string& why) { return Error(ErrorCode::MalformedResponse, backend.source.name + ": " + why); };
  if (!j.is_object()) throw malformed("response is not an object");
  PredictionResponse out;
  if (j.contains("model_name")) {
    if (!j["model_name"].is_string()) throw malformed("\"model_name\" is not a string");
    out.model_name = j["model_name"].get<std::string>();
  }
  if (!j.contains("entities") || !j["entities"].is_array()) throw malformed("missing \"entities\" array");

  for (std::size_t i = 0; i < j["entities"].size(); ++i) {
    const auto& e = j["entities"][i];
    const std::string at = "entity " + std::to_string(i);
    if (!e.is_object()) throw malformed(at + " is not an object");
    for (const char* key : {"mention", "label"})
      if (!e.contains(key) || !e[key].is_string()) throw malformed(at + ": \"" + key + "\" must be a string");
    for (const char* key : {"start", "end"})
      if (!e.contains(key) || !e[key].is_number_unsigned()) throw malformed(at + ": \"" + key + "\" must be a non-negative integer");
    if (!e.contains("confidence") || !e["confidence"].is_number()) throw malformed(at + ": \"confidence\" must be a number");

    const auto start = e["start"].get<std::size_t>();
    const auto end = e["end"].get<std::size_t>();
    const auto label = e["label"].get<std::string>();
    if (label.empty()) throw malformed(at + ": \"label\" is empty");
    EntityMention m;
    try {
      m = new_mention(doc, label, start, end, e["confidence"].get<double>(), backend.source);
    } catch (const Error& err) {
      throw malformed(at + ": " + err.what());
    }
    if (m.mention != e["mention"].get<std::string>())
      throw Error(ErrorCode::OffsetMismatch, backend.source.name + ": " + at + " claims '" + e["mention"].get<std::string>() +
                                                 "' at [" + std::to_string(start) + "," + std::to_string(end) + ") but the text there is '" +
                                                 m.mention + "'");
    if (auto it = backend.label_map.find(m.label); it != backend.label_map.end()) m.label = it->second;
    out.entities.push_back(std::move(m));
  }
  return out;
}

inline PredictionResponse predict(const BackendDescriptor& backend, const DocumentText& doc) {
  if (backend.timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, backend.source.name + ": timeout must be positive");
  const auto ep = detail::parse_endpoint(backend.endpoint);
  auto cli = detail::make_client(ep, backend.timeout);
  const nlohmann::json request = {{"doc_id", doc.doc_id()}, {"text", doc.text()}};
  const auto t0 = std::chrono::steady_clock::now();
  auto res = cli.Post(ep.prefix + "/v1/predict", request.dump(), "application/json");
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  if (!res) throw detail::transport_error(backend, res.error(), elapsed);
  if (res->status != 200)
    throw Error(ErrorCode::MalformedResponse, backend.source.name + ": HTTP " + std::to_string(res->status) + ": " + res->body);
  auto out = parse_prediction_response(doc, res->body, backend);
  out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed);
  return out;
}

/// Entities for one document, tagged with the backend's source.
inline std::vector<EntityMention> request_entities(const BackendDescriptor& backend, const DocumentText& doc) {
  if (doc.text().empty()) return {};
  return predict(backend, doc).entities;
}

struct HealthStatus {
  bool ready = false;
  std::optional<ErrorCode> reason;
  std::string detail;

  static HealthStatus ok() { return {true, std::nullopt, {}}; }
  static HealthStatus unready(ErrorCode code, std::string detail) { return {false, code, std::move(detail)}; }
};

/// Probes GET /v1/health. Never throws.
inline HealthStatus health_check(const BackendDescriptor& backend) noexcept {
  try {
    if (backend.timeout.count() <= 0) return HealthStatus::unready(ErrorCode::InvalidConfig, "timeout must be positive");
    const auto ep = detail::parse_endpoint(backend.endpoint);
    auto cli = detail::make_client(ep, backend.timeout);
    const auto t0 = std::chrono::steady_clock::now();
    auto res = cli.Get(ep.prefix + "/v1/health");
    if (!res) {
      const auto err = detail::transport_error(backend, res.error(), std::chrono::steady_clock::now() - t0);
      return HealthStatus::unready(err.code(), err.what());
    }
    if (res->status != 200) return HealthStatus::unready(ErrorCode::MalformedResponse, "HTTP " + std::to_string(res->status));
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("status", "") != "ok")
      return HealthStatus::unready(ErrorCode::MalformedResponse, "unexpected health payload: " + res->body);
    return HealthStatus::ok();
  } catch (const Error& e) {
    return HealthStatus::unready(e.code(), e.what());
  } catch (const std::exception& e) {
    return HealthStatus::unready(ErrorCode::ConnectionFailed, e.what());
  } catch (...) {
    return HealthStatus::unready(ErrorCode::ConnectionFailed, "unknown failure");
  }
}

// ---------------------------------------------------------------------------
// Mock backend

/// doc_id -> entities array in wire form. The key "*" answers any doc_id
/// without its own entry.
using MockScript = std::map<std::string, nlohmann::json>;

inline MockScript make_mock_script(const std::map<std::string, std::vector<EntityMention>>& by_doc) {
  MockScript script;
  for (const auto& [doc_id, mentions] : by_doc) {
    auto arr = nlohmann::json::array();
    for (const auto& m : mentions)
      arr.push_back({{"mention", m.mention}, {"label", m.label}, {"start", m.start}, {"end", m.end}, {"confidence", m.confidence}});
    script[doc_id] = std::move(arr);
  }
  return script;
}

/// Reads a script file: a JSON object mapping doc_id to an entities array.
/// The object may also be wrapped as {"model_name": ..., "documents": {...}}.
inline std::pair<MockScript, std::string> load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open mock script " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "mock script " + path.string() + ": " + e.what());
  }
  std::string model_name = "mock";
  if (j.is_object() && j.contains("documents")) {
    model_name = j.value("model_name", model_name);
    j = j["documents"];
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "mock script " + path.string() + " must be an object");
  MockScript script;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array()) throw Error(ErrorCode::InvalidConfig, "mock script entry '" + it.key() + "' must be an array");
    script[it.key()] = it.value();
  }
  return {std::move(script), model_name};
}

/// A protocol-conformant backend on 127.0.0.1 that replays a script. Runs on
/// its own thread for the lifetime of the object.
class MockBackend {
 public:
  explicit MockBackend(MockScript script, std::string model_name = "mock",
                       std::chrono::milliseconds delay = std::chrono::milliseconds{0})
      : script_(std::move(script)), model_name_(std::move(model_name)), delay_(delay) {
    server_.Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) { handle_predict(req, res); });
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      pause();
      res.set_content(R"({"status": "ok"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error(ErrorCode::ConnectionFailed, "mock backend could not bind a port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  MockBackend(const MockBackend&) = delete;
  MockBackend& operator=(const MockBackend&) = delete;

  ~MockBackend() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  BackendDescriptor descriptor(SourceId source, std::chrono::milliseconds timeout = std::chrono::milliseconds{5000}) const {
    return BackendDescriptor{std::move(source), endpoint(), timeout, {}};
  }

 private:
  void pause() const {
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  }

  void handle_predict(const httplib::Request& req, httplib::Response& res) const {
    pause();
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("doc_id") || !body["doc_id"].is_string() ||
        !body.contains("text") || !body["text"].is_string()) {
      res.status = 400;
      res.set_content(R"({"error": "request must be {\"doc_id\": string, \"text\": string}"})", "application/json");
      return;
    }
    auto it = script_.find(body["doc_id"].get<std::string>());
    if (it == script_.end()) it = script_.find("*");
    const nlohmann::json reply = {{"model_name", model_name_},
                                  {"entities", it == script_.end() ? nlohmann::json::array() : it->second}};
    res.set_content(reply.dump(), "application/json");
  }

  MockScript script_;
  std::string model_name_;
  std::chrono::milliseconds delay_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace ctiner
