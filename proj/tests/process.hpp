#pragma once

// Runs a shell command and captures its standard output.

#include <sys/wait.h>

#include <cstdio>
#include <stdexcept>
#include <string>

namespace ctiner::testing {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

inline RunResult run_command(const std::string& command) {
  RunResult r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + command);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

/// The three report invocations of the command-line tool.
inline std::string cli_report_command(int which) {
  const std::string cli = shell_quote(CTINER_CLI);
  const std::string samples = CTINER_SAMPLES;
  const std::string file = " --file " + shell_quote(samples + "/report.txt");
  const std::string transformer = " --backends " + shell_quote("T=mock:" + samples + "/transformer_mock.json");
  switch (which) {
    case 1: return cli + " extract --no-heuristic" + transformer + file;
    case 2: return cli + " extract --priority HTFS" + transformer + file;
    default: return cli + " extract --config " + shell_quote(samples + "/config.json") + file;
  }
}

}  // namespace ctiner::testing
