#pragma once

#include <chrono>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prdesc/ingest.hpp"

namespace prdesc {

class FetchError : public std::runtime_error {
 public:
  FetchError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  /// HTTP status, or 0 for transport failures.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct FetchOptions {
  std::string token;  // sent as "Authorization: token <token>" when non-empty
  std::chrono::milliseconds request_interval{0};
  int page_size = 30;
};

/// Thin client for a GitHub-style REST API rooted at `endpoint`
/// (e.g. "https://api.github.com"). Walks closed pulls page by page, keeps the
/// merged ones, and collects each one's commits and their patches. Every
/// finished record is written to `sink` (one JSONL line, flushed) before the
/// next request, so partial results survive an error.
std::vector<PullRequest> fetch_prs(const std::string& endpoint, const std::string& repo,
                                   std::size_t max, std::ostream* sink,
                                   const FetchOptions& options = {});

/// "2019-05-01T12:34:56Z" -> seconds since epoch.
std::int64_t parse_iso8601_utc(const std::string& text);

}  // namespace prdesc
