#include "prdesc/fetch.hpp"

#include <ctime>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace prdesc {

using json = nlohmann::json;

std::int64_t parse_iso8601_utc(const std::string& text) {
  std::tm tm{};
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                  &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &consumed) != 6) {
    throw FetchError(0, "bad timestamp: " + text);
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return static_cast<std::int64_t>(timegm(&tm));
}

namespace {

class ApiClient {
 public:
  ApiClient(const std::string& endpoint, const FetchOptions& options)
      : client_(endpoint), options_(options) {
    client_.set_follow_location(true);
    client_.set_connection_timeout(10);
    client_.set_read_timeout(30);
  }

  json get(const std::string& path) {
    if (requests_++ > 0 && options_.request_interval.count() > 0) {
      std::this_thread::sleep_for(options_.request_interval);
    }
    httplib::Headers headers{{"Accept", "application/vnd.github+json"},
                             {"User-Agent", "prdesc-fetch"}};
    if (!options_.token.empty()) headers.emplace("Authorization", "token " + options_.token);
    auto res = client_.Get(path, headers);
    if (!res) {
      throw FetchError(0, "GET " + path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw FetchError(res->status, "GET " + path + " returned HTTP " + std::to_string(res->status));
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw FetchError(res->status, "GET " + path + ": bad JSON: " + e.what());
    }
  }

 private:
  httplib::Client client_;
  FetchOptions options_;
  std::size_t requests_ = 0;
};

std::string string_or_empty(const json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

std::string commit_patch(ApiClient& api, const std::string& repo, const std::string& sha) {
  json detail = api.get("/repos/" + repo + "/commits/" + sha);
  std::string patch;
  for (const auto& file : detail.value("files", json::array())) {
    std::string body = string_or_empty(file, "patch");
    if (body.empty()) continue;
    std::string name = string_or_empty(file, "filename");
    patch += "--- a/" + name + "\n+++ b/" + name + "\n" + body;
    if (patch.back() != '\n') patch += '\n';
  }
  return patch;
}

}  // namespace

std::vector<PullRequest> fetch_prs(const std::string& endpoint, const std::string& repo,
                                   std::size_t max, std::ostream* sink,
                                   const FetchOptions& options) {
  if (max == 0) throw std::invalid_argument("fetch_prs: max must be >= 1");
  ApiClient api(endpoint, options);
  std::vector<PullRequest> out;

  for (int page = 1; out.size() < max; ++page) {
    json pulls = api.get("/repos/" + repo + "/pulls?state=closed&per_page=" +
                         std::to_string(options.page_size) + "&page=" + std::to_string(page));
    if (!pulls.is_array() || pulls.empty()) break;

    for (const auto& pull : pulls) {
      if (out.size() >= max) break;
      auto merged = pull.find("merged_at");
      if (merged != pull.end() && merged->is_null()) continue;

      const std::string number = std::to_string(pull.value("number", 0));
      PullRequest pr;
      pr.id = repo + "#" + number;
      pr.description = string_or_empty(pull, "body");

      json commits = api.get("/repos/" + repo + "/pulls/" + number + "/commits?per_page=100");
      for (const auto& entry : commits) {
        Commit c;
        const json& meta = entry.value("commit", json::object());
        c.message = string_or_empty(meta, "message");
        const json& committer = meta.value("committer", json::object());
        const std::string date = string_or_empty(committer, "date");
        c.created_at = date.empty() ? 0 : parse_iso8601_utc(date);
        c.patch = commit_patch(api, repo, string_or_empty(entry, "sha"));
        pr.commits.push_back(std::move(c));
      }
      if (pr.commits.empty()) continue;

      if (sink) *sink << serialize_pr_record(pr) << '\n' << std::flush;
      out.push_back(std::move(pr));
    }
  }
  return out;
}

}  // namespace prdesc
