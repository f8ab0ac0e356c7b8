#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace tablehop {

struct HttpRequest {
  std::string url;
  std::string body;  // JSON
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{30000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// JSON POST transport used by the remote backends. Tests substitute an
/// in-process double; production uses make_http_transport().
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws BackendError on transport failure. Non-2xx statuses are returned,
  /// not thrown; callers decide.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

/// Count of requests the real network transport has attempted in this
/// process. The offline test suites assert it stays at zero.
std::uint64_t network_requests_attempted();

/// Builds the standard headers, including `Authorization: Bearer ...` when
/// TABLEHOP_API_KEY is set.
std::vector<std::pair<std::string, std::string>> default_json_headers();

struct ParsedUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/embed", defaults to "/"
};

/// Splits an http(s) URL; throws UsageError when it is not one.
ParsedUrl parse_url(const std::string& url);

}  // namespace tablehop
