#include "tablehop/http.hpp"

#include <cstdlib>

#include <httplib.h>

#include "tablehop/error.hpp"

namespace tablehop {

namespace {

std::atomic<std::uint64_t> g_network_requests{0};

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    g_network_requests.fetch_add(1, std::memory_order_relaxed);
    auto url = parse_url(request.url);

    // A client per call keeps the transport safe to share across threads.
    httplib::Client client(url.scheme_host_port);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    for (const auto& [key, value] : request.headers) {
      if (key != "Content-Type") headers.emplace(key, value);
    }
    auto result = client.Post(url.path, headers, request.body, "application/json");
    if (!result) {
      throw BackendError("POST " + request.url + " failed: " + httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

std::uint64_t network_requests_attempted() {
  return g_network_requests.load(std::memory_order_relaxed);
}

std::vector<std::pair<std::string, std::string>> default_json_headers() {
  std::vector<std::pair<std::string, std::string>> headers{{"Content-Type", "application/json"}};
  if (const char* key = std::getenv("TABLEHOP_API_KEY"); key != nullptr && *key != '\0') {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  return headers;
}

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("not an http(s) URL: \"" + url + "\"");
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw UsageError("unsupported URL scheme in \"" + url + "\"");
  }
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
    out.path = "/";
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  if (out.scheme_host_port.size() == scheme_end + 3) {
    throw UsageError("URL has no host: \"" + url + "\"");
  }
  return out;
}

}  // namespace tablehop
