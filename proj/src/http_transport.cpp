#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "irx/error.hpp"
#include "irx/gateway.hpp"

namespace irx {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post(const HttpRequest& request) override {
    // Split "scheme://host[:port]" from the path.
    auto scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + request.url);
    auto path_start = request.url.find('/', scheme_end + 3);
    std::string origin = request.url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type")
        content_type = v;
      else
        headers.emplace(k, v);
    }
    auto res = client.Post(path, headers, request.body, content_type);
    HttpResponse out;
    if (!res) {
      out.status = 0;
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

}  // namespace irx
