#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace bsn {

struct HttpRequest {
    std::string method = "POST";
    std::string url;  // absolute, e.g. http://127.0.0.1:8080/v1/workouts
    std::map<std::string, std::string> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;  // 0: the target was not reached
    std::string body;
    std::string error;
    bool reached() const { return status != 0; }
};

struct Url {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path;  // includes the query, defaults to "/"
};

/// Parses http://host[:port][/path]. Throws std::invalid_argument otherwise.
Url parse_url(const std::string& url);

/// Outbound request channel. Implementations must be safe to call from
/// several threads.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Plain HTTP/1.1 client.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(int timeout_ms = 5000) : timeout_ms_(timeout_ms) {}
    HttpResponse send(const HttpRequest& request) override;

private:
    int timeout_ms_;
};

/// Records every request and answers from a handler (or 200 with an empty
/// body). Used to assert how many requests left a component.
class CountingTransport : public Transport {
public:
    using Handler = std::function<HttpResponse(const HttpRequest&)>;

    CountingTransport() = default;
    explicit CountingTransport(Handler handler) : handler_(std::move(handler)) {}

    HttpResponse send(const HttpRequest& request) override;
    std::size_t count() const;
    std::vector<HttpRequest> requests() const;

private:
    mutable std::mutex mu_;
    Handler handler_;
    std::vector<HttpRequest> requests_;
};

}  // namespace bsn
