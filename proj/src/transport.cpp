#include "bsn/transport.hpp"

#include <regex>
#include <stdexcept>

#include <httplib.h>

namespace bsn {

Url parse_url(const std::string& url) {
    static const std::regex re(R"(^(http)://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) {
        throw std::invalid_argument("unsupported URL '" + url + "'");
    }
    Url u;
    u.scheme = m[1];
    u.host = m[2];
    u.port = m[3].matched ? std::stoi(m[3]) : 80;
    u.path = m[4].matched ? std::string(m[4]) : "/";
    if (u.port <= 0 || u.port > 65535) {
        throw std::invalid_argument("bad port in '" + url + "'");
    }
    return u;
}

HttpResponse HttpTransport::send(const HttpRequest& request) {
    HttpResponse out;
    Url u;
    try {
        u = parse_url(request.url);
    } catch (const std::invalid_argument& e) {
        out.error = e.what();
        return out;
    }
    httplib::Client cli(u.host, u.port);
    const auto secs = timeout_ms_ / 1000;
    const auto usecs = (timeout_ms_ % 1000) * 1000;
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    httplib::Headers headers(request.headers.begin(), request.headers.end());
    httplib::Result res;
    if (request.method == "GET") {
        res = cli.Get(u.path, headers);
    } else if (request.method == "POST") {
        res = cli.Post(u.path, headers, request.body, "application/json");
    } else {
        out.error = "unsupported method " + request.method;
        return out;
    }
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

HttpResponse CountingTransport::send(const HttpRequest& request) {
    Handler handler;
    {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.push_back(request);
        handler = handler_;
    }
    if (handler) {
        return handler(request);
    }
    return {200, "", ""};
}

std::size_t CountingTransport::count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_.size();
}

std::vector<HttpRequest> CountingTransport::requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
}

}  // namespace bsn
