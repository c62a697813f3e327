#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <regex>

#include "nnedit/service/service.hpp"

namespace nnedit::service {

std::string fetch_url(const std::string& url, std::size_t cap) {
    static const std::regex kUrl(R"(^(https?)://([^/?#]+)([^#]*))", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(url, m, kUrl)) throw ServiceError(400, "MalformedDocument", "unsupported URL '" + url + "'");
    std::string scheme = m[1].str();
    std::transform(scheme.begin(), scheme.end(), scheme.begin(), ::tolower);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") throw ServiceError(400, "MalformedDocument", "https URLs are not supported by this build");
#endif
    std::string path = m[3].str();
    if (path.empty()) path = "/";

    httplib::Client client(scheme + "://" + m[2].str());
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);

    std::string body;
    bool too_large = false;
    int status = 0;
    auto res = client.Get(
        path,
        [&](const httplib::Response& r) {
            status = r.status;
            if (r.has_header("Content-Length")) {
                const auto n = std::stoull(r.get_header_value("Content-Length"));
                if (status / 100 == 2 && n > cap) {
                    too_large = true;
                    return false;
                }
            }
            return true;
        },
        [&](const char* data, std::size_t len) {
            if (status / 100 != 2) return true;  // error pages are not kept
            if (body.size() + len > cap) {
                too_large = true;
                return false;
            }
            body.append(data, len);
            return true;
        });
    if (too_large) throw ServiceError(413, "PayloadTooLarge", "remote document exceeds " + std::to_string(cap) + " bytes");
    if (!res)
        throw ServiceError(502, "Unreachable", "could not fetch " + url + ": " + httplib::to_string(res.error()));
    if (res->status / 100 != 2)
        throw ServiceError(502, "Unreachable", "fetching " + url + " returned HTTP " + std::to_string(res->status),
                           {{"upstream_status", res->status}});
    return body;
}

}  // namespace nnedit::service
