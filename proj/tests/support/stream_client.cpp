#include "stream_client.hpp"

#include <httplib.h>

namespace streamtest {

using nlohmann::json;

StreamClient::StreamClient(std::string host, int port, std::string model_id, std::string token, std::string user)
    : host_(std::move(host)), model_id_(std::move(model_id)), token_(std::move(token)), user_(std::move(user)),
      port_(port), stream_(std::make_unique<httplib::Client>(host_, port_)) {
    stream_->set_read_timeout(3600);
    const std::string path = "/ws/models/" + model_id_ + "?token=" + token_ + "&user=" + user_;
    reader_ = std::thread([this, path] {
        stream_->Get(path, [this](const char* data, std::size_t len) {
            std::lock_guard lock(mu_);
            partial_.append(data, len);
            std::size_t nl;
            while ((nl = partial_.find('\n')) != std::string::npos) {
                json m = json::parse(partial_.substr(0, nl), nullptr, false);
                partial_.erase(0, nl + 1);
                if (m.is_discarded()) continue;
                messages_.push_back(m);
                replica_.receive(m);
            }
            cv_.notify_all();
            return true;
        });
        std::lock_guard lock(mu_);
        closed_ = true;
        cv_.notify_all();
    });
}

StreamClient::~StreamClient() { stop(); }

bool StreamClient::wait_for(const std::function<bool(const nnedit::collab::Replica&)>& pred,
                            std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return pred(replica_); });
}

std::vector<json> StreamClient::messages() {
    std::lock_guard lock(mu_);
    return messages_;
}

int StreamClient::send(const json& message) {
    std::string session;
    {
        std::lock_guard lock(mu_);
        session = replica_.session_id();
    }
    httplib::Client post(host_, port_);
    post.set_tcp_nodelay(true);
    auto res = post.Post("/ws/models/" + model_id_ + "?token=" + token_ + "&session=" + session,
                         message.dump() + "\n", "application/x-ndjson");
    return res ? res->status : 0;
}

bool StreamClient::closed() {
    std::lock_guard lock(mu_);
    return closed_;
}

void StreamClient::stop() {
    // The GET may not have connected yet, so keep cutting it until it ends.
    while (!closed()) {
        stream_->stop();
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, std::chrono::milliseconds(20), [&] { return closed_; });
    }
    if (reader_.joinable()) reader_.join();
}

}  // namespace streamtest
