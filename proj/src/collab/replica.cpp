#include "nnedit/collab/replica.hpp"

#include "nnedit/ir/json_io.hpp"

namespace nnedit::collab {

using nlohmann::json;

void Replica::receive(const json& message) {
    for (const auto& m : inbound_.push(message)) handle(m);
}

void Replica::handle(const json& m) {
    const std::string type = m.value("type", std::string{});
    const std::uint64_t version = m.value("version", std::uint64_t{0});
    const json& payload = m.contains("payload") ? m["payload"] : json::object();
    if (type == "snapshot") {
        IRModel model = model_from_json(payload.at("model"));
        if (payload.value("reason", std::string{}) == "replay") {
            replays_[version] = std::move(model);
            return;
        }
        model_ = std::move(model);
        version_ = version;
        joined_ = true;
        resyncing_ = false;
        if (payload.contains("session_id")) session_id_ = payload["session_id"].get<std::string>();
        if (payload.contains("comments"))
            for (const auto& c : payload["comments"]) comments_.push_back(c);
        parameters_ = payload.value("parameters", json(nullptr)).is_null()
                          ? std::nullopt
                          : std::optional<std::uint64_t>(payload["parameters"].get<std::uint64_t>());
    } else if (type == "event") {
        const UpdateEvent e = event_from_json(payload);
        if (e.kind == EventKind::LayerHighlight) {
            highlights_.push_back(payload);
            return;
        }
        if (!joined_ || version <= version_) return;
        if (version != version_ + 1) {
            if (!resyncing_) ++gaps_;
            resyncing_ = true;
            return;
        }
        model_ = apply_event(std::move(model_), e);
        version_ = version;
        applied_.push_back(version);
        parameters_ = payload.value("parameters", json(nullptr)).is_null()
                          ? std::nullopt
                          : std::optional<std::uint64_t>(payload["parameters"].get<std::uint64_t>());
    } else if (type == "comment") {
        comments_.push_back(payload);
    } else if (type == "error") {
        errors_.push_back(payload);
    } else {
        notices_.push_back(m);
    }
}

json Replica::outgoing(const std::string& action) {
    json m;
    m["action"] = action;
    m["seq"] = out_seq_++;
    return m;
}

json Replica::submit(EventKind kind, json payload) {
    json m = outgoing("submit");
    m["kind"] = to_string(kind);
    m["payload"] = std::move(payload);
    m["base_version"] = version_;
    return m;
}

json Replica::comment(const std::string& anchor, const std::string& text) {
    json m = outgoing("comment");
    m["anchor"] = anchor.empty() ? json(nullptr) : json(anchor);
    m["text"] = text;
    return m;
}

json Replica::revert(std::uint64_t to_version) {
    json m = outgoing("revert");
    m["to_version"] = to_version;
    return m;
}

json Replica::replay_request(std::optional<std::uint64_t> version) {
    json m = outgoing("replay_request");
    m["version"] = version ? json(*version) : json(nullptr);
    return m;
}

}  // namespace nnedit::collab
