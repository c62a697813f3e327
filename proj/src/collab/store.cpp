#include "nnedit/collab/store.hpp"

#include "nnedit/error.hpp"

namespace nnedit::collab {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json comment_to_json(const Comment& c) {
    ordered_json out;
    out["comment_id"] = c.comment_id;
    out["anchor"] = c.anchor.empty() ? ordered_json(nullptr) : ordered_json(c.anchor);
    out["text"] = c.text;
    out["author"] = c.author;
    out["timestamp"] = c.timestamp;
    out["version"] = c.version;
    return out;
}

Comment comment_from_json(const json& v) {
    try {
        Comment c;
        c.comment_id = v.at("comment_id").get<std::uint64_t>();
        if (auto it = v.find("anchor"); it != v.end() && it->is_string()) c.anchor = it->get<std::string>();
        c.text = v.at("text").get<std::string>();
        c.author = v.value("author", std::string{});
        c.timestamp = v.value("timestamp", std::int64_t{0});
        c.version = v.value("version", std::uint64_t{0});
        return c;
    } catch (const json::exception& e) {
        throw MalformedDocument(std::string("bad comment: ") + e.what());
    }
}

StoredModel& MemoryStore::get(const std::string& id) {
    auto it = models_.find(id);
    if (it == models_.end()) throw NotFound("model '" + id + "' does not exist");
    return it->second;
}

void MemoryStore::create_model(const std::string& id, const IRModel& initial, std::int64_t created) {
    std::lock_guard lock(mu_);
    StoredModel m;
    m.id = id;
    m.initial = initial;
    m.created = created;
    models_[id] = std::move(m);
}

void MemoryStore::append_event(const std::string& id, const UpdateEvent& event) {
    std::lock_guard lock(mu_);
    get(id).log.push_back(event);
}

void MemoryStore::write_checkpoint(const std::string& id, std::uint64_t version, const IRModel& model) {
    std::lock_guard lock(mu_);
    get(id).checkpoints[version] = model;
}

void MemoryStore::append_comment(const std::string& id, const Comment& comment) {
    std::lock_guard lock(mu_);
    get(id).comments.push_back(comment);
}

std::vector<std::string> MemoryStore::model_ids() {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : models_) ids.push_back(id);
    return ids;
}

StoredModel MemoryStore::load(const std::string& id) {
    std::lock_guard lock(mu_);
    return get(id);
}

bool MemoryStore::insert_share(const std::string& token, const std::string& model_id) {
    std::lock_guard lock(mu_);
    return shares_.emplace(token, model_id).second;
}

std::optional<std::string> MemoryStore::resolve_share(const std::string& token) {
    std::lock_guard lock(mu_);
    auto it = shares_.find(token);
    if (it == shares_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> MemoryStore::share_of(const std::string& model_id) {
    std::lock_guard lock(mu_);
    for (const auto& [token, id] : shares_)
        if (id == model_id) return token;
    return std::nullopt;
}

}  // namespace nnedit::collab
