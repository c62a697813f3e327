#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nnedit/collab/events.hpp"
#include "nnedit/ir/model.hpp"

namespace nnedit::collab {

/// A comment lives beside the event log: it has its own id sequence and
/// never changes the model version. `anchor` is a layer id, or empty for the
/// whole model.
struct Comment {
    std::uint64_t comment_id = 0;
    std::string anchor;
    std::string text;
    std::string author;
    std::int64_t timestamp = 0;
    /// Model version when the comment was made.
    std::uint64_t version = 0;

    bool operator==(const Comment&) const = default;
};

nlohmann::ordered_json comment_to_json(const Comment& comment);
Comment comment_from_json(const nlohmann::json& value);

/// Everything persisted for one model.
struct StoredModel {
    std::string id;
    IRModel initial;
    std::int64_t created = 0;
    std::vector<UpdateEvent> log;
    std::map<std::uint64_t, IRModel> checkpoints;
    std::vector<Comment> comments;
};

/// Persistence backend. Every write returns only once the data is durable for
/// that backend; the hub acknowledges (broadcasts) an event after
/// append_event returns.
class Store {
public:
    virtual ~Store() = default;

    virtual void create_model(const std::string& id, const IRModel& initial, std::int64_t created) = 0;
    virtual void append_event(const std::string& id, const UpdateEvent& event) = 0;
    virtual void write_checkpoint(const std::string& id, std::uint64_t version, const IRModel& model) = 0;
    virtual void append_comment(const std::string& id, const Comment& comment) = 0;

    virtual std::vector<std::string> model_ids() = 0;
    /// Throws NotFound.
    virtual StoredModel load(const std::string& id) = 0;

    /// Binds `token` to `model_id` unless the token is taken. Returns false on
    /// a collision.
    virtual bool insert_share(const std::string& token, const std::string& model_id) = 0;
    virtual std::optional<std::string> resolve_share(const std::string& token) = 0;
    virtual std::optional<std::string> share_of(const std::string& model_id) = 0;
};

class MemoryStore : public Store {
public:
    void create_model(const std::string& id, const IRModel& initial, std::int64_t created) override;
    void append_event(const std::string& id, const UpdateEvent& event) override;
    void write_checkpoint(const std::string& id, std::uint64_t version, const IRModel& model) override;
    void append_comment(const std::string& id, const Comment& comment) override;
    std::vector<std::string> model_ids() override;
    StoredModel load(const std::string& id) override;
    bool insert_share(const std::string& token, const std::string& model_id) override;
    std::optional<std::string> resolve_share(const std::string& token) override;
    std::optional<std::string> share_of(const std::string& model_id) override;

private:
    StoredModel& get(const std::string& id);

    std::mutex mu_;
    std::map<std::string, StoredModel> models_;
    std::map<std::string, std::string> shares_;
};

}  // namespace nnedit::collab
