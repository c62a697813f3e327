#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnedit/collab/events.hpp"
#include "nnedit/collab/store.hpp"
#include "nnedit/ir/model.hpp"

namespace nnedit::collab {

/// Restores sender order over a transport that may reorder or duplicate.
/// Messages carry a positive "seq" counting up from 1; messages without one
/// pass straight through.
class Resequencer {
public:
    /// Messages that became deliverable, in order.
    std::vector<nlohmann::json> push(nlohmann::json message);

    std::uint64_t expected() const { return next_; }
    std::size_t duplicates() const { return duplicates_; }
    std::size_t buffered() const { return pending_.size(); }

private:
    std::uint64_t next_ = 1;
    std::map<std::uint64_t, nlohmann::json> pending_;
    std::size_t duplicates_ = 0;
};

struct HistoryEntry {
    std::uint64_t event_id = 0;
    EventKind kind = EventKind::ParamUpdate;
    std::string author;
    std::int64_t timestamp = 0;
    std::string summary;
};

nlohmann::ordered_json history_to_json(const HistoryEntry& entry);

class Hub;

/// Server side of one client connection. Outbound messages are
///   {type: event|comment|snapshot|error|job, seq, version, payload}
/// with seq counting from 1 per session, handed to the sink in order.
class Session {
public:
    using Sink = std::function<void(const nlohmann::ordered_json&)>;

    Session(Hub& hub, std::string session_id, std::string model_id, std::string user, Sink sink);

    const std::string& id() const { return id_; }
    const std::string& model_id() const { return model_id_; }
    const std::string& user() const { return user_; }

    /// One client message:
    ///   {action: "submit", kind, payload, base_version?}
    ///   {action: "comment", anchor?, text}
    ///   {action: "revert", to_version}
    ///   {action: "replay_request", version?}
    /// plus optional "seq" (reordering/dedup) and "request_id" (echoed on
    /// errors). Failures go back to this session only.
    void receive(const nlohmann::json& message);

    void send(const std::string& type, std::uint64_t version, nlohmann::ordered_json payload);

private:
    void dispatch(const nlohmann::json& message);

    Hub& hub_;
    std::string id_;
    std::string model_id_;
    std::string user_;
    Sink sink_;

    std::mutex out_mu_;
    std::uint64_t next_seq_ = 1;

    std::mutex in_mu_;
    Resequencer inbound_;
};

/// Owner of every shared model: the authoritative current state, the event
/// log and the live sessions. Each model has its own lock; different models
/// proceed in parallel.
class Hub {
public:
    static constexpr std::uint64_t kCheckpointInterval = 500;

    /// A null store means an in-memory one.
    explicit Hub(std::shared_ptr<Store> store = nullptr);
    ~Hub();

    Store& store() { return *store_; }

    /// Rebuilds every model in the store from its initial snapshot and log.
    /// Returns the number of models loaded.
    std::size_t recover();

    /// Registers a model at version 0. A fresh id is generated when `id` is
    /// empty. Throws SchemaViolation when the id is taken.
    std::string create_model(IRModel initial, std::string id = {});
    bool has_model(const std::string& id) const;
    std::vector<std::string> model_ids() const;

    struct Snapshot {
        IRModel model;
        std::uint64_t version = 0;
    };
    /// Throws NotFound for every per-model call below.
    Snapshot snapshot(const std::string& id) const;
    std::uint64_t version(const std::string& id) const;

    /// Validates and applies an event, assigns the next version, persists it
    /// and broadcasts it to every session of the model. Highlights are
    /// broadcast without a version or log entry. Stale base versions are not
    /// rejected (last writer wins).
    UpdateEvent submit(const std::string& id, UpdateEvent event);
    /// Appends an event restoring the state at `to_version`.
    /// Throws VersionOutOfRange unless to_version < version.
    UpdateEvent revert(const std::string& id, std::uint64_t to_version, const std::string& author);
    /// State after the first `version` events. Throws VersionOutOfRange.
    IRModel replay(const std::string& id, std::uint64_t version) const;

    std::vector<HistoryEntry> history(const std::string& id) const;
    std::vector<UpdateEvent> log(const std::string& id) const;
    IRModel initial(const std::string& id) const;

    /// Empty anchor means the whole model. Throws NotFound for an unknown
    /// layer anchor.
    Comment add_comment(const std::string& id, const std::string& anchor, const std::string& text,
                        const std::string& author);
    struct CommentView {
        Comment comment;
        bool orphaned = false;
    };
    std::vector<CommentView> comments(const std::string& id) const;

    /// Pushes a message of `type` to every live session of the model.
    void notify(const std::string& id, const std::string& type, const nlohmann::ordered_json& payload);

    /// Opens a session. The sink receives a join snapshot before any event.
    std::shared_ptr<Session> join(const std::string& id, const std::string& user, Session::Sink sink);
    void leave(const Session& session);
    std::size_t session_count(const std::string& id) const;

    /// After each applied event, re-derive the state from the log and compare
    /// (costly; meant for tests).
    void set_verify_replay(bool on) { verify_replay_ = on; }

private:
    friend class Session;
    struct Shared;

    std::shared_ptr<Shared> get(const std::string& id) const;
    void send_snapshot(Shared& m, Session& s, const IRModel& model, std::uint64_t version, const char* reason,
                       bool with_comments) const;
    void broadcast(Shared& m, const std::string& type, std::uint64_t version, const nlohmann::ordered_json& payload);
    IRModel replay_locked(const Shared& m, std::uint64_t version) const;
    void replay_request(const std::string& id, Session& s, std::optional<std::uint64_t> version);

    std::shared_ptr<Store> store_;
    mutable std::shared_mutex models_mu_;
    std::map<std::string, std::shared_ptr<Shared>> models_;
    bool verify_replay_ = false;
};

/// Base64url text of `bytes` random bytes from the system entropy source.
std::string random_token(std::size_t bytes);

}  // namespace nnedit::collab
