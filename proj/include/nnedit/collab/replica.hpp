#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnedit/collab/hub.hpp"
#include "nnedit/ir/model.hpp"

namespace nnedit::collab {

/// Client end of a session: keeps a local copy of the model in step with the
/// server's message stream and builds outgoing messages. Raw transport
/// messages may arrive reordered or duplicated; they are put back in order by
/// their seq before being applied.
class Replica {
public:
    /// Feeds one raw server message.
    void receive(const nlohmann::json& message);

    bool joined() const { return joined_; }
    const IRModel& model() const { return model_; }
    std::uint64_t version() const { return version_; }
    std::optional<std::uint64_t> parameters() const { return parameters_; }
    const std::string& session_id() const { return session_id_; }

    /// Versions of the events applied locally, in application order.
    const std::vector<std::uint64_t>& applied() const { return applied_; }
    /// Event versions that did not follow the local version.
    std::size_t gaps() const { return gaps_; }
    /// Set after a gap until a resync snapshot arrives; answer it with
    /// replay_request(std::nullopt).
    bool needs_resync() const { return resyncing_; }
    std::size_t duplicates() const { return inbound_.duplicates(); }

    const std::vector<nlohmann::json>& errors() const { return errors_; }
    const std::vector<nlohmann::json>& comments() const { return comments_; }
    const std::vector<nlohmann::json>& highlights() const { return highlights_; }
    const std::vector<nlohmann::json>& notices() const { return notices_; }
    /// Historic states received for replay requests, by version.
    const std::map<std::uint64_t, IRModel>& replays() const { return replays_; }

    nlohmann::json submit(EventKind kind, nlohmann::json payload);
    nlohmann::json comment(const std::string& anchor, const std::string& text);
    nlohmann::json revert(std::uint64_t to_version);
    nlohmann::json replay_request(std::optional<std::uint64_t> version);

private:
    nlohmann::json outgoing(const std::string& action);
    void handle(const nlohmann::json& message);

    Resequencer inbound_;
    std::uint64_t out_seq_ = 1;
    bool joined_ = false;
    bool resyncing_ = false;
    IRModel model_;
    std::uint64_t version_ = 0;
    std::optional<std::uint64_t> parameters_;
    std::string session_id_;
    std::vector<std::uint64_t> applied_;
    std::size_t gaps_ = 0;
    std::vector<nlohmann::json> errors_, comments_, highlights_, notices_;
    std::map<std::uint64_t, IRModel> replays_;
};

}  // namespace nnedit::collab
