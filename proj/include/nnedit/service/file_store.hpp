#pragma once

#include <filesystem>
#include <map>
#include <mutex>

#include "nnedit/collab/store.hpp"

namespace nnedit::service {

/// Directory-backed store:
///   models/<id>/initial.json           IR JSON at version 0
///   models/<id>/meta.json              {id, created}
///   models/<id>/events.jsonl           one applied event per line
///   models/<id>/comments.jsonl
///   models/<id>/checkpoints/<v>.json
///   shares.jsonl                       {token, model_id, created} per line
/// Appends are fsync'ed before returning. A torn trailing line (crash during
/// a write) is ignored on load.
class FileStore : public collab::Store {
public:
    explicit FileStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    void create_model(const std::string& id, const IRModel& initial, std::int64_t created) override;
    void append_event(const std::string& id, const collab::UpdateEvent& event) override;
    void write_checkpoint(const std::string& id, std::uint64_t version, const IRModel& model) override;
    void append_comment(const std::string& id, const collab::Comment& comment) override;
    std::vector<std::string> model_ids() override;
    collab::StoredModel load(const std::string& id) override;
    bool insert_share(const std::string& token, const std::string& model_id) override;
    std::optional<std::string> resolve_share(const std::string& token) override;
    std::optional<std::string> share_of(const std::string& model_id) override;

private:
    std::filesystem::path model_dir(const std::string& id) const;

    std::filesystem::path root_;
    std::mutex mu_;
    std::map<std::string, std::string> shares_;  // token -> model
};

}  // namespace nnedit::service
