#include "nnedit/service/file_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nnedit/collab/events.hpp"
#include "nnedit/error.hpp"
#include "nnedit/ir/json_io.hpp"

namespace nnedit::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void io_failure(const fs::path& p, const char* what) {
    throw std::runtime_error(std::string(what) + " " + p.string() + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const fs::path& p) {
    std::size_t done = 0;
    while (done < data.size()) {
        const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            io_failure(p, "write");
        }
        done += static_cast<std::size_t>(n);
    }
}

void sync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFound("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Cuts a torn trailing line so the next append starts on a line boundary.
void repair_tail(const fs::path& p) {
    const auto size = fs::file_size(p);
    if (size == 0) return;
    std::ifstream in(p, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(size) - 1);
    if (in.get() == '\n') return;
    const std::string text = slurp(p);
    const auto nl = text.rfind('\n');
    fs::resize_file(p, nl == std::string::npos ? 0 : nl + 1);
}

void append_line(const fs::path& p, const std::string& line) {
    const bool fresh = !fs::exists(p);
    if (!fresh) repair_tail(p);
    const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) io_failure(p, "open");
    try {
        write_all(fd, line + "\n", p);
        if (::fsync(fd) != 0) io_failure(p, "fsync");
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    if (fresh) sync_dir(p.parent_path());
}

// Write to a temporary name, fsync, rename over the target.
void write_atomic(const fs::path& p, const std::string& data) {
    const fs::path tmp = p.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_failure(tmp, "open");
    try {
        write_all(fd, data, tmp);
        if (::fsync(fd) != 0) io_failure(tmp, "fsync");
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    fs::rename(tmp, p);
    sync_dir(p.parent_path());
}


// Complete lines only; a final line without its newline is a torn write.
std::vector<json> read_lines(const fs::path& p) {
    std::vector<json> out;
    if (!fs::exists(p)) return out;
    const std::string text = slurp(p);
    std::size_t at = 0;
    while (at < text.size()) {
        const std::size_t nl = text.find('\n', at);
        if (nl == std::string::npos) break;
        const std::string line = text.substr(at, nl - at);
        at = nl + 1;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedDocument("corrupt line in " + p.string());
        out.push_back(std::move(j));
    }
    return out;
}

bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
    return true;
}

}  // namespace

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "models");
    for (const auto& j : read_lines(root_ / "shares.jsonl"))
        shares_.emplace(j.at("token").get<std::string>(), j.at("model_id").get<std::string>());
}

fs::path FileStore::model_dir(const std::string& id) const {
    if (!valid_id(id)) throw NotFound("model '" + id + "' does not exist");
    return root_ / "models" / id;
}

void FileStore::create_model(const std::string& id, const IRModel& initial, std::int64_t created) {
    std::lock_guard lock(mu_);
    if (!valid_id(id)) throw SchemaViolation("model id '" + id + "' is not storable");
    const fs::path dir = model_dir(id);
    fs::create_directories(dir / "checkpoints");
    write_atomic(dir / "meta.json", json{{"id", id}, {"created", created}}.dump());
    // initial.json last: its presence marks a complete model
    write_atomic(dir / "initial.json", to_canonical_json(initial));
    sync_dir(root_ / "models");
}

void FileStore::append_event(const std::string& id, const collab::UpdateEvent& event) {
    std::lock_guard lock(mu_);
    append_line(model_dir(id) / "events.jsonl", collab::event_to_json(event).dump());
}

void FileStore::write_checkpoint(const std::string& id, std::uint64_t version, const IRModel& model) {
    std::lock_guard lock(mu_);
    write_atomic(model_dir(id) / "checkpoints" / (std::to_string(version) + ".json"), to_canonical_json(model));
}

void FileStore::append_comment(const std::string& id, const collab::Comment& comment) {
    std::lock_guard lock(mu_);
    append_line(model_dir(id) / "comments.jsonl", collab::comment_to_json(comment).dump());
}

std::vector<std::string> FileStore::model_ids() {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root_ / "models"))
        if (entry.is_directory() && fs::exists(entry.path() / "initial.json"))
            ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

collab::StoredModel FileStore::load(const std::string& id) {
    std::lock_guard lock(mu_);
    const fs::path dir = model_dir(id);
    if (!fs::exists(dir / "initial.json")) throw NotFound("model '" + id + "' does not exist");
    collab::StoredModel m;
    m.id = id;
    m.initial = parse_model_json(slurp(dir / "initial.json"));
    if (fs::exists(dir / "meta.json")) m.created = json::parse(slurp(dir / "meta.json")).value("created", 0LL);
    for (const auto& j : read_lines(dir / "events.jsonl")) m.log.push_back(collab::event_from_json(j));
    for (const auto& j : read_lines(dir / "comments.jsonl")) m.comments.push_back(collab::comment_from_json(j));
    if (fs::exists(dir / "checkpoints"))
        for (const auto& entry : fs::directory_iterator(dir / "checkpoints")) {
            if (entry.path().extension() != ".json") continue;
            const std::uint64_t v = std::stoull(entry.path().stem().string());
            m.checkpoints[v] = parse_model_json(slurp(entry.path()));
        }
    return m;
}

bool FileStore::insert_share(const std::string& token, const std::string& model_id) {
    std::lock_guard lock(mu_);
    if (shares_.count(token)) return false;
    append_line(root_ / "shares.jsonl", json{{"token", token}, {"model_id", model_id}, {"created", collab::now_ms()}}.dump());
    shares_.emplace(token, model_id);
    return true;
}

std::optional<std::string> FileStore::resolve_share(const std::string& token) {
    std::lock_guard lock(mu_);
    auto it = shares_.find(token);
    if (it == shares_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> FileStore::share_of(const std::string& model_id) {
    std::lock_guard lock(mu_);
    for (const auto& [token, id] : shares_)
        if (id == model_id) return token;
    return std::nullopt;
}

}  // namespace nnedit::service
