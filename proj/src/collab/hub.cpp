#include "nnedit/collab/hub.hpp"

#include <algorithm>
#include <random>

#include "nnedit/error.hpp"
#include "nnedit/ir/json_io.hpp"

namespace nnedit::collab {

using nlohmann::json;
using nlohmann::ordered_json;

struct Hub::Shared {
    std::mutex mu;
    std::string id;
    std::int64_t created = 0;
    IRModel initial;
    IRModel current;
    std::uint64_t version = 0;
    std::vector<UpdateEvent> log;
    std::map<std::uint64_t, IRModel> checkpoints;
    std::vector<Comment> comments;
    std::vector<std::shared_ptr<Session>> sessions;
};

namespace {

ordered_json count_json(const IRModel& model) {
    auto n = parameter_count(model);
    return n ? ordered_json(*n) : ordered_json(nullptr);
}

}  // namespace

std::string random_token(std::size_t bytes) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    std::random_device rd;
    std::vector<unsigned char> raw(bytes);
    for (std::size_t i = 0; i < bytes; i += 4) {
        const unsigned v = rd();
        for (std::size_t j = 0; j < 4 && i + j < bytes; ++j) raw[i + j] = static_cast<unsigned char>(v >> (8 * j));
    }
    std::string out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (unsigned char b : raw) {
        acc = (acc << 8) | b;
        bits += 8;
        while (bits >= 6) {
            bits -= 6;
            out += kAlphabet[(acc >> bits) & 63];
        }
    }
    if (bits > 0) out += kAlphabet[(acc << (6 - bits)) & 63];
    return out;
}

// --- Resequencer -------------------------------------------------------------

std::vector<json> Resequencer::push(json message) {
    std::vector<json> ready;
    auto it = message.find("seq");
    if (it == message.end() || !it->is_number_integer() || it->get<std::int64_t>() < 1) {
        ready.push_back(std::move(message));
        return ready;
    }
    const auto seq = it->get<std::uint64_t>();
    if (seq < next_ || pending_.count(seq)) {
        ++duplicates_;
        return ready;
    }
    pending_.emplace(seq, std::move(message));
    for (auto p = pending_.find(next_); p != pending_.end(); p = pending_.find(next_)) {
        ready.push_back(std::move(p->second));
        pending_.erase(p);
        ++next_;
    }
    return ready;
}

ordered_json history_to_json(const HistoryEntry& h) {
    ordered_json out;
    out["event_id"] = h.event_id;
    out["kind"] = to_string(h.kind);
    out["author"] = h.author;
    out["timestamp"] = h.timestamp;
    out["summary"] = h.summary;
    return out;
}

// --- Session -----------------------------------------------------------------

Session::Session(Hub& hub, std::string session_id, std::string model_id, std::string user, Sink sink)
    : hub_(hub), id_(std::move(session_id)), model_id_(std::move(model_id)), user_(std::move(user)),
      sink_(std::move(sink)) {}

void Session::send(const std::string& type, std::uint64_t version, ordered_json payload) {
    std::lock_guard lock(out_mu_);
    ordered_json msg;
    msg["type"] = type;
    msg["seq"] = next_seq_++;
    msg["version"] = version;
    msg["payload"] = std::move(payload);
    sink_(msg);
}

void Session::receive(const json& message) {
    std::lock_guard lock(in_mu_);
    for (const auto& m : inbound_.push(message)) dispatch(m);
}

void Session::dispatch(const json& m) {
    const json request_id = m.is_object() && m.contains("request_id") ? m["request_id"] : json(nullptr);
    const std::string action = m.is_object() ? m.value("action", std::string{}) : std::string{};
    auto fail = [&](const std::string& code, const std::string& message) {
        ordered_json p;
        p["code"] = code;
        p["message"] = message;
        p["action"] = action;
        p["request_id"] = ordered_json::parse(request_id.dump());
        std::uint64_t v = 0;
        try {
            v = hub_.version(model_id_);
        } catch (const Error&) {
        }
        send("error", v, std::move(p));
    };
    try {
        if (action == "submit") {
            UpdateEvent e;
            e.kind = parse_event_kind(m.at("kind").get<std::string>());
            if (e.kind == EventKind::Revert) throw SchemaViolation("use the revert action");
            e.payload = m.value("payload", json::object());
            e.base_version = m.value("base_version", std::uint64_t{0});
            e.author = user_;
            hub_.submit(model_id_, std::move(e));
        } else if (action == "comment") {
            const json anchor = m.value("anchor", json(nullptr));
            hub_.add_comment(model_id_, anchor.is_string() ? anchor.get<std::string>() : std::string{},
                             m.at("text").get<std::string>(), user_);
        } else if (action == "revert") {
            hub_.revert(model_id_, m.at("to_version").get<std::uint64_t>(), user_);
        } else if (action == "replay_request") {
            std::optional<std::uint64_t> v;
            if (auto it = m.find("version"); it != m.end() && !it->is_null()) v = it->get<std::uint64_t>();
            hub_.replay_request(model_id_, *this, v);
        } else {
            throw MalformedDocument("unknown action '" + action + "'");
        }
    } catch (const Error& e) {
        fail(e.code(), e.what());
    } catch (const json::exception& e) {
        fail("MalformedDocument", e.what());
    }
}

// --- Hub ---------------------------------------------------------------------

Hub::Hub(std::shared_ptr<Store> store) : store_(store ? std::move(store) : std::make_shared<MemoryStore>()) {}

Hub::~Hub() = default;

std::shared_ptr<Hub::Shared> Hub::get(const std::string& id) const {
    std::shared_lock lock(models_mu_);
    auto it = models_.find(id);
    if (it == models_.end()) throw NotFound("model '" + id + "' does not exist");
    return it->second;
}

std::size_t Hub::recover() {
    std::size_t n = 0;
    for (const auto& id : store_->model_ids()) {
        StoredModel s = store_->load(id);
        auto m = std::make_shared<Shared>();
        m->id = id;
        m->created = s.created;
        m->initial = s.initial;
        m->current = s.initial;
        m->checkpoints = std::move(s.checkpoints);
        for (auto& e : s.log) {
            if (e.event_id != m->version + 1)
                throw MalformedDocument("event log of '" + id + "' is not dense at " + std::to_string(e.event_id));
            m->current = apply_event(std::move(m->current), e);
            m->version = e.event_id;
            m->log.push_back(std::move(e));
        }
        // a checkpoint beyond the log would come from a torn write
        while (!m->checkpoints.empty() && m->checkpoints.rbegin()->first > m->version)
            m->checkpoints.erase(std::prev(m->checkpoints.end()));
        m->comments = std::move(s.comments);
        std::unique_lock lock(models_mu_);
        models_[id] = std::move(m);
        ++n;
    }
    return n;
}

std::string Hub::create_model(IRModel initial, std::string id) {
    auto m = std::make_shared<Shared>();
    m->created = now_ms();
    m->initial = initial;
    m->current = std::move(initial);
    std::unique_lock lock(models_mu_);
    if (id.empty()) {
        do id = random_token(9);
        while (models_.count(id));
    } else if (models_.count(id)) {
        throw SchemaViolation("model '" + id + "' already exists");
    }
    m->id = id;
    store_->create_model(id, m->initial, m->created);
    models_[id] = std::move(m);
    return id;
}

bool Hub::has_model(const std::string& id) const {
    std::shared_lock lock(models_mu_);
    return models_.count(id) != 0;
}

std::vector<std::string> Hub::model_ids() const {
    std::shared_lock lock(models_mu_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : models_) ids.push_back(id);
    return ids;
}

Hub::Snapshot Hub::snapshot(const std::string& id) const {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    return {m->current, m->version};
}

std::uint64_t Hub::version(const std::string& id) const {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    return m->version;
}

void Hub::broadcast(Shared& m, const std::string& type, std::uint64_t version, const ordered_json& payload) {
    for (const auto& s : m.sessions) s->send(type, version, payload);
}

UpdateEvent Hub::submit(const std::string& id, UpdateEvent event) {
    if (event.kind == EventKind::Revert) throw SchemaViolation("revert events are created by revert()");
    auto m = get(id);
    std::lock_guard lock(m->mu);
    event.timestamp = now_ms();
    if (event.kind == EventKind::LayerHighlight) {
        apply_event(m->current, event);  // target check only
        event.event_id = 0;
        broadcast(*m, "event", m->version, event_to_json(event));
        return event;
    }
    event = resolve_event(m->current, std::move(event));
    IRModel next = apply_event(m->current, event);
    event.event_id = m->version + 1;
    store_->append_event(id, event);
    m->current = std::move(next);
    m->version = event.event_id;
    m->log.push_back(event);
    if (m->version % kCheckpointInterval == 0) {
        m->checkpoints[m->version] = m->current;
        store_->write_checkpoint(id, m->version, m->current);
    }
    if (verify_replay_ && to_canonical_json(replay_locked(*m, m->version)) != to_canonical_json(m->current))
        throw std::logic_error("log replay diverged from the live state at version " + std::to_string(m->version));
    ordered_json payload = event_to_json(event);
    payload["parameters"] = count_json(m->current);
    broadcast(*m, "event", m->version, payload);
    return event;
}

UpdateEvent Hub::revert(const std::string& id, std::uint64_t to_version, const std::string& author) {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    if (to_version >= m->version)
        throw VersionOutOfRange("cannot revert to version " + std::to_string(to_version) + " (current " +
                                std::to_string(m->version) + ")");
    UpdateEvent event;
    event.kind = EventKind::Revert;
    event.author = author;
    event.base_version = m->version;
    event.timestamp = now_ms();
    IRModel target = replay_locked(*m, to_version);
    event.payload = json::object();
    event.payload["to_version"] = to_version;
    event.payload["model"] = json::parse(to_canonical_json(target));
    event.event_id = m->version + 1;
    IRModel next = apply_event(m->current, event);
    store_->append_event(id, event);
    m->current = std::move(next);
    m->version = event.event_id;
    m->log.push_back(event);
    if (m->version % kCheckpointInterval == 0) {
        m->checkpoints[m->version] = m->current;
        store_->write_checkpoint(id, m->version, m->current);
    }
    ordered_json payload = event_to_json(event);
    payload["parameters"] = count_json(m->current);
    broadcast(*m, "event", m->version, payload);
    return event;
}

IRModel Hub::replay_locked(const Shared& m, std::uint64_t version) const {
    if (version > m.version)
        throw VersionOutOfRange("version " + std::to_string(version) + " is beyond the current version " +
                                std::to_string(m.version));
    IRModel state = m.initial;
    std::uint64_t from = 0;
    if (auto it = m.checkpoints.upper_bound(version); it != m.checkpoints.begin()) {
        --it;
        state = it->second;
        from = it->first;
    }
    for (std::uint64_t v = from; v < version; ++v) state = apply_event(std::move(state), m.log[v]);
    return state;
}

IRModel Hub::replay(const std::string& id, std::uint64_t version) const {
    auto m = get(id);
    IRModel state;
    std::vector<UpdateEvent> tail;
    {
        // copy the immutable prefix, fold outside the lock
        std::lock_guard lock(m->mu);
        if (version > m->version)
            throw VersionOutOfRange("version " + std::to_string(version) + " is beyond the current version " +
                                    std::to_string(m->version));
        state = m->initial;
        std::uint64_t from = 0;
        if (auto it = m->checkpoints.upper_bound(version); it != m->checkpoints.begin()) {
            --it;
            state = it->second;
            from = it->first;
        }
        tail.assign(m->log.begin() + static_cast<std::ptrdiff_t>(from),
                    m->log.begin() + static_cast<std::ptrdiff_t>(version));
    }
    for (const auto& e : tail) state = apply_event(std::move(state), e);
    return state;
}

std::vector<HistoryEntry> Hub::history(const std::string& id) const {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    std::vector<HistoryEntry> out;
    out.reserve(m->log.size());
    for (const auto& e : m->log) {
        if (e.kind == EventKind::LayerHighlight) continue;
        out.push_back({e.event_id, e.kind, e.author, e.timestamp, summarize(e)});
    }
    return out;
}

std::vector<UpdateEvent> Hub::log(const std::string& id) const {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    return m->log;
}

IRModel Hub::initial(const std::string& id) const {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    return m->initial;
}

Comment Hub::add_comment(const std::string& id, const std::string& anchor, const std::string& text,
                         const std::string& author) {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    if (!anchor.empty() && !m->current.contains(anchor)) throw NotFound("layer '" + anchor + "' does not exist");
    Comment c;
    c.comment_id = m->comments.size() + 1;
    c.anchor = anchor;
    c.text = text;
    c.author = author;
    c.timestamp = now_ms();
    c.version = m->version;
    store_->append_comment(id, c);
    m->comments.push_back(c);
    ordered_json payload = comment_to_json(c);
    payload["orphaned"] = false;
    broadcast(*m, "comment", m->version, payload);
    return c;
}

std::vector<Hub::CommentView> Hub::comments(const std::string& id) const {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    std::vector<CommentView> out;
    for (const auto& c : m->comments) out.push_back({c, !c.anchor.empty() && !m->current.contains(c.anchor)});
    return out;
}

void Hub::notify(const std::string& id, const std::string& type, const ordered_json& payload) {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    broadcast(*m, type, m->version, payload);
}

void Hub::send_snapshot(Shared& m, Session& s, const IRModel& model, std::uint64_t version, const char* reason,
                        bool with_comments) const {
    ordered_json payload;
    payload["reason"] = reason;
    payload["model"] = model_to_json(model);
    payload["parameters"] = count_json(model);
    payload["current_version"] = m.version;
    if (with_comments) {
        payload["session_id"] = s.id();
        payload["user"] = s.user();
        ordered_json list = ordered_json::array();
        for (const auto& c : m.comments) {
            ordered_json j = comment_to_json(c);
            j["orphaned"] = !c.anchor.empty() && !m.current.contains(c.anchor);
            list.push_back(std::move(j));
        }
        payload["comments"] = std::move(list);
    }
    s.send("snapshot", version, std::move(payload));
}

void Hub::replay_request(const std::string& id, Session& s, std::optional<std::uint64_t> version) {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    if (!version) {
        send_snapshot(*m, s, m->current, m->version, "resync", false);
        return;
    }
    send_snapshot(*m, s, replay_locked(*m, *version), *version, "replay", false);
}

std::shared_ptr<Session> Hub::join(const std::string& id, const std::string& user, Session::Sink sink) {
    auto m = get(id);
    auto s = std::make_shared<Session>(*this, random_token(9), id, user, std::move(sink));
    std::lock_guard lock(m->mu);
    send_snapshot(*m, *s, m->current, m->version, "join", true);
    m->sessions.push_back(s);
    return s;
}

void Hub::leave(const Session& session) {
    auto m = get(session.model_id());
    std::lock_guard lock(m->mu);
    std::erase_if(m->sessions, [&](const auto& s) { return s.get() == &session; });
}

std::size_t Hub::session_count(const std::string& id) const {
    auto m = get(id);
    std::lock_guard lock(m->mu);
    return m->sessions.size();
}

}  // namespace nnedit::collab
