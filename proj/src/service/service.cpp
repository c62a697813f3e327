#include "nnedit/service/service.hpp"

#include <charconv>

#include "nnedit/frontends/frontends.hpp"
#include "nnedit/ir/json_io.hpp"
#include "nnedit/ir/shapes.hpp"
#include "nnedit/ir/validate.hpp"
#include "nnedit/layout/layout.hpp"
#include "nnedit/service/file_store.hpp"
#include "nnedit/textproto/textproto.hpp"

namespace nnedit::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::size_t parse_size(const std::string& name, const std::string& text) {
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size())
        throw SchemaViolation(name + " must be a non-negative integer, got '" + text + "'");
    return v;
}

ordered_json layout_json(const IRModel& model) {
    const auto pos = layout::compute_layout(model);
    return layout::layout_to_json(pos, layout::route_connections(model, pos));
}

ordered_json count_json(const IRModel& model) {
    auto n = collab::parameter_count(model);
    return n ? ordered_json(*n) : ordered_json(nullptr);
}

}  // namespace

Config Config::from_env(const std::function<const char*(const char*)>& lookup) {
    Config c;
    auto get = [&](const char* name) -> std::optional<std::string> {
        const char* v = lookup(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    if (auto bind = get("NNEDIT_BIND")) {
        const auto colon = bind->rfind(':');
        const std::string port = colon == std::string::npos ? *bind : bind->substr(colon + 1);
        if (colon != std::string::npos) c.host = bind->substr(0, colon);
        const std::size_t p = parse_size("NNEDIT_BIND port", port);
        if (p > 65535) throw SchemaViolation("NNEDIT_BIND port out of range");
        c.port = static_cast<int>(p);
    }
    if (auto w = get("NNEDIT_WORKERS")) {
        c.workers = parse_size("NNEDIT_WORKERS", *w);
        if (c.workers == 0) throw SchemaViolation("NNEDIT_WORKERS must be at least 1");
    }
    if (auto s = get("NNEDIT_STORE")) c.store_path = *s;
    if (auto f = get("NNEDIT_FETCH_CAP")) c.fetch_cap = parse_size("NNEDIT_FETCH_CAP", *f);
    if (auto r = get("NNEDIT_JOB_RETENTION"))
        c.job_retention = std::chrono::seconds(parse_size("NNEDIT_JOB_RETENTION", *r));
    return c;
}

ordered_json error_body(const ServiceError& e) {
    ordered_json err;
    err["code"] = e.code();
    err["message"] = e.what();
    if (e.detail().is_object())
        for (const auto& [k, v] : e.detail().items()) err[k] = v;
    return ordered_json{{"error", err}};
}

ImportRequest parse_import_request(const json& body) {
    if (!body.is_object()) throw ServiceError(400, "MalformedDocument", "request body must be a JSON object");
    ImportRequest r;
    auto text = [&](const char* key) -> std::optional<std::string> {
        auto it = body.find(key);
        if (it == body.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw ServiceError(400, "MalformedDocument", std::string("'") + key + "' must be a string");
        return it->get<std::string>();
    };
    r.format = text("format").value_or("");
    if (r.format.empty()) throw ServiceError(400, "MalformedDocument", "missing 'format' (caffe, keras or ir)");
    r.source = text("source");
    r.url = text("url");
    r.name = text("name").value_or("");
    if (r.source.has_value() == r.url.has_value())
        throw ServiceError(400, "MalformedDocument", "give exactly one of 'source' and 'url'");
    return r;
}

Service::Service(Config config, std::unique_ptr<JobQueue> queue)
    : config_(std::move(config)), jobs_(config_.job_retention) {
    if (config_.store_path.empty())
        store_ = std::make_shared<collab::MemoryStore>();
    else
        store_ = std::make_shared<FileStore>(config_.store_path);
    hub_ = std::make_unique<collab::Hub>(store_);
    hub_->recover();
    queue_ = queue ? std::move(queue) : std::make_unique<ThreadPoolQueue>(config_.workers);
}

Service::~Service() { queue_->shutdown(); }

ordered_json Service::import_model(const ImportRequest& request) {
    std::string text;
    if (request.url) {
        text = fetch_url(*request.url, config_.fetch_cap);
    } else {
        text = *request.source;
        if (text.size() > config_.fetch_cap)
            throw ServiceError(413, "PayloadTooLarge",
                               "source is " + std::to_string(text.size()) + " bytes, limit " +
                                   std::to_string(config_.fetch_cap));
    }
    IRModel model;
    std::vector<Diagnostic> diagnostics;
    try {
        auto imported = frontends::import_any(text, request.format);
        model = std::move(imported.model);
        diagnostics = std::move(imported.warnings);
    } catch (const textproto::SyntaxError& e) {
        const auto& sp = e.span();
        throw ServiceError(400, e.code(), e.what(),
                           {{"span", {{"line", sp.line}, {"column", sp.column}, {"start", sp.start}, {"end", sp.end}}}});
    } catch (const ServiceError&) {
        throw;
    } catch (const Error& e) {
        throw ServiceError(400, e.code(), e.what());
    }
    if (!request.name.empty()) model.set_name(request.name);
    auto found = validate(model);
    if (has_errors(found)) {
        ordered_json list = ordered_json::array();
        for (const auto& d : found) list.push_back(diagnostic_to_json(d));
        throw ServiceError(400, "ValidationFailed", "the model has validation errors", {{"diagnostics", list}});
    }
    diagnostics.insert(diagnostics.end(), found.begin(), found.end());

    ordered_json layout = layout_json(model);
    ordered_json parameters = count_json(model);
    ordered_json out;
    out["model_id"] = hub_->create_model(std::move(model));
    out["version"] = 0;
    ordered_json diag = ordered_json::array();
    for (const auto& d : diagnostics) diag.push_back(diagnostic_to_json(d));
    out["diagnostics"] = std::move(diag);
    out["layout"] = std::move(layout);
    out["parameters"] = std::move(parameters);
    return out;
}

ordered_json Service::get_model(const std::string& id) {
    collab::Hub::Snapshot snap;
    try {
        snap = hub_->snapshot(id);
    } catch (const NotFound& e) {
        throw ServiceError(404, e.code(), e.what());
    }
    ordered_json out;
    out["model_id"] = id;
    out["version"] = snap.version;
    out["model"] = model_to_json(snap.model);
    out["layout"] = layout_json(snap.model);
    out["parameters"] = count_json(snap.model);
    ordered_json shapes = ordered_json::object();
    for (const auto& [layer, shape] : infer_shapes_partial(snap.model)) shapes[layer] = shape.dims;
    out["shapes"] = std::move(shapes);
    ordered_json diag = ordered_json::array();
    for (const auto& d : validate(snap.model)) diag.push_back(diagnostic_to_json(d));
    out["diagnostics"] = std::move(diag);
    ordered_json history = ordered_json::array();
    for (const auto& h : hub_->history(id)) history.push_back(collab::history_to_json(h));
    out["history"] = std::move(history);
    ordered_json comments = ordered_json::array();
    for (const auto& c : hub_->comments(id)) {
        ordered_json j = collab::comment_to_json(c.comment);
        j["orphaned"] = c.orphaned;
        comments.push_back(std::move(j));
    }
    out["comments"] = std::move(comments);
    auto token = store_->share_of(id);
    out["share_token"] = token ? ordered_json(*token) : ordered_json(nullptr);
    return out;
}

std::string Service::export_model(const std::string& model_id, Framework target, bool enable_custom_layers) {
    if (!hub_->has_model(model_id)) throw ServiceError(404, "NotFound", "model '" + model_id + "' does not exist");
    purge_jobs();
    ExportJob job;
    job.job_id = collab::random_token(12);
    job.model_id = model_id;
    job.target = target;
    job.enable_custom_layers = enable_custom_layers;
    job.created = collab::now_ms();
    const std::string id = job.job_id;
    jobs_.insert(std::move(job));
    queue_->enqueue([this, id] { run_job(id); });
    return id;
}

void Service::run_job(const std::string& job_id) {
    auto job = jobs_.get(job_id);
    if (!job) return;
    std::optional<collab::Hub::Snapshot> snap;
    try {
        snap = hub_->snapshot(job->model_id);
    } catch (const Error&) {
    }
    jobs_.transition(
        job_id,
        [&](ExportJob& j) {
            j.started = collab::now_ms();
            if (snap) j.version = snap->version;
        },
        JobState::Running);
    std::string result;
    ordered_json error;
    if (!snap) {
        error = {{"code", "NotFound"}, {"message", "model '" + job->model_id + "' no longer exists"}, {"phase", "export"}};
    } else {
        try {
            frontends::ExportOptions options;
            options.enable_custom_layers = job->enable_custom_layers;
            result = frontends::export_model(snap->model, job->target, options);
        } catch (const UnsupportedLayer& e) {
            error = {{"code", e.code()}, {"message", e.what()}, {"phase", "export"}, {"layer_id", e.layer_id()},
                     {"layer_type", e.layer_type()}};
        } catch (const Error& e) {
            error = {{"code", e.code()}, {"message", e.what()}, {"phase", "export"}};
        }
    }
    const bool ok = error.is_null();
    jobs_.transition(
        job_id,
        [&](ExportJob& j) {
            j.finished = collab::now_ms();
            if (ok) {
                j.result = std::move(result);
                j.filename = j.target == Framework::Caffe ? "model.prototxt" : "model.json";
            } else {
                j.error = error;
            }
        },
        ok ? JobState::Done : JobState::Failed);
    {
        std::lock_guard lock(jobs_cv_mu_);
    }
    jobs_cv_.notify_all();
    if (auto done = jobs_.get(job_id)) {
        try {
            hub_->notify(done->model_id, "job", job_to_json(*done));
        } catch (const Error&) {
        }
    }
}

void Service::purge_jobs() { jobs_.purge(collab::now_ms()); }

ExportJob Service::job(const std::string& job_id) {
    purge_jobs();
    auto j = jobs_.get(job_id);
    if (!j) throw ServiceError(404, "NotFound", "job '" + job_id + "' does not exist");
    return *j;
}

ExportJob Service::job_result(const std::string& job_id) {
    ExportJob j = job(job_id);
    if (j.state == JobState::Done) return j;
    ordered_json detail = {{"state", to_string(j.state)}};
    if (j.state == JobState::Failed) detail["cause"] = j.error;
    throw ServiceError(409, "JobNotDone", "job '" + job_id + "' is " + to_string(j.state), detail);
}

std::optional<ExportJob> Service::wait_for_job(const std::string& job_id, std::chrono::milliseconds timeout) {
    std::unique_lock lock(jobs_cv_mu_);
    std::optional<ExportJob> found;
    jobs_cv_.wait_for(lock, timeout, [&] {
        found = jobs_.get(job_id);
        return !found || found->state == JobState::Done || found->state == JobState::Failed;
    });
    if (found && (found->state == JobState::Done || found->state == JobState::Failed)) return found;
    return std::nullopt;
}

std::string Service::share(const std::string& model_id) {
    if (!hub_->has_model(model_id)) throw ServiceError(404, "NotFound", "model '" + model_id + "' does not exist");
    std::lock_guard lock(share_mu_);
    if (auto existing = store_->share_of(model_id)) return *existing;
    for (;;) {
        std::string token = collab::random_token(16);
        if (store_->insert_share(token, model_id)) return token;
    }
}

std::string Service::resolve_share(const std::string& token) {
    auto id = store_->resolve_share(token);
    if (!id) throw ServiceError(404, "NotFound", "unknown share token");
    return *id;
}

std::shared_ptr<collab::Session> Service::open_session(const std::string& model_id, const std::string& token,
                                                       const std::string& user, collab::Session::Sink sink) {
    auto id = store_->resolve_share(token);
    if (!id || *id != model_id) throw ServiceError(404, "NotFound", "unknown share token for this model");
    auto s = hub_->join(model_id, user.empty() ? "anonymous" : user, std::move(sink));
    std::lock_guard lock(sessions_mu_);
    std::erase_if(sessions_, [](const auto& kv) { return kv.second.expired(); });
    sessions_[s->id()] = s;
    return s;
}

std::shared_ptr<collab::Session> Service::find_session(const std::string& session_id) {
    std::lock_guard lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    return it == sessions_.end() ? nullptr : it->second.lock();
}

void Service::close_session(const collab::Session& session) {
    try {
        hub_->leave(session);
    } catch (const Error&) {
    }
    std::lock_guard lock(sessions_mu_);
    sessions_.erase(session.id());
}

}  // namespace nnedit::service
