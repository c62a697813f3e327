#include "nnedit/service/jobs.hpp"

#include <pthread.h>
#include <sched.h>
#include <sys/resource.h>
#include <unistd.h>

#include <stdexcept>

namespace nnedit::service {

namespace {

// Export work yields to request handling: batch scheduling (no wakeup
// preemption) and a lower nice value for the calling thread only.
void lower_priority() {
#ifdef __linux__
    sched_param param{};
    pthread_setschedparam(pthread_self(), SCHED_BATCH, &param);
    setpriority(PRIO_PROCESS, static_cast<id_t>(gettid()), 10);
#endif
}

}  // namespace

ThreadPoolQueue::ThreadPoolQueue(std::size_t workers) {
    if (workers == 0) workers = 1;
    for (std::size_t i = 0; i < workers; ++i)
        threads_.emplace_back([this] {
            lower_priority();
            for (;;) {
                std::function<void()> task;
                {
                    std::unique_lock lock(mu_);
                    cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
                    if (tasks_.empty()) return;
                    task = std::move(tasks_.front());
                    tasks_.pop_front();
                }
                task();
            }
        });
}

ThreadPoolQueue::~ThreadPoolQueue() { shutdown(); }

void ThreadPoolQueue::enqueue(std::function<void()> task) {
    {
        std::lock_guard lock(mu_);
        if (stopping_) throw std::logic_error("job queue is shut down");
        tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
}

void ThreadPoolQueue::shutdown() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_)
        if (t.joinable()) t.join();
    threads_.clear();
}

std::string to_string(JobState s) {
    switch (s) {
        case JobState::Pending: return "pending";
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        case JobState::Failed: return "failed";
    }
    return "unknown";
}

nlohmann::ordered_json job_to_json(const ExportJob& j) {
    nlohmann::ordered_json out;
    out["job_id"] = j.job_id;
    out["model_id"] = j.model_id;
    out["target"] = to_string(j.target);
    out["state"] = to_string(j.state);
    out["version"] = j.version ? nlohmann::ordered_json(*j.version) : nlohmann::ordered_json(nullptr);
    out["created"] = j.created;
    out["started"] = j.started ? nlohmann::ordered_json(j.started) : nlohmann::ordered_json(nullptr);
    out["finished"] = j.finished ? nlohmann::ordered_json(j.finished) : nlohmann::ordered_json(nullptr);
    if (j.state == JobState::Done) {
        out["filename"] = j.filename;
        out["result_url"] = "/api/jobs/" + j.job_id + "/result";
    }
    if (j.state == JobState::Failed) out["error"] = j.error;
    return out;
}

void JobTable::insert(ExportJob job) {
    std::lock_guard lock(mu_);
    jobs_[job.job_id] = std::move(job);
}

std::optional<ExportJob> JobTable::get(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

void JobTable::transition(const std::string& id, const std::function<void(ExportJob&)>& update, JobState to) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw std::logic_error("job " + id + " vanished");
    const JobState from = it->second.state;
    const bool ok = (from == JobState::Pending && to == JobState::Running) ||
                    (from == JobState::Running && (to == JobState::Done || to == JobState::Failed));
    if (!ok) throw std::logic_error("illegal job transition " + to_string(from) + " -> " + to_string(to));
    update(it->second);
    it->second.state = to;
}

std::size_t JobTable::purge(std::int64_t now_ms) {
    std::lock_guard lock(mu_);
    return std::erase_if(jobs_, [&](const auto& kv) {
        const ExportJob& j = kv.second;
        return j.finished != 0 && now_ms - j.finished >= retention_.count();
    });
}

std::size_t JobTable::size() {
    std::lock_guard lock(mu_);
    return jobs_.size();
}

}  // namespace nnedit::service
