#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nnedit/ir/param.hpp"

namespace nnedit::service {

/// Where export work runs. The in-process pool below is the default; another
/// implementation can hand tasks to an external broker.
class JobQueue {
public:
    virtual ~JobQueue() = default;
    virtual void enqueue(std::function<void()> task) = 0;
    /// Finishes queued tasks and stops accepting new ones.
    virtual void shutdown() = 0;
};

class ThreadPoolQueue : public JobQueue {
public:
    explicit ThreadPoolQueue(std::size_t workers);
    ~ThreadPoolQueue() override;
    void enqueue(std::function<void()> task) override;
    void shutdown() override;

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> tasks_;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

enum class JobState { Pending, Running, Done, Failed };
std::string to_string(JobState s);

struct ExportJob {
    std::string job_id;
    std::string model_id;
    Framework target = Framework::Caffe;
    bool enable_custom_layers = false;
    JobState state = JobState::Pending;
    /// Model version the worker exported.
    std::optional<std::uint64_t> version;
    std::string result;    // file contents when done
    std::string filename;  // model.prototxt / model.json
    /// {code, message, phase, layer_id?} when failed.
    nlohmann::ordered_json error;
    std::int64_t created = 0, started = 0, finished = 0;  // ms since epoch, 0 = not yet
};

/// Status view without the file contents.
nlohmann::ordered_json job_to_json(const ExportJob& job);

/// Thread-safe job table with time-based expiry of finished jobs.
class JobTable {
public:
    explicit JobTable(std::chrono::milliseconds retention) : retention_(retention) {}

    void insert(ExportJob job);
    std::optional<ExportJob> get(const std::string& id);
    /// pending -> running -> done|failed; other transitions throw
    /// std::logic_error.
    void transition(const std::string& id, const std::function<void(ExportJob&)>& update, JobState to);
    /// Drops finished jobs older than the retention period.
    std::size_t purge(std::int64_t now_ms);
    std::size_t size();

private:
    std::mutex mu_;
    std::map<std::string, ExportJob> jobs_;
    std::chrono::milliseconds retention_;
};

}  // namespace nnedit::service
