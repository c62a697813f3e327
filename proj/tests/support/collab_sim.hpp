#pragma once

// Simulated network for collaboration tests: N clients talk to one hub
// through channels that deliver in random order and sometimes twice.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnedit/collab/hub.hpp"
#include "nnedit/collab/replica.hpp"

namespace sim {

struct Options {
    int clients = 5;
    /// Client submissions of the four event kinds (rejected ones included).
    int events = 1000;
    double duplicate_rate = 0.1;
    /// Chance that a delivery picks a random in-flight message rather than
    /// the oldest.
    double reorder_rate = 0.3;
    /// Chance per step of delivering instead of generating a new message.
    double deliver_rate = 0.6;
    bool with_highlights = true;
    /// Occasional reverts, comments and replay requests on top of `events`.
    bool with_extras = true;
    std::uint64_t seed = 1;
};

struct Client {
    std::string name;
    nnedit::collab::Replica replica;
    std::shared_ptr<nnedit::collab::Session> session;
    std::vector<nlohmann::json> to_client;  // in flight
    std::vector<nlohmann::json> to_server;
    int added = 0;
};

class Simulation {
public:
    Simulation(nnedit::IRModel initial, Options options);

    /// Generates traffic until the submission budget is spent, then drains
    /// every channel.
    void run();

    nnedit::collab::Hub hub;
    std::string model_id;
    std::vector<std::unique_ptr<Client>> clients;

    std::map<std::string, int> submitted;  // by kind
    int reverts = 0, comments = 0, replay_requests = 0;
    std::size_t deliveries = 0, duplicated = 0;
    /// Event messages whose parameter count was compared with the oracle,
    /// and the mismatches found.
    std::size_t count_checks = 0, count_mismatches = 0;

private:
    void generate(Client& c);
    void deliver();
    bool idle() const;

    Options opt_;
    std::mt19937_64 rng_;
};

/// Small learnable starting model: Input 3x32x32 -> conv -> relu -> pool -> ip.
nnedit::IRModel starter_model();

}  // namespace sim
