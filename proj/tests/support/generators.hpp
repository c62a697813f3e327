#pragma once

// Random model and graph generators for property tests. Everything is
// driven by an explicit seed so failures can be replayed.

#include <cstdint>
#include <optional>
#include <random>

#include "nnedit/ir/model.hpp"

namespace gen {

using Rng = std::mt19937_64;

struct ModelOptions {
    /// Restrict to layers (and params) expressible in this framework; nullopt
    /// allows anything in the catalog.
    std::optional<nnedit::Framework> framework;
    int max_layers = 60;
    /// LRN is only exportable to Keras through the custom-layer registry.
    bool allow_lrn = true;
};

/// A shape-valid, acyclic IR model with declared Input shapes.
nnedit::IRModel random_model(Rng& rng, const ModelOptions& options = {});

struct DagOptions {
    int nodes = 50;
    /// Expected extra parents per node beyond the first.
    double extra_edge_rate = 0.3;
    /// Probability of each node being a source.
    double source_rate = 0.05;
    /// Number of edges pointing backwards (closing cycles).
    int back_edges = 0;
};

/// Graph of ReLU layers; node i only takes parents among 0..i-1 unless
/// back_edges is set.
nnedit::IRModel random_dag(Rng& rng, const DagOptions& options);

/// n-node chain l0 -> l1 -> ...
nnedit::IRModel chain(int n);

}  // namespace gen
