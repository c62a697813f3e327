#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nnedit/ir/catalog.hpp"
#include "nnedit/ir/param.hpp"

namespace nnedit {

struct Position {
    double x = 0;
    double y = 0;
    bool operator==(const Position&) const = default;
};

struct IRLayer {
    std::string id;
    LayerType type = LayerType::ReLU;
    std::string display_name;
    /// Explicitly set parameters only; unset keys take the schema default.
    std::map<std::string, ParamValue> params;
    std::optional<Position> position_hint;

    const LayerSpec& spec() const { return catalog_lookup(type); }

    /// Explicit value or schema default. Throws SchemaViolation for keys
    /// outside the schema.
    ParamValue param(const std::string& key) const;
    double number(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::string text(const std::string& key) const;
    /// Per-dimension list expanded to `dims` entries (one-element values
    /// broadcast).
    IntList per_dim(const std::string& key, std::size_t dims) const;
    IntList int_list(const std::string& key) const;

    /// Spatial dimensionality implied by the per-dimension params (kernel
    /// first); 2 when nothing pins it.
    std::size_t dimensionality() const;

    bool operator==(const IRLayer&) const = default;
};

struct Connection {
    std::string from;
    std::string to;
    bool operator==(const Connection&) const = default;
};

/// Framework-neutral model graph. Layers keep insertion order; connections
/// keep declaration order, which also fixes the input order of multi-input
/// layers.
class IRModel {
public:
    IRModel() = default;
    explicit IRModel(std::string name) : name_(std::move(name)) {}

    const std::string& name() const { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    const std::vector<IRLayer>& layers() const { return layers_; }
    const std::vector<Connection>& connections() const { return connections_; }
    std::size_t size() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }

    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    const IRLayer* find(const std::string& id) const;
    IRLayer* find(const std::string& id);
    /// Throws NotFound.
    const IRLayer& at(const std::string& id) const;
    IRLayer& at(const std::string& id);
    std::size_t position_of(const std::string& id) const;

    bool has_connection(const std::string& from, const std::string& to) const;
    /// Parents in connection declaration order.
    std::vector<std::string> parents(const std::string& id) const;
    std::vector<std::string> children(const std::string& id) const;

    /// Low-level insertion used by importers and the edit operations.
    /// Throws SchemaViolation on a duplicate id.
    void insert_layer(IRLayer layer);
    /// Throws NotFound for unknown ends, DuplicateConnection on repeats.
    void insert_connection(const std::string& from, const std::string& to);
    /// Appends without any check; for lenient loaders whose output is then
    /// reported on by validate().
    void insert_connection_unchecked(const std::string& from, const std::string& to);
    void erase_layer(const std::string& id);
    void erase_connection(const std::string& from, const std::string& to);

    /// Same layer set (by id, type and canonical params), same connection set
    /// and same per-layer parent order. Layer and connection declaration order
    /// is ignored.
    bool isomorphic_to(const IRModel& other) const;

    bool operator==(const IRModel& other) const {
        return name_ == other.name_ && layers_ == other.layers_ && connections_ == other.connections_;
    }

private:
    void reindex();

    std::string name_;
    std::vector<IRLayer> layers_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<Connection> connections_;
};

/// Fully resolved parameters of a layer: every schema key present, defaults
/// filled in, per-dimension lists expanded to the layer dimensionality.
std::map<std::string, ParamValue> canonical_params(const IRLayer& layer);

/// Drops explicit params equal to their default (required params are kept).
IRLayer minimized(const IRLayer& layer);

/// Layer with the catalog defaults and a fresh id of the form
/// "<default_id><n>" that is unused in `model`.
IRLayer make_layer(const IRModel& model, LayerType type);

// Edit operations. Each returns the mutated model and preserves the IRModel
// invariants.

/// With `parents == nullopt` the layer is attached below the deepest layer
/// (longest path from a source; ties go to the earliest declared). An empty
/// vector adds it unconnected.
IRModel add_layer(IRModel model, IRLayer layer,
                  std::optional<std::vector<std::string>> parents = std::nullopt);
/// Removes the layer and its incident connections. Neighbours are not
/// re-linked.
IRModel delete_layer(IRModel model, const std::string& id);
IRModel update_param(IRModel model, const std::string& id, const std::string& key, ParamValue value);
/// Resets `key` to its schema default.
IRModel reset_param(IRModel model, const std::string& id, const std::string& key);
IRModel connect(IRModel model, const std::string& from, const std::string& to);
IRModel disconnect(IRModel model, const std::string& from, const std::string& to);

/// Id of the deepest layer (see add_layer), or nullopt for an empty model.
std::optional<std::string> deepest_layer(const IRModel& model);

/// Checks key membership, value type, select options and ranges. Throws
/// SchemaViolation.
void check_param(const IRLayer& layer, const std::string& key, const ParamValue& value);

}  // namespace nnedit
