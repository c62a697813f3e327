#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nnedit/ir/model.hpp"

namespace nnedit::layout {

struct LayoutConfig {
    double layer_width = 130;
    double layer_height = 40;
    double hgap = 60;
    double vgap = 40;
    /// Downward step used to resolve overlaps; defaults to one row pitch.
    double overlap_step = 80;

    double column_pitch() const { return layer_width + hgap; }
    double row_pitch() const { return layer_height + vgap; }
    /// Throws SchemaViolation unless every field is strictly positive.
    void check() const;
};

/// Degree tables and adjacency built in one pass over the model. Nodes are
/// numbered in layer declaration order; connections with an unknown end are
/// ignored.
struct GraphIndex {
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::size_t> in_degree;
    std::vector<std::size_t> out_degree;
    std::vector<std::size_t> input_length;   // parent count
    std::vector<std::size_t> output_length;  // child count
    /// Children in connection declaration order.
    std::vector<std::vector<std::size_t>> adjacency;
    std::vector<std::vector<std::size_t>> parents;

    std::size_t size() const { return ids.size(); }
    std::size_t edge_count() const;
};

GraphIndex build_index(const IRModel& model);

/// Edges closing a cycle, found by depth-first search from the sources in
/// declaration order (then from any node not yet reached). Self-loops are
/// included.
std::vector<Connection> detect_cycles(const GraphIndex& index);

struct Point {
    double x = 0;
    double y = 0;
    bool operator==(const Point&) const = default;
};

/// Top-left corner of each layer rectangle, in canvas pixels. Keys follow
/// layer declaration order.
struct PositionMap {
    std::vector<std::string> order;
    std::unordered_map<std::string, Point> at;

    const Point& operator[](const std::string& id) const { return at.at(id); }
    std::size_t size() const { return order.size(); }
    bool operator==(const PositionMap& o) const { return order == o.order && at == o.at; }
};

PositionMap compute_layout(const IRModel& model, const LayoutConfig& config = {});

struct ConnectionPath {
    std::string from;
    std::string to;
    std::vector<Point> points;
    bool back_edge = false;
    bool operator==(const ConnectionPath&) const = default;
};

/// One path per connection, in declaration order. The first point is the
/// bottom centre of the source, the last the top centre of the target.
std::vector<ConnectionPath> route_connections(const IRModel& model, const PositionMap& positions,
                                              const LayoutConfig& config = {});

std::string layout_to_svg(const IRModel& model, const PositionMap& positions,
                          const std::vector<ConnectionPath>& paths, const LayoutConfig& config = {});

/// {positions:{id:[x,y]}, paths:[{from,to,points:[[x,y],...]}]}
nlohmann::ordered_json layout_to_json(const PositionMap& positions, const std::vector<ConnectionPath>& paths);

}  // namespace nnedit::layout
