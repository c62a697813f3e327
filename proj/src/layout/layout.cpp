#include "nnedit/layout/layout.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include "nnedit/error.hpp"

namespace nnedit::layout {

void LayoutConfig::check() const {
    for (double v : {layer_width, layer_height, hgap, vgap, overlap_step})
        if (!(v > 0) || !std::isfinite(v))
            throw SchemaViolation("layout dimensions must be strictly positive");
}

std::size_t GraphIndex::edge_count() const {
    std::size_t n = 0;
    for (const auto& a : adjacency) n += a.size();
    return n;
}

GraphIndex build_index(const IRModel& model) {
    GraphIndex g;
    const std::size_t n = model.size();
    g.ids.reserve(n);
    g.slot.reserve(n);
    for (const auto& l : model.layers()) {
        g.slot.emplace(l.id, g.ids.size());
        g.ids.push_back(l.id);
    }
    g.in_degree.assign(n, 0);
    g.out_degree.assign(n, 0);
    g.adjacency.assign(n, {});
    g.parents.assign(n, {});
    for (const auto& c : model.connections()) {
        auto f = g.slot.find(c.from);
        auto t = g.slot.find(c.to);
        if (f == g.slot.end() || t == g.slot.end()) continue;
        g.adjacency[f->second].push_back(t->second);
        g.parents[t->second].push_back(f->second);
        ++g.out_degree[f->second];
        ++g.in_degree[t->second];
    }
    g.input_length = g.in_degree;
    g.output_length = g.out_degree;
    return g;
}

namespace {

using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;

EdgeSet back_edge_set(const GraphIndex& g) {
    enum : char { White, Gray, Black };
    const std::size_t n = g.size();
    std::vector<char> color(n, White);
    EdgeSet back;
    // iterative DFS; frame = (node, next child position)
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    auto run = [&](std::size_t root) {
        if (color[root] != White) return;
        color[root] = Gray;
        stack.emplace_back(root, 0);
        while (!stack.empty()) {
            auto& [u, i] = stack.back();
            if (i == g.adjacency[u].size()) {
                color[u] = Black;
                stack.pop_back();
                continue;
            }
            const std::size_t v = g.adjacency[u][i++];
            if (color[v] == Gray) {
                back.emplace(u, v);
            } else if (color[v] == White) {
                color[v] = Gray;
                stack.emplace_back(v, 0);
            }
        }
    };
    for (std::size_t u = 0; u < n; ++u)
        if (g.in_degree[u] == 0) run(u);
    for (std::size_t u = 0; u < n; ++u) run(u);
    return back;
}

struct Rect {
    double x, y, w, h;
};

bool interiors_overlap(const Rect& a, const Rect& b) {
    return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

// Grid-cell index of placed rectangles. Each rectangle is registered in
// every cell it touches, so a probe only needs the cells of the probe.
class Occupancy {
public:
    Occupancy(double cell_w, double cell_h) : cw_(cell_w), ch_(cell_h) {}

    void add(std::size_t id, const Rect& r) {
        rects_.resize(std::max(rects_.size(), id + 1));
        rects_[id] = r;
        for_cells(r, [&](std::int64_t cx, std::int64_t cy) {
            cells_[key(cx, cy)].push_back(id);
            rows_[cy].push_back(id);
        });
    }

    bool collides(const Rect& r) const {
        bool hit = false;
        for_cells(r, [&](std::int64_t cx, std::int64_t cy) {
            if (hit) return;
            auto it = cells_.find(key(cx, cy));
            if (it == cells_.end()) return;
            for (std::size_t id : it->second)
                if (interiors_overlap(r, rects_[id])) {
                    hit = true;
                    return;
                }
        });
        return hit;
    }

    /// Ids of rectangles registered in cells covering `area`, deduplicated,
    /// ascending.
    std::vector<std::size_t> near(const Rect& area) const {
        std::vector<std::size_t> out;
        for_cells(area, [&](std::int64_t cx, std::int64_t cy) {
            auto it = cells_.find(key(cx, cy));
            if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        });
        return unique(std::move(out));
    }

    /// Ids of rectangles in the cell rows spanning [y0, y1].
    std::vector<std::size_t> in_rows(double y0, double y1) const {
        std::vector<std::size_t> out;
        const auto lo = rows_.lower_bound(cell(y0, ch_));
        const auto hi = rows_.upper_bound(cell(y1, ch_));
        for (auto it = lo; it != hi; ++it) out.insert(out.end(), it->second.begin(), it->second.end());
        return unique(std::move(out));
    }

    const Rect& rect(std::size_t id) const { return rects_[id]; }

private:
    static std::int64_t cell(double v, double size) { return static_cast<std::int64_t>(std::floor(v / size)); }
    static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
        return (static_cast<std::uint64_t>(cx) << 32) ^ static_cast<std::uint64_t>(cy & 0xffffffff);
    }
    static std::vector<std::size_t> unique(std::vector<std::size_t> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
    template <class F>
    void for_cells(const Rect& r, F&& f) const {
        const auto x0 = cell(r.x, cw_), x1 = cell(r.x + r.w, cw_);
        const auto y0 = cell(r.y, ch_), y1 = cell(r.y + r.h, ch_);
        for (auto cy = y0; cy <= y1; ++cy)
            for (auto cx = x0; cx <= x1; ++cx) f(cx, cy);
    }

    double cw_, ch_;
    std::vector<Rect> rects_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
    std::map<std::int64_t, std::vector<std::size_t>> rows_;
};

}  // namespace

std::vector<Connection> detect_cycles(const GraphIndex& index) {
    std::vector<Connection> out;
    const EdgeSet back = back_edge_set(index);
    // report in adjacency order for stable output
    for (std::size_t u = 0; u < index.size(); ++u)
        for (std::size_t v : index.adjacency[u])
            if (back.count({u, v})) out.push_back({index.ids[u], index.ids[v]});
    return out;
}

PositionMap compute_layout(const IRModel& model, const LayoutConfig& config) {
    config.check();
    const GraphIndex g = build_index(model);
    const EdgeSet back = back_edge_set(g);
    const std::size_t n = g.size();

    // forward graph: back-edges removed
    std::vector<std::vector<std::size_t>> kids(n), pars(n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v : g.adjacency[u])
            if (!back.count({u, v})) {
                kids[u].push_back(v);
                pars[v].push_back(u);
            }

    const double pitch_x = config.column_pitch();
    const double pitch_y = config.row_pitch();
    Occupancy occ(pitch_x, pitch_y);
    std::vector<double> col(n, 0), y(n, 0);
    std::vector<char> reserved(n, 0);
    auto rect_at = [&](double c, double top) { return Rect{c * pitch_x, top, config.layer_width, config.layer_height}; };
    auto settle = [&](double c, double top) {
        while (occ.collides(rect_at(c, top))) top += config.overlap_step;
        return top;
    };

    std::vector<std::size_t> indeg(n);
    std::vector<std::size_t> stack;
    for (std::size_t u = n; u-- > 0;) {
        indeg[u] = pars[u].size();
        if (indeg[u] == 0) stack.push_back(u);
    }

    double next_source_col = 0;
    std::vector<std::size_t> group, ready;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        if (!reserved[u]) {
            if (pars[u].empty()) {
                col[u] = next_source_col;
                next_source_col += 1;
                y[u] = settle(col[u], 0);
            } else {
                double sum = 0, deepest = -std::numeric_limits<double>::infinity();
                for (std::size_t p : pars[u]) {
                    sum += col[p];
                    deepest = std::max(deepest, y[p]);
                }
                // nearest half column
                col[u] = std::round(2 * sum / static_cast<double>(pars[u].size())) / 2;
                y[u] = settle(col[u], deepest + pitch_y);
            }
            occ.add(u, rect_at(col[u], y[u]));
        }

        // Children whose only parent is u are placed together on one row,
        // centred below u.
        group.clear();
        for (std::size_t v : kids[u])
            if (pars[v].size() == 1) group.push_back(v);
        if (!group.empty()) {
            const double half = (static_cast<double>(group.size()) - 1) / 2;
            double top = y[u] + pitch_y;
            for (;;) {
                bool clear = true;
                for (std::size_t j = 0; j < group.size() && clear; ++j)
                    clear = !occ.collides(rect_at(col[u] + static_cast<double>(j) - half, top));
                if (clear) break;
                top += config.overlap_step;
            }
            for (std::size_t j = 0; j < group.size(); ++j) {
                const std::size_t v = group[j];
                col[v] = col[u] + static_cast<double>(j) - half;
                y[v] = top;
                reserved[v] = 1;
                occ.add(v, rect_at(col[v], y[v]));
            }
        }

        ready.clear();
        for (std::size_t v : kids[u])
            if (--indeg[v] == 0) ready.push_back(v);
        for (auto it = ready.rbegin(); it != ready.rend(); ++it) stack.push_back(*it);
    }

    PositionMap out;
    out.order = g.ids;
    out.at.reserve(n);
    for (std::size_t u = 0; u < n; ++u) out.at.emplace(g.ids[u], Point{col[u] * pitch_x, y[u]});
    return out;
}

// ---------------------------------------------------------------------------
// Routing

namespace {

// Separating-axis test of a segment against the open rectangle r.
bool crosses_interior(Point a, Point b, const Rect& r) {
    constexpr double eps = 1e-9;
    const double cx = r.x + r.w / 2, cy = r.y + r.h / 2;
    const double hw = r.w / 2, hh = r.h / 2;
    // box axes
    if (std::max(a.x, b.x) <= r.x + eps || std::min(a.x, b.x) >= r.x + r.w - eps) return false;
    if (std::max(a.y, b.y) <= r.y + eps || std::min(a.y, b.y) >= r.y + r.h - eps) return false;
    // segment normal
    const double nx = -(b.y - a.y), ny = b.x - a.x;
    const double len = std::hypot(nx, ny);
    if (len == 0) return true;  // a point strictly inside on both axes
    const double dist = std::abs(nx * (cx - a.x) + ny * (cy - a.y)) / len;
    const double reach = (std::abs(nx) * hw + std::abs(ny) * hh) / len;
    return dist < reach - eps;
}

// Coordinate nearest `ideal` lying outside every blocked open interval, kept
// at least `clearance` from blocked space where the gap allows it.
double free_lane(double ideal, std::vector<std::pair<double, double>> blocked, double clearance) {
    std::sort(blocked.begin(), blocked.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& b : blocked) {
        if (!merged.empty() && b.first < merged.back().second)
            merged.back().second = std::max(merged.back().second, b.second);
        else
            merged.push_back(b);
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    double best = ideal, best_cost = inf;
    double lo = -inf;
    auto consider = [&](double a, double b) {
        if (b - a <= 1e-9) return;
        const double c = std::isinf(a) || std::isinf(b) ? clearance : std::min(clearance, (b - a) / 2);
        const double cand = std::clamp(ideal, a + c, b - c);
        const double cost = std::abs(cand - ideal);
        if (cost < best_cost) {
            best_cost = cost;
            best = cand;
        }
    };
    for (const auto& m : merged) {
        consider(lo, m.first);
        lo = m.second;
    }
    consider(lo, inf);
    return best;
}

std::vector<Point> compact(std::vector<Point> pts) {
    std::vector<Point> out;
    for (const auto& p : pts)
        if (out.empty() || !(out.back() == p)) out.push_back(p);
    // drop collinear interior points
    std::vector<Point> res;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i > 0 && i + 1 < out.size()) {
            const Point& a = res.back();
            const Point& b = out[i];
            const Point& c = out[i + 1];
            if ((a.x == b.x && b.x == c.x) || (a.y == b.y && b.y == c.y)) continue;
        }
        res.push_back(out[i]);
    }
    return res;
}

}  // namespace

std::vector<ConnectionPath> route_connections(const IRModel& model, const PositionMap& positions,
                                              const LayoutConfig& config) {
    config.check();
    const GraphIndex g = build_index(model);
    const EdgeSet back = back_edge_set(g);
    const double w = config.layer_width, h = config.layer_height;

    Occupancy occ(config.column_pitch(), config.row_pitch());
    double min_x = 0;
    for (std::size_t u = 0; u < g.size(); ++u) {
        const Point& p = positions[g.ids[u]];
        occ.add(u, Rect{p.x, p.y, w, h});
        min_x = u == 0 ? p.x : std::min(min_x, p.x);
    }
    const double margin_x = min_x - config.hgap / 2;

    auto blocked = [&](Point a, Point b, std::size_t s, std::size_t t) {
        const Rect area{std::min(a.x, b.x), std::min(a.y, b.y), std::abs(b.x - a.x), std::abs(b.y - a.y)};
        for (std::size_t id : occ.near(area))
            if (id != s && id != t && crosses_interior(a, b, occ.rect(id))) return true;
        return false;
    };

    std::vector<ConnectionPath> out;
    out.reserve(model.connections().size());
    for (const auto& c : model.connections()) {
        auto fs = g.slot.find(c.from);
        auto ts = g.slot.find(c.to);
        if (fs == g.slot.end() || ts == g.slot.end()) continue;
        const std::size_t s = fs->second, t = ts->second;
        const Point& ps = positions[c.from];
        const Point& pt = positions[c.to];
        const Point start{ps.x + w / 2, ps.y + h};
        const Point end{pt.x + w / 2, pt.y};
        ConnectionPath path{c.from, c.to, {}, back.count({s, t}) != 0};
        const double y1 = start.y + config.vgap / 2;
        const double y2 = end.y - config.vgap / 2;

        if (path.back_edge) {
            path.points = compact({start, {start.x, y1}, {margin_x, y1}, {margin_x, y2}, {end.x, y2}, end});
        } else if (!blocked(start, end, s, t)) {
            path.points = {start, end};
        } else {
            const double top = std::min(y1, y2), bottom = std::max(y1, y2);
            std::vector<std::pair<double, double>> spans;
            for (std::size_t id : occ.in_rows(top, bottom)) {
                const Rect& r = occ.rect(id);
                if (r.y < bottom && r.y + r.h > top) spans.emplace_back(r.x, r.x + r.w);
            }
            const double gx = free_lane((start.x + end.x) / 2, std::move(spans), config.hgap / 2);
            path.points = compact({start, {start.x, y1}, {gx, y1}, {gx, y2}, {end.x, y2}, end});
        }
        out.push_back(std::move(path));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(double v) {
    if (v == 0) v = 0;  // no "-0"
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string layout_to_svg(const IRModel& model, const PositionMap& positions,
                          const std::vector<ConnectionPath>& paths, const LayoutConfig& config) {
    constexpr double margin = 20;
    const double w = config.layer_width, h = config.layer_height;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool first = true;
    auto extend = [&](double x, double y, double ww, double hh) {
        if (first) {
            x0 = x, y0 = y, x1 = x + ww, y1 = y + hh;
            first = false;
            return;
        }
        x0 = std::min(x0, x), y0 = std::min(y0, y);
        x1 = std::max(x1, x + ww), y1 = std::max(y1, y + hh);
    };
    for (const auto& id : positions.order) extend(positions[id].x, positions[id].y, w, h);
    for (const auto& p : paths)
        for (const auto& pt : p.points) extend(pt.x, pt.y, 0, 0);
    const double dx = margin - x0, dy = margin - y0;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(x1 - x0 + 2 * margin) +
           "\" height=\"" + num(y1 - y0 + 2 * margin) + "\">\n";
    svg +=
        "<defs><marker id=\"arrow\" markerWidth=\"10\" markerHeight=\"7\" refX=\"10\" refY=\"3.5\" "
        "orient=\"auto\"><polygon points=\"0 0, 10 3.5, 0 7\" fill=\"#555\"/></marker></defs>\n";
    svg += "<g class=\"connections\" fill=\"none\" stroke=\"#555\" stroke-width=\"1.5\">\n";
    for (const auto& p : paths) {
        svg += "<polyline data-from=\"" + xml_escape(p.from) + "\" data-to=\"" + xml_escape(p.to) + "\" points=\"";
        for (std::size_t i = 0; i < p.points.size(); ++i) {
            if (i) svg += ' ';
            svg += num(p.points[i].x + dx) + "," + num(p.points[i].y + dy);
        }
        svg += "\"";
        if (p.back_edge) svg += " stroke-dasharray=\"4 3\"";
        svg += " marker-end=\"url(#arrow)\"/>\n";
    }
    svg += "</g>\n<g class=\"layers\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (const auto& l : model.layers()) {
        auto it = positions.at.find(l.id);
        if (it == positions.at.end()) continue;
        const double x = it->second.x + dx, y = it->second.y + dy;
        const std::string label = l.display_name.empty() ? l.id : l.display_name;
        svg += "<g data-id=\"" + xml_escape(l.id) + "\" data-type=\"" + l.spec().name + "\">";
        svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
               "\" rx=\"4\" fill=\"" + l.spec().color + "\"/>";
        svg += "<text x=\"" + num(x + w / 2) + "\" y=\"" + num(y + h / 2) +
               "\" text-anchor=\"middle\" dominant-baseline=\"central\" fill=\"#fff\">" + xml_escape(label) +
               "</text></g>\n";
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

nlohmann::ordered_json layout_to_json(const PositionMap& positions, const std::vector<ConnectionPath>& paths) {
    nlohmann::ordered_json out;
    out["positions"] = nlohmann::ordered_json::object();
    for (const auto& id : positions.order) out["positions"][id] = {positions[id].x, positions[id].y};
    out["paths"] = nlohmann::ordered_json::array();
    for (const auto& p : paths) {
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (const auto& pt : p.points) pts.push_back({pt.x, pt.y});
        out["paths"].push_back({{"from", p.from}, {"to", p.to}, {"points", std::move(pts)}});
    }
    return out;
}

}  // namespace nnedit::layout
