#ifndef EVTWIN_SITE_HPP
#define EVTWIN_SITE_HPP

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evtwin {

enum class NodeKind { residential, gate, parking, junction };

inline std::string_view to_string(NodeKind k)
{
    switch (k) {
    case NodeKind::residential: return "residential";
    case NodeKind::gate: return "gate";
    case NodeKind::parking: return "parking";
    case NodeKind::junction: return "junction";
    }
    return "?";
}

struct SiteNode
{
    std::string id;
    NodeKind kind = NodeKind::junction;
    double lon = 0.0;
    double lat = 0.0;
    std::string area_id; ///< parking nodes only
};

struct SiteEdge
{
    std::size_t from = 0;
    std::size_t to = 0;
    double length_m = 0.0;
    double speed_m_s = 0.0;
    int lanes = 1;

    double minutes() const { return length_m / speed_m_s / 60.0; }
};

class SiteError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Directed road graph of the site.
class SiteGraph
{
public:
    std::size_t add_node(SiteNode n)
    {
        if (index_.contains(n.id)) throw SiteError("duplicate node id '" + n.id + "'");
        index_[n.id] = nodes_.size();
        nodes_.push_back(std::move(n));
        out_.emplace_back();
        return nodes_.size() - 1;
    }

    void add_edge(std::string_view from, std::string_view to, double length_m, double speed_m_s, int lanes = 1)
    {
        if (!(length_m > 0.0)) throw SiteError("edge " + std::string(from) + "->" + std::string(to) + ": length must be > 0");
        if (!(speed_m_s > 0.0)) throw SiteError("edge " + std::string(from) + "->" + std::string(to) + ": speed must be > 0");
        SiteEdge e{require(from), require(to), length_m, speed_m_s, lanes};
        out_[e.from].push_back(edges_.size());
        edges_.push_back(e);
    }

    void add_road(std::string_view a, std::string_view b, double length_m, double speed_m_s, int lanes = 1)
    {
        add_edge(a, b, length_m, speed_m_s, lanes);
        add_edge(b, a, length_m, speed_m_s, lanes);
    }

    std::optional<std::size_t> find(std::string_view id) const
    {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t require(std::string_view id) const
    {
        auto i = find(id);
        if (!i) throw SiteError("unknown node id '" + std::string(id) + "'");
        return *i;
    }

    std::optional<std::size_t> parking_node(std::string_view area_id) const
    {
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].kind == NodeKind::parking && nodes_[i].area_id == area_id) return i;
        return std::nullopt;
    }

    std::vector<std::size_t> nodes_of(NodeKind k) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].kind == k) out.push_back(i);
        return out;
    }

    /// Minutes from `source` to every node; kUnreachable where no path exists.
    /// Nodes in `blocked` are never entered (used for the gate check).
    std::vector<double> travel_times_from(std::size_t source, const std::vector<bool>* blocked = nullptr) const
    {
        std::vector<double> dist(nodes_.size(), kUnreachable);
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[source] = 0.0;
        pq.emplace(0.0, source);
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            for (std::size_t ei : out_[u]) {
                const auto& e = edges_[ei];
                if (blocked && (*blocked)[e.to]) continue;
                const double nd = d + e.minutes();
                if (nd < dist[e.to]) {
                    dist[e.to] = nd;
                    pq.emplace(nd, e.to);
                }
            }
        }
        return dist;
    }

    /// Path length in metres along the fastest route.
    double route_length_m(std::size_t from, std::size_t to) const
    {
        std::vector<double> dist(nodes_.size(), kUnreachable), len(nodes_.size(), 0.0);
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[from] = 0.0;
        pq.emplace(0.0, from);
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            for (std::size_t ei : out_[u]) {
                const auto& e = edges_[ei];
                const double nd = d + e.minutes();
                if (nd < dist[e.to]) {
                    dist[e.to] = nd;
                    len[e.to] = len[u] + e.length_m;
                    pq.emplace(nd, e.to);
                }
            }
        }
        return dist[to] == kUnreachable ? kUnreachable : len[to];
    }

    /// Structural problems: every residential node must reach every parking node, and only via a gate.
    std::vector<std::string> validate() const
    {
        std::vector<std::string> problems;
        const auto homes = nodes_of(NodeKind::residential);
        const auto parks = nodes_of(NodeKind::parking);
        if (homes.empty()) problems.push_back("site has no residential node");
        if (parks.empty()) problems.push_back("site has no parking node");
        std::vector<bool> gates(nodes_.size(), false);
        for (std::size_t g : nodes_of(NodeKind::gate)) gates[g] = true;
        for (std::size_t h : homes) {
            const auto open = travel_times_from(h);
            const auto gated = travel_times_from(h, &gates);
            for (std::size_t p : parks) {
                if (open[p] == kUnreachable)
                    problems.push_back("parking '" + nodes_[p].id + "' unreachable from '" + nodes_[h].id + "'");
                else if (gated[p] != kUnreachable)
                    problems.push_back("parking '" + nodes_[p].id + "' reachable from '" + nodes_[h].id +
                                       "' without passing a gate");
            }
        }
        return problems;
    }

    const std::vector<SiteNode>& nodes() const { return nodes_; }
    const std::vector<SiteEdge>& edges() const { return edges_; }
    const SiteNode& node(std::size_t i) const { return nodes_.at(i); }

    /// GeoJSON the graph was built from (served to the dashboard as-is).
    const nlohmann::json& geojson() const { return geojson_; }
    void set_geojson(nlohmann::json j) { geojson_ = std::move(j); }

private:
    std::vector<SiteNode> nodes_;
    std::vector<SiteEdge> edges_;
    std::vector<std::vector<std::size_t>> out_;
    std::map<std::string, std::size_t> index_;
    nlohmann::json geojson_;
};

/// Fastest travel time in minutes; kUnreachable when there is no directed path.
inline double shortest_travel_time(const SiteGraph& g, std::string_view from, std::string_view to)
{
    const auto a = g.require(from);
    const auto b = g.require(to);
    return g.travel_times_from(a)[b];
}

/// Great-circle distance in metres.
inline double haversine_m(double lon1, double lat1, double lon2, double lat2)
{
    constexpr double r = 6'371'000.0;
    const double rad = std::numbers::pi / 180.0;
    const double dlat = (lat2 - lat1) * rad, dlon = (lon2 - lon1) * rad;
    const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2 * r * std::asin(std::min(1.0, std::sqrt(a)));
}

/// Build a graph from a GeoJSON FeatureCollection.
///
/// Point features with `properties.kind` in {residential, gate, parking, junction} and a
/// `properties.id` become nodes; parking points also carry `properties.area_id`.
/// LineString features with kind `road` connect `properties.from` to `properties.to`
/// and may give `length_m` (defaults to the haversine length of the line),
/// `speed_m_s` (default 8.33), `lanes` (default 1) and `oneway` (default false).
/// Features of kind `building` are drawn by the dashboard and ignored here.
inline SiteGraph parse_site_geojson(const nlohmann::json& fc)
{
    if (!fc.is_object() || fc.value("type", "") != "FeatureCollection" || !fc.contains("features") ||
        !fc["features"].is_array())
        throw SiteError("site file must be a GeoJSON FeatureCollection");
    SiteGraph g;
    const auto& features = fc["features"];
    auto kind_of = [](const nlohmann::json& f) -> std::string {
        if (!f.contains("properties") || !f["properties"].is_object()) return "";
        return f["properties"].value("kind", "");
    };
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        const std::string kind = kind_of(f);
        if (kind != "residential" && kind != "gate" && kind != "parking" && kind != "junction") continue;
        const auto& props = f["properties"];
        const auto& geom = f.value("geometry", nlohmann::json::object());
        if (geom.value("type", "") != "Point" || !geom.contains("coordinates") || geom["coordinates"].size() < 2)
            throw SiteError("feature " + std::to_string(i) + ": " + kind + " must be a Point");
        SiteNode n;
        n.id = props.value("id", "");
        if (n.id.empty()) throw SiteError("feature " + std::to_string(i) + ": missing properties.id");
        n.kind = kind == "residential" ? NodeKind::residential
               : kind == "gate"        ? NodeKind::gate
               : kind == "parking"     ? NodeKind::parking
                                       : NodeKind::junction;
        n.lon = geom["coordinates"][0].get<double>();
        n.lat = geom["coordinates"][1].get<double>();
        if (n.kind == NodeKind::parking) {
            n.area_id = props.value("area_id", "");
            if (n.area_id.empty()) throw SiteError("feature " + std::to_string(i) + ": parking without area_id");
        }
        g.add_node(std::move(n));
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        if (kind_of(f) != "road") continue;
        const auto& props = f["properties"];
        const std::string from = props.value("from", ""), to = props.value("to", "");
        if (from.empty() || to.empty()) throw SiteError("feature " + std::to_string(i) + ": road needs from/to");
        double length = props.value("length_m", 0.0);
        if (length == 0.0) {
            const auto& coords = f.at("geometry").at("coordinates");
            for (std::size_t k = 1; k < coords.size(); ++k)
                length += haversine_m(coords[k - 1][0].get<double>(), coords[k - 1][1].get<double>(),
                                      coords[k][0].get<double>(), coords[k][1].get<double>());
        }
        const double speed = props.value("speed_m_s", 8.33);
        const int lanes = props.value("lanes", 1);
        if (props.value("oneway", false)) g.add_edge(from, to, length, speed, lanes);
        else g.add_road(from, to, length, speed, lanes);
    }
    if (auto problems = g.validate(); !problems.empty()) {
        std::string msg = "invalid site:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw SiteError(msg);
    }
    g.set_geojson(fc);
    return g;
}

/// Synthetic stand-in for the campus: four residential clusters, three gates,
/// two parking areas. Coordinates only matter for drawing.
inline const char* default_site_geojson()
{
    return R"json({
  "type": "FeatureCollection",
  "name": "campus",
  "features": [
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9395, 21.0010]}, "properties": {"kind": "residential", "id": "R1"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9505, 21.0035]}, "properties": {"kind": "residential", "id": "R2"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9330, 20.9915]}, "properties": {"kind": "residential", "id": "R3"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9520, 20.9890]}, "properties": {"kind": "residential", "id": "R4"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9410, 20.9975]}, "properties": {"kind": "gate", "id": "G1"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9468, 20.9982]}, "properties": {"kind": "gate", "id": "G2"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9402, 20.9930]}, "properties": {"kind": "gate", "id": "G3"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9438, 20.9955]}, "properties": {"kind": "junction", "id": "X1"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9425, 20.9948]}, "properties": {"kind": "parking", "id": "PC", "area_id": "C-Parking"}},
    {"type": "Feature", "geometry": {"type": "Point", "coordinates": [105.9455, 20.9940]}, "properties": {"kind": "parking", "id": "PJ", "area_id": "J-Parking"}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9395, 21.0010], [105.9410, 20.9975]]}, "properties": {"kind": "road", "from": "R1", "to": "G1", "length_m": 420, "speed_m_s": 8.33, "lanes": 2}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9505, 21.0035], [105.9468, 20.9982]]}, "properties": {"kind": "road", "from": "R2", "to": "G2", "length_m": 700, "speed_m_s": 8.33, "lanes": 2}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9330, 20.9915], [105.9402, 20.9930]]}, "properties": {"kind": "road", "from": "R3", "to": "G3", "length_m": 780, "speed_m_s": 8.33, "lanes": 2}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9520, 20.9890], [105.9468, 20.9982]]}, "properties": {"kind": "road", "from": "R4", "to": "G2", "length_m": 1150, "speed_m_s": 11.1, "lanes": 2}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9410, 20.9975], [105.9438, 20.9955]]}, "properties": {"kind": "road", "from": "G1", "to": "X1", "length_m": 360, "speed_m_s": 5.0}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9468, 20.9982], [105.9438, 20.9955]]}, "properties": {"kind": "road", "from": "G2", "to": "X1", "length_m": 420, "speed_m_s": 5.0}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9402, 20.9930], [105.9425, 20.9948]]}, "properties": {"kind": "road", "from": "G3", "to": "PC", "length_m": 300, "speed_m_s": 5.0}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9438, 20.9955], [105.9425, 20.9948]]}, "properties": {"kind": "road", "from": "X1", "to": "PC", "length_m": 160, "speed_m_s": 5.0}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9438, 20.9955], [105.9455, 20.9940]]}, "properties": {"kind": "road", "from": "X1", "to": "PJ", "length_m": 240, "speed_m_s": 5.0}},
    {"type": "Feature", "geometry": {"type": "LineString", "coordinates": [[105.9425, 20.9948], [105.9455, 20.9940]]}, "properties": {"kind": "road", "from": "PC", "to": "PJ", "length_m": 330, "speed_m_s": 4.0}},
    {"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [[[105.9418, 20.9952], [105.9432, 20.9952], [105.9432, 20.9944], [105.9418, 20.9944], [105.9418, 20.9952]]]}, "properties": {"kind": "building", "name": "Building C"}},
    {"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [[[105.9449, 20.9945], [105.9462, 20.9945], [105.9462, 20.9935], [105.9449, 20.9935], [105.9449, 20.9945]]]}, "properties": {"kind": "building", "name": "Building J"}}
  ]
})json";
}

inline SiteGraph default_site() { return parse_site_geojson(nlohmann::json::parse(default_site_geojson())); }

inline SiteGraph load_site(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw SiteError("cannot open site file '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SiteError("site file '" + path.string() + "': " + e.what());
    }
    return parse_site_geojson(j);
}

/// Empty reference selects the built-in site.
inline SiteGraph resolve_site(const std::string& ref) { return ref.empty() ? default_site() : load_site(ref); }

} // namespace evtwin

#endif // EVTWIN_SITE_HPP
