#include "swingid/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace swingid {

using nlohmann::json;

std::string to_string(BusKind kind) {
    switch (kind) {
        case BusKind::Generator: return "generator";
        case BusKind::ControllableLoad: return "controllable-load";
        case BusKind::ConstantLoad: return "constant-load";
    }
    return "unknown";
}

BusKind bus_kind_from_string(const std::string& s) {
    if (s == "generator") return BusKind::Generator;
    if (s == "controllable-load") return BusKind::ControllableLoad;
    if (s == "constant-load") return BusKind::ConstantLoad;
    throw ConfigError("unknown bus kind '" + s + "'");
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void check_finite(double v, const std::string& path) {
    if (!std::isfinite(v)) fail(path, "value is not finite");
}

}  // namespace

NetworkModel::NetworkModel(std::vector<Bus> buses, std::vector<Line> lines,
                           std::vector<std::pair<std::string, std::vector<int>>> partition)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
    const int n = bus_count();

    std::sort(buses_.begin(), buses_.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    for (int i = 0; i < n; ++i) {
        const Bus& b = buses_[static_cast<size_t>(i)];
        const std::string path = "buses[" + std::to_string(i) + "]";
        if (b.id != i + 1) fail(path + ".id", "bus ids must be 1.." + std::to_string(n) + " without gaps");
        if (!(b.inertia > 0.0)) fail(path + ".m", "inertia must be > 0 (bus " + std::to_string(b.id) + ")");
        if (!(b.damping > 0.0)) fail(path + ".d", "damping must be > 0 (bus " + std::to_string(b.id) + ")");
        if (!(b.voltage > 0.0)) fail(path + ".V", "voltage must be > 0 (bus " + std::to_string(b.id) + ")");
        if (!(b.u_min <= b.u_max)) fail(path + ".u_min", "u_min must not exceed u_max (bus " + std::to_string(b.id) + ")");
        if (b.kind == BusKind::ConstantLoad && b.u_min != b.u_max)
            fail(path + ".u_min", "constant-load bus " + std::to_string(b.id) + " requires u_min == u_max");
        check_finite(b.theta0, path + ".theta0");
    }

    adjacency_.assign(static_cast<size_t>(n), {});
    std::set<std::pair<int, int>> seen;
    for (size_t li = 0; li < lines_.size(); ++li) {
        Line& l = lines_[li];
        const std::string path = "lines[" + std::to_string(li) + "]";
        if (l.from < 1 || l.from > n) fail(path + ".i", "bus id out of range");
        if (l.to < 1 || l.to > n) fail(path + ".j", "bus id out of range");
        if (l.from == l.to) fail(path, "line endpoints must differ");
        if (!(l.susceptance > 0.0)) fail(path + ".b", "susceptance must be > 0");
        auto key = std::minmax(l.from, l.to);
        if (!seen.insert(key).second)
            fail(path, "duplicate line between buses " + std::to_string(key.first) + " and " + std::to_string(key.second));
        const double k = bus(l.from).voltage * bus(l.to).voltage * l.susceptance;
        adjacency_[static_cast<size_t>(l.from - 1)].push_back({l.to, k});
        adjacency_[static_cast<size_t>(l.to - 1)].push_back({l.from, k});
    }
    for (auto& adj : adjacency_)
        std::sort(adj.begin(), adj.end(), [](const AdjacentBus& a, const AdjacentBus& b) { return a.bus_id < b.bus_id; });

    if (partition.empty()) fail("partition", "at least one subsystem required");
    sub_of_bus_.assign(static_cast<size_t>(n), -1);
    for (size_t si = 0; si < partition.size(); ++si) {
        Subsystem sub;
        sub.name = partition[si].first;
        sub.members = partition[si].second;
        std::sort(sub.members.begin(), sub.members.end());
        const std::string path = "partition[" + std::to_string(si) + "]";
        if (sub.members.empty()) fail(path + ".members", "subsystem '" + sub.name + "' has no members");
        for (int m : sub.members) {
            if (m < 1 || m > n) fail(path + ".members", "bus id " + std::to_string(m) + " out of range");
            if (sub_of_bus_[static_cast<size_t>(m - 1)] != -1)
                fail(path + ".members", "bus " + std::to_string(m) + " assigned to more than one subsystem");
            sub_of_bus_[static_cast<size_t>(m - 1)] = static_cast<int>(si);
        }
        subsystems_.push_back(std::move(sub));
    }
    for (int i = 0; i < n; ++i) {
        if (sub_of_bus_[static_cast<size_t>(i)] == -1)
            fail("partition", "bus " + std::to_string(i + 1) + " not assigned to any subsystem");
    }

    // Derived coupling structure: a bus couples when it touches a line
    // whose other end lives in a different subsystem.
    coupling_index_of_bus_.assign(static_cast<size_t>(n), -1);
    for (size_t si = 0; si < subsystems_.size(); ++si) {
        Subsystem& sub = subsystems_[si];
        std::set<int> neigh;
        for (int m : sub.members) {
            bool couples = false;
            for (const AdjacentBus& ab : adjacent(m)) {
                const int other_sub = subsystem_of(ab.bus_id);
                if (other_sub != static_cast<int>(si)) {
                    couples = true;
                    neigh.insert(other_sub);
                }
            }
            if (couples) sub.coupling_buses.push_back(m);
        }
        sub.neighbors.assign(neigh.begin(), neigh.end());
    }

    coupling_offsets_.assign(subsystems_.size() + 1, 0);
    for (size_t si = 0; si < subsystems_.size(); ++si) {
        const Subsystem& sub = subsystems_[si];
        coupling_offsets_[si + 1] = coupling_offsets_[si] + static_cast<int>(sub.coupling_buses.size());
        for (size_t ci = 0; ci < sub.coupling_buses.size(); ++ci)
            coupling_index_of_bus_[static_cast<size_t>(sub.coupling_buses[ci] - 1)] = static_cast<int>(ci);
    }
    coupling_dim_ = coupling_offsets_.back();

    for (size_t si = 0; si < subsystems_.size(); ++si) {
        const Subsystem& sub = subsystems_[si];
        SubsystemLayout lay;
        lay.member_bus = sub.members;

        // Offset of each neighbor's coupling block within the stacked
        // neighbor vector (ascending neighbor index).
        std::vector<int> neighbor_base(subsystems_.size(), -1);
        int base = 0;
        for (int nj : sub.neighbors) {
            neighbor_base[static_cast<size_t>(nj)] = base;
            base += static_cast<int>(subsystems_[static_cast<size_t>(nj)].coupling_buses.size());
        }
        lay.external_bus.assign(static_cast<size_t>(base), 0);
        for (int nj : sub.neighbors) {
            const Subsystem& other = subsystems_[static_cast<size_t>(nj)];
            for (size_t ci = 0; ci < other.coupling_buses.size(); ++ci)
                lay.external_bus[static_cast<size_t>(neighbor_base[static_cast<size_t>(nj)]) + ci] =
                    other.coupling_buses[ci];
        }

        std::vector<int> local_of(static_cast<size_t>(n), -1);
        for (size_t mi = 0; mi < sub.members.size(); ++mi)
            local_of[static_cast<size_t>(sub.members[mi] - 1)] = static_cast<int>(mi);

        lay.per_member.resize(sub.members.size());
        for (size_t mi = 0; mi < sub.members.size(); ++mi) {
            for (const AdjacentBus& ab : adjacent(sub.members[mi])) {
                SubsystemLayout::Coupling c{ab.stiffness, -1, -1};
                const int other_sub = subsystem_of(ab.bus_id);
                if (other_sub == static_cast<int>(si)) {
                    c.local = local_of[static_cast<size_t>(ab.bus_id - 1)];
                } else {
                    c.external = neighbor_base[static_cast<size_t>(other_sub)] + coupling_index_of(ab.bus_id);
                }
                lay.per_member[mi].push_back(c);
            }
        }
        for (int cb : sub.coupling_buses) lay.coupling_local.push_back(local_of[static_cast<size_t>(cb - 1)]);
        layouts_.push_back(std::move(lay));
    }
}

int NetworkModel::neighbor_coupling_dim(int sub) const {
    int dim = 0;
    for (int j : subsystem(sub).neighbors) dim += coupling_dim(j);
    return dim;
}

namespace {

double require_number(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) fail(path, std::string("missing field '") + key + "'");
    if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

int require_int(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) fail(path, std::string("missing field '") + key + "'");
    if (!obj[key].is_number_integer()) fail(path + "." + key, "expected an integer");
    return obj[key].get<int>();
}

}  // namespace

NetworkModel network_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("top level must be an object");
    for (const char* key : {"buses", "lines", "partition"}) {
        if (!doc.contains(key) || !doc[key].is_array())
            throw ConfigError(std::string("missing array '") + key + "'");
    }

    std::vector<Bus> buses;
    for (size_t i = 0; i < doc["buses"].size(); ++i) {
        const json& jb = doc["buses"][i];
        const std::string path = "buses[" + std::to_string(i) + "]";
        Bus b;
        b.id = require_int(jb, "id", path);
        b.inertia = require_number(jb, "m", path);
        b.damping = require_number(jb, "d", path);
        b.voltage = require_number(jb, "V", path);
        if (!jb.contains("kind") || !jb["kind"].is_string()) fail(path, "missing string field 'kind'");
        try {
            b.kind = bus_kind_from_string(jb["kind"].get<std::string>());
        } catch (const ConfigError& e) {
            fail(path + ".kind", e.what());
        }
        b.u_min = require_number(jb, "u_min", path);
        b.u_max = require_number(jb, "u_max", path);
        b.theta0 = require_number(jb, "theta0", path);
        buses.push_back(b);
    }

    std::vector<Line> lines;
    for (size_t i = 0; i < doc["lines"].size(); ++i) {
        const json& jl = doc["lines"][i];
        const std::string path = "lines[" + std::to_string(i) + "]";
        Line l;
        l.from = require_int(jl, "i", path);
        l.to = require_int(jl, "j", path);
        l.susceptance = require_number(jl, "b", path);
        lines.push_back(l);
    }

    std::vector<std::pair<std::string, std::vector<int>>> partition;
    for (size_t i = 0; i < doc["partition"].size(); ++i) {
        const json& jp = doc["partition"][i];
        const std::string path = "partition[" + std::to_string(i) + "]";
        if (!jp.contains("name") || !jp["name"].is_string()) fail(path, "missing string field 'name'");
        if (!jp.contains("members") || !jp["members"].is_array()) fail(path, "missing array field 'members'");
        std::vector<int> members;
        for (const json& jm : jp["members"]) {
            if (!jm.is_number_integer()) fail(path + ".members", "expected integers");
            members.push_back(jm.get<int>());
        }
        partition.emplace_back(jp["name"].get<std::string>(), std::move(members));
    }

    return NetworkModel(std::move(buses), std::move(lines), std::move(partition));
}

NetworkModel load_network_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return network_from_json_text(buffer.str());
}

std::string network_to_json_text(const NetworkModel& model) {
    json doc;
    doc["buses"] = json::array();
    for (const Bus& b : model.buses()) {
        doc["buses"].push_back({{"id", b.id},
                                {"m", b.inertia},
                                {"d", b.damping},
                                {"V", b.voltage},
                                {"kind", to_string(b.kind)},
                                {"u_min", b.u_min},
                                {"u_max", b.u_max},
                                {"theta0", b.theta0}});
    }
    doc["lines"] = json::array();
    for (const Line& l : model.lines()) {
        doc["lines"].push_back({{"i", l.from}, {"j", l.to}, {"b", l.susceptance}});
    }
    doc["partition"] = json::array();
    for (const Subsystem& s : model.subsystems()) {
        doc["partition"].push_back({{"name", s.name}, {"members", s.members}});
    }
    return doc.dump(2);
}

int max_degree(const NetworkModel& model) {
    int m = 0;
    for (const Subsystem& s : model.subsystems()) m = std::max(m, static_cast<int>(s.neighbors.size()));
    return m;
}

}  // namespace swingid
