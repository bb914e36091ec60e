#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace swingid {

/// Configuration failure: malformed file or violated model invariant.
/// The message names the offending field path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BusKind { Generator, ControllableLoad, ConstantLoad };

std::string to_string(BusKind kind);
BusKind bus_kind_from_string(const std::string& s);

struct Bus {
    int id = 0;            // 1-based
    double inertia = 0.0;  // p.u. s^2
    double damping = 0.0;  // p.u. s
    double voltage = 0.0;  // p.u.
    BusKind kind = BusKind::ControllableLoad;
    double u_min = 0.0;  // p.u.
    double u_max = 0.0;  // p.u.
    double theta0 = 0.0;  // rad

    bool operator==(const Bus&) const = default;
};

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;  // p.u.

    bool operator==(const Line&) const = default;
};

/// One subsystem of the partition. Everything except name/members is
/// derived at load time and never stored in the config file.
struct Subsystem {
    std::string name;
    std::vector<int> members;        // bus ids, ascending
    std::vector<int> coupling_buses; // member buses incident to an inter-subsystem line, ascending
    std::vector<int> neighbors;      // subsystem indices, ascending

    bool operator==(const Subsystem&) const = default;
};

/// Immutable networked plant: buses, lines, partition and the derived
/// coupling structure. Safe to share read-only across threads.
class NetworkModel {
  public:
    NetworkModel(std::vector<Bus> buses, std::vector<Line> lines,
                 std::vector<std::pair<std::string, std::vector<int>>> partition);

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int input_dim() const { return bus_count(); }
    int subsystem_count() const { return static_cast<int>(subsystems_.size()); }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }
    const std::vector<Subsystem>& subsystems() const { return subsystems_; }
    const Subsystem& subsystem(int i) const { return subsystems_.at(static_cast<size_t>(i)); }

    const Bus& bus(int id) const { return buses_.at(static_cast<size_t>(id - 1)); }

    /// Total number of coupling variables across subsystems.
    int coupling_dim() const { return coupling_dim_; }
    int coupling_dim(int sub) const { return static_cast<int>(subsystem(sub).coupling_buses.size()); }

    /// Stacked size of the neighbor coupling vector of `sub` (ascending
    /// neighbor index, each neighbor contributing its coupling buses).
    int neighbor_coupling_dim(int sub) const;

    /// Subsystem owning a bus.
    int subsystem_of(int bus_id) const { return sub_of_bus_.at(static_cast<size_t>(bus_id - 1)); }

    /// Line stiffness |V_i||V_j| b_ij.
    struct AdjacentBus {
        int bus_id;
        double stiffness;
    };
    const std::vector<AdjacentBus>& adjacent(int bus_id) const {
        return adjacency_.at(static_cast<size_t>(bus_id - 1));
    }

    /// Offset of subsystem `sub`'s coupling block in the global coupling vector.
    int coupling_offset(int sub) const { return coupling_offsets_.at(static_cast<size_t>(sub)); }

    /// Position of `bus_id` within its subsystem's coupling block, or -1.
    int coupling_index_of(int bus_id) const { return coupling_index_of_bus_.at(static_cast<size_t>(bus_id - 1)); }

    /// Precomputed index plumbing for one subsystem: for each member bus,
    /// where its line neighbors live (inside the subsystem, or at which
    /// offset of the stacked neighbor coupling vector).
    struct SubsystemLayout {
        struct Coupling {
            double stiffness;
            int local;     // member index when internal, else -1
            int external;  // offset into the stacked neighbor coupling vector, else -1
        };
        std::vector<std::vector<Coupling>> per_member;
        std::vector<int> member_bus;      // local index -> bus id
        std::vector<int> coupling_local;  // coupling slot -> local member index
        std::vector<int> external_bus;    // neighbor-vector offset -> bus id
    };
    const SubsystemLayout& layout(int sub) const { return layouts_.at(static_cast<size_t>(sub)); }

    bool operator==(const NetworkModel& other) const {
        return buses_ == other.buses_ && lines_ == other.lines_ && subsystems_ == other.subsystems_;
    }

  private:
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<Subsystem> subsystems_;
    std::vector<int> sub_of_bus_;
    std::vector<std::vector<AdjacentBus>> adjacency_;
    std::vector<int> coupling_offsets_;
    std::vector<int> coupling_index_of_bus_;
    std::vector<SubsystemLayout> layouts_;
    int coupling_dim_ = 0;
};

/// Parses and validates the JSON model file (keys: buses, lines, partition).
NetworkModel load_network_config(const std::string& path);
NetworkModel network_from_json_text(const std::string& text);

std::string network_to_json_text(const NetworkModel& model);

/// Largest neighborhood size over subsystems.
int max_degree(const NetworkModel& model);

}  // namespace swingid
