#pragma once

#include <cstdlib>
#include <fstream>
#include <random>
#include <string>

#include "swingid/model.hpp"

namespace testutil {

/// Locates a bundled data file: honors SWINGID_DATA, falls back to the
/// source-relative data directory.
inline std::string data_path(const std::string& name) {
    if (const char* env = std::getenv("SWINGID_DATA")) return std::string(env) + "/" + name;
#ifdef SWINGID_DATA_DIR
    return std::string(SWINGID_DATA_DIR) + "/" + name;
#else
    return "data/" + name;
#endif
}

inline swingid::NetworkModel load_ieee30() { return swingid::load_network_config(data_path("ieee30.json")); }

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Two-bus, one-line, two-subsystem network; the smallest coupled case.
inline swingid::NetworkModel two_bus_model(double stiffness = 1.0, double m = 1.0, double d = 1.0,
                                           double theta1 = 0.0, double theta2 = 0.0) {
    std::vector<swingid::Bus> buses;
    for (int id = 1; id <= 2; ++id) {
        swingid::Bus b;
        b.id = id;
        b.inertia = m;
        b.damping = d;
        b.voltage = 1.0;
        b.kind = swingid::BusKind::Generator;
        b.u_min = -5.0;
        b.u_max = 5.0;
        b.theta0 = id == 1 ? theta1 : theta2;
        buses.push_back(b);
    }
    std::vector<swingid::Line> lines{{1, 2, stiffness}};
    return swingid::NetworkModel(std::move(buses), std::move(lines), {{"A", {1}}, {"B", {2}}});
}

/// Isolated single-machine network (no lines, one subsystem).
inline swingid::NetworkModel single_bus_model(double m, double d, double theta0 = 0.0) {
    swingid::Bus b;
    b.id = 1;
    b.inertia = m;
    b.damping = d;
    b.voltage = 1.0;
    b.kind = swingid::BusKind::Generator;
    b.u_min = -10.0;
    b.u_max = 10.0;
    b.theta0 = theta0;
    return swingid::NetworkModel({b}, {}, {{"A", {1}}});
}

inline std::string write_temp_file(const std::string& name, const std::string& content) {
    const std::string path = std::string("/tmp/") + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace testutil
