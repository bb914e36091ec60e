#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "swingid/model.hpp"

using namespace swingid;

namespace {

const char* kMinimalTwoBus = R"({
  "buses": [
    {"id": 1, "m": 1.0, "d": 0.5, "V": 1.0, "kind": "generator", "u_min": -1, "u_max": 1, "theta0": 0.1},
    {"id": 2, "m": 2.0, "d": 0.5, "V": 1.0, "kind": "controllable-load", "u_min": -1, "u_max": 0, "theta0": 0.0}
  ],
  "lines": [{"i": 1, "j": 2, "b": 1.5}],
  "partition": [{"name": "A", "members": [1]}, {"name": "B", "members": [2]}]
})";

}  // namespace

TEST_CASE("bundled model dimensions match the experiment setup") {
    const NetworkModel model = testutil::load_ieee30();
    CHECK(model.bus_count() == 30);
    CHECK(model.input_dim() == 30);
    CHECK(model.subsystem_count() == 6);
    CHECK(model.coupling_dim() == 18);

    // The stated example: subsystem V couples through buses 2, 4, 5 and
    // talks to III and VI only.
    int v = -1;
    for (int s = 0; s < model.subsystem_count(); ++s)
        if (model.subsystem(s).name == "V") v = s;
    REQUIRE(v >= 0);
    CHECK(model.subsystem(v).coupling_buses == std::vector<int>{2, 4, 5});
    std::vector<std::string> neighbor_names;
    for (int j : model.subsystem(v).neighbors) neighbor_names.push_back(model.subsystem(j).name);
    CHECK(neighbor_names == std::vector<std::string>{"III", "VI"});
}

TEST_CASE("bundled model max degree counted from the partition") {
    const NetworkModel model = testutil::load_ieee30();
    CHECK(max_degree(model) == 4);  // subsystem VI borders V, I, II and IV
}

TEST_CASE("minimal two-bus file loads with the expected coupling structure") {
    const NetworkModel model = network_from_json_text(kMinimalTwoBus);
    CHECK(model.bus_count() == 2);
    CHECK(model.coupling_dim() == 2);
    for (int s = 0; s < 2; ++s) {
        CHECK(model.subsystem(s).coupling_buses.size() == 1);
        CHECK(model.subsystem(s).neighbors.size() == 1);
    }
    CHECK(max_degree(model) == 1);
    // stiffness = V_i V_j b
    CHECK(model.adjacent(1).at(0).stiffness == doctest::Approx(1.5));
}

TEST_CASE("zero inertia is rejected naming the bus") {
    std::string text = kMinimalTwoBus;
    const auto pos = text.find("\"m\": 1.0");
    text.replace(pos, 8, "\"m\": 0.0");
    try {
        network_from_json_text(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bus 1") != std::string::npos);
        CHECK(msg.find(".m") != std::string::npos);
    }
}

TEST_CASE("constant-load buses require a degenerate input box") {
    std::string text = kMinimalTwoBus;
    const auto pos = text.find("controllable-load");
    text.replace(pos, std::string("controllable-load").size(), "constant-load");
    CHECK_THROWS_AS(network_from_json_text(text), ConfigError);
}

TEST_CASE("duplicate lines and self-loops are rejected") {
    std::string dup = kMinimalTwoBus;
    dup.replace(dup.find("[{\"i\": 1, \"j\": 2, \"b\": 1.5}]"), std::string("[{\"i\": 1, \"j\": 2, \"b\": 1.5}]").size(),
                "[{\"i\": 1, \"j\": 2, \"b\": 1.5}, {\"i\": 2, \"j\": 1, \"b\": 2.0}]");
    CHECK_THROWS_AS(network_from_json_text(dup), ConfigError);

    std::string self_loop = kMinimalTwoBus;
    self_loop.replace(self_loop.find("\"i\": 1, \"j\": 2"), std::string("\"i\": 1, \"j\": 2").size(),
                      "\"i\": 1, \"j\": 1");
    CHECK_THROWS_AS(network_from_json_text(self_loop), ConfigError);
}

TEST_CASE("partition must cover all buses exactly once") {
    std::string missing = kMinimalTwoBus;
    missing.replace(missing.find("{\"name\": \"B\", \"members\": [2]}"),
                    std::string("{\"name\": \"B\", \"members\": [2]}").size(),
                    "{\"name\": \"B\", \"members\": []}");
    CHECK_THROWS_AS(network_from_json_text(missing), ConfigError);

    std::string dup = kMinimalTwoBus;
    dup.replace(dup.find("{\"name\": \"B\", \"members\": [2]}"),
                std::string("{\"name\": \"B\", \"members\": [2]}").size(),
                "{\"name\": \"B\", \"members\": [1, 2]}");
    CHECK_THROWS_AS(network_from_json_text(dup), ConfigError);
}

TEST_CASE("malformed json reports a parse error") {
    CHECK_THROWS_AS(network_from_json_text("{\"buses\": ["), ConfigError);
    CHECK_THROWS_AS(load_network_config("/nonexistent/model.json"), ConfigError);
}

TEST_CASE("serialization round-trips the bundled model") {
    const NetworkModel model = testutil::load_ieee30();
    const NetworkModel again = network_from_json_text(network_to_json_text(model));
    CHECK(model == again);
}

TEST_CASE("partition coverage invariants hold on the bundled model") {
    const NetworkModel model = testutil::load_ieee30();
    std::set<int> seen;
    int total = 0;
    int dz = 0;
    for (const Subsystem& s : model.subsystems()) {
        total += static_cast<int>(s.members.size());
        for (int m : s.members) CHECK(seen.insert(m).second);
        dz += static_cast<int>(s.coupling_buses.size());
    }
    CHECK(total == model.bus_count());
    CHECK(dz == model.coupling_dim());

    // Couplings are symmetric: J in N_I iff I in N_J.
    for (int i = 0; i < model.subsystem_count(); ++i) {
        for (int j : model.subsystem(i).neighbors) {
            const auto& back = model.subsystem(j).neighbors;
            CHECK(std::find(back.begin(), back.end(), i) != back.end());
        }
    }

    // Every coupling bus touches an inter-subsystem line; counted per owner
    // this reproduces d_z.
    int counted = 0;
    for (const Subsystem& s : model.subsystems()) {
        for (int cb : s.coupling_buses) {
            bool crosses = false;
            for (const auto& ab : model.adjacent(cb)) crosses |= model.subsystem_of(ab.bus_id) != model.subsystem_of(cb);
            CHECK(crosses);
            ++counted;
        }
    }
    CHECK(counted == 18);
}

TEST_CASE("max degree of a chain and a star") {
    // chain of two single-bus subsystems
    const NetworkModel chain = testutil::two_bus_model();
    CHECK(max_degree(chain) == 1);

    // hub plus four leaves, five subsystems
    std::vector<Bus> buses;
    for (int id = 1; id <= 5; ++id) {
        Bus b;
        b.id = id;
        b.inertia = 1.0;
        b.damping = 1.0;
        b.voltage = 1.0;
        b.kind = BusKind::Generator;
        b.u_min = -1.0;
        b.u_max = 1.0;
        b.theta0 = 0.0;
        buses.push_back(b);
    }
    std::vector<Line> lines;
    for (int leaf = 2; leaf <= 5; ++leaf) lines.push_back({1, leaf, 1.0});
    const NetworkModel star(std::move(buses), std::move(lines),
                            {{"hub", {1}}, {"a", {2}}, {"b", {3}}, {"c", {4}}, {"d", {5}}});
    CHECK(max_degree(star) == 4);
}
