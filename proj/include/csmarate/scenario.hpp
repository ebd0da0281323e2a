#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csmarate/topology.hpp"

namespace csmarate {

struct WiredLink {
    std::string name;
    double capacity = 0.0; // normalized units, strictly positive

    bool operator==(const WiredLink&) const = default;
};

// One end-to-end flow.  Routes hold indices: wireless_route into the
// scenario's link list, wired_route into its wired-link list.  A flow may be
// wireless-only, wired-only, or mixed, but never empty.
struct Flow {
    std::string id;
    std::vector<int> wireless_route;
    std::vector<int> wired_route;

    bool operator==(const Flow&) const = default;
};

struct ParameterBlock {
    double beta = 800.0;
    double alpha = 0.05;
    double k = 10.0;
    std::optional<double> r_max; // unset = unbounded aggressiveness
    double dt = 1e-3;
    double horizon = 100.0;
    double prop_delay = 0.01;
    double mac_alpha = 2e-4;        // TA gain of the queue-level MAC algorithm
    double update_interval = 1.0;   // TA refresh period of the same

    bool operator==(const ParameterBlock&) const = default;
};

class Scenario {
public:
    Scenario(std::string name, bool reconstructed, ConflictGraph graph,
             std::vector<std::string> link_names, std::vector<WiredLink> wired,
             std::vector<Flow> flows, ParameterBlock params,
             std::map<std::string, double> arrival_rates = {});

    const std::string& name() const { return name_; }
    bool reconstructed() const { return reconstructed_; }
    const ConflictGraph& graph() const { return graph_; }
    const std::vector<std::string>& link_names() const { return link_names_; }
    const std::vector<WiredLink>& wired() const { return wired_; }
    const std::vector<Flow>& flows() const { return flows_; }
    const ParameterBlock& params() const { return params_; }
    ParameterBlock& params() { return params_; }
    // Optional per-link exogenous arrival rates (by link name), used by the
    // queue-level MAC simulation.
    const std::map<std::string, double>& arrival_rates() const { return arrival_rates_; }

    int link_index(const std::string& name) const; // -1 when absent
    int wired_index(const std::string& name) const;
    bool has_wired_flows() const;

    bool operator==(const Scenario& other) const;

private:
    std::string name_;
    bool reconstructed_ = false;
    ConflictGraph graph_;
    std::vector<std::string> link_names_;
    std::vector<WiredLink> wired_;
    std::vector<Flow> flows_;
    ParameterBlock params_;
    std::map<std::string, double> arrival_rates_;
};

enum class BuiltinTopology { a, b, c, d, e };

// The benchmark scenarios.  Topology a is exact (its independent-set family
// is fully specified); b-e are reconstructions from prose descriptions and
// carry reconstructed=true in their metadata.
Scenario builtin_topology(BuiltinTopology which);
Scenario builtin_topology(const std::string& name); // "a".."e"

// Line-oriented scenario text format; see README for the grammar.  Parse
// errors carry the 1-based line number.
class ScenarioParseError : public std::runtime_error {
public:
    ScenarioParseError(int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& s);

} // namespace csmarate
