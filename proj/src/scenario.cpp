#include "csmarate/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace csmarate {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Scenario::Scenario(std::string name, bool reconstructed, ConflictGraph graph,
                   std::vector<std::string> link_names, std::vector<WiredLink> wired,
                   std::vector<Flow> flows, ParameterBlock params,
                   std::map<std::string, double> arrival_rates)
    : name_(std::move(name)),
      reconstructed_(reconstructed),
      graph_(std::move(graph)),
      link_names_(std::move(link_names)),
      wired_(std::move(wired)),
      flows_(std::move(flows)),
      params_(std::move(params)),
      arrival_rates_(std::move(arrival_rates)) {
    if (static_cast<int>(link_names_.size()) != graph_.link_count())
        throw std::invalid_argument("Scenario: link name count does not match graph");
    for (const auto& w : wired_)
        if (!(w.capacity > 0.0))
            throw std::invalid_argument("Scenario: wired capacity must be strictly positive (" +
                                        w.name + ")");
    for (std::size_t i = 0; i < flows_.size(); ++i)
        for (std::size_t j = i + 1; j < flows_.size(); ++j)
            if (flows_[i].id == flows_[j].id)
                throw std::invalid_argument("Scenario: duplicate flow id " + flows_[i].id);
    for (const auto& f : flows_) {
        if (f.wireless_route.empty() && f.wired_route.empty())
            throw std::invalid_argument("Scenario: flow " + f.id + " has an empty route");
        for (int l : f.wireless_route)
            if (l < 0 || l >= graph_.link_count())
                throw std::invalid_argument("Scenario: flow " + f.id +
                                            " references a missing wireless link");
        for (int w : f.wired_route)
            if (w < 0 || w >= static_cast<int>(wired_.size()))
                throw std::invalid_argument("Scenario: flow " + f.id +
                                            " references a missing wired link");
    }
    for (const auto& [link, rate] : arrival_rates_) {
        if (link_index(link) < 0)
            throw std::invalid_argument("Scenario: arrival rate for unknown link " + link);
        if (!(rate >= 0.0))
            throw std::invalid_argument("Scenario: arrival rate must be nonnegative");
    }
    if (params_.r_max && !(*params_.r_max > 0.0))
        throw std::invalid_argument("Scenario: r_max must be positive when set");
}

int Scenario::link_index(const std::string& name) const {
    auto it = std::find(link_names_.begin(), link_names_.end(), name);
    return it == link_names_.end() ? -1 : static_cast<int>(it - link_names_.begin());
}

int Scenario::wired_index(const std::string& name) const {
    for (std::size_t i = 0; i < wired_.size(); ++i)
        if (wired_[i].name == name) return static_cast<int>(i);
    return -1;
}

bool Scenario::has_wired_flows() const {
    for (const auto& f : flows_)
        if (!f.wired_route.empty()) return true;
    return false;
}

bool Scenario::operator==(const Scenario& other) const {
    return name_ == other.name_ && reconstructed_ == other.reconstructed_ &&
           graph_ == other.graph_ && link_names_ == other.link_names_ &&
           wired_ == other.wired_ && flows_ == other.flows_ && params_ == other.params_ &&
           arrival_rates_ == other.arrival_rates_;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

Flow single_link_flow(const std::string& id, int link) { return Flow{id, {link}, {}}; }

Scenario make_a() {
    // Flower: link 2 conflicts with everyone, links 3,4 also conflict with
    // each other, link 1 only with 2.  Independent sets:
    // {}, {1},{2},{3},{4},{1,3},{1,4}.
    ConflictGraph g(4, {{0, 1}, {1, 2}, {1, 3}, {2, 3}});
    ParameterBlock p;
    p.beta = 800.0;
    return Scenario("a", false, std::move(g), {"1", "2", "3", "4"}, {},
                    {single_link_flow("f1", 0), single_link_flow("f2", 1),
                     single_link_flow("f3", 2), single_link_flow("f4", 3)},
                    p);
}

Scenario make_b() {
    // Star: link 1 conflicts with all others; 2,3,4 mutually independent,
    // so link 1 starves under fixed-rho CSMA.
    ConflictGraph g(4, {{0, 1}, {0, 2}, {0, 3}});
    ParameterBlock p;
    p.beta = 2000.0;
    return Scenario("b", true, std::move(g), {"1", "2", "3", "4"}, {},
                    {single_link_flow("f1", 0), single_link_flow("f2", 1),
                     single_link_flow("f3", 2), single_link_flow("f4", 3)},
                    p);
}

Scenario make_c() {
    // Chain 1-2-3-4: the inner links starve under fixed-rho CSMA.
    ConflictGraph g(4, {{0, 1}, {1, 2}, {2, 3}});
    ParameterBlock p;
    p.beta = 2000.0;
    return Scenario("c", true, std::move(g), {"1", "2", "3", "4"}, {},
                    {single_link_flow("f1", 0), single_link_flow("f2", 1),
                     single_link_flow("f3", 2), single_link_flow("f4", 3)},
                    p);
}

Scenario make_d() {
    // Six-link chain with two-hop interference (|i-j| <= 2 conflicts) and
    // three two-hop flows; the middle flow starves under fixed-rho CSMA.
    std::vector<std::pair<int, int>> conflicts;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6 && j <= i + 2; ++j) conflicts.emplace_back(i, j);
    ConflictGraph g(6, std::move(conflicts));
    ParameterBlock p;
    p.beta = 2000.0;
    return Scenario("d", true, std::move(g), {"1", "2", "3", "4", "5", "6"}, {},
                    {Flow{"fA", {0, 1}, {}}, Flow{"fB", {2, 3}, {}}, Flow{"fC", {4, 5}, {}}},
                    p);
}

Scenario make_e() {
    // Nine-node mixed network.  Wireless cell around node d (links ad, bd,
    // dc all carrier-sense each other) plus an isolated wireless hop ih;
    // wired backbone d-e-f-g with the f-g bottleneck at one tenth of the
    // other wired capacities (2Mb vs 11Mb normalized to unit wireless rate).
    ConflictGraph g(4, {{0, 1}, {0, 2}, {1, 2}});
    ParameterBlock p;
    p.beta = 2000.0;
    std::vector<WiredLink> wired{{"de", 1.818}, {"ef", 1.818}, {"fg", 0.1818}, {"hf", 1.818}};
    std::vector<Flow> flows{
        Flow{"ag", {0}, {0, 1, 2}},   // a->d wireless, then d-e-f-g wired
        Flow{"bc", {1, 2}, {}},       // b->d->c, both hops wireless
        Flow{"ig", {3}, {3, 2}},      // i->h wireless, then h-f-g wired
    };
    return Scenario("e", true, std::move(g), {"ad", "bd", "dc", "ih"}, std::move(wired),
                    std::move(flows), p);
}

} // namespace

Scenario builtin_topology(BuiltinTopology which) {
    switch (which) {
        case BuiltinTopology::a: return make_a();
        case BuiltinTopology::b: return make_b();
        case BuiltinTopology::c: return make_c();
        case BuiltinTopology::d: return make_d();
        case BuiltinTopology::e: return make_e();
    }
    throw std::invalid_argument("unknown builtin topology");
}

Scenario builtin_topology(const std::string& name) {
    if (name.size() == 1 && name[0] >= 'a' && name[0] <= 'e')
        return builtin_topology(static_cast<BuiltinTopology>(name[0] - 'a'));
    throw std::invalid_argument("unknown builtin topology: " + name);
}

// ---------------------------------------------------------------------------
// Text format

ScenarioParseError::ScenarioParseError(int line, const std::string& what)
    : std::runtime_error("scenario parse error at line " + std::to_string(line) + ": " + what),
      line_(line) {}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_number(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ScenarioParseError(line, "malformed number '" + s + "'");
    }
}

struct RawFlow {
    std::string id;
    std::vector<std::pair<bool, std::string>> route; // (is_wireless, link name)
    int line;
};

} // namespace

Scenario parse_scenario(const std::string& text) {
    std::vector<std::string> links;
    std::vector<std::pair<std::string, std::string>> conflicts; // names
    std::vector<std::pair<int, int>> conflict_lines;            // for diagnostics
    std::vector<RawFlow> raw_flows;
    std::vector<WiredLink> wired;
    ParameterBlock params;
    std::map<std::string, double> arrivals;
    std::string name = "scenario";
    bool reconstructed = false;

    enum class Section { none, links, conflicts, flows, wired, params } section = Section::none;

    std::istringstream in(text);
    std::string rawline;
    int lineno = 0;
    while (std::getline(in, rawline)) {
        ++lineno;
        std::string line = rawline;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line == "[links]") section = Section::links;
            else if (line == "[conflicts]") section = Section::conflicts;
            else if (line == "[flows]") section = Section::flows;
            else if (line == "[wired]") section = Section::wired;
            else if (line == "[params]") section = Section::params;
            else throw ScenarioParseError(lineno, "unknown section " + line);
            continue;
        }
        switch (section) {
            case Section::none:
                throw ScenarioParseError(lineno, "content before any [section]");
            case Section::links: {
                auto toks = split_ws(line);
                if (toks.size() != 1)
                    throw ScenarioParseError(lineno, "expected a single link name");
                if (std::find(links.begin(), links.end(), toks[0]) != links.end())
                    throw ScenarioParseError(lineno, "duplicate link name " + toks[0]);
                links.push_back(toks[0]);
                break;
            }
            case Section::conflicts: {
                auto toks = split_ws(line);
                if (toks.size() != 2)
                    throw ScenarioParseError(lineno, "expected two link names");
                conflicts.emplace_back(toks[0], toks[1]);
                conflict_lines.emplace_back(lineno, 0);
                break;
            }
            case Section::flows: {
                auto toks = split_ws(line);
                if (toks.size() < 2)
                    throw ScenarioParseError(lineno, "expected flow name and route");
                RawFlow f;
                f.id = toks[0];
                f.line = lineno;
                for (std::size_t i = 1; i < toks.size(); ++i) {
                    const std::string& t = toks[i];
                    if (t.rfind("wireless:", 0) == 0)
                        f.route.emplace_back(true, t.substr(9));
                    else if (t.rfind("wired:", 0) == 0)
                        f.route.emplace_back(false, t.substr(6));
                    else
                        throw ScenarioParseError(
                            lineno, "route element '" + t + "' needs a wireless:/wired: prefix");
                }
                raw_flows.push_back(std::move(f));
                break;
            }
            case Section::wired: {
                auto toks = split_ws(line);
                if (toks.size() != 2)
                    throw ScenarioParseError(lineno, "expected link name and capacity");
                for (const auto& w : wired)
                    if (w.name == toks[0])
                        throw ScenarioParseError(lineno, "duplicate wired link " + toks[0]);
                wired.push_back({toks[0], parse_number(toks[1], lineno)});
                break;
            }
            case Section::params: {
                auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw ScenarioParseError(lineno, "expected key=value");
                const std::string key = trim(line.substr(0, eq));
                const std::string val = trim(line.substr(eq + 1));
                if (key == "name") name = val;
                else if (key == "reconstructed") reconstructed = val == "1" || val == "true";
                else if (key == "beta") params.beta = parse_number(val, lineno);
                else if (key == "alpha") params.alpha = parse_number(val, lineno);
                else if (key == "k") params.k = parse_number(val, lineno);
                else if (key == "r_max") params.r_max = parse_number(val, lineno);
                else if (key == "dt") params.dt = parse_number(val, lineno);
                else if (key == "horizon") params.horizon = parse_number(val, lineno);
                else if (key == "prop_delay") params.prop_delay = parse_number(val, lineno);
                else if (key == "mac_alpha") params.mac_alpha = parse_number(val, lineno);
                else if (key == "update_interval") params.update_interval = parse_number(val, lineno);
                else if (key.rfind("arrival:", 0) == 0) arrivals[key.substr(8)] = parse_number(val, lineno);
                else throw ScenarioParseError(lineno, "unknown parameter " + key);
                break;
            }
        }
    }

    if (links.empty()) throw ScenarioParseError(lineno, "scenario defines no wireless links");

    auto link_index = [&](const std::string& n) {
        auto it = std::find(links.begin(), links.end(), n);
        return it == links.end() ? -1 : static_cast<int>(it - links.begin());
    };
    auto wired_index = [&](const std::string& n) {
        for (std::size_t i = 0; i < wired.size(); ++i)
            if (wired[i].name == n) return static_cast<int>(i);
        return -1;
    };

    std::vector<std::pair<int, int>> conflict_pairs;
    for (std::size_t i = 0; i < conflicts.size(); ++i) {
        const int u = link_index(conflicts[i].first);
        const int v = link_index(conflicts[i].second);
        const int at = conflict_lines[i].first;
        if (u < 0) throw ScenarioParseError(at, "unknown link " + conflicts[i].first);
        if (v < 0) throw ScenarioParseError(at, "unknown link " + conflicts[i].second);
        if (u == v) throw ScenarioParseError(at, "self-conflict on " + conflicts[i].first);
        conflict_pairs.emplace_back(u, v);
    }

    std::vector<Flow> flows;
    for (const auto& rf : raw_flows) {
        Flow f;
        f.id = rf.id;
        for (const auto& [is_wireless, link] : rf.route) {
            if (is_wireless) {
                const int idx = link_index(link);
                if (idx < 0) throw ScenarioParseError(rf.line, "unknown wireless link " + link);
                f.wireless_route.push_back(idx);
            } else {
                const int idx = wired_index(link);
                if (idx < 0) throw ScenarioParseError(rf.line, "unknown wired link " + link);
                f.wired_route.push_back(idx);
            }
        }
        flows.push_back(std::move(f));
    }

    for (const auto& [link, rate] : arrivals) {
        (void)rate;
        if (link_index(link) < 0)
            throw ScenarioParseError(lineno, "arrival rate for unknown link " + link);
    }

    try {
        ConflictGraph graph(static_cast<int>(links.size()), std::move(conflict_pairs));
        return Scenario(name, reconstructed, std::move(graph), std::move(links),
                        std::move(wired), std::move(flows), params, std::move(arrivals));
    } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(lineno, e.what());
    }
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "# csmarate scenario\n[links]\n";
    for (const auto& n : s.link_names()) out << n << "\n";
    out << "[conflicts]\n";
    for (const auto& [u, v] : s.graph().conflicts())
        out << s.link_names()[static_cast<std::size_t>(u)] << " "
            << s.link_names()[static_cast<std::size_t>(v)] << "\n";
    out << "[flows]\n";
    for (const auto& f : s.flows()) {
        out << f.id;
        for (int l : f.wireless_route)
            out << " wireless:" << s.link_names()[static_cast<std::size_t>(l)];
        for (int w : f.wired_route)
            out << " wired:" << s.wired()[static_cast<std::size_t>(w)].name;
        out << "\n";
    }
    out << "[wired]\n";
    for (const auto& w : s.wired()) out << w.name << " " << fmt_double(w.capacity) << "\n";
    const auto& p = s.params();
    out << "[params]\n";
    out << "name=" << s.name() << "\n";
    out << "reconstructed=" << (s.reconstructed() ? 1 : 0) << "\n";
    out << "beta=" << fmt_double(p.beta) << "\n";
    out << "alpha=" << fmt_double(p.alpha) << "\n";
    out << "k=" << fmt_double(p.k) << "\n";
    if (p.r_max) out << "r_max=" << fmt_double(*p.r_max) << "\n";
    out << "dt=" << fmt_double(p.dt) << "\n";
    out << "horizon=" << fmt_double(p.horizon) << "\n";
    out << "prop_delay=" << fmt_double(p.prop_delay) << "\n";
    out << "mac_alpha=" << fmt_double(p.mac_alpha) << "\n";
    out << "update_interval=" << fmt_double(p.update_interval) << "\n";
    for (const auto& [link, rate] : s.arrival_rates())
        out << "arrival:" << link << "=" << fmt_double(rate) << "\n";
    return out.str();
}

} // namespace csmarate
