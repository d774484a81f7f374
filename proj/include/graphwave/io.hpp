#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graphwave/graph.hpp"
#include "graphwave/signal.hpp"

namespace graphwave {

/// How an edge potential was declared (kept for byte-stable serialization).
struct PotentialSpec {
    enum Kind { Zero, Constant, Linear, Samples } kind = Zero;
    double a = 0.0, b = 0.0;
    std::vector<double> samples;
};

struct SolverParams {
    double dx = 0.005;
    double horizon = 0.0;  // 0 means: use the template control time
    int modes = 64;
};

struct ParsedSpec {
    MetricGraph graph;
    Potential potential;
    std::vector<PotentialSpec> potential_specs;
    SolverParams params;
};

/// Parses the graph specification text format. Syntax errors carry
/// line/column positions; semantic errors are delegated to validate_graph.
/// Applies the l2 >= l3 relabeling and records it on the graph.
ParsedSpec parse_graph_spec(const std::string& text);

std::string serialize_graph_spec(const ParsedSpec& spec);

/// Two-column signal file (t value) with regularity tag and step in the header.
TimeSignal read_signal_file(const std::string& path);
void write_signal_file(const std::string& path, const TimeSignal& s);

/// Spatial profile in the same two-column format (x value).
std::vector<double> read_profile_file(const std::string& path, double expected_length,
                                      int expected_cells);

void write_controls_csv(const std::string& path, const ControlPair& c);
ControlPair read_controls_csv(const std::string& path);

void write_state_csv(const std::string& path, const GraphState& s, const MetricGraph& g);
GraphState read_state_csv(const std::string& path, const MetricGraph& g);

/// Flat ordered key-value run report; numeric sections are deterministic.
struct Report {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, double value);
    void add(const std::string& key, long value);
    std::string to_text() const;
};

std::string format_number(double v);  // 17 significant digits

/// CLI exit codes.
enum ExitCode : int {
    kOk = 0,
    kParseError = 2,
    kValidationError = 3,
    kNumericalError = 4,
    kToleranceError = 5,
};

struct ToleranceProfile {
    double shape_rel_h1 = 0.02;
    double velocity_rel_l2 = 0.02;
    double exact_rel = 0.05;
    double moment_rel = 0.05;
};

/// Reads GRAPHWAVE_TOL_PROFILE ("default" or "strict").
ToleranceProfile tolerance_profile_from_env();

}  // namespace graphwave
