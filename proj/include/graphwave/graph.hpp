#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "graphwave/signal.hpp"

namespace graphwave {

enum class GraphTemplate { CycleWithTails, ThreeStar, Generic };

enum class ConditionKind { DirichletControlled, DirichletFixed, DeltaPrimeInternal };

struct VertexCondition {
    ConditionKind kind = ConditionKind::DirichletFixed;
    int control_edge = -1;  // index of the incident edge receiving the jump, or -1
};

struct GraphEdge {
    std::string id;
    int tail = -1;
    int head = -1;
    double length = 0.0;
};

struct GraphVertex {
    std::string id;
    VertexCondition condition;
};

/// Metric graph with per-edge uniform grids sharing a global refinement dx.
/// Edge j carries the local coordinate x in [0, length_j] from tail to head.
struct MetricGraph {
    GraphTemplate templ = GraphTemplate::Generic;
    std::vector<GraphEdge> edges;
    std::vector<GraphVertex> vertices;
    double dx = 0.005;
    bool swapped23 = false;  // set when the l2 >= l3 normalization relabeled edges

    int edge_index(const std::string& id) const;
    int vertex_index(const std::string& id) const;

    int grid_size(int e) const;        // number of cells M_e = round(l_e / dx)
    double grid_step(int e) const;     // l_e / M_e
    std::vector<double> edge_grid(int e) const;

    std::array<double, 4> cycle_lengths() const;  // requires CycleWithTails
    std::array<double, 3> star_lengths() const;   // requires ThreeStar
};

struct ValidationIssue {
    std::string code;
    std::string message;
    double measured = 0.0;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

/// Canonical synthesis templates (edge order fixed by the wiring rules).
MetricGraph make_cycle_graph(const std::array<double, 4>& lengths, double dx);
MetricGraph make_star_graph(const std::array<double, 3>& lengths, double dx);

/// Relabel edges 2 and 3 when l2 < l3 (records the swap). No-op otherwise.
void normalize_cycle_labels(MetricGraph& g);
void normalize_star_labels(MetricGraph& g);

ValidationReport validate_graph(const MetricGraph& g);

/// Sharp control horizon: max(l1+l2, l3+l4) for the cycle,
/// max(l2, l1+l3) for the star. Throws for Generic.
double control_time(const MetricGraph& g);

/// Per-edge sampled potential on the edge grids.
struct Potential {
    std::vector<std::vector<double>> q;

    static Potential zero(const MetricGraph& g);
    static Potential constant(const MetricGraph& g, double c);
    bool is_zero() const;
    double max_abs() const;
};

enum class StateRole { ShapeTarget, VelocityTarget, Residual };

/// Per-edge sampled profiles on the edge grids (tail-to-head coordinates).
struct GraphState {
    StateRole role = StateRole::ShapeTarget;
    std::vector<std::vector<double>> u;   // displacement profiles
    std::vector<std::vector<double>> ut;  // optional velocity profiles

    static GraphState zero(const MetricGraph& g, StateRole role = StateRole::ShapeTarget);
};

struct StateNorms {
    double h1 = 0.0;
    double l2 = 0.0;
};

/// Trapezoid-rule H1 and L2 norms summed over edges (derivatives by centered
/// differences). Uses the u profiles.
StateNorms state_norms(const GraphState& s, const MetricGraph& g);

/// Dirichlet-end zeros and vertex value-sum conditions within tol (relative to
/// the state's H1 norm). Report lists measured residuals.
ValidationReport check_target_compatibility(const GraphState& s, const MetricGraph& g,
                                            double tol = 1e-8);

}  // namespace graphwave
