#pragma once

#include <vector>

#include "graphwave/graph.hpp"
#include "graphwave/signal.hpp"

namespace graphwave {

/// Full space-time history of a forward run, per edge, tail-to-head coordinates.
struct SpaceTimeField {
    double dt = 0.0;
    std::vector<double> dxe;                          // per-edge grid steps
    std::vector<std::vector<std::vector<double>>> u;  // [edge][time level][node]

    std::size_t levels() const { return u.empty() ? 0 : u[0].size(); }
    double horizon() const { return levels() ? dt * double(levels() - 1) : 0.0; }
    int level_of(double t) const;  // throws on off-grid t

    /// State (u, u_t) at level n; u_t by the one-sided 3-level stencil
    /// (centered in the interior of the run).
    GraphState state_at_level(int n) const;
    GraphState final_state() const;
};

/// Explicit leapfrog forward solver. Dirichlet nodes take f1 (or 0); each
/// delta-prime vertex enforces outward-derivative equality up to the control
/// jump plus the zero value-sum through ghost closures every step.
/// Controls are resampled to the solver grid when their dt differs.
SpaceTimeField simulate(const MetricGraph& g, const Potential& q, const ControlPair& controls,
                        double T, double dx);

/// Time step used by simulate (and by synthesis so control grids match).
double cfl_time_step(const MetricGraph& g, const Potential& q, double T, double dx);

struct EdgeError {
    double abs_h1 = 0.0, rel_h1 = 0.0;
    double abs_l2 = 0.0, rel_l2 = 0.0;
};

struct ErrorReport {
    std::vector<EdgeError> per_edge;
    double rel_h1 = 0.0;      // shape error, global
    double rel_l2_ut = 0.0;   // velocity error, global
    double trace_identity_residual = 0.0;  // max_t |du2 - du1 - f2| at v2
    double vertex_sum_residual = 0.0;      // max_t |sum_j u_j(v)| over internal vertices
    bool shape_checked = false;
    bool velocity_checked = false;
};

enum class VerifyMode { Shape, Velocity, Both };

/// Runs simulate and compares (u, u_t)(T) against the targets.
ErrorReport verify_control(const MetricGraph& g, const Potential& q,
                           const ControlPair& controls, const GraphState& target,
                           VerifyMode mode, double T, double dx);

/// Total wave energy sum_e int (u_t^2 + u_x^2 + q u^2)/2 at a grid time.
double energy(const SpaceTimeField& field, const MetricGraph& g, const Potential& q, double t);

}  // namespace graphwave
