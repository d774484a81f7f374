#pragma once

#include <array>
#include <optional>
#include <vector>

#include "graphwave/goursat.hpp"
#include "graphwave/graph.hpp"
#include "graphwave/interval_rep.hpp"
#include "graphwave/signal.hpp"

namespace graphwave {

/// Vertex traces of a synthesis run (cycle template): g_j at the controlled
/// internal vertex, h at the far internal vertex (shared across e2,e3,e4).
struct TraceSet {
    TimeSignal g1, g2, g3;
    TimeSignal h4;
};

/// Step width for the coupled trace marching.
struct MarchingSchedule {
    double delta = 0.0;            // continuous step from the length formula
    double delta_snapped = 0.0;    // floor(delta/dt)*dt used on the grid
    std::vector<double> breakpoints;  // n*delta_snapped covering [0, T - l3]
    int final_index = 0;
};

/// delta = min(l1, l3, l2-l3) when l2 > l3, min(l1, l2) when l2 == l3.
MarchingSchedule marching_schedule(const std::array<double, 4>& lengths);
MarchingSchedule marching_schedule(const std::array<double, 4>& lengths, double dt, double T);

/// Bundled data for the coupled v2/v3 trace equations of the cycle template.
struct CycleTraceEquations {
    std::array<double, 4> lengths{};
    double T = 0.0;
    double dt = 0.0;
    const GoursatKernels* kernels[4] = {nullptr, nullptr, nullptr, nullptr};
};

struct MarchResult {
    TimeSignal g1;
    TimeSignal f21;
};

/// Solves the coupled per-cell systems for (g1, f2^1) given the far-vertex
/// trace h4; f2^1 is supported in [0, T - l3] and extended by zero.
MarchResult march_solve(const CycleTraceEquations& eqs, const MarchingSchedule& schedule,
                        const TimeSignal& h4);

/// Extension of a partially supported boundary control to the full horizon:
/// linear taper from the last supported value down to zero at T.
TimeSignal extend_f1(const TimeSignal& f11, double T);

struct SynthesisOptions {
    double dt = 0.0;        // 0: use the CFL step of the verification grid
    bool record_traces = false;
};

struct SynthesisDebug {
    TraceSet traces;
    TimeSignal f21, f22;     // internal-control pieces
    TimeSignal f11, f12;     // boundary-control pieces
    GraphState step1_state;  // representation-predicted state after step 1
};

/// Shape control on the cycle template: steps 1-3 of the constructive scheme.
ControlPair cycle_shape_control(const MetricGraph& g, const Potential& q,
                                const GraphState& target, double T,
                                const SynthesisOptions& opt = {},
                                SynthesisDebug* dbg = nullptr);

/// Velocity control on the cycle template (time-differentiated matching).
ControlPair cycle_velocity_control(const MetricGraph& g, const Potential& q,
                                   const GraphState& target, double T,
                                   const SynthesisOptions& opt = {},
                                   SynthesisDebug* dbg = nullptr);

/// Shape control on the three-edge star (causal interleaved trace solve).
ControlPair star_shape_control(const MetricGraph& g, const Potential& q,
                               const GraphState& target, double T,
                               const SynthesisOptions& opt = {},
                               SynthesisDebug* dbg = nullptr);

/// Kernels for every edge of a synthesis template in representation
/// orientation (edge flips handled internally).
std::vector<GoursatKernels> synthesis_kernels(const MetricGraph& g, const Potential& q,
                                              double T, double dt);

}  // namespace graphwave
