#pragma once

#include <vector>

#include "graphwave/graph.hpp"
#include "graphwave/signal.hpp"

namespace graphwave {

/// Eigenfrequency omega (eigenvalue omega^2) with the normalized eigenfunction
/// sampled on the edge grids, and the trace coefficients used by the moment
/// machinery: kappa1 = (outward derivative at the controlled Dirichlet
/// vertex)/omega, kappa2 = value at the jump-controlled vertex on the jump
/// edge. The cycle template with q = 0 carries an omega = 0 mode (loop
/// constants); its kappa1 is stored as 0.
struct SpectralPair {
    double omega = 0.0;
    std::vector<std::vector<double>> phi;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double boundary_derivative = 0.0;  // outward derivative at the control vertex
};

/// First N eigenpairs by the secular-determinant shooting method: per-edge
/// fundamental solutions, vertex-condition determinant, scan + bisection,
/// SVD nullspace for the eigenfunction.
std::vector<SpectralPair> compute_spectrum(const MetricGraph& g, const Potential& q, int N);

struct TraceGrowthReport {
    std::vector<double> ratio_boundary;  // |d phi_n(v1)| / n
    std::vector<double> ratio_interior;  // |phi_n at the jump vertex|
    double max_boundary = 0.0;
    double max_interior = 0.0;
    bool boundary_flagged = false;
    bool interior_flagged = false;
};

/// Requires at least 10 modes; flags monotone growth over the last five
/// indices beyond twice the median.
TraceGrowthReport trace_growth_check(const std::vector<SpectralPair>& pairs);

struct MomentTargets {
    std::vector<double> a_omega;  // {a_n omega_n}
    std::vector<double> b;        // {b_n}
};

/// a_n = <phi1, phi_n>, b_n = <phi2, phi_n> by trapezoid quadrature.
MomentTargets fourier_targets(const GraphState& phi1, const GraphState& phi2,
                              const std::vector<SpectralPair>& pairs, const MetricGraph& g);

/// Parity-average combination of a shape and a velocity control on [0, 2T]:
/// f1' takes the even extension of the shape part and the odd extension of the
/// velocity part about t = T (f2 the other way round); f1 = int f1'.
ControlPair combine_exact_control(const ControlPair& shape, const ControlPair& velocity,
                                  double T);

struct MomentResidualReport {
    std::vector<double> sine;        // |P_n - a_n omega_n|
    std::vector<double> cosine;      // |Q_n - b_n|
    std::vector<double> form_gap;    // |direct - integrated-by-parts form|
    std::vector<double> an3;         // a_n(T) by the variation-of-parameters integral
    double max_sine = 0.0, max_cosine = 0.0, max_form_gap = 0.0;
    double target_l2 = 0.0;
};

/// Evaluates the T-centered moment integrals of the combined controls on
/// [0, 2T] in both algebraic forms and compares against the targets.
/// Zero modes are skipped (handled in state space).
MomentResidualReport moment_residual(const TimeSignal& f1, const TimeSignal& f2,
                                     const std::vector<SpectralPair>& pairs,
                                     const MomentTargets& targets, double T);

/// Modal coefficients of a state pair and the free-flow helpers used by the
/// exact-control pipeline.
struct ModalCoefs {
    std::vector<double> a, b;
};

ModalCoefs project_state(const GraphState& s, const std::vector<SpectralPair>& pairs,
                         const MetricGraph& g);
GraphState reconstruct_state(const ModalCoefs& c, const std::vector<SpectralPair>& pairs,
                             const MetricGraph& g);
/// Free evolution by time tau (rotation per mode; shear for omega = 0).
ModalCoefs modal_flow(const ModalCoefs& c, const std::vector<SpectralPair>& pairs,
                      double tau);

}  // namespace graphwave
