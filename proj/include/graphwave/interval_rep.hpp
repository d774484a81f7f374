#pragma once

#include <functional>
#include <vector>

#include "graphwave/goursat.hpp"
#include "graphwave/signal.hpp"

namespace graphwave {

/// Solution value of the interval problem with Neumann data g at x=0 and
/// Neumann data h at x=l (v_x(l,t) = -h). Series over reflections with the
/// kernel corrections; terms with negative time argument are dropped.
double eval_nn(const TimeSignal& g, const TimeSignal& h, double l,
               const GoursatKernels& ker, double x, double t);

/// Same problem, time derivative of the solution.
double eval_nn_dt(const TimeSignal& g, const TimeSignal& h, double l,
                  const GoursatKernels& ker, double x, double t);

/// Neumann data g at x=0, Dirichlet data f at x=l (alternating-sign series).
double eval_nd(const TimeSignal& g, const TimeSignal& f, double l,
               const GoursatKernels& ker, double x, double t);

double eval_nd_dt(const TimeSignal& g, const TimeSignal& f, double l,
                  const GoursatKernels& ker, double x, double t);

/// Profile of the solution (or its time derivative) on a uniform edge grid.
std::vector<double> profile_nn(const TimeSignal& g, const TimeSignal& h, double l,
                               const GoursatKernels& ker, double t, int cells,
                               bool time_derivative = false);
std::vector<double> profile_nd(const TimeSignal& g, const TimeSignal& f, double l,
                               const GoursatKernels& ker, double t, int cells,
                               bool time_derivative = false);

/// Second-kind Volterra operator (d y)(t) + int_0^t K(t,s) y(s) ds.
struct VolterraOperator {
    double diagonal = 1.0;
    double dt = 0.0;
    /// kernel samples K(t_i, s_j) for j <= i (lower triangle, row-major rows of
    /// increasing length); kernel(i, j) below handles the layout.
    std::vector<std::vector<double>> K;

    static VolterraOperator from_function(double diagonal, double T, double dt,
                                          const std::function<double(double, double)>& k);
    TimeSignal apply(const TimeSignal& y) const;
};

/// Forward substitution with the product trapezoid rule.
TimeSignal solve_volterra(const VolterraOperator& op, const TimeSignal& rhs);

/// The delay-term operator of the f1 marching equation:
/// (L_n phi)(tau) = 2 phi(tau) + 2 int_0^tau Kf(eta, eta+sigma) phi(tau-sigma) dsigma,
/// eta = (2n-1) l1, Kf the Dirichlet far-end kernel. For q = 0 this is 2 phi.
TimeSignal apply_ln(const TimeSignal& fprime, int n, const GoursatKernels& ker, double l1);

/// Volterra operator realizing L_n (usable with solve_volterra to invert).
VolterraOperator ln_operator(int n, const GoursatKernels& ker, double l1, double T, double dt);

enum class RepKind { NN, ND };

/// Recovers the trace supported in [T-l, T] whose representation reproduces the
/// profile at time T:
///   shape: solves m(x) + int_x^l W(x,s) m(s) ds = profile, trace(T-x) = m'(x)
///   velocity: solves n(x) + int_x^l W(x,s) n(s) ds = -profile, trace(T-x) = n(x)
/// W is the control-end kernel of the representation (q = 0: direct read-off).
TimeSignal trace_from_target(const std::vector<double>& profile, double l,
                             const GoursatKernels& ker, RepKind kind, bool velocity,
                             double T, double dt);

}  // namespace graphwave
