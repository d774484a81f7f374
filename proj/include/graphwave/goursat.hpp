#pragma once

#include <vector>

#include "graphwave/signal.hpp"

namespace graphwave {

/// Sampled kernel on the characteristic lattice a=(s+xi)/2, b=(s-xi)/2.
/// Covers the triangle 0 <= xi <= s <= horizon.
struct KernelTable {
    double h = 0.0;  // lattice step
    int n = 0;       // lattice points per axis
    std::vector<double> w;  // row-major, a-index major

    double at(int ia, int ib) const { return w[std::size_t(ia) * n + ib]; }
    /// Bilinear value at kernel coordinates (xi, s); zero outside the lattice.
    double value(double xi, double s) const;
    bool empty() const { return w.empty(); }
};

/// Correction kernels of the interval solution representations for one edge,
/// in the representation orientation (x = 0 at the trace end).
///
/// control_end   : Neumann-type kernel for data entering at x=0 (both the
///                 2nl+x and 2nl-x evaluation branches of the g-channel).
/// far_end       : Neumann-type kernel for data entering at x=l (h-channel).
/// far_end_diri  : Dirichlet-type kernel for data entering at x=l (f-channel).
///
/// All vanish identically for q = 0 (tables left empty, zero flag set).
struct GoursatKernels {
    double edge_length = 0.0;
    double horizon = 0.0;
    bool zero = true;
    KernelTable control_end;
    KernelTable far_end;
    KernelTable far_end_diri;
    int iterations = 0;
    double residual = 0.0;

    double control_end_value(double xi, double s) const {
        return zero ? 0.0 : control_end.value(xi, s);
    }
    double far_end_value(double xi, double s) const {
        return zero ? 0.0 : far_end.value(xi, s);
    }
    double far_end_diri_value(double xi, double s) const {
        return zero ? 0.0 : far_end_diri.value(xi, s);
    }
};

/// Builds the kernels by successive approximation of the characteristic-
/// coordinate integral equation (Picard iteration, sup-norm tolerance 1e-10,
/// at most 50 sweeps). q is sampled on the edge grid in representation
/// orientation. Throws NumericalError on nonconvergence with the iteration
/// count and residual in the message.
GoursatKernels compute_goursat_kernels(const std::vector<double>& q, double edge_length,
                                       double T, double lattice_step);

}  // namespace graphwave
