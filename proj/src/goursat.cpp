#include "graphwave/goursat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graphwave {

double KernelTable::value(double xi, double s) const {
    if (empty()) return 0.0;
    const double a = 0.5 * (s + xi), b = 0.5 * (s - xi);
    if (a < 0.0 || b < -1e-12) return 0.0;
    const double fa = a / h, fb = std::max(b, 0.0) / h;
    int ia = int(fa), ib = int(fb);
    if (ia >= n - 1) ia = n - 2;
    if (ib >= n - 1) ib = n - 2;
    if (ia < 0 || ib < 0) return 0.0;
    const double wa = fa - ia, wb = fb - ib;
    return at(ia, ib) * (1 - wa) * (1 - wb) + at(ia + 1, ib) * wa * (1 - wb)
        + at(ia, ib + 1) * (1 - wa) * wb + at(ia + 1, ib + 1) * wa * wb;
}

namespace {

// Even-periodic unfolding of the edge potential: reflection at both ends.
double unfolded_q(const std::vector<double>& q, double l, double xi) {
    double u = std::fmod(std::abs(xi), 2.0 * l);
    if (u > l) u = 2.0 * l - u;
    const double h = l / double(q.size() - 1);
    const double f = u / h;
    std::size_t i = std::min(std::size_t(f), q.size() - 2);
    const double w = f - double(i);
    return q[i] * (1.0 - w) + q[i + 1] * w;
}

// Solves W(a,b) = k0(a) +- k0(b) - int_0^a int_0^b qd(|alpha-beta|) W by Picard
// iteration with trapezoid cumulative integrals.
KernelTable solve_goursat(const std::vector<double>& qd, const std::vector<double>& k0,
                          double h, bool dirichlet, int& iters, double& resid) {
    const int n = int(k0.size());
    KernelTable tab;
    tab.h = h;
    tab.n = n;
    std::vector<double> W(std::size_t(n) * n), Wn(std::size_t(n) * n), C(std::size_t(n) * n);
    auto idx = [n](int i, int j) { return std::size_t(i) * n + j; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            W[idx(i, j)] = k0[i] + (dirichlet ? -k0[j] : k0[j]);

    const double cell = h * h / 4.0;
    resid = 0.0;
    for (iters = 1; iters <= 50; ++iters) {
        // F = qd(|i-j|) W; C = cumulative trapezoid of F over [0,a]x[0,b]
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                if (i > 0 && j > 0) {
                    const double f11 = qd[std::abs(i - j)] * W[idx(i, j)];
                    const double f01 = qd[std::abs(i - 1 - j)] * W[idx(i - 1, j)];
                    const double f10 = qd[std::abs(i - (j - 1))] * W[idx(i, j - 1)];
                    const double f00 = qd[std::abs(i - j)] * W[idx(i - 1, j - 1)];
                    acc = C[idx(i - 1, j)] + C[idx(i, j - 1)] - C[idx(i - 1, j - 1)]
                        + cell * (f11 + f01 + f10 + f00);
                }
                C[idx(i, j)] = acc;
            }
        }
        resid = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double v = k0[i] + (dirichlet ? -k0[j] : k0[j]) - C[idx(i, j)];
                resid = std::max(resid, std::abs(v - W[idx(i, j)]));
                Wn[idx(i, j)] = v;
            }
        }
        W.swap(Wn);
        if (resid < 1e-10) break;
    }
    if (resid >= 1e-10)
        throw NumericalError("goursat kernel iteration did not converge: "
                             + std::to_string(iters) + " sweeps, residual "
                             + std::to_string(resid));
    tab.w = std::move(W);
    return tab;
}

}  // namespace

GoursatKernels compute_goursat_kernels(const std::vector<double>& q, double edge_length,
                                       double T, double lattice_step) {
    if (T < 0.0) throw ValidationError("goursat kernels: negative horizon");
    GoursatKernels out;
    out.edge_length = edge_length;
    out.horizon = T;
    double qmax = 0.0;
    for (double v : q) {
        if (!std::isfinite(v)) throw ValidationError("goursat kernels: non-finite potential");
        qmax = std::max(qmax, std::abs(v));
    }
    if (qmax == 0.0 || q.size() < 2) return out;  // kernels vanish identically
    out.zero = false;

    const double h = lattice_step;
    const int n = int(std::ceil(T / h)) + 2;
    std::vector<double> qd(n), k0(n);
    for (int i = 0; i < n; ++i) qd[i] = unfolded_q(q, edge_length, double(i) * h);
    double acc = 0.0;
    k0[0] = 0.0;
    for (int i = 1; i < n; ++i) {
        acc += 0.5 * (qd[i] + qd[i - 1]) * h;
        k0[i] = -0.5 * acc;
    }
    // reflected potential (x = l end): q_r(x) = q(l - x)
    std::vector<double> qr(q.rbegin(), q.rend());
    std::vector<double> qdr(n), k0r(n);
    for (int i = 0; i < n; ++i) qdr[i] = unfolded_q(qr, edge_length, double(i) * h);
    acc = 0.0;
    k0r[0] = 0.0;
    for (int i = 1; i < n; ++i) {
        acc += 0.5 * (qdr[i] + qdr[i - 1]) * h;
        k0r[i] = -0.5 * acc;
    }

    int it = 0;
    double rs = 0.0;
    out.control_end = solve_goursat(qd, k0, h, false, it, rs);
    out.iterations = it;
    out.residual = rs;
    out.far_end = solve_goursat(qdr, k0r, h, false, it, rs);
    out.iterations = std::max(out.iterations, it);
    out.residual = std::max(out.residual, rs);
    out.far_end_diri = solve_goursat(qdr, k0r, h, true, it, rs);
    out.iterations = std::max(out.iterations, it);
    out.residual = std::max(out.residual, rs);
    return out;
}

}  // namespace graphwave
