#include "graphwave/synthesis.hpp"

#include <algorithm>
#include <cmath>

namespace graphwave {

namespace {

double lin(const std::vector<double>& arr, double dt, double t) {
    if (arr.empty() || t < -1e-12) return 0.0;
    if (t <= 0.0) return arr[0];
    const double T = dt * double(arr.size() - 1);
    if (t >= T) return arr.back();
    const double f = t / dt;
    const std::size_t i = std::min(std::size_t(f), arr.size() - 2);
    const double w = f - double(i);
    return arr[i] * (1.0 - w) + arr[i + 1] * w;
}

// int_delay^t tab(delay, s) arr(t-s) ds, trapezoid on the dt grid, with the
// s=delay sample's weight reported separately (it may be the current unknown).
struct SplitBlock {
    double known = 0.0;
    double coef = 0.0;  // multiplies arr(t - delay)
};

SplitBlock conv_split(const KernelTable* tab, double delay, double t, double dt,
                      const std::vector<double>& arr) {
    SplitBlock out;
    if (!tab || tab->empty() || t <= delay + 1e-15) return out;
    const long i0 = (long)std::ceil(delay / dt - 1e-9);
    const long it = (long)std::floor(t / dt + 1e-9);
    // node sequence: delay, grid points strictly inside, t
    std::vector<double> nodes;
    nodes.reserve(std::size_t(std::max<long>(it - i0 + 3, 3)));
    nodes.push_back(delay);
    for (long k = i0; k <= it; ++k) {
        const double s = double(k) * dt;
        if (s > delay + 1e-15 && s < t - 1e-15) nodes.push_back(s);
    }
    nodes.push_back(t);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double w = 0.5 * (nodes[i + 1] - nodes[i]);
        for (int side = 0; side < 2; ++side) {
            const double s = side == 0 ? nodes[i] : nodes[i + 1];
            const double kv = tab->value(delay, s);
            if (i == 0 && side == 0)
                out.coef += w * kv;  // the arr(t-delay) sample
            else
                out.known += w * kv * lin(arr, dt, t - s);
        }
    }
    return out;
}

// arr(t-delay) + conv block with everything known (delay >= one grid step).
double block_known(const std::vector<double>& arr, double dt, double t, double delay,
                   const KernelTable* tab) {
    if (t - delay < -1e-12) return 0.0;
    SplitBlock c = conv_split(tab, delay, t, dt, arr);
    return lin(arr, dt, t - delay) * (1.0 + c.coef) + c.known;
}

// same block when arr(t-delay) is the current unknown: value = known + coef*u.
SplitBlock block_split(const std::vector<double>& arr, double dt, double t, double delay,
                       const KernelTable* tab) {
    SplitBlock c = conv_split(tab, delay, t, dt, arr);
    return {c.known, 1.0 + c.coef};
}

// self value-sum contribution: conv over [0, t] (the s=0 kernel value vanishes
// for the control-end tables, so no unknown enters).
double conv_self(const KernelTable* tab, double t, double dt, const std::vector<double>& arr) {
    SplitBlock c = conv_split(tab, 0.0, t, dt, arr);
    return c.known + c.coef * lin(arr, dt, t);
}

const KernelTable* tab_g(const GoursatKernels* k) {
    return (k && !k->zero) ? &k->control_end : nullptr;
}
const KernelTable* tab_h(const GoursatKernels* k) {
    return (k && !k->zero) ? &k->far_end : nullptr;
}
const KernelTable* tab_f(const GoursatKernels* k) {
    return (k && !k->zero) ? &k->far_end_diri : nullptr;
}

double diag_value(const GoursatKernels* k, const KernelTable* tab, double xi) {
    return (k && !k->zero && tab) ? tab->value(xi, xi) : 0.0;
}

}  // namespace

MarchingSchedule marching_schedule(const std::array<double, 4>& l) {
    return marching_schedule(l, 0.0, 0.0);
}

MarchingSchedule marching_schedule(const std::array<double, 4>& l, double dt, double T) {
    if (!(l[1] >= l[2]) || l[2] <= 0.0 || l[0] <= 0.0)
        throw ValidationError("marching_schedule: needs normalized l2 >= l3 > 0, l1 > 0");
    MarchingSchedule s;
    if (l[1] > l[2] + 1e-14)
        s.delta = std::min({l[0], l[2], l[1] - l[2]});
    else
        s.delta = std::min(l[0], l[1]);
    if (!(s.delta > 0.0)) throw ValidationError("marching_schedule: degenerate step");
    s.delta_snapped = s.delta;
    if (dt > 0.0) {
        s.delta_snapped = std::floor(s.delta / dt + 1e-9) * dt;
        if (s.delta_snapped < dt - 1e-12)
            throw NumericalError("marching_schedule: step smaller than the grid spacing; "
                                 "refine dt");
    }
    if (T > 0.0) {
        const double t_end = T - l[2];
        double b = 0.0;
        while (b < t_end - 1e-12) {
            s.breakpoints.push_back(b);
            b += s.delta_snapped;
        }
        s.breakpoints.push_back(t_end);
        s.final_index = int(s.breakpoints.size()) - 1;
    }
    return s;
}

MarchResult march_solve(const CycleTraceEquations& eqs, const MarchingSchedule& schedule,
                        const TimeSignal& h4) {
    const auto& l = eqs.lengths;
    const double T = eqs.T, dt = eqs.dt;
    const bool equal_loop = !(l[1] > l[2] + 1e-14);
    if (!equal_loop && l[1] - l[2] < 2.0 * dt)
        throw NumericalError("march_solve: loop length gap below grid resolution");
    if (schedule.delta_snapped < dt - 1e-12)
        throw NumericalError("march_solve: invalid schedule");

    const std::size_t nt = std::size_t(std::llround(T / dt));
    std::vector<double> g1(nt + 1, 0.0), f21(nt + 1, 0.0), g2(nt + 1, 0.0);
    const auto& h = h4.samples;
    const GoursatKernels* K1 = eqs.kernels[0];
    const GoursatKernels* K2 = eqs.kernels[1];
    const GoursatKernels* K3 = eqs.kernels[2];
    const GoursatKernels* K4 = eqs.kernels[3];
    const double t_stop = T - l[2];

    for (std::size_t k = 0; k <= nt; ++k) {
        const double t = double(k) * dt;
        // equation at the controlled vertex; knowns only (current samples are 0)
        double A = conv_self(tab_g(K1), t, dt, g1) + conv_self(tab_g(K2), t, dt, g2)
            + conv_self(tab_g(K3), t, dt, g1);
        for (int n = 1; double(2 * n) * l[2] <= t + 1e-12 ||
                        double(2 * n) * l[0] <= t + 1e-12; ++n) {
            const double sgn = (n % 2) ? -1.0 : 1.0;
            if (double(2 * n) * l[0] <= t + 1e-12)
                A += 2.0 * sgn * block_known(g1, dt, t, double(2 * n) * l[0], tab_g(K1));
            if (double(2 * n) * l[1] <= t + 1e-12)
                A += 2.0 * block_known(g2, dt, t, double(2 * n) * l[1], tab_g(K2));
            if (double(2 * n) * l[2] <= t + 1e-12)
                A += 2.0 * block_known(g1, dt, t, double(2 * n) * l[2], tab_g(K3));
        }
        for (int n = 1; double(2 * n - 1) * l[2] <= t + 1e-12; ++n) {
            if (double(2 * n - 1) * l[1] <= t + 1e-12)
                A += 2.0 * block_known(h, dt, t, double(2 * n - 1) * l[1], tab_h(K2));
            A += 2.0 * block_known(h, dt, t, double(2 * n - 1) * l[2], tab_h(K3));
        }

        if (t <= t_stop + 1e-12) {
            const double tau = t + l[2];
            double B = 3.0 * lin(h, dt, tau) + conv_self(tab_g(K4), tau, dt, h)
                + conv_self(tab_h(K2), tau, dt, h) + conv_self(tab_h(K3), tau, dt, h);
            for (int n = 1; double(2 * n) * std::min({l[1], l[2], l[3]}) <= tau + 1e-12; ++n) {
                const double sgn = (n % 2) ? -1.0 : 1.0;
                if (double(2 * n) * l[3] <= tau + 1e-12)
                    B += 2.0 * sgn * block_known(h, dt, tau, double(2 * n) * l[3], tab_g(K4));
                if (double(2 * n) * l[1] <= tau + 1e-12)
                    B += 2.0 * block_known(h, dt, tau, double(2 * n) * l[1], tab_h(K2));
                if (double(2 * n) * l[2] <= tau + 1e-12)
                    B += 2.0 * block_known(h, dt, tau, double(2 * n) * l[2], tab_h(K3));
            }
            // g blocks at odd delays; n = 1 carries the current unknowns
            SplitBlock b3 = block_split(g1, dt, tau, l[2], tab_g(K3));
            double coef_g1 = 2.0 * b3.coef;
            double coef_f21 = 0.0;
            B += 2.0 * b3.known;
            if (equal_loop) {
                SplitBlock b2 = block_split(g2, dt, tau, l[1], tab_g(K2));
                coef_g1 += 2.0 * b2.coef;
                coef_f21 += 2.0 * b2.coef;
                B += 2.0 * b2.known;
            } else {
                B += 2.0 * block_known(g2, dt, tau, l[1], tab_g(K2));
            }
            for (int n = 2; double(2 * n - 1) * l[2] <= tau + 1e-12; ++n) {
                if (double(2 * n - 1) * l[1] <= tau + 1e-12)
                    B += 2.0 * block_known(g2, dt, tau, double(2 * n - 1) * l[1], tab_g(K2));
                B += 2.0 * block_known(g1, dt, tau, double(2 * n - 1) * l[2], tab_g(K3));
            }
            // solve [3, 1; coef_g1, coef_f21] (g1, f21) = (-A, -B)
            const double det = 3.0 * coef_f21 - coef_g1;
            if (equal_loop) {
                if (std::abs(det) < 1e-10)
                    throw NumericalError("march_solve: singular per-cell system");
                g1[k] = (-A * coef_f21 + B) / det;
                f21[k] = (-3.0 * B + coef_g1 * A) / det;
            } else {
                g1[k] = -B / coef_g1;
                f21[k] = -A - 3.0 * g1[k];
            }
        } else {
            f21[k] = 0.0;
            g1[k] = -A / 3.0;
        }
        g2[k] = g1[k] + f21[k];
    }

    MarchResult out;
    out.g1 = TimeSignal(dt, std::move(g1), Regularity::L2);
    out.f21 = TimeSignal(dt, std::move(f21), Regularity::L2);
    return out;
}

TimeSignal extend_f1(const TimeSignal& f11, double T) {
    TimeSignal out = f11;
    const std::size_t nt = std::size_t(std::llround(T / f11.dt));
    out.samples.resize(nt + 1, 0.0);
    // locate the last supported sample and taper linearly to zero at T
    std::size_t kend = 0;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        if (std::abs(out.samples[i]) > 1e-14) kend = i;
    if (kend + 1 >= out.samples.size()) {
        out.tag = Regularity::H1_0;
        out.samples.back() = 0.0;
        return out;
    }
    const double v0 = out.samples[kend];
    const double span = double(out.samples.size() - 1 - kend);
    for (std::size_t i = kend; i < out.samples.size(); ++i)
        out.samples[i] = v0 * double(out.samples.size() - 1 - i) / span;
    out.tag = Regularity::H1_0;
    return out;
}

namespace {

// C1 quadratic extension used inside the synthesis: matches the marched value
// and end slope at t_end and reaches zero at T.
void taper_c1(std::vector<double>& f, double dt, std::size_t kend, double slope) {
    const std::size_t nt = f.size() - 1;
    if (kend >= nt) { f[nt] = 0.0; return; }
    const double v0 = f[kend];
    const double D = dt * double(nt - kend);
    const double a = -(v0 + slope * D) / (D * D);
    for (std::size_t i = kend; i <= nt; ++i) {
        const double th = dt * double(i - kend);
        f[i] = v0 + slope * th + a * th * th;
    }
}

struct CycleContext {
    std::array<double, 4> l{};
    double T = 0.0, dt = 0.0;
    std::size_t nt = 0;
    std::array<int, 4> cells{};
    std::vector<GoursatKernels> kers;
    const MetricGraph* g = nullptr;
};

CycleContext make_cycle_context(const MetricGraph& g, const Potential& q, double T,
                                const SynthesisOptions& opt) {
    auto rep = validate_graph(g);
    if (!rep.ok())
        throw ValidationError("synthesis: invalid graph: " + rep.issues[0].message);
    CycleContext c;
    c.g = &g;
    c.l = g.cycle_lengths();
    if (T < control_time(g) - 1e-12)
        throw ValidationError("synthesis: horizon below the control time");
    c.T = T;
    c.dt = opt.dt;
    if (c.dt <= 0.0) {
        double hmin = 1e300;
        for (int e = 0; e < 4; ++e) hmin = std::min(hmin, g.grid_step(e));
        const double dt0 = 0.9 * hmin / std::sqrt(1.0 + q.max_abs() * g.dx * g.dx);
        c.dt = T / std::max<long>(1, (long)std::ceil(T / dt0 - 1e-12));
    }
    c.nt = std::size_t(std::llround(T / c.dt));
    for (int e = 0; e < 4; ++e) c.cells[e] = g.grid_size(e);
    c.kers = synthesis_kernels(g, q, T, c.dt);
    return c;
}

// f1 marching shared by cycle step 2 and the star: solves the value-sum
// equation for (f1^1)' on [0, T-l1] given complete central traces.
// alternating: true for ND-type loop edges (star), false for NN-type (cycle).
std::vector<double> f1_march(const std::array<double, 3>& l, double T, double dt,
                             const std::vector<double>& gh1, const std::vector<double>& gh2,
                             const std::vector<double>& gh3, const GoursatKernels* K1,
                             const GoursatKernels* K2, const GoursatKernels* K3,
                             bool alternating) {
    const std::size_t nt = std::size_t(std::llround(T / dt));
    std::vector<double> f1p(nt + 1, 0.0);
    for (std::size_t k = 0; k <= nt; ++k) {
        const double tau = double(k) * dt;
        if (tau > T - l[0] + 1e-12) break;
        const double t = tau + l[0];
        double alpha = lin(gh1, dt, t) + lin(gh2, dt, t) + lin(gh3, dt, t)
            + conv_self(tab_g(K1), t, dt, gh1) + conv_self(tab_g(K2), t, dt, gh2)
            + conv_self(tab_g(K3), t, dt, gh3);
        for (int n = 1; double(2 * n) * std::min({l[0], l[1], l[2]}) <= t + 1e-12; ++n) {
            const double sgn = (n % 2) ? -1.0 : 1.0;
            const double s2 = alternating ? sgn : 1.0;
            if (double(2 * n) * l[0] <= t + 1e-12)
                alpha += 2.0 * sgn * block_known(gh1, dt, t, double(2 * n) * l[0], tab_g(K1));
            if (double(2 * n) * l[1] <= t + 1e-12)
                alpha += 2.0 * s2 * block_known(gh2, dt, t, double(2 * n) * l[1], tab_g(K2));
            if (double(2 * n) * l[2] <= t + 1e-12)
                alpha += 2.0 * s2 * block_known(gh3, dt, t, double(2 * n) * l[2], tab_g(K3));
        }
        // f1' blocks: 2 sum (-1)^n [f1'(t-(2n-1)l1) + conv]; n=1 is current
        double rhs = alpha;
        for (int n = 2; double(2 * n - 1) * l[0] <= t + 1e-12; ++n) {
            const double sgn = (n % 2) ? -1.0 : 1.0;
            rhs += 2.0 * sgn * block_known(f1p, dt, t, double(2 * n - 1) * l[0], tab_f(K1));
        }
        SplitBlock b = conv_split(tab_f(K1), l[0], t, dt, f1p);
        rhs += -2.0 * b.known;  // known part of the n=1 block
        // equation: -2 (1 + b.coef) f1p(tau) + rhs = 0
        f1p[k] = rhs / (2.0 * (1.0 + b.coef));
    }
    return f1p;
}

GraphState flip_edge1(const GraphState& s) {
    GraphState out = s;
    std::reverse(out.u[0].begin(), out.u[0].end());
    if (!out.ut.empty() && !out.ut[0].empty())
        std::reverse(out.ut[0].begin(), out.ut[0].end());
    return out;
}

ControlPair cycle_control_impl(const MetricGraph& g, const Potential& q,
                               const GraphState& target, double T, bool velocity,
                               const SynthesisOptions& opt, SynthesisDebug* dbg) {
    CycleContext c = make_cycle_context(g, q, T, opt);
    const auto& l = c.l;
    const double dt = c.dt;
    const std::size_t nt = c.nt;

    const auto& prof4 = velocity ? target.ut[3] : target.u[3];
    if (int(prof4.size()) != c.cells[3] + 1)
        throw ValidationError("synthesis: target grid mismatch on e4");
    if (!velocity) {
        auto compat = check_target_compatibility(target, g);
        if (!compat.ok())
            throw ValidationError("synthesis: incompatible shape target: "
                                  + compat.issues[0].message);
    }

    // step 1: far-trace read-off on e4, then the coupled marching
    TimeSignal h4 = trace_from_target(prof4, l[3], c.kers[3], RepKind::ND, velocity, T, dt);
    CycleTraceEquations eqs;
    eqs.lengths = l;
    eqs.T = T;
    eqs.dt = dt;
    for (int e = 0; e < 4; ++e) eqs.kernels[e] = &c.kers[e];
    MarchingSchedule sched = marching_schedule(l, dt, T);
    MarchResult mr = march_solve(eqs, sched, h4);

    TimeSignal g2s(dt, std::vector<double>(nt + 1), Regularity::L2);
    for (std::size_t i = 0; i <= nt; ++i)
        g2s.samples[i] = mr.g1.samples[i] + mr.f21.samples[i];

    // representation-predicted state after step 1
    auto prof = [&](int edge, const TimeSignal& ga, const TimeSignal& other, bool nd) {
        return nd ? profile_nd(ga, other, l[edge], c.kers[edge], T, c.cells[edge], velocity)
                  : profile_nn(ga, other, l[edge], c.kers[edge], T, c.cells[edge], velocity);
    };
    TimeSignal zero = TimeSignal::zeros(T, dt);
    std::vector<double> u2 = prof(1, g2s, h4, false);
    std::vector<double> u3 = prof(2, mr.g1, h4, false);

    // step 2: residuals on the loop edges and their trace read-offs
    const auto& t2 = velocity ? target.ut[1] : target.u[1];
    const auto& t3 = velocity ? target.ut[2] : target.u[2];
    std::vector<double> psi2(t2.size()), psi3(t3.size());
    for (std::size_t i = 0; i < t2.size(); ++i) psi2[i] = t2[i] - u2[i];
    for (std::size_t i = 0; i < t3.size(); ++i) psi3[i] = t3[i] - u3[i];
    TimeSignal gh2 = trace_from_target(psi2, l[1], c.kers[1], RepKind::NN, velocity, T, dt);
    TimeSignal gh3 = trace_from_target(psi3, l[2], c.kers[2], RepKind::NN, velocity, T, dt);
    TimeSignal f22(dt, std::vector<double>(nt + 1), Regularity::L2);
    for (std::size_t i = 0; i <= nt; ++i) f22.samples[i] = gh2.samples[i] - gh3.samples[i];

    std::vector<double> f1p = f1_march({l[0], l[1], l[2]}, T, dt, gh3.samples, gh2.samples,
                                       gh3.samples, &c.kers[0], &c.kers[1], &c.kers[2],
                                       false);
    TimeSignal f1ps(dt, f1p, Regularity::L2);
    TimeSignal f11 = neg_antiderivative(f1ps);
    for (auto& v : f11.samples) v = -v;  // f1^1(t) = +int f1'
    std::size_t kend = std::min(nt, std::size_t(std::llround((T - l[0]) / dt)));
    taper_c1(f11.samples, dt, kend, f1p[kend > 0 ? kend - 1 : 0]);
    f11.tag = Regularity::H1_0;

    // step 3: Dirichlet correction from the achieved e1 state
    TimeSignal g1tot(dt, std::vector<double>(nt + 1), Regularity::L2);
    for (std::size_t i = 0; i <= nt; ++i)
        g1tot.samples[i] = mr.g1.samples[i] + gh3.samples[i];
    std::vector<double> u1 = profile_nd(g1tot, f11, l[0], c.kers[0], T, c.cells[0], velocity);
    const auto& t1s = velocity ? target.ut[0] : target.u[0];
    std::vector<double> psit1(t1s.size());
    for (std::size_t i = 0; i < t1s.size(); ++i)
        psit1[i] = t1s[t1s.size() - 1 - i] - u1[i];  // e1 flipped to rep orientation

    // forward Volterra on the edge grid: p(x) + int_0^x Kf(l1-x, l1-xi) p = psit1
    const int M1 = c.cells[0];
    const double h1 = l[0] / double(M1);
    VolterraOperator vop;
    vop.diagonal = 1.0;
    vop.dt = h1;
    vop.K.resize(M1 + 1);
    for (int i = 0; i <= M1; ++i) {
        vop.K[i].resize(i + 1);
        for (int j = 0; j <= i; ++j)
            vop.K[i][j] = c.kers[0].far_end_diri_value(l[0] - h1 * i, l[0] - h1 * j);
    }
    TimeSignal rhs(h1, psit1, Regularity::L2);
    TimeSignal psol = solve_volterra(vop, rhs);

    TimeSignal f12 = TimeSignal::zeros(T, dt, Regularity::L2);
    if (!velocity) {
        for (std::size_t k = 0; k <= nt; ++k) {
            const double th = double(k) * dt;
            if (th >= T - l[0] - 1e-12)
                f12.samples[k] = psol.value(std::clamp(th - (T - l[0]), 0.0, l[0]));
        }
    } else {
        // p holds (f1^2)'; integrate from T - l1
        double acc = 0.0;
        double prev = 0.0;
        bool started = false;
        for (std::size_t k = 0; k <= nt; ++k) {
            const double th = double(k) * dt;
            if (th < T - l[0] - 1e-12) continue;
            const double pv = psol.value(std::clamp(th - (T - l[0]), 0.0, l[0]));
            if (started) acc += 0.5 * (pv + prev) * dt;
            f12.samples[k] = acc;
            prev = pv;
            started = true;
        }
    }

    ControlPair out;
    out.horizon = T;
    out.f1 = TimeSignal(dt, std::vector<double>(nt + 1), velocity ? Regularity::H1
                                                                  : Regularity::H1_0);
    out.f2 = TimeSignal(dt, std::vector<double>(nt + 1), Regularity::L2);
    for (std::size_t i = 0; i <= nt; ++i) {
        out.f1.samples[i] = f11.samples[i] + f12.samples[i];
        out.f2.samples[i] = mr.f21.samples[i] + f22.samples[i];
    }
    if (dbg) {
        dbg->traces = {mr.g1, g2s, mr.g1, h4};
        dbg->f21 = mr.f21;
        dbg->f22 = f22;
        dbg->f11 = f11;
        dbg->f12 = f12;
        dbg->step1_state = GraphState::zero(g);
        dbg->step1_state.u[1] = u2;
        dbg->step1_state.u[2] = u3;
    }
    return out;
}

}  // namespace

ControlPair cycle_shape_control(const MetricGraph& g, const Potential& q,
                                const GraphState& target, double T,
                                const SynthesisOptions& opt, SynthesisDebug* dbg) {
    if (g.templ != GraphTemplate::CycleWithTails)
        throw ValidationError("cycle_shape_control: wrong template");
    return cycle_control_impl(g, q, target, T, false, opt, dbg);
}

ControlPair cycle_velocity_control(const MetricGraph& g, const Potential& q,
                                   const GraphState& target, double T,
                                   const SynthesisOptions& opt, SynthesisDebug* dbg) {
    if (g.templ != GraphTemplate::CycleWithTails)
        throw ValidationError("cycle_velocity_control: wrong template");
    if (target.ut.size() != 4)
        throw ValidationError("cycle_velocity_control: velocity target profiles missing");
    return cycle_control_impl(g, q, target, T, true, opt, dbg);
}

std::vector<GoursatKernels> synthesis_kernels(const MetricGraph& g, const Potential& q,
                                              double T, double dt) {
    std::vector<GoursatKernels> out;
    out.reserve(g.edges.size());
    const bool flip_first = (g.templ == GraphTemplate::CycleWithTails);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        std::vector<double> qe = (e < q.q.size() && !q.q[e].empty())
            ? q.q[e] : std::vector<double>(g.grid_size(int(e)) + 1, 0.0);
        if (flip_first && e == 0) std::reverse(qe.begin(), qe.end());
        out.push_back(compute_goursat_kernels(qe, g.edges[e].length, T, dt));
    }
    return out;
}

ControlPair star_shape_control(const MetricGraph& g, const Potential& q,
                               const GraphState& target, double T,
                               const SynthesisOptions& opt, SynthesisDebug* dbg) {
    if (g.templ != GraphTemplate::ThreeStar)
        throw ValidationError("star_shape_control: wrong template");
    auto vrep = validate_graph(g);
    if (!vrep.ok())
        throw ValidationError("synthesis: invalid graph: " + vrep.issues[0].message);
    auto compat = check_target_compatibility(target, g);
    if (!compat.ok())
        throw ValidationError("synthesis: incompatible shape target: "
                              + compat.issues[0].message);
    const auto l = g.star_lengths();
    if (T < control_time(g) - 1e-12)
        throw ValidationError("synthesis: horizon below the control time");

    double dt = opt.dt;
    if (dt <= 0.0) {
        double hmin = 1e300;
        for (int e = 0; e < 3; ++e) hmin = std::min(hmin, g.grid_step(e));
        const double dt0 = 0.9 * hmin / std::sqrt(1.0 + q.max_abs() * g.dx * g.dx);
        dt = T / std::max<long>(1, (long)std::ceil(T / dt0 - 1e-12));
    }
    const std::size_t nt = std::size_t(std::llround(T / dt));
    std::vector<GoursatKernels> kers = synthesis_kernels(g, q, T, dt);

    // pass 1: central traces g2, g3 by the interleaved causal solve.
    // m_j lives on the s-grid (s = T - t): m_j(s) = G_j(T - s).
    std::array<int, 3> cells{g.grid_size(0), g.grid_size(1), g.grid_size(2)};
    std::vector<double> g2(nt + 1, 0.0), g3(nt + 1, 0.0);
    std::vector<double> m2(nt + 1, 0.0), m3(nt + 1, 0.0);

    // target equation for edge j at depth chi: diagonal-absorbed solve of
    // m(chi)(1 + w K(chi,chi)) + known = phi(chi)
    auto solve_target_eq = [&](int e, const std::vector<double>& m, std::size_t icur,
                               const std::vector<double>& phi) {
        const double chi = double(icur) * dt;
        const double le = l[std::size_t(e)];
        const double hx = le / double(cells[std::size_t(e)]);
        const double f = std::clamp(chi, 0.0, le) / hx;
        const std::size_t ii = std::min(std::size_t(f), phi.size() - 2);
        const double w = f - double(ii);
        double rhs = phi[ii] * (1.0 - w) + phi[ii + 1] * w;
        double coef = 1.0;
        const KernelTable* tab = tab_g(&kers[std::size_t(e)]);
        // integral over [chi, T]: the s=chi node carries the unknown
        if (tab) {
            double s_prev = chi;
            double k_prev = tab->value(chi, s_prev);
            bool first = true;
            for (std::size_t j = icur + 1; j <= nt; ++j) {
                const double s = double(j) * dt;
                const double kv = tab->value(chi, s);
                const double wgt = 0.5 * (s - s_prev);
                if (first) {
                    coef += wgt * k_prev;
                    first = false;
                } else {
                    rhs -= wgt * k_prev * m[j - 1];
                }
                rhs -= wgt * kv * m[j];
                s_prev = s;
                k_prev = kv;
            }
        }
        // reflections (-1)^n [ m(2nl+chi) + m(2nl-chi) + integrals ]
        for (int n = 1; double(2 * n) * le - chi <= T + 1e-12; ++n) {
            const double sgn = (n % 2) ? -1.0 : 1.0;
            for (int branch = 0; branch < 2; ++branch) {
                const double a = double(2 * n) * le + (branch == 0 ? chi : -chi);
                if (a > T + 1e-12 || a < chi - 1e-12) continue;
                // main reflected sample, folding any weight on the current node
                const double fa = a / dt;
                std::size_t ia = std::min(std::size_t(fa), nt - 1);
                const double wa = fa - double(ia);
                if (ia <= icur) {
                    coef += sgn * (ia == icur ? (1.0 - wa) : 0.0);
                    rhs -= sgn * m[ia + 1] * wa;
                } else {
                    rhs -= sgn * (m[ia] * (1.0 - wa) + m[ia + 1] * wa);
                }
                if (tab && a < T - 1e-15) {
                    // int_a^T W(a,s) m(s) ds; nodes a, grid points, T; any
                    // interpolation weight touching the current node folds
                    // into the diagonal
                    double s_prev = a;
                    double k_prev = tab->value(a, s_prev);
                    const std::size_t j0 = std::size_t(std::ceil(a / dt - 1e-9));
                    for (std::size_t j = std::max(j0, icur); j <= nt + 1; ++j) {
                        const double s = (j <= nt) ? double(j) * dt : T;
                        if (s <= s_prev + 1e-15) {
                            if (j > nt) break;
                            continue;
                        }
                        const double kv = tab->value(a, s);
                        const double wgt = 0.5 * (s - s_prev);
                        // sample at s_prev
                        {
                            const double fs = s_prev / dt;
                            std::size_t is = std::min(std::size_t(fs), nt - 1);
                            const double ws = fs - double(is);
                            if (is == icur)
                                coef += sgn * wgt * k_prev * (1.0 - ws);
                            else
                                rhs -= sgn * wgt * k_prev * m[is] * (1.0 - ws);
                            rhs -= sgn * wgt * k_prev * m[is + 1] * ws;
                        }
                        rhs -= sgn * wgt * kv * m[std::min(j, nt)];
                        s_prev = s;
                        k_prev = kv;
                        if (j > nt) break;
                    }
                }
            }
        }
        return rhs / coef;
    };

    auto front_slope = [&](const std::vector<double>& m, std::size_t icur) {
        if (icur + 2 <= nt)
            return (-3.0 * m[icur] + 4.0 * m[icur + 1] - m[icur + 2]) / (2.0 * dt);
        if (icur + 1 <= nt) return (m[icur + 1] - m[icur]) / (-dt) * (-1.0);
        return 0.0;
    };

    const std::vector<double>& phi1 = target.u[0];
    const std::vector<double>& phi2 = target.u[1];
    const std::vector<double>& phi3 = target.u[2];

    for (std::size_t k = 0; k <= nt; ++k) {
        const double t = double(k) * dt;
        const std::size_t icur = nt - k;
        if (t < T - l[1] - 1e-12) continue;  // everything rests
        // e2 read-off (with reflections) is active from T - l2 on
        m2[icur] = solve_target_eq(1, m2, icur, phi2);
        g2[k] = front_slope(m2, icur);
        if (t < T - l[2] - 1e-12) {
            if (t < l[0] - 1e-12) {
                // center value-sum determines g3 (f1 not yet acting)
                double d3 = conv_self(tab_g(&kers[0]), t, dt, g3)
                    + conv_self(tab_g(&kers[1]), t, dt, g2)
                    + conv_self(tab_g(&kers[2]), t, dt, g3);
                for (int n = 1; double(2 * n) * std::min({l[0], l[1], l[2]}) <= t + 1e-12;
                     ++n) {
                    const double sgn = (n % 2) ? -1.0 : 1.0;
                    if (double(2 * n) * l[0] <= t + 1e-12)
                        d3 += 2.0 * sgn * block_known(g3, dt, t, double(2 * n) * l[0],
                                                      tab_g(&kers[0]));
                    if (double(2 * n) * l[1] <= t + 1e-12)
                        d3 += 2.0 * sgn * block_known(g2, dt, t, double(2 * n) * l[1],
                                                      tab_g(&kers[1]));
                    if (double(2 * n) * l[2] <= t + 1e-12)
                        d3 += 2.0 * sgn * block_known(g3, dt, t, double(2 * n) * l[2],
                                                      tab_g(&kers[2]));
                }
                g3[k] = -(g2[k] + d3) / 2.0;
            } else {
                g3[k] = 0.0;  // free window
            }
            // advance m3 by integrating g3
            m3[icur] = m3[icur + 1 <= nt ? icur + 1 : icur]
                - 0.5 * dt * (g3[k] + (k > 0 ? g3[k - 1] : 0.0));
        } else {
            m3[icur] = solve_target_eq(2, m3, icur, phi3);
            g3[k] = front_slope(m3, icur);
        }
    }

    // pass 2: boundary-control derivative from the center value-sum
    std::vector<double> f1p = f1_march({l[0], l[1], l[2]}, T, dt, g3, g2, g3, &kers[0],
                                       &kers[1], &kers[2], true);
    TimeSignal f1ps(dt, f1p, Regularity::L2);
    TimeSignal f11 = neg_antiderivative(f1ps);
    for (auto& v : f11.samples) v = -v;
    std::size_t kend = std::min(nt, std::size_t(std::llround((T - l[0]) / dt)));
    taper_c1(f11.samples, dt, kend, f1p[kend > 0 ? kend - 1 : 0]);
    f11.tag = Regularity::H1_0;

    // step 2: Dirichlet correction on e1
    TimeSignal g3s(dt, g3, Regularity::L2), g2s(dt, g2, Regularity::L2);
    std::vector<double> u1 = profile_nd(g3s, f11, l[0], kers[0], T, cells[0], false);
    std::vector<double> psit1(phi1.size());
    for (std::size_t i = 0; i < phi1.size(); ++i) psit1[i] = phi1[i] - u1[i];

    const int M1 = cells[0];
    const double h1 = l[0] / double(M1);
    VolterraOperator vop;
    vop.diagonal = 1.0;
    vop.dt = h1;
    vop.K.resize(M1 + 1);
    for (int i = 0; i <= M1; ++i) {
        vop.K[i].resize(i + 1);
        for (int j = 0; j <= i; ++j)
            vop.K[i][j] = kers[0].far_end_diri_value(l[0] - h1 * i, l[0] - h1 * j);
    }
    TimeSignal pr(h1, psit1, Regularity::L2);
    TimeSignal pp = solve_volterra(vop, pr);
    TimeSignal f12 = TimeSignal::zeros(T, dt, Regularity::L2);
    for (std::size_t k = 0; k <= nt; ++k) {
        const double th = double(k) * dt;
        if (th >= T - l[0] - 1e-12)
            f12.samples[k] = pp.value(std::clamp(th - (T - l[0]), 0.0, l[0]));
    }

    ControlPair out;
    out.horizon = T;
    out.f1 = TimeSignal(dt, std::vector<double>(nt + 1), Regularity::H1_0);
    out.f2 = TimeSignal(dt, std::vector<double>(nt + 1), Regularity::L2);
    for (std::size_t i = 0; i <= nt; ++i) {
        out.f1.samples[i] = f11.samples[i] + f12.samples[i];
        out.f2.samples[i] = g2[i] - g3[i];
    }
    if (dbg) {
        dbg->traces.g1 = g3s;
        dbg->traces.g2 = g2s;
        dbg->traces.g3 = g3s;
        dbg->f11 = f11;
        dbg->f12 = f12;
    }
    return out;
}

}  // namespace graphwave
