#include "graphwave/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace graphwave {

int SpaceTimeField::level_of(double t) const {
    const double k = t / dt;
    const long n = std::llround(k);
    if (std::abs(k - double(n)) > 1e-6 || n < 0 || n >= long(levels()))
        throw ValidationError("requested time is not on the solver grid");
    return int(n);
}

GraphState SpaceTimeField::state_at_level(int n) const {
    GraphState s;
    s.role = StateRole::Residual;
    const int L = int(levels());
    s.u.resize(u.size());
    s.ut.resize(u.size());
    for (std::size_t e = 0; e < u.size(); ++e) {
        s.u[e] = u[e][n];
        const std::size_t m = u[e][n].size();
        s.ut[e].assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (n >= 2 && n == L - 1)
                s.ut[e][i] = (3.0 * u[e][n][i] - 4.0 * u[e][n - 1][i] + u[e][n - 2][i])
                    / (2.0 * dt);
            else if (n >= 1 && n + 1 < L)
                s.ut[e][i] = (u[e][n + 1][i] - u[e][n - 1][i]) / (2.0 * dt);
            else if (n + 2 < L)
                s.ut[e][i] = (-3.0 * u[e][n][i] + 4.0 * u[e][n + 1][i] - u[e][n + 2][i])
                    / (2.0 * dt);
        }
    }
    return s;
}

GraphState SpaceTimeField::final_state() const { return state_at_level(int(levels()) - 1); }

double cfl_time_step(const MetricGraph& g, const Potential& q, double T, double dx) {
    double hmin = 1e300;
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        hmin = std::min(hmin, g.grid_step(int(e)));
    const double dt0 = 0.9 * hmin / std::sqrt(1.0 + q.max_abs() * dx * dx);
    const long nsteps = std::max<long>(1, (long)std::ceil(T / dt0 - 1e-12));
    return T / double(nsteps);
}

namespace {
struct VertexPort {
    int edge;
    int node;      // endpoint node index
    int neighbor;  // adjacent interior node
};
}  // namespace

SpaceTimeField simulate(const MetricGraph& g, const Potential& q, const ControlPair& controls,
                        double T, double dx) {
    MetricGraph gg = g;
    gg.dx = dx;
    auto rep = validate_graph(gg);
    if (!rep.ok()) throw ValidationError("simulate: invalid graph: " + rep.issues[0].message);

    const std::size_t ne = gg.edges.size();
    const double dt = cfl_time_step(gg, q, T, dx);
    const long nsteps = std::llround(T / dt);
    for (std::size_t e = 0; e < ne; ++e)
        if (dt / gg.grid_step(int(e)) > 1.0 + 1e-12)
            throw NumericalError("CFL violation on edge " + gg.edges[e].id);

    TimeSignal f1 = controls.f1, f2 = controls.f2;
    if (!f1.samples.empty() && std::abs(f1.dt - dt) > 1e-12 * dt) f1 = resample(f1, dt);
    if (!f2.samples.empty() && std::abs(f2.dt - dt) > 1e-12 * dt) f2 = resample(f2, dt);

    std::vector<int> M(ne);
    std::vector<double> h(ne), lam2(ne);
    std::vector<std::vector<double>> qe(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        M[e] = gg.grid_size(int(e));
        h[e] = gg.grid_step(int(e));
        lam2[e] = (dt / h[e]) * (dt / h[e]);
        qe[e] = (e < q.q.size() && !q.q[e].empty()) ? q.q[e]
                                                    : std::vector<double>(M[e] + 1, 0.0);
        if (int(qe[e].size()) != M[e] + 1)
            throw ValidationError("potential grid mismatch on edge " + gg.edges[e].id);
    }

    // vertex bookkeeping
    struct VInfo {
        ConditionKind kind;
        std::vector<VertexPort> ports;
        std::vector<int> jump_is_control;  // 1 where the f2 jump applies
    };
    std::vector<VInfo> vinfo(gg.vertices.size());
    for (std::size_t vi = 0; vi < gg.vertices.size(); ++vi) {
        vinfo[vi].kind = gg.vertices[vi].condition.kind;
        for (std::size_t e = 0; e < ne; ++e) {
            if (gg.edges[e].tail == int(vi)) {
                vinfo[vi].ports.push_back({int(e), 0, 1});
                vinfo[vi].jump_is_control.push_back(
                    gg.vertices[vi].condition.control_edge == int(e) ? 1 : 0);
            }
            if (gg.edges[e].head == int(vi)) {
                vinfo[vi].ports.push_back({int(e), M[e], M[e] - 1});
                vinfo[vi].jump_is_control.push_back(
                    gg.vertices[vi].condition.control_edge == int(e) ? 1 : 0);
            }
        }
    }

    SpaceTimeField field;
    field.dt = dt;
    field.dxe = h;
    field.u.resize(ne);
    for (std::size_t e = 0; e < ne; ++e)
        field.u[e].assign(nsteps + 1, std::vector<double>(M[e] + 1, 0.0));

    for (long n = 1; n <= nsteps; ++n) {
        const double t = double(n) * dt;
        const double tb = double(n - 1) * dt;  // stencil time for ghost closures
        for (std::size_t e = 0; e < ne; ++e) {
            const auto& up = field.u[e][n >= 2 ? n - 2 : 0];
            const auto& uc = field.u[e][n - 1];
            auto& un = field.u[e][n];
            for (int i = 1; i < M[e]; ++i)
                un[i] = 2.0 * uc[i] - up[i]
                    + lam2[e] * (uc[i + 1] - 2.0 * uc[i] + uc[i - 1])
                    - dt * dt * qe[e][i] * uc[i];
        }
        const double f2v = f2.value(tb);
        for (std::size_t vi = 0; vi < gg.vertices.size(); ++vi) {
            const auto& V = vinfo[vi];
            if (V.kind == ConditionKind::DirichletControlled) {
                for (const auto& p : V.ports) field.u[p.edge][n][p.node] = f1.value(t);
            } else if (V.kind == ConditionKind::DirichletFixed) {
                for (const auto& p : V.ports) field.u[p.edge][n][p.node] = 0.0;
            } else {
                // ghost closure: d_out u_j = kappa + jump_j at level n-1; the
                // updated endpoint values then satisfy sum_j u_j = 0 exactly.
                double num = 0.0, den = 0.0;
                std::vector<double> base(V.ports.size());
                for (std::size_t k = 0; k < V.ports.size(); ++k) {
                    const auto& p = V.ports[k];
                    const auto& up = field.u[p.edge][n >= 2 ? n - 2 : 0];
                    const auto& uc = field.u[p.edge][n - 1];
                    const double jmp = V.jump_is_control[k] ? f2v : 0.0;
                    base[k] = 2.0 * uc[p.node] - up[p.node]
                        + lam2[p.edge] * (2.0 * uc[p.neighbor] - 2.0 * uc[p.node]
                                          - 2.0 * h[p.edge] * jmp)
                        - dt * dt * qe[p.edge][p.node] * uc[p.node];
                    num += base[k];
                    den += 2.0 * lam2[p.edge] * h[p.edge];
                }
                const double kap = num / den;  // den > 0 for valence >= 1
                for (std::size_t k = 0; k < V.ports.size(); ++k) {
                    const auto& p = V.ports[k];
                    field.u[p.edge][n][p.node] = base[k] - 2.0 * lam2[p.edge] * h[p.edge] * kap;
                }
            }
        }
    }
    return field;
}

namespace {
double trapz_sq(const std::vector<double>& v, double h) {
    double acc = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i)
        acc += 0.5 * (v[i] * v[i] + v[i - 1] * v[i - 1]) * h;
    return acc;
}
double h1_sq(const std::vector<double>& v, double h) {
    std::vector<double> d(v.size(), 0.0);
    const std::size_t n = v.size();
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    if (n >= 3) {
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    }
    return trapz_sq(v, h) + trapz_sq(d, h);
}
}  // namespace

ErrorReport verify_control(const MetricGraph& g, const Potential& q,
                           const ControlPair& controls, const GraphState& target,
                           VerifyMode mode, double T, double dx) {
    MetricGraph gg = g;
    gg.dx = dx;
    SpaceTimeField field = simulate(gg, q, controls, T, dx);
    GraphState fin = field.final_state();

    ErrorReport rep;
    rep.per_edge.resize(gg.edges.size());
    double num_h1 = 0.0, den_h1 = 0.0, num_l2 = 0.0, den_l2 = 0.0;
    for (std::size_t e = 0; e < gg.edges.size(); ++e) {
        const double h = field.dxe[e];
        if (mode != VerifyMode::Velocity) {
            if (target.u[e].size() != fin.u[e].size())
                throw ValidationError("verify: target grid mismatch on edge " + gg.edges[e].id);
            std::vector<double> diff(fin.u[e].size());
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = fin.u[e][i] - target.u[e][i];
            const double eh = h1_sq(diff, h), th = h1_sq(target.u[e], h);
            rep.per_edge[e].abs_h1 = std::sqrt(eh);
            rep.per_edge[e].rel_h1 = std::sqrt(eh / std::max(th, 1e-300));
            num_h1 += eh;
            den_h1 += th;
        }
        if (mode != VerifyMode::Shape) {
            if (target.ut[e].size() != fin.ut[e].size())
                throw ValidationError("verify: velocity target grid mismatch on edge "
                                      + gg.edges[e].id);
            std::vector<double> diff(fin.ut[e].size());
            for (std::size_t i = 0; i < diff.size(); ++i)
                diff[i] = fin.ut[e][i] - target.ut[e][i];
            const double el = trapz_sq(diff, h), tl = trapz_sq(target.ut[e], h);
            rep.per_edge[e].abs_l2 = std::sqrt(el);
            rep.per_edge[e].rel_l2 = std::sqrt(el / std::max(tl, 1e-300));
            num_l2 += el;
            den_l2 += tl;
        }
    }
    if (mode != VerifyMode::Velocity) {
        rep.rel_h1 = std::sqrt(num_h1 / std::max(den_h1, 1e-300));
        rep.shape_checked = true;
    }
    if (mode != VerifyMode::Shape) {
        rep.rel_l2_ut = std::sqrt(num_l2 / std::max(den_l2, 1e-300));
        rep.velocity_checked = true;
    }

    // trace identities measured on the discrete solution
    TimeSignal f2r = controls.f2;
    if (!f2r.samples.empty() && std::abs(f2r.dt - field.dt) > 1e-12 * field.dt)
        f2r = resample(f2r, field.dt);
    double max_jump = 0.0, max_sum = 0.0;
    for (std::size_t vi = 0; vi < gg.vertices.size(); ++vi) {
        if (gg.vertices[vi].condition.kind != ConditionKind::DeltaPrimeInternal) continue;
        const int ce = gg.vertices[vi].condition.control_edge;
        for (std::size_t n = 2; n < field.levels(); ++n) {
            double sum = 0.0;
            double dref = 0.0, dctl = 0.0;
            bool have_ref = false;
            for (std::size_t e = 0; e < gg.edges.size(); ++e) {
                int node = -1, dir = 0;
                if (gg.edges[e].tail == int(vi)) { node = 0; dir = 1; }
                else if (gg.edges[e].head == int(vi)) { node = gg.grid_size(int(e)); dir = -1; }
                else continue;
                const auto& un = field.u[e][n];
                sum += un[node];
                const double h = field.dxe[e];
                const double d = dir > 0
                    ? (-3.0 * un[0] + 4.0 * un[1] - un[2]) / (2.0 * h)
                    : (-3.0 * un[node] + 4.0 * un[node - 1] - un[node - 2]) / (2.0 * h);
                if (int(e) == ce) dctl = d;
                else if (!have_ref) { dref = d; have_ref = true; }
            }
            max_sum = std::max(max_sum, std::abs(sum));
            if (ce >= 0)
                max_jump = std::max(max_jump,
                                    std::abs(dctl - dref - f2r.value(double(n) * field.dt)));
        }
    }
    rep.trace_identity_residual = max_jump;
    rep.vertex_sum_residual = max_sum;
    return rep;
}

double energy(const SpaceTimeField& field, const MetricGraph& g, const Potential& q, double t) {
    const int n = field.level_of(t);
    GraphState s = field.state_at_level(n);
    double acc = 0.0;
    for (std::size_t e = 0; e < field.u.size(); ++e) {
        const double h = field.dxe[e];
        const auto& u = s.u[e];
        const auto& ut = s.ut[e];
        const std::size_t m = u.size();
        std::vector<double> ux(m, 0.0);
        for (std::size_t i = 1; i + 1 < m; ++i) ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        if (m >= 3) {
            ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
            ux[m - 1] = (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) / (2.0 * h);
        }
        std::vector<double> dens(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double qv = (e < q.q.size() && i < q.q[e].size()) ? q.q[e][i] : 0.0;
            dens[i] = 0.5 * (ut[i] * ut[i] + ux[i] * ux[i] + qv * u[i] * u[i]);
        }
        for (std::size_t i = 1; i < m; ++i) acc += 0.5 * (dens[i] + dens[i - 1]) * h;
    }
    return acc;
}

}  // namespace graphwave
