#include "graphwave/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace graphwave {

namespace {

// Fundamental solutions C (C(0)=1, C'(0)=0) and S (S(0)=0, S'(0)=1) of
// -y'' + q y = w^2 y on the edge grid; RK4 when q is nonzero.
struct Fundamental {
    std::vector<double> C, S, Cp, Sp;  // values and derivatives on the grid
};

Fundamental fundamental_solutions(const std::vector<double>& q, double l, double w) {
    const int M = int(q.size()) - 1;
    const double h = l / double(M);
    Fundamental f;
    f.C.resize(M + 1);
    f.S.resize(M + 1);
    f.Cp.resize(M + 1);
    f.Sp.resize(M + 1);
    bool qzero = true;
    for (double v : q)
        if (v != 0.0) { qzero = false; break; }
    if (qzero) {
        for (int i = 0; i <= M; ++i) {
            const double x = h * i;
            f.C[i] = std::cos(w * x);
            f.Cp[i] = -w * std::sin(w * x);
            if (w > 1e-12) {
                f.S[i] = std::sin(w * x) / w;
                f.Sp[i] = std::cos(w * x);
            } else {
                f.S[i] = x;
                f.Sp[i] = 1.0;
            }
        }
        return f;
    }
    auto qat = [&](double x) {
        const double fx = std::clamp(x, 0.0, l) / h;
        const std::size_t i = std::min(std::size_t(fx), q.size() - 2);
        const double wt = fx - double(i);
        return q[i] * (1.0 - wt) + q[i + 1] * wt;
    };
    auto rhs = [&](double x, double y, double yp, double& dy, double& dyp) {
        dy = yp;
        dyp = (qat(x) - w * w) * y;
    };
    double yC = 1.0, ypC = 0.0, yS = 0.0, ypS = 1.0;
    f.C[0] = yC; f.Cp[0] = ypC; f.S[0] = yS; f.Sp[0] = ypS;
    for (int i = 0; i < M; ++i) {
        const double x = h * i;
        auto step = [&](double& y, double& yp) {
            double k1, k1p, k2, k2p, k3, k3p, k4, k4p;
            rhs(x, y, yp, k1, k1p);
            rhs(x + h / 2, y + h / 2 * k1, yp + h / 2 * k1p, k2, k2p);
            rhs(x + h / 2, y + h / 2 * k2, yp + h / 2 * k2p, k3, k3p);
            rhs(x + h, y + h * k3, yp + h * k3p, k4, k4p);
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            yp += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
        };
        step(yC, ypC);
        step(yS, ypS);
        f.C[i + 1] = yC; f.Cp[i + 1] = ypC;
        f.S[i + 1] = yS; f.Sp[i + 1] = ypS;
    }
    return f;
}

struct SecularAssembly {
    const MetricGraph* g;
    const Potential* q;

    Eigen::MatrixXd matrix(double w, std::vector<Fundamental>* funds = nullptr) const {
        const std::size_t ne = g->edges.size();
        std::vector<Fundamental> fs(ne);
        for (std::size_t e = 0; e < ne; ++e) {
            std::vector<double> qe = (e < q->q.size() && !q->q[e].empty())
                ? q->q[e] : std::vector<double>(g->grid_size(int(e)) + 1, 0.0);
            fs[e] = fundamental_solutions(qe, g->edges[e].length, w);
        }
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * ne, 2 * ne);
        int row = 0;
        for (std::size_t vi = 0; vi < g->vertices.size(); ++vi) {
            // incident (edge, at_head) pairs
            std::vector<std::pair<int, bool>> inc;
            for (std::size_t e = 0; e < ne; ++e) {
                if (g->edges[e].tail == int(vi)) inc.push_back({int(e), false});
                if (g->edges[e].head == int(vi)) inc.push_back({int(e), true});
            }
            const auto& cond = g->vertices[vi].condition;
            auto val_coefs = [&](int e, bool at_head, double& ca, double& cb) {
                if (at_head) { ca = fs[e].C.back(); cb = fs[e].S.back(); }
                else { ca = 1.0; cb = 0.0; }
            };
            auto der_coefs = [&](int e, bool at_head, double& ca, double& cb) {
                if (at_head) { ca = -fs[e].Cp.back(); cb = -fs[e].Sp.back(); }
                else { ca = 0.0; cb = 1.0; }
            };
            if (cond.kind == ConditionKind::DeltaPrimeInternal) {
                for (std::size_t k = 1; k < inc.size(); ++k) {
                    double ca0, cb0, ca1, cb1;
                    der_coefs(inc[0].first, inc[0].second, ca0, cb0);
                    der_coefs(inc[k].first, inc[k].second, ca1, cb1);
                    M(row, 2 * inc[0].first) += ca0;
                    M(row, 2 * inc[0].first + 1) += cb0;
                    M(row, 2 * inc[k].first) -= ca1;
                    M(row, 2 * inc[k].first + 1) -= cb1;
                    ++row;
                }
                for (const auto& [e, at_head] : inc) {
                    double ca, cb;
                    val_coefs(e, at_head, ca, cb);
                    M(row, 2 * e) += ca;
                    M(row, 2 * e + 1) += cb;
                }
                ++row;
            } else {
                for (const auto& [e, at_head] : inc) {
                    double ca, cb;
                    val_coefs(e, at_head, ca, cb);
                    M(row, 2 * e) += ca;
                    M(row, 2 * e + 1) += cb;
                    ++row;
                }
            }
        }
        if (funds) *funds = std::move(fs);
        return M;
    }

    double det(double w) const { return matrix(w).determinant(); }
};

}  // namespace

std::vector<SpectralPair> compute_spectrum(const MetricGraph& g, const Potential& q, int N) {
    if (N < 1) throw ValidationError("compute_spectrum: N must be >= 1");
    auto vrep = validate_graph(g);
    if (!vrep.ok())
        throw ValidationError("compute_spectrum: invalid graph: " + vrep.issues[0].message);

    std::vector<SpectralPair> out;
    double total_len = 0.0;
    for (const auto& e : g.edges) total_len += e.length;

    // the cycle with q = 0 has the loop-constant zero mode
    if (g.templ == GraphTemplate::CycleWithTails && q.is_zero()) {
        auto l = g.cycle_lengths();
        SpectralPair z;
        z.omega = 0.0;
        const double c = 1.0 / std::sqrt(l[1] + l[2]);
        z.phi.resize(4);
        for (int e = 0; e < 4; ++e)
            z.phi[e].assign(g.grid_size(e) + 1, e == 1 ? c : (e == 2 ? -c : 0.0));
        z.kappa1 = 0.0;
        z.boundary_derivative = 0.0;
        z.kappa2 = c;
        out.push_back(std::move(z));
        if (int(out.size()) == N) return out;
    }

    SecularAssembly sa{&g, &q};
    const double step = M_PI / (8.0 * total_len);
    double w = std::max(step * 0.5, 1e-3);
    double dprev = sa.det(w);
    int guard = 0;
    while (int(out.size()) < N) {
        if (++guard > 200000)
            throw NumericalError("compute_spectrum: scan failed to locate enough roots");
        const double w2 = w + step;
        const double d2 = sa.det(w2);
        if (dprev == 0.0 || dprev * d2 < 0.0) {
            double a = w, b = w2, fa = dprev;
            for (int it = 0; it < 100; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = sa.det(m);
                if (fa * fm <= 0.0) {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            const double root = 0.5 * (a + b);
            // assemble the eigenfunction from the nullspace
            std::vector<Fundamental> fs;
            Eigen::MatrixXd M = sa.matrix(root, &fs);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
            if (svd.singularValues()(M.rows() - 1) > 1e-4 * svd.singularValues()(0))
                throw NumericalError("compute_spectrum: root refinement failed near omega="
                                     + std::to_string(root));
            Eigen::VectorXd v = svd.matrixV().col(M.cols() - 1);
            SpectralPair p;
            p.omega = root;
            p.phi.resize(g.edges.size());
            double norm2 = 0.0;
            for (std::size_t e = 0; e < g.edges.size(); ++e) {
                const int Me = g.grid_size(int(e));
                const double h = g.grid_step(int(e));
                p.phi[e].resize(Me + 1);
                for (int i = 0; i <= Me; ++i)
                    p.phi[e][i] = v(2 * e) * fs[e].C[i] + v(2 * e + 1) * fs[e].S[i];
                for (int i = 1; i <= Me; ++i)
                    norm2 += 0.5 * (p.phi[e][i] * p.phi[e][i]
                                    + p.phi[e][i - 1] * p.phi[e][i - 1]) * h;
            }
            double sgn = 1.0;
            for (double vv : p.phi[0])
                if (std::abs(vv) > 1e-9) { sgn = vv > 0 ? 1.0 : -1.0; break; }
            const double scale = sgn / std::sqrt(norm2);
            for (auto& pe : p.phi)
                for (auto& vv : pe) vv *= scale;

            // trace coefficients at the control vertices
            int ctrl_vertex = -1, jump_vertex = -1, jump_edge = -1;
            for (std::size_t vi = 0; vi < g.vertices.size(); ++vi) {
                if (g.vertices[vi].condition.kind == ConditionKind::DirichletControlled)
                    ctrl_vertex = int(vi);
                if (g.vertices[vi].condition.kind == ConditionKind::DeltaPrimeInternal &&
                    g.vertices[vi].condition.control_edge >= 0) {
                    jump_vertex = int(vi);
                    jump_edge = g.vertices[vi].condition.control_edge;
                }
            }
            if (ctrl_vertex >= 0) {
                for (std::size_t e = 0; e < g.edges.size(); ++e) {
                    if (g.edges[e].tail == ctrl_vertex)
                        p.boundary_derivative = scale
                            * (v(2 * e) * fs[e].Cp.front() + v(2 * e + 1) * fs[e].Sp.front());
                    else if (g.edges[e].head == ctrl_vertex)
                        p.boundary_derivative = -scale
                            * (v(2 * e) * fs[e].Cp.back() + v(2 * e + 1) * fs[e].Sp.back());
                }
                p.kappa1 = p.boundary_derivative / root;
            }
            if (jump_edge >= 0 && jump_vertex >= 0) {
                p.kappa2 = (g.edges[jump_edge].tail == jump_vertex)
                    ? p.phi[jump_edge].front() : p.phi[jump_edge].back();
            }
            out.push_back(std::move(p));
        }
        w = w2;
        dprev = d2;
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i].omega > out[i - 1].omega))
            throw NumericalError("compute_spectrum: frequencies not strictly increasing");
    return out;
}

TraceGrowthReport trace_growth_check(const std::vector<SpectralPair>& pairs) {
    if (pairs.size() < 10)
        throw ValidationError("trace_growth_check: needs at least 10 modes");
    TraceGrowthReport r;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        r.ratio_boundary.push_back(std::abs(pairs[i].boundary_derivative) / double(i + 1));
        r.ratio_interior.push_back(std::abs(pairs[i].kappa2));
        r.max_boundary = std::max(r.max_boundary, r.ratio_boundary.back());
        r.max_interior = std::max(r.max_interior, r.ratio_interior.back());
    }
    auto flagged = [](const std::vector<double>& ratio) {
        if (ratio.size() < 6) return false;
        std::vector<double> sorted = ratio;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        bool monotone = true;
        for (std::size_t i = ratio.size() - 5; i < ratio.size(); ++i)
            if (ratio[i] <= ratio[i - 1]) monotone = false;
        return monotone && ratio.back() > 2.0 * median;
    };
    r.boundary_flagged = flagged(r.ratio_boundary);
    r.interior_flagged = flagged(r.ratio_interior);
    return r;
}

namespace {
double inner_product(const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b, const MetricGraph& g) {
    double acc = 0.0;
    for (std::size_t e = 0; e < a.size(); ++e) {
        if (a[e].size() != b[e].size())
            throw ValidationError("state inner product: grid mismatch");
        const double h = g.grid_step(int(e));
        for (std::size_t i = 1; i < a[e].size(); ++i)
            acc += 0.5 * (a[e][i] * b[e][i] + a[e][i - 1] * b[e][i - 1]) * h;
    }
    return acc;
}
}  // namespace

MomentTargets fourier_targets(const GraphState& phi1, const GraphState& phi2,
                              const std::vector<SpectralPair>& pairs, const MetricGraph& g) {
    MomentTargets t;
    for (const auto& p : pairs) {
        t.a_omega.push_back(inner_product(phi1.u, p.phi, g) * p.omega);
        t.b.push_back(inner_product(phi2.ut.empty() ? phi2.u : phi2.ut, p.phi, g));
    }
    return t;
}

ControlPair combine_exact_control(const ControlPair& shape, const ControlPair& velocity,
                                  double T) {
    const double dt = shape.f1.dt;
    if (std::abs(shape.f1.horizon() - T) > 1e-9 || std::abs(velocity.f1.horizon() - T) > 1e-9)
        throw ValidationError("combine_exact_control: horizon mismatch");
    if (std::abs(velocity.f1.dt - dt) > 1e-12)
        throw ValidationError("combine_exact_control: grid mismatch");
    const std::size_t nt = shape.f1.samples.size() - 1;
    const std::size_t n2 = 2 * nt;

    TimeSignal f1p_s = derivative(shape.f1);
    TimeSignal f1p_v = derivative(velocity.f1);
    auto extend = [&](const std::vector<double>& p, bool even) {
        std::vector<double> q(n2 + 1, 0.0);
        for (std::size_t i = 0; i <= nt; ++i) q[i] = p[i];
        for (std::size_t i = nt + 1; i <= n2; ++i)
            q[i] = even ? p[2 * nt - i] : -p[2 * nt - i];
        return q;
    };
    std::vector<double> f1p_ext_s = extend(f1p_s.samples, true);
    std::vector<double> f1p_ext_v = extend(f1p_v.samples, false);
    std::vector<double> f2_ext_s = extend(shape.f2.samples, false);
    std::vector<double> f2_ext_v = extend(velocity.f2.samples, true);

    ControlPair out;
    out.horizon = 2.0 * T;
    out.f2 = TimeSignal(dt, std::vector<double>(n2 + 1), Regularity::L2);
    std::vector<double> f1p(n2 + 1);
    for (std::size_t i = 0; i <= n2; ++i) {
        f1p[i] = 0.5 * (f1p_ext_s[i] + f1p_ext_v[i]);
        out.f2.samples[i] = 0.5 * (f2_ext_s[i] + f2_ext_v[i]);
    }
    out.f1 = TimeSignal(dt, std::vector<double>(n2 + 1), Regularity::H1_0);
    double acc = 0.0;
    out.f1.samples[0] = 0.0;
    for (std::size_t i = 1; i <= n2; ++i) {
        acc += 0.5 * (f1p[i] + f1p[i - 1]) * dt;
        out.f1.samples[i] = acc;
    }
    double fmax = 0.0;
    for (double v : out.f1.samples) fmax = std::max(fmax, std::abs(v));
    if (std::abs(out.f1.samples.back()) > 1e-6 * std::max(fmax, 1e-30))
        throw NumericalError("combine_exact_control: combined f1 does not vanish at 2T");
    return out;
}

MomentResidualReport moment_residual(const TimeSignal& f1, const TimeSignal& f2,
                                     const std::vector<SpectralPair>& pairs,
                                     const MomentTargets& targets, double T) {
    MomentResidualReport r;
    const double dt = f1.dt;
    const std::size_t n = f1.samples.size();
    TimeSignal f1p = derivative(f1);
    double tgt2 = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        tgt2 += targets.a_omega[k] * targets.a_omega[k] + targets.b[k] * targets.b[k];
        const double w = pairs[k].omega;
        if (w < 1e-9) {
            r.sine.push_back(0.0);
            r.cosine.push_back(0.0);
            r.form_gap.push_back(0.0);
            r.an3.push_back(0.0);
            continue;
        }
        const double k1 = pairs[k].kappa1, k2 = pairs[k].kappa2;
        double P = 0.0, Q = 0.0, P2 = 0.0, Q2 = 0.0, an3 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = double(i) * dt;
            const double wgt = (i == 0 || i + 1 == n) ? 0.5 * dt : dt;
            const double S = f1.samples[i] * k1 * w - f2.samples[i] * k2;
            const double si = std::sin(w * (T - t)), co = std::cos(w * (T - t));
            P += wgt * S * si;
            Q += wgt * S * co;
            P2 += wgt * (-(f1p.samples[i] * k1 * co + f2.samples[i] * k2 * si));
            Q2 += wgt * (f1p.samples[i] * k1 * si - f2.samples[i] * k2 * co);
            if (t <= T + 1e-12) an3 += wgt * S * si / w;
        }
        r.sine.push_back(std::abs(P - targets.a_omega[k]));
        r.cosine.push_back(std::abs(Q - targets.b[k]));
        r.form_gap.push_back(std::max(std::abs(P - P2), std::abs(Q - Q2)));
        r.an3.push_back(an3);
        r.max_sine = std::max(r.max_sine, r.sine.back());
        r.max_cosine = std::max(r.max_cosine, r.cosine.back());
        r.max_form_gap = std::max(r.max_form_gap, r.form_gap.back());
    }
    r.target_l2 = std::sqrt(tgt2);
    return r;
}

ModalCoefs project_state(const GraphState& s, const std::vector<SpectralPair>& pairs,
                         const MetricGraph& g) {
    ModalCoefs c;
    for (const auto& p : pairs) {
        c.a.push_back(inner_product(s.u, p.phi, g));
        c.b.push_back(s.ut.empty() || s.ut[0].empty() ? 0.0 : inner_product(s.ut, p.phi, g));
    }
    return c;
}

GraphState reconstruct_state(const ModalCoefs& c, const std::vector<SpectralPair>& pairs,
                             const MetricGraph& g) {
    GraphState s = GraphState::zero(g);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        for (std::size_t e = 0; e < s.u.size(); ++e)
            for (std::size_t i = 0; i < s.u[e].size(); ++i) {
                s.u[e][i] += c.a[k] * pairs[k].phi[e][i];
                s.ut[e][i] += c.b[k] * pairs[k].phi[e][i];
            }
    }
    return s;
}

ModalCoefs modal_flow(const ModalCoefs& c, const std::vector<SpectralPair>& pairs,
                      double tau) {
    ModalCoefs out = c;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double w = pairs[k].omega;
        if (w < 1e-9) {
            out.a[k] = c.a[k] + tau * c.b[k];
            out.b[k] = c.b[k];
        } else {
            out.a[k] = c.a[k] * std::cos(w * tau) + c.b[k] * std::sin(w * tau) / w;
            out.b[k] = -c.a[k] * w * std::sin(w * tau) + c.b[k] * std::cos(w * tau);
        }
    }
    return out;
}

}  // namespace graphwave
