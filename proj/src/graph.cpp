#include "graphwave/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace graphwave {

int MetricGraph::edge_index(const std::string& id) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].id == id) return int(i);
    return -1;
}

int MetricGraph::vertex_index(const std::string& id) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
        if (vertices[i].id == id) return int(i);
    return -1;
}

int MetricGraph::grid_size(int e) const {
    return std::max(2, int(std::llround(edges[e].length / dx)));
}

double MetricGraph::grid_step(int e) const {
    return edges[e].length / double(grid_size(e));
}

std::vector<double> MetricGraph::edge_grid(int e) const {
    const int m = grid_size(e);
    const double h = grid_step(e);
    std::vector<double> xs(m + 1);
    for (int i = 0; i <= m; ++i) xs[i] = h * i;
    return xs;
}

std::array<double, 4> MetricGraph::cycle_lengths() const {
    if (templ != GraphTemplate::CycleWithTails || edges.size() != 4)
        throw ValidationError("cycle lengths requested on a non-cycle graph");
    return {edges[0].length, edges[1].length, edges[2].length, edges[3].length};
}

std::array<double, 3> MetricGraph::star_lengths() const {
    if (templ != GraphTemplate::ThreeStar || edges.size() != 3)
        throw ValidationError("star lengths requested on a non-star graph");
    return {edges[0].length, edges[1].length, edges[2].length};
}

MetricGraph make_cycle_graph(const std::array<double, 4>& l, double dx) {
    MetricGraph g;
    g.templ = GraphTemplate::CycleWithTails;
    g.dx = dx;
    g.vertices = {
        {"v1", {ConditionKind::DirichletControlled, -1}},
        {"v2", {ConditionKind::DeltaPrimeInternal, 1}},
        {"v3", {ConditionKind::DeltaPrimeInternal, -1}},
        {"v4", {ConditionKind::DirichletFixed, -1}},
    };
    g.edges = {
        {"e1", 0, 1, l[0]}, {"e2", 1, 2, l[1]}, {"e3", 1, 2, l[2]}, {"e4", 2, 3, l[3]},
    };
    normalize_cycle_labels(g);
    return g;
}

MetricGraph make_star_graph(const std::array<double, 3>& l, double dx) {
    MetricGraph g;
    g.templ = GraphTemplate::ThreeStar;
    g.dx = dx;
    g.vertices = {
        {"v0", {ConditionKind::DeltaPrimeInternal, 1}},
        {"v1", {ConditionKind::DirichletControlled, -1}},
        {"v2", {ConditionKind::DirichletFixed, -1}},
        {"v3", {ConditionKind::DirichletFixed, -1}},
    };
    g.edges = {
        {"e1", 0, 1, l[0]}, {"e2", 0, 2, l[1]}, {"e3", 0, 3, l[2]},
    };
    normalize_star_labels(g);
    return g;
}

namespace {
// Relabels the loop/leaf pair so slot 1 holds the longer edge; the jump control
// stays attached to the edge labeled e2 (the canonical template form).
void swap_edges_23(MetricGraph& g) {
    std::swap(g.edges[1], g.edges[2]);
    std::swap(g.edges[1].id, g.edges[2].id);
    for (auto& v : g.vertices)
        if (v.condition.kind == ConditionKind::DeltaPrimeInternal &&
            v.condition.control_edge >= 0)
            v.condition.control_edge = 1;
    g.swapped23 = !g.swapped23;
}
}  // namespace

void normalize_cycle_labels(MetricGraph& g) {
    if (g.edges.size() == 4 && g.edges[1].length < g.edges[2].length - 1e-15)
        swap_edges_23(g);
}

void normalize_star_labels(MetricGraph& g) {
    if (g.edges.size() == 3 && g.edges[1].length < g.edges[2].length - 1e-15)
        swap_edges_23(g);
}

ValidationReport validate_graph(const MetricGraph& g) {
    ValidationReport rep;
    auto add = [&](const std::string& code, const std::string& msg, double m = 0.0) {
        rep.issues.push_back({code, msg, m});
    };
    for (const auto& e : g.edges) {
        if (!(e.length > 0.0))
            add("nonpositive length", "edge " + e.id + " has nonpositive length", e.length);
        if (e.tail < 0 || e.tail >= int(g.vertices.size()) || e.head < 0 ||
            e.head >= int(g.vertices.size()))
            add("dangling edge", "edge " + e.id + " references a missing vertex");
    }
    if (!(g.dx > 0.0)) add("nonpositive dx", "grid refinement parameter must be positive", g.dx);
    std::set<std::string> ids;
    for (const auto& e : g.edges)
        if (!ids.insert(e.id).second) add("duplicate edge id", "edge id " + e.id + " repeats");

    // per-vertex structural checks
    for (std::size_t vi = 0; vi < g.vertices.size(); ++vi) {
        const auto& v = g.vertices[vi];
        int valence = 0;
        for (const auto& e : g.edges) valence += (e.tail == int(vi)) + (e.head == int(vi));
        if (v.condition.kind == ConditionKind::DeltaPrimeInternal && valence < 2)
            add("delta-prime valence", "vertex " + v.id + " needs >= 2 incident edges",
                valence);
        if (v.condition.control_edge >= int(g.edges.size()))
            add("control attachment", "vertex " + v.id + " control edge out of range");
    }

    if (g.templ == GraphTemplate::CycleWithTails) {
        if (g.edges.size() != 4 || g.vertices.size() != 4) {
            add("template wiring", "cycle template needs exactly 4 edges and 4 vertices");
        } else {
            auto expect = [&](int e, int t, int h) {
                if (g.edges[e].tail != t || g.edges[e].head != h)
                    add("template wiring", "edge " + g.edges[e].id + " is wired incorrectly");
            };
            expect(0, 0, 1);
            expect(1, 1, 2);
            expect(2, 1, 2);
            expect(3, 2, 3);
            if (g.edges[1].length < g.edges[2].length - 1e-12)
                add("label order", "cycle labels must satisfy l2 >= l3 (normalize input)");
            if (g.vertices[0].condition.kind != ConditionKind::DirichletControlled)
                add("template conditions", "v1 must carry the Dirichlet control");
            if (g.vertices[1].condition.kind != ConditionKind::DeltaPrimeInternal ||
                g.vertices[1].condition.control_edge != 1)
                add("template conditions", "v2 must be delta-prime with the jump on e2");
            if (g.vertices[2].condition.kind != ConditionKind::DeltaPrimeInternal ||
                g.vertices[2].condition.control_edge >= 0)
                add("template conditions", "v3 must be delta-prime without control");
            if (g.vertices[3].condition.kind != ConditionKind::DirichletFixed)
                add("template conditions", "v4 must be Dirichlet-fixed");
        }
    } else if (g.templ == GraphTemplate::ThreeStar) {
        if (g.edges.size() != 3 || g.vertices.size() != 4) {
            add("template wiring", "star template needs exactly 3 edges and 4 vertices");
        } else {
            for (int e = 0; e < 3; ++e)
                if (g.edges[e].tail != 0)
                    add("template wiring", "star edges must run from the center v0");
            if (g.edges[1].length < g.edges[2].length - 1e-12)
                add("label order", "star labels must satisfy l2 >= l3 (normalize input)");
            if (g.vertices[0].condition.kind != ConditionKind::DeltaPrimeInternal ||
                g.vertices[0].condition.control_edge != 1)
                add("template conditions", "v0 must be delta-prime with the jump on e2");
            if (g.vertices[1].condition.kind != ConditionKind::DirichletControlled)
                add("template conditions", "v1 must carry the Dirichlet control");
            for (int vi = 2; vi <= 3; ++vi)
                if (g.vertices[vi].condition.kind != ConditionKind::DirichletFixed)
                    add("template conditions", "star leaves must be Dirichlet-fixed");
        }
    }
    return rep;
}

double control_time(const MetricGraph& g) {
    if (g.templ == GraphTemplate::CycleWithTails) {
        auto l = g.cycle_lengths();
        return std::max(l[0] + l[1], l[2] + l[3]);
    }
    if (g.templ == GraphTemplate::ThreeStar) {
        auto l = g.star_lengths();
        return std::max(l[1], l[0] + l[2]);
    }
    throw ValidationError("control_time: unsupported template (Generic)");
}

Potential Potential::zero(const MetricGraph& g) {
    Potential p;
    p.q.resize(g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        p.q[e].assign(g.grid_size(int(e)) + 1, 0.0);
    return p;
}

Potential Potential::constant(const MetricGraph& g, double c) {
    Potential p = zero(g);
    for (auto& qe : p.q) std::fill(qe.begin(), qe.end(), c);
    return p;
}

bool Potential::is_zero() const {
    for (const auto& qe : q)
        for (double v : qe)
            if (v != 0.0) return false;
    return true;
}

double Potential::max_abs() const {
    double m = 0.0;
    for (const auto& qe : q)
        for (double v : qe) m = std::max(m, std::abs(v));
    return m;
}

GraphState GraphState::zero(const MetricGraph& g, StateRole role) {
    GraphState s;
    s.role = role;
    s.u.resize(g.edges.size());
    s.ut.resize(g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        s.u[e].assign(g.grid_size(int(e)) + 1, 0.0);
        s.ut[e].assign(g.grid_size(int(e)) + 1, 0.0);
    }
    return s;
}

namespace {
double trapz_sq(const std::vector<double>& v, double h) {
    double acc = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i)
        acc += 0.5 * (v[i] * v[i] + v[i - 1] * v[i - 1]) * h;
    return acc;
}

std::vector<double> diff_centered(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    if (n >= 3) {
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    } else {
        d[0] = d[1] = (v[1] - v[0]) / h;
    }
    return d;
}
}  // namespace

StateNorms state_norms(const GraphState& s, const MetricGraph& g) {
    if (s.u.size() != g.edges.size())
        throw ValidationError("state_norms: state/graph edge count mismatch");
    double h1sq = 0.0, l2sq = 0.0;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        if (int(s.u[e].size()) != g.grid_size(int(e)) + 1)
            throw ValidationError("state_norms: grid mismatch on edge " + g.edges[e].id);
        const double h = g.grid_step(int(e));
        const double l2e = trapz_sq(s.u[e], h);
        l2sq += l2e;
        h1sq += l2e + trapz_sq(diff_centered(s.u[e], h), h);
    }
    return {std::sqrt(h1sq), std::sqrt(l2sq)};
}

ValidationReport check_target_compatibility(const GraphState& s, const MetricGraph& g,
                                            double tol) {
    ValidationReport rep;
    const double scale = std::max(state_norms(s, g).h1, 1e-30);
    auto add = [&](const std::string& code, double resid, const std::string& where) {
        if (std::abs(resid) > tol * scale)
            rep.issues.push_back({code, "compatibility violated at " + where, resid});
    };
    auto tail = [&](int e) { return s.u[e].front(); };
    auto head = [&](int e) { return s.u[e].back(); };
    if (g.templ == GraphTemplate::CycleWithTails) {
        add("dirichlet end", tail(0), "v1");
        add("dirichlet end", head(3), "v4");
        add("vertex sum", head(0) + tail(1) + tail(2), "v2");
        add("vertex sum", head(1) + head(2) + tail(3), "v3");
    } else if (g.templ == GraphTemplate::ThreeStar) {
        add("dirichlet end", head(0), "v1");
        add("dirichlet end", head(1), "v2");
        add("dirichlet end", head(2), "v3");
        add("vertex sum", tail(0) + tail(1) + tail(2), "v0");
    } else {
        for (std::size_t vi = 0; vi < g.vertices.size(); ++vi) {
            const auto& v = g.vertices[vi];
            double sum = 0.0;
            bool any = false;
            for (std::size_t e = 0; e < g.edges.size(); ++e) {
                if (g.edges[e].tail == int(vi)) { sum += tail(int(e)); any = true; }
                if (g.edges[e].head == int(vi)) { sum += head(int(e)); any = true; }
            }
            if (!any) continue;
            if (v.condition.kind == ConditionKind::DeltaPrimeInternal)
                add("vertex sum", sum, v.id);
            else
                add("dirichlet end", sum, v.id);
        }
    }
    return rep;
}

}  // namespace graphwave
