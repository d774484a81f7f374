#include "graphwave/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace graphwave {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

struct Token {
    std::string text;
    int line = 0;
    int col = 0;
};

std::vector<std::vector<Token>> tokenize(const std::string& text) {
    std::vector<std::vector<Token>> lines;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<Token> toks;
        std::size_t i = 0;
        while (i < line.size()) {
            if (std::isspace((unsigned char)line[i])) { ++i; continue; }
            if (line[i] == '#') break;
            std::size_t j = i;
            while (j < line.size() && !std::isspace((unsigned char)line[j])) ++j;
            toks.push_back({line.substr(i, j - i), lineno, int(i) + 1});
            i = j;
        }
        if (!toks.empty()) lines.push_back(std::move(toks));
    }
    return lines;
}

[[noreturn]] void syntax_error(const Token& t, const std::string& expected) {
    throw ParseError("line " + std::to_string(t.line) + ", col " + std::to_string(t.col)
                     + ": expected " + expected + ", got '" + t.text + "'");
}

double parse_num(const Token& t) {
    char* end = nullptr;
    const double v = std::strtod(t.text.c_str(), &end);
    if (end == t.text.c_str() || *end != '\0') syntax_error(t, "a number");
    return v;
}

}  // namespace

ParsedSpec parse_graph_spec(const std::string& text) {
    ParsedSpec spec;
    MetricGraph& g = spec.graph;
    g.templ = GraphTemplate::Generic;
    struct RawEdge {
        std::string id, tail, head;
        double length;
        Token where;
    };
    std::vector<RawEdge> raw_edges;
    struct RawVertex {
        std::string id, kind, control;
        Token where;
    };
    std::vector<RawVertex> raw_vertices;
    std::map<std::string, PotentialSpec> potentials;
    std::set<std::string> edge_ids, vertex_ids;

    for (const auto& toks : tokenize(text)) {
        const std::string key = toks[0].text;
        auto need = [&](std::size_t n) {
            if (toks.size() < n)
                syntax_error(toks.back(), "more fields after '" + toks.back().text + "'");
            if (toks.size() > n)
                syntax_error(toks[n], "end of line");
        };
        if (key == "template") {
            need(2);
            const std::string& t = toks[1].text;
            if (t == "cycle_with_tails") g.templ = GraphTemplate::CycleWithTails;
            else if (t == "three_star") g.templ = GraphTemplate::ThreeStar;
            else if (t == "generic") g.templ = GraphTemplate::Generic;
            else syntax_error(toks[1], "cycle_with_tails|three_star|generic");
        } else if (key == "edge") {
            if (toks.size() != 6 || toks[4].text != "length")
                syntax_error(toks.size() > 4 ? toks[4] : toks.back(),
                             "edge <id> <tail> <head> length <value>");
            if (!edge_ids.insert(toks[1].text).second)
                syntax_error(toks[1], "a fresh edge id (duplicate)");
            raw_edges.push_back({toks[1].text, toks[2].text, toks[3].text,
                                 parse_num(toks[5]), toks[1]});
        } else if (key == "vertex") {
            if (toks.size() != 3 && !(toks.size() == 5 && toks[3].text == "control"))
                syntax_error(toks.back(), "vertex <id> <kind> [control <edge-id>]");
            if (!vertex_ids.insert(toks[1].text).second)
                syntax_error(toks[1], "a fresh vertex id (duplicate)");
            RawVertex v{toks[1].text, toks[2].text, "", toks[1]};
            if (toks.size() == 5) v.control = toks[4].text;
            raw_vertices.push_back(std::move(v));
        } else if (key == "potential") {
            if (toks.size() < 4) syntax_error(toks.back(), "potential <edge> <form> ...");
            PotentialSpec ps;
            if (toks[2].text == "const") {
                need(4);
                ps.kind = PotentialSpec::Constant;
                ps.a = parse_num(toks[3]);
            } else if (toks[2].text == "linear") {
                need(5);
                ps.kind = PotentialSpec::Linear;
                ps.a = parse_num(toks[3]);
                ps.b = parse_num(toks[4]);
            } else if (toks[2].text == "samples") {
                ps.kind = PotentialSpec::Samples;
                for (std::size_t i = 3; i < toks.size(); ++i)
                    ps.samples.push_back(parse_num(toks[i]));
            } else {
                syntax_error(toks[2], "const|linear|samples");
            }
            potentials[toks[1].text] = std::move(ps);
        } else if (key == "dx") {
            need(2);
            spec.params.dx = parse_num(toks[1]);
        } else if (key == "horizon") {
            need(2);
            spec.params.horizon = parse_num(toks[1]);
        } else if (key == "modes") {
            need(2);
            spec.params.modes = int(parse_num(toks[1]));
        } else {
            syntax_error(toks[0], "template|edge|vertex|potential|dx|horizon|modes");
        }
    }

    for (const auto& rv : raw_vertices) {
        GraphVertex v;
        v.id = rv.id;
        if (rv.kind == "dirichlet_controlled")
            v.condition.kind = ConditionKind::DirichletControlled;
        else if (rv.kind == "dirichlet_fixed")
            v.condition.kind = ConditionKind::DirichletFixed;
        else if (rv.kind == "delta_prime")
            v.condition.kind = ConditionKind::DeltaPrimeInternal;
        else
            syntax_error(rv.where, "dirichlet_controlled|dirichlet_fixed|delta_prime");
        g.vertices.push_back(std::move(v));
    }
    for (const auto& re : raw_edges) {
        GraphEdge e;
        e.id = re.id;
        e.length = re.length;
        e.tail = g.vertex_index(re.tail);
        e.head = g.vertex_index(re.head);
        if (e.tail < 0 || e.head < 0)
            throw ParseError("edge " + re.id + " references an unknown vertex");
        g.edges.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < raw_vertices.size(); ++i) {
        if (!raw_vertices[i].control.empty()) {
            const int e = g.edge_index(raw_vertices[i].control);
            if (e < 0)
                throw ParseError("vertex " + raw_vertices[i].id
                                 + " controls an unknown edge");
            g.vertices[i].condition.control_edge = e;
        }
    }
    g.dx = spec.params.dx;

    if (g.templ == GraphTemplate::CycleWithTails) normalize_cycle_labels(g);
    if (g.templ == GraphTemplate::ThreeStar) normalize_star_labels(g);

    // resolve potentials after normalization so per-edge data follows labels
    spec.potential = Potential::zero(g);
    spec.potential_specs.assign(g.edges.size(), PotentialSpec{});
    for (const auto& [eid, ps] : potentials) {
        const int e = g.edge_index(eid);
        if (e < 0) throw ParseError("potential declared for unknown edge " + eid);
        spec.potential_specs[e] = ps;
        const int m = g.grid_size(e);
        const double h = g.grid_step(e);
        auto& qe = spec.potential.q[e];
        if (ps.kind == PotentialSpec::Constant) {
            std::fill(qe.begin(), qe.end(), ps.a);
        } else if (ps.kind == PotentialSpec::Linear) {
            for (int i = 0; i <= m; ++i) qe[i] = ps.a + ps.b * h * double(i);
        } else if (ps.kind == PotentialSpec::Samples) {
            if (int(ps.samples.size()) != m + 1)
                throw ValidationError("potential samples on edge " + eid
                                      + " do not match the grid ("
                                      + std::to_string(ps.samples.size()) + " vs "
                                      + std::to_string(m + 1) + ")");
            qe = ps.samples;
        }
    }

    auto rep = validate_graph(g);
    if (!rep.ok())
        throw ValidationError("graph validation failed: " + rep.issues[0].message);
    return spec;
}

std::string serialize_graph_spec(const ParsedSpec& spec) {
    std::ostringstream out;
    const MetricGraph& g = spec.graph;
    out << "template ";
    switch (g.templ) {
        case GraphTemplate::CycleWithTails: out << "cycle_with_tails"; break;
        case GraphTemplate::ThreeStar: out << "three_star"; break;
        case GraphTemplate::Generic: out << "generic"; break;
    }
    out << "\n";
    for (const auto& e : g.edges)
        out << "edge " << e.id << " " << g.vertices[e.tail].id << " "
            << g.vertices[e.head].id << " length " << format_number(e.length) << "\n";
    for (const auto& v : g.vertices) {
        out << "vertex " << v.id << " ";
        switch (v.condition.kind) {
            case ConditionKind::DirichletControlled: out << "dirichlet_controlled"; break;
            case ConditionKind::DirichletFixed: out << "dirichlet_fixed"; break;
            case ConditionKind::DeltaPrimeInternal:
                out << "delta_prime";
                if (v.condition.control_edge >= 0)
                    out << " control " << g.edges[v.condition.control_edge].id;
                break;
        }
        out << "\n";
    }
    for (std::size_t e = 0; e < spec.potential_specs.size(); ++e) {
        const auto& ps = spec.potential_specs[e];
        if (ps.kind == PotentialSpec::Zero) continue;
        out << "potential " << g.edges[e].id << " ";
        if (ps.kind == PotentialSpec::Constant)
            out << "const " << format_number(ps.a);
        else if (ps.kind == PotentialSpec::Linear)
            out << "linear " << format_number(ps.a) << " " << format_number(ps.b);
        else {
            out << "samples";
            for (double v : ps.samples) out << " " << format_number(v);
        }
        out << "\n";
    }
    out << "dx " << format_number(spec.params.dx) << "\n";
    if (spec.params.horizon > 0.0)
        out << "horizon " << format_number(spec.params.horizon) << "\n";
    out << "modes " << spec.params.modes << "\n";
    return out.str();
}

namespace {
struct TwoColumn {
    std::vector<double> t, v;
    std::map<std::string, std::string> header;
};

TwoColumn read_two_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    TwoColumn tc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                std::string k = line.substr(1, colon - 1);
                std::string v = line.substr(colon + 1);
                auto trim = [](std::string s) {
                    while (!s.empty() && std::isspace((unsigned char)s.front()))
                        s.erase(s.begin());
                    while (!s.empty() && std::isspace((unsigned char)s.back())) s.pop_back();
                    return s;
                };
                tc.header[trim(k)] = trim(v);
            }
            continue;
        }
        std::istringstream ls(line);
        double a, b;
        if (!(ls >> a >> b))
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected two numbers");
        tc.t.push_back(a);
        tc.v.push_back(b);
    }
    if (tc.t.size() < 2) throw ParseError(path + ": needs at least two samples");
    const double dt = tc.t[1] - tc.t[0];
    if (dt <= 0) throw ValidationError(path + ": first column must increase");
    for (std::size_t i = 1; i < tc.t.size(); ++i) {
        const double step = tc.t[i] - tc.t[i - 1];
        if (std::abs(step - dt) > 1e-6 * std::max(1.0, std::abs(dt)))
            throw ValidationError(path + ": first column must be uniform");
    }
    return tc;
}
}  // namespace

TimeSignal read_signal_file(const std::string& path) {
    TwoColumn tc = read_two_column(path);
    TimeSignal s;
    s.dt = tc.t[1] - tc.t[0];
    s.samples = tc.v;
    auto it = tc.header.find("tag");
    s.tag = (it != tc.header.end()) ? regularity_from_string(it->second) : Regularity::L2;
    s.check_tag_invariants();
    return s;
}

void write_signal_file(const std::string& path, const TimeSignal& s) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "# graphwave signal\n";
    out << "# tag: " << to_string(s.tag) << "\n";
    out << "# dt: " << format_number(s.dt) << "\n";
    for (std::size_t i = 0; i < s.samples.size(); ++i)
        out << format_number(double(i) * s.dt) << " " << format_number(s.samples[i]) << "\n";
}

std::vector<double> read_profile_file(const std::string& path, double expected_length,
                                      int expected_cells) {
    TwoColumn tc = read_two_column(path);
    if (std::abs(tc.t.back() - expected_length) > 1e-6 * std::max(1.0, expected_length))
        throw ValidationError(path + ": profile length does not match the edge");
    if (int(tc.v.size()) != expected_cells + 1) {
        // resample onto the edge grid
        std::vector<double> out(expected_cells + 1);
        const double h = expected_length / double(expected_cells);
        const double hin = tc.t[1] - tc.t[0];
        for (int i = 0; i <= expected_cells; ++i) {
            const double x = h * double(i);
            const double f = std::clamp(x / hin, 0.0, double(tc.v.size() - 1));
            const std::size_t k = std::min(std::size_t(f), tc.v.size() - 2);
            const double w = f - double(k);
            out[i] = tc.v[k] * (1.0 - w) + tc.v[k + 1] * w;
        }
        return out;
    }
    return tc.v;
}

void write_controls_csv(const std::string& path, const ControlPair& c) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "t,f1,f2\n";
    for (std::size_t i = 0; i < c.f1.samples.size(); ++i)
        out << format_number(double(i) * c.f1.dt) << "," << format_number(c.f1.samples[i])
            << "," << format_number(i < c.f2.samples.size() ? c.f2.samples[i] : 0.0) << "\n";
}

ControlPair read_controls_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,f1,f2", 0) != 0)
        throw ParseError(path + ": expected header t,f1,f2");
    std::vector<double> t, f1, f2;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double a, b, c;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected t,f1,f2 row");
        t.push_back(a);
        f1.push_back(b);
        f2.push_back(c);
    }
    if (t.size() < 2) throw ParseError(path + ": needs at least two rows");
    ControlPair out;
    const double dt = t[1] - t[0];
    out.f1 = TimeSignal(dt, f1, Regularity::H1);
    out.f2 = TimeSignal(dt, f2, Regularity::L2);
    out.horizon = t.back();
    return out;
}

void write_state_csv(const std::string& path, const GraphState& s, const MetricGraph& g) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "edge,x,u,ut\n";
    for (std::size_t e = 0; e < s.u.size(); ++e) {
        const double h = g.grid_step(int(e));
        for (std::size_t i = 0; i < s.u[e].size(); ++i) {
            const double ut = (e < s.ut.size() && i < s.ut[e].size()) ? s.ut[e][i] : 0.0;
            out << g.edges[e].id << "," << format_number(h * double(i)) << ","
                << format_number(s.u[e][i]) << "," << format_number(ut) << "\n";
        }
    }
}

GraphState read_state_csv(const std::string& path, const MetricGraph& g) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("edge,x,u,ut", 0) != 0)
        throw ParseError(path + ": expected header edge,x,u,ut");
    GraphState s = GraphState::zero(g);
    std::vector<std::size_t> fill(g.edges.size(), 0);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        if (c1 == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad row");
        const int e = g.edge_index(line.substr(0, c1));
        if (e < 0) throw ValidationError(path + ": unknown edge id in row "
                                         + std::to_string(lineno));
        double x, u, ut;
        if (std::sscanf(line.c_str() + c1 + 1, "%lf,%lf,%lf", &x, &u, &ut) != 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad row");
        if (fill[e] >= s.u[e].size())
            throw ValidationError(path + ": too many rows for edge " + g.edges[e].id);
        s.u[e][fill[e]] = u;
        s.ut[e][fill[e]] = ut;
        ++fill[e];
    }
    for (std::size_t e = 0; e < fill.size(); ++e)
        if (fill[e] != s.u[e].size())
            throw ValidationError(path + ": row count mismatch on edge " + g.edges[e].id);
    return s;
}

void Report::add(const std::string& key, const std::string& value) {
    entries.push_back({key, value});
}
void Report::add(const std::string& key, double value) {
    entries.push_back({key, format_number(value)});
}
void Report::add(const std::string& key, long value) {
    entries.push_back({key, std::to_string(value)});
}

std::string Report::to_text() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
    return out.str();
}

ToleranceProfile tolerance_profile_from_env() {
    ToleranceProfile p;
    const char* env = std::getenv("GRAPHWAVE_TOL_PROFILE");
    if (env && std::string(env) == "strict") {
        p.shape_rel_h1 *= 0.5;
        p.velocity_rel_l2 *= 0.5;
        p.exact_rel *= 0.5;
        p.moment_rel *= 0.5;
    }
    return p;
}

}  // namespace graphwave
