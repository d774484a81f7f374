#include "graphwave/signal.hpp"

#include <algorithm>
#include <cmath>

namespace graphwave {

std::string to_string(Regularity r) {
    switch (r) {
        case Regularity::L2: return "L2";
        case Regularity::H1: return "H1";
        case Regularity::H1_0: return "H1_0";
    }
    return "L2";
}

Regularity regularity_from_string(const std::string& s) {
    if (s == "L2") return Regularity::L2;
    if (s == "H1") return Regularity::H1;
    if (s == "H1_0") return Regularity::H1_0;
    throw ParseError("unknown regularity tag: " + s);
}

TimeSignal TimeSignal::zeros(double T, double dt, Regularity tag) {
    std::size_t n = static_cast<std::size_t>(std::llround(T / dt)) + 1;
    return TimeSignal(dt, std::vector<double>(n, 0.0), tag);
}

double TimeSignal::value(double t) const {
    if (samples.empty() || t < 0.0) return 0.0;
    const double T = horizon();
    if (t > T + 1e-12 * std::max(1.0, T)) return 0.0;
    if (t >= T) return samples.back();
    const double u = t / dt;
    std::size_t i = std::min(static_cast<std::size_t>(u), samples.size() - 2);
    const double w = u - double(i);
    return samples[i] * (1.0 - w) + samples[i + 1] * w;
}

bool TimeSignal::support(double& lo, double& hi, double threshold) const {
    std::size_t first = samples.size(), last = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (std::abs(samples[i]) > threshold) {
            if (first == samples.size()) first = i;
            last = i;
        }
    }
    if (first == samples.size()) return false;
    lo = double(first) * dt;
    hi = double(last) * dt;
    return true;
}

void TimeSignal::check_tag_invariants() const {
    if (samples.empty()) return;
    if (tag == Regularity::H1_0) {
        const double scale = std::max(1e-30, *std::max_element(
            samples.begin(), samples.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); }));
        if (std::abs(samples.front()) > 1e-9 * std::abs(scale))
            throw ValidationError("H1_0 signal does not vanish at t=0");
    }
}

TimeSignal neg_antiderivative(const TimeSignal& p) {
    TimeSignal out;
    out.dt = p.dt;
    out.tag = (p.tag == Regularity::L2) ? Regularity::H1 : p.tag;
    out.samples.assign(p.samples.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 1; i < p.samples.size(); ++i) {
        acc -= 0.5 * (p.samples[i] + p.samples[i - 1]) * p.dt;
        out.samples[i] = acc;
    }
    return out;
}

double antiderivative_value(const TimeSignal& P, const TimeSignal& p, double t) {
    if (t <= 0.0 || P.samples.empty()) return 0.0;
    const double T = P.horizon();
    if (t >= T) return P.samples.back();
    const std::size_t i = std::min(static_cast<std::size_t>(t / P.dt), P.samples.size() - 2);
    const double r = t - double(i) * P.dt;
    return P.samples[i] - p.samples[i] * r
        - (p.samples[i + 1] - p.samples[i]) * r * r / (2.0 * P.dt);
}

TimeSignal resample(const TimeSignal& s, double new_dt) {
    if (s.samples.empty()) return s;
    TimeSignal out;
    out.dt = new_dt;
    out.tag = s.tag;
    const double T = s.horizon();
    const std::size_t n = static_cast<std::size_t>(std::llround(T / new_dt)) + 1;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = s.value(double(i) * new_dt);
    return out;
}

TimeSignal derivative(const TimeSignal& s) {
    TimeSignal out;
    out.dt = s.dt;
    out.tag = Regularity::L2;
    const std::size_t n = s.samples.size();
    out.samples.assign(n, 0.0);
    if (n < 2) return out;
    out.samples[0] = (s.samples[1] - s.samples[0]) / s.dt;
    out.samples[n - 1] = (s.samples[n - 1] - s.samples[n - 2]) / s.dt;
    for (std::size_t i = 1; i + 1 < n; ++i)
        out.samples[i] = (s.samples[i + 1] - s.samples[i - 1]) / (2.0 * s.dt);
    if (n >= 3) {
        out.samples[0] = (-3.0 * s.samples[0] + 4.0 * s.samples[1] - s.samples[2]) / (2.0 * s.dt);
        out.samples[n - 1] = (3.0 * s.samples[n - 1] - 4.0 * s.samples[n - 2]
                              + s.samples[n - 3]) / (2.0 * s.dt);
    }
    return out;
}

}  // namespace graphwave
