#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace graphwave {

/// Error categories mapped to CLI exit codes.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Regularity { L2, H1, H1_0 };

std::string to_string(Regularity r);
Regularity regularity_from_string(const std::string& s);

/// Uniformly sampled scalar function of time on [0, T], T = dt*(n-1).
struct TimeSignal {
    double dt = 0.0;
    std::vector<double> samples;
    Regularity tag = Regularity::L2;

    TimeSignal() = default;
    TimeSignal(double dt_, std::vector<double> s, Regularity tag_ = Regularity::L2)
        : dt(dt_), samples(std::move(s)), tag(tag_) {}

    static TimeSignal zeros(double T, double dt, Regularity tag = Regularity::L2);

    std::size_t size() const { return samples.size(); }
    double horizon() const { return samples.empty() ? 0.0 : dt * double(samples.size() - 1); }

    /// Linear interpolation; zero outside [0, T].
    double value(double t) const;

    /// Support endpoints (first/last sample above threshold), or empty.
    bool support(double& lo, double& hi, double threshold = 1e-12) const;

    void check_tag_invariants() const;  // throws ValidationError
};

/// P(t) = -int_0^t p(s) ds by the trapezoid rule. L2 input is promoted to H1.
TimeSignal neg_antiderivative(const TimeSignal& p);

/// Value of the antiderivative P at off-grid t using the exact integral of the
/// linear interpolant of p (piecewise quadratic); clamps to [0, T].
double antiderivative_value(const TimeSignal& P, const TimeSignal& p, double t);

/// Resample onto a new uniform grid with the same horizon (linear interpolation).
TimeSignal resample(const TimeSignal& s, double new_dt);

/// Centered-difference derivative (one-sided at the ends).
TimeSignal derivative(const TimeSignal& s);

/// Boundary control f1 (Dirichlet at the root) and internal control f2
/// (derivative jump at the controlled internal vertex) on a shared horizon.
struct ControlPair {
    TimeSignal f1;  // H1, f1(0) = 0
    TimeSignal f2;  // L2
    double horizon = 0.0;
};

}  // namespace graphwave
