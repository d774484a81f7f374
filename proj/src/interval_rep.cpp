#include "graphwave/interval_rep.hpp"

#include <algorithm>
#include <cmath>

namespace graphwave {

namespace {

// Trapezoid of K(xi, s) * samp(t - s) over s in [xi, t] on the dt grid.
double kernel_conv(const KernelTable& tab, double xi, double t, double dt,
                   const std::function<double(double)>& samp) {
    if (tab.empty() || t <= xi) return 0.0;
    const long i0 = (long)std::ceil(xi / dt - 1e-12);
    const long it = (long)std::floor(t / dt + 1e-12);
    double acc = 0.0;
    double s_prev = xi;
    double f_prev = tab.value(xi, xi) * samp(t - xi);
    for (long k = i0; k <= it; ++k) {
        const double s = double(k) * dt;
        if (s <= s_prev + 1e-15) continue;
        const double f = tab.value(xi, s) * samp(t - s);
        acc += 0.5 * (f + f_prev) * (s - s_prev);
        s_prev = s;
        f_prev = f;
    }
    if (t > s_prev + 1e-15) {
        const double f = tab.value(xi, t) * samp(0.0);
        acc += 0.5 * (f + f_prev) * (t - s_prev);
    }
    return acc;
}

struct RepContext {
    const TimeSignal* g = nullptr;
    TimeSignal G;          // antiderivative of g
    const TimeSignal* other = nullptr;
    TimeSignal Other_anti;  // H for the NN h-channel
    TimeSignal other_prime; // f' for the ND time derivative
    double l = 0.0;
    const GoursatKernels* ker = nullptr;
    bool nd = false;
    bool deriv = false;
};

double eval_core(const RepContext& c, double x, double t) {
    if (t <= 0.0) return 0.0;
    if (x < -1e-12 || x > c.l + 1e-12)
        throw ValidationError("representation evaluated outside the edge");
    x = std::clamp(x, 0.0, c.l);
    const double dt = c.g->dt;
    double total = 0.0;

    // g-channel: xi = 2nl +- x, sign (-1)^n for ND
    for (int n = 0;; ++n) {
        const double base = 2.0 * double(n) * c.l;
        if (base - x > t) break;
        const double sgn = c.nd ? ((n % 2) ? -1.0 : 1.0) : 1.0;
        for (int branch = 0; branch < 2; ++branch) {
            if (n == 0 && branch == 1) continue;
            const double xi = branch == 0 ? base + x : base - x;
            if (xi > t || xi < -1e-12) continue;
            double main, conv = 0.0;
            if (c.deriv) {
                main = -c.g->value(t - xi);
                if (!c.ker->zero)
                    conv = -kernel_conv(c.ker->control_end, xi, t, dt,
                                        [&](double s) { return c.g->value(s); });
            } else {
                main = antiderivative_value(c.G, *c.g, t - xi);
                if (!c.ker->zero)
                    conv = kernel_conv(c.ker->control_end, xi, t, dt,
                                       [&](double s) { return c.G.value(s); });
            }
            total += sgn * (main + conv);
        }
    }

    // far-end channel: xi = (2n-1)l +- x
    for (int n = 1;; ++n) {
        const double base = double(2 * n - 1) * c.l;
        if (base - x > t) break;
        for (int branch = 0; branch < 2; ++branch) {
            const double xi = branch == 0 ? base - x : base + x;
            if (xi > t || xi < -1e-12) continue;
            if (c.nd) {
                const double sgn = (n % 2) ? 1.0 : -1.0;  // (-1)^(n-1)
                double main, conv = 0.0;
                if (c.deriv) {
                    main = c.other_prime.value(t - xi);
                    if (!c.ker->zero)
                        conv = kernel_conv(c.ker->far_end_diri, xi, t, dt,
                                           [&](double s) { return c.other_prime.value(s); });
                } else {
                    main = c.other->value(t - xi);
                    if (!c.ker->zero)
                        conv = kernel_conv(c.ker->far_end_diri, xi, t, dt,
                                           [&](double s) { return c.other->value(s); });
                }
                total += sgn * (main + conv);
            } else {
                double main, conv = 0.0;
                if (c.deriv) {
                    main = -c.other->value(t - xi);
                    if (!c.ker->zero)
                        conv = -kernel_conv(c.ker->far_end, xi, t, dt,
                                            [&](double s) { return c.other->value(s); });
                } else {
                    main = antiderivative_value(c.Other_anti, *c.other, t - xi);
                    if (!c.ker->zero)
                        conv = kernel_conv(c.ker->far_end, xi, t, dt,
                                           [&](double s) { return c.Other_anti.value(s); });
                }
                total += main + conv;
            }
        }
    }
    return total;
}

RepContext make_context(const TimeSignal& g, const TimeSignal& other, double l,
                        const GoursatKernels& ker, bool nd, bool deriv) {
    RepContext c;
    c.g = &g;
    c.other = &other;
    c.l = l;
    c.ker = &ker;
    c.nd = nd;
    c.deriv = deriv;
    if (!deriv) {
        c.G = neg_antiderivative(g);
        if (!nd) c.Other_anti = neg_antiderivative(other);
    } else if (nd) {
        c.other_prime = derivative(other);
    }
    return c;
}

}  // namespace

double eval_nn(const TimeSignal& g, const TimeSignal& h, double l, const GoursatKernels& ker,
               double x, double t) {
    return eval_core(make_context(g, h, l, ker, false, false), x, t);
}

double eval_nn_dt(const TimeSignal& g, const TimeSignal& h, double l,
                  const GoursatKernels& ker, double x, double t) {
    return eval_core(make_context(g, h, l, ker, false, true), x, t);
}

double eval_nd(const TimeSignal& g, const TimeSignal& f, double l, const GoursatKernels& ker,
               double x, double t) {
    return eval_core(make_context(g, f, l, ker, true, false), x, t);
}

double eval_nd_dt(const TimeSignal& g, const TimeSignal& f, double l,
                  const GoursatKernels& ker, double x, double t) {
    return eval_core(make_context(g, f, l, ker, true, true), x, t);
}

std::vector<double> profile_nn(const TimeSignal& g, const TimeSignal& h, double l,
                               const GoursatKernels& ker, double t, int cells,
                               bool time_derivative) {
    RepContext c = make_context(g, h, l, ker, false, time_derivative);
    std::vector<double> out(cells + 1);
    for (int i = 0; i <= cells; ++i) out[i] = eval_core(c, l * double(i) / cells, t);
    return out;
}

std::vector<double> profile_nd(const TimeSignal& g, const TimeSignal& f, double l,
                               const GoursatKernels& ker, double t, int cells,
                               bool time_derivative) {
    RepContext c = make_context(g, f, l, ker, true, time_derivative);
    std::vector<double> out(cells + 1);
    for (int i = 0; i <= cells; ++i) out[i] = eval_core(c, l * double(i) / cells, t);
    return out;
}

VolterraOperator VolterraOperator::from_function(
    double diagonal, double T, double dt, const std::function<double(double, double)>& k) {
    VolterraOperator op;
    op.diagonal = diagonal;
    op.dt = dt;
    const std::size_t n = std::size_t(std::llround(T / dt)) + 1;
    op.K.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        op.K[i].resize(i + 1);
        for (std::size_t j = 0; j <= i; ++j) op.K[i][j] = k(double(i) * dt, double(j) * dt);
    }
    return op;
}

TimeSignal VolterraOperator::apply(const TimeSignal& y) const {
    if (y.samples.size() != K.size())
        throw ValidationError("volterra apply: grid mismatch");
    TimeSignal out = y;
    for (std::size_t i = 0; i < K.size(); ++i) {
        double integ = 0.0;
        if (i > 0) {
            integ += 0.5 * K[i][0] * y.samples[0];
            for (std::size_t j = 1; j < i; ++j) integ += K[i][j] * y.samples[j];
            integ += 0.5 * K[i][i] * y.samples[i];
            integ *= dt;
        }
        out.samples[i] = diagonal * y.samples[i] + integ;
    }
    return out;
}

TimeSignal solve_volterra(const VolterraOperator& op, const TimeSignal& rhs) {
    if (op.diagonal == 0.0)
        throw NumericalError("solve_volterra: zero diagonal coefficient");
    if (rhs.samples.size() != op.K.size())
        throw ValidationError("solve_volterra: grid mismatch");
    TimeSignal y = rhs;
    for (std::size_t i = 0; i < op.K.size(); ++i) {
        double known = 0.0;
        if (i > 0) {
            known += 0.5 * op.K[i][0] * y.samples[0];
            for (std::size_t j = 1; j < i; ++j) known += op.K[i][j] * y.samples[j];
            known *= op.dt;
        }
        const double coef = op.diagonal + (i > 0 ? 0.5 * op.dt * op.K[i][i] : 0.0);
        if (std::abs(coef) < 1e-14)
            throw NumericalError("solve_volterra: vanishing pivot");
        y.samples[i] = (rhs.samples[i] - known) / coef;
    }
    return y;
}

VolterraOperator ln_operator(int n, const GoursatKernels& ker, double l1, double T, double dt) {
    if (n < 1) throw ValidationError("ln_operator: index must be >= 1");
    const double eta = double(2 * n - 1) * l1;
    return VolterraOperator::from_function(2.0, T, dt, [&](double t, double s) {
        return 2.0 * ker.far_end_diri_value(eta, eta + t - s);
    });
}

TimeSignal apply_ln(const TimeSignal& fprime, int n, const GoursatKernels& ker, double l1) {
    if (ker.zero || ker.edge_length != l1) {
        if (!ker.zero && std::abs(ker.edge_length - l1) > 1e-12)
            throw ValidationError("apply_ln: kernels built for a different edge length");
    }
    const double T = fprime.horizon();
    if (!ker.zero && ker.horizon < T - 1e-12)
        throw ValidationError("apply_ln: kernels built for a shorter horizon");
    VolterraOperator op = ln_operator(n, ker, l1, T, fprime.dt);
    return op.apply(fprime);
}

TimeSignal trace_from_target(const std::vector<double>& profile, double l,
                             const GoursatKernels& ker, RepKind /*kind*/, bool velocity,
                             double T, double dt) {
    const int M = int(profile.size()) - 1;
    if (M < 2) throw ValidationError("trace_from_target: profile too coarse");
    const double h = l / double(M);

    // backward second-kind Volterra on the profile grid:
    //   m(x) + int_x^l W(x,s) m(s) ds = rhs(x)
    std::vector<double> m(M + 1, 0.0);
    const double sgn = velocity ? -1.0 : 1.0;
    for (int i = M; i >= 0; --i) {
        const double xi = h * double(i);
        double acc = sgn * profile[i];
        double coef = 1.0;
        if (!ker.zero) {
            for (int j = i; j <= M; ++j) {
                const double w = h * ((j == i || j == M) ? 0.5 : 1.0);
                const double kv = ker.control_end_value(xi, h * double(j));
                if (j == i)
                    coef += (i == M ? 0.0 : w * kv);
                else
                    acc -= w * kv * m[j];
            }
        }
        m[i] = acc / coef;
    }

    std::vector<double> tracex(M + 1, 0.0);
    if (velocity) {
        tracex = m;  // trace(T - x) = n(x)
    } else {
        for (int i = 1; i < M; ++i) tracex[i] = (m[i + 1] - m[i - 1]) / (2.0 * h);
        tracex[0] = (-3.0 * m[0] + 4.0 * m[1] - m[2]) / (2.0 * h);
        tracex[M] = (3.0 * m[M] - 4.0 * m[M - 1] + m[M - 2]) / (2.0 * h);
    }

    TimeSignal out = TimeSignal::zeros(T, dt, Regularity::L2);
    for (std::size_t k = 0; k < out.samples.size(); ++k) {
        const double x = T - double(k) * dt;
        if (x < -1e-12 || x > l + 1e-12) continue;
        const double f = std::clamp(x, 0.0, l) / h;
        const std::size_t i = std::min(std::size_t(f), std::size_t(M - 1));
        const double w = f - double(i);
        out.samples[k] = tracex[i] * (1.0 - w) + tracex[i + 1] * w;
    }
    return out;
}

}  // namespace graphwave
