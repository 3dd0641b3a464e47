#include "rareis/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rareis::num {

namespace {

constexpr double kGolden = 0.3819660112501051;  // 2 - golden ratio
constexpr double kInf = std::numeric_limits<double>::infinity();

double mu_of(double w) { return 1.0 - std::exp(-w); }

struct Tracker {
    const std::function<double(double)>* objective;
    double best_w = 0.0;
    double best_f = kInf;
    int evaluations = 0;

    // Non-finite objective values are treated as +inf: the contract only
    // requires finiteness on a sub-interval, and the walk must escape bad
    // regions instead of chasing them.
    double operator()(double w) {
        ++evaluations;
        double f = (*objective)(mu_of(w));
        if (!std::isfinite(f)) f = kInf;
        if (f < best_f) {
            best_f = f;
            best_w = w;
        }
        return f;
    }
};

// Brent minimization on a bracketing triple ax < bx < cx in w-space.
void brent_refine(Tracker& F, double ax, double bx, double cx, double fbx, double tol) {
    double lo = ax, hi = cx;
    double x = bx, w = bx, v = bx;
    double fx = fbx, fw = fbx, fv = fbx;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < 120; ++iter) {
        const double xm = 0.5 * (lo + hi);
        const double tol1 = tol + 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(x);
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - xm) <= tol2 - 0.5 * (hi - lo)) return;
        bool take_golden = true;
        if (std::fabs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            const double etemp = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * etemp) && p > q * (lo - x) && p < q * (hi - x)) {
                d = p / q;
                const double u = x + d;
                if (u - lo < tol2 || hi - u < tol2) d = std::copysign(tol1, xm - x);
                take_golden = false;
            }
        }
        if (take_golden) {
            e = (x >= xm) ? lo - x : hi - x;
            d = kGolden * e;
        }
        const double u = (std::fabs(d) >= tol1) ? x + d : x + std::copysign(tol1, d);
        const double fu = F(u);
        if (fu <= fx) {
            if (u >= x) lo = x; else hi = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) lo = u; else hi = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
}

// Illinois regula falsi for the monotone stationarity condition g(w) = 0,
// given g(a) <= 0 <= g(b). Returns the final abscissa.
double illinois(const std::function<double(double)>& g, double a, double b, double ga, double gb) {
    int side = 0;
    double x = 0.5 * (a + b);
    for (int iter = 0; iter < 120; ++iter) {
        if (gb == ga) break;
        x = (a * gb - b * ga) / (gb - ga);
        if (!(b - a > 1e-13 * std::max(1.0, std::fabs(x)))) break;
        const double gx = g(x);
        if (!std::isfinite(gx)) break;
        if (gx > 0.0) {
            b = x; gb = gx;
            if (side == -1) ga *= 0.5;
            side = -1;
        } else if (gx < 0.0) {
            a = x; ga = gx;
            if (side == +1) gb *= 0.5;
            side = +1;
        } else {
            return x;
        }
    }
    return x;
}

}  // namespace

MinimizeResult minimize_over_mu(const std::function<double(double)>& objective,
                                const MinimizeOptions& options) {
    if (!objective) throw std::invalid_argument("minimize_over_mu: objective must be callable");
    if (!(options.nu_min > 0.0) || !(options.nu_max > options.nu_min))
        throw std::invalid_argument("minimize_over_mu: need 0 < nu_min < nu_max");
    if (!(options.nu_rel_tol > 0.0))
        throw std::invalid_argument("minimize_over_mu: nu_rel_tol must be positive");

    const double wlo = std::log(options.nu_min);
    const double whi = std::log(options.nu_max);
    const double tol = options.nu_rel_tol;
    auto clamp_w = [&](double w) { return std::clamp(w, wlo, whi); };

    Tracker F{&objective};
    MinimizeResult out;

    double w0 = clamp_w(0.0);
    if (options.bracket_hint) {
        const double mid = 0.5 * (options.bracket_hint->first + options.bracket_hint->second);
        if (mid < 1.0) w0 = clamp_w(-std::log1p(-mid));
    }
    const double f0 = F(w0);
    if (w0 != 0.0 && wlo <= 0.0 && whi >= 0.0) F(0.0);  // anchor: never worse than mu = 0

    const double step = M_LN2;
    const double wl = clamp_w(w0 - step);
    const double wr = clamp_w(w0 + step);
    const double fl = (wl < w0) ? F(wl) : kInf;
    const double fr = (wr > w0) ? F(wr) : kInf;

    double ba = 0.0, bb = 0.0, bc = 0.0, fbb = 0.0;
    bool have_bracket = false;
    if (fl >= f0 && fr >= f0 && (fl > f0 || fr > f0)) {
        ba = wl; bb = w0; bc = wr; fbb = f0;
        have_bracket = true;
    } else {
        // March downhill with doubling strides until the objective turns up.
        const int dir = (fr < fl) ? +1 : -1;
        double x_prev = w0, f_prev = f0;
        double x_cur = (dir > 0) ? wr : wl;
        double f_cur = (dir > 0) ? fr : fl;
        double stride = 2.0 * step;
        for (int it = 0; it < 200; ++it) {
            const double x_next = clamp_w(x_cur + dir * stride);
            if (x_next == x_cur) {
                out.boundary_hit = true;  // descending into the domain edge
                break;
            }
            const double f_next = F(x_next);
            if (f_next > f_cur) {
                if (dir > 0) { ba = x_prev; bb = x_cur; bc = x_next; }
                else         { ba = x_next; bb = x_cur; bc = x_prev; }
                fbb = f_cur;
                have_bracket = true;
                break;
            }
            x_prev = x_cur; f_prev = f_cur;
            x_cur = x_next; f_cur = f_next;
            stride *= 2.0;
        }
        (void)f_prev;
        // A dead-flat walk is a constant objective: report mu = 0 rather than
        // a spurious boundary warning.
        if (out.boundary_hit && f_cur == f0 && fl == f0 && fr == f0) {
            out.boundary_hit = false;
            out.mu = mu_of(w0);
            out.value = f0;
            out.evaluations = F.evaluations;
            return out;
        }
    }

    if (have_bracket) {
        out.bracketed = true;
        brent_refine(F, ba, bb, bc, fbb, tol);

        if (options.stationarity) {
            auto g = [&](double w) { return options.stationarity(mu_of(w)); };
            double a = F.best_w, b = F.best_w;
            double ga = 0.0, gb = 0.0;
            double span = std::max(8.0 * tol, 1e-6);
            bool ok_lo = false, ok_hi = false;
            for (int it = 0; it < 80 && !(ok_lo && ok_hi); ++it) {
                if (!ok_lo) {
                    a = clamp_w(F.best_w - span);
                    ga = g(a);
                    if (!std::isfinite(ga)) break;
                    ok_lo = ga <= 0.0;
                    if (!ok_lo && a == wlo) break;
                }
                if (!ok_hi) {
                    b = clamp_w(F.best_w + span);
                    gb = g(b);
                    if (!std::isfinite(gb)) break;
                    ok_hi = gb >= 0.0;
                    if (!ok_hi && b == whi) break;
                }
                span *= 4.0;
            }
            if (ok_lo && ok_hi) F(illinois(g, a, b, ga, gb));
        }
    }

    out.mu = mu_of(F.best_w);
    out.value = F.best_f;
    out.evaluations = F.evaluations;
    return out;
}

}  // namespace rareis::num
