#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "qamle/functionals.hpp"

namespace qamle {

// ---------------------------------------------------------------------------
// Scalar sup-convolution extensions
// ---------------------------------------------------------------------------

namespace detail {

enum class scalar_extender { upper, lower, average };

inline ScalarField sup_convolution_extend(const ScalarField& f, const index_set& targets,
                                          scalar_extender mode) {
    const DiscreteDomain& dom = f.domain();
    const index_set support = f.support();
    if (support.empty()) throw empty_constraints("extension: constraint data is empty");
    const double lip = phi_set_or_zero(f, support);

    ScalarField out(dom);
    for (index_t e : support) out.set(e, f.at(e));
    for (index_t t : targets) {
        if (out.has(t)) continue; // keep constraint values exact
        double upper = kInf, lower = -kInf;
        for (index_t e : support) {
            const double d = dom.distance(t, e);
            upper = std::min(upper, f.at(e) + lip * d);
            lower = std::max(lower, f.at(e) - lip * d);
        }
        switch (mode) {
            case scalar_extender::upper: out.set(t, upper); break;
            case scalar_extender::lower: out.set(t, lower); break;
            case scalar_extender::average: out.set(t, 0.5 * (upper + lower)); break;
        }
    }
    return out;
}

} // namespace detail

/// Largest extension with the same Lipschitz constant:
/// min over constraints of f(y) + Lip(f;E) d(x,y).
inline ScalarField mcshane_upper(const ScalarField& f, const index_set& targets) {
    return detail::sup_convolution_extend(f, targets, detail::scalar_extender::upper);
}

/// Smallest extension with the same Lipschitz constant:
/// max over constraints of f(y) - Lip(f;E) d(x,y).
inline ScalarField whitney_lower(const ScalarField& f, const index_set& targets) {
    return detail::sup_convolution_extend(f, targets, detail::scalar_extender::lower);
}

/// Midpoint of the two extremal extensions. Symmetric under f -> -f and
/// pointwise between the extremal pair.
inline ScalarField minimal_extension_scalar(const ScalarField& f, const index_set& targets) {
    return detail::sup_convolution_extend(f, targets, detail::scalar_extender::average);
}

// ---------------------------------------------------------------------------
// Biponctual first-order minimal extension
// ---------------------------------------------------------------------------

/// Explicit minimal extension data for a two-point first-order field.
/// The point c is where every minimal extension agrees; the jet there and the
/// sign select the closed-form evaluator below.
struct BiponctualSolution {
    vecd x, y;
    Jet px, py;
    double m = 0.0; // functional value over the pair
    int sign = 1;
    vecd c;
    Jet jet_at_c;
    bool a_zero = false;
};

namespace detail {

inline double poly_eval(cspan base, const Jet& jet, cspan a) { return jet.eval(base, a); }

} // namespace detail

/// Solve the two-point problem: functional value m, sign, touching point c and
/// jet at c, satisfying the identities
///   m = 2 s (P_x(c) - P_y(c)) / (|x-c|^2 + |y-c|^2),
///   c = (x+y)/2 + s (D_x f - D_y f) / (2m),
///   P_x(c) - s m/2 |x-c|^2 = P_y(c) + s m/2 |y-c|^2,
///   D_x f + s m (x-c) = D_y f - s m (y-c).
inline BiponctualSolution biponctual_solve(cspan x, const Jet& px, cspan y, const Jet& py) {
    if (dist2(x, y) == 0.0) throw coincident_points("biponctual_solve: coincident points");
    const double a = a_functional_raw(x, px, y, py);
    const double m = gamma1_pair_raw(x, px, y, py);
    const double scale = std::max({1.0, std::abs(px.value), std::abs(py.value), norm(px.grad),
                                   norm(py.grad)});
    if (m <= 1e-12 * scale)
        throw degenerate_field("biponctual_solve: functional value is zero; every common "
                               "polynomial extends");

    BiponctualSolution sol;
    sol.x.assign(x.begin(), x.end());
    sol.y.assign(y.begin(), y.end());
    sol.px = px;
    sol.py = py;
    sol.m = m;
    sol.a_zero = std::abs(a) <= 1e-12 * m;

    const vecd mid = midpoint_of(x, y);
    const vecd grad_gap = sub(px.grad, py.grad);
    // The sign is fixed by testing the displayed identity for m; with equal
    // residuals (possible when A = 0) the positive sign wins.
    double best_residual = kInf;
    for (int s : {+1, -1}) {
        const vecd c = axpy(mid, static_cast<double>(s) / (2.0 * m), grad_gap);
        const double den = dist2(x, c) + dist2(y, c);
        const double val =
            2.0 * s * (detail::poly_eval(x, px, c) - detail::poly_eval(y, py, c)) / den;
        const double residual = std::abs(m - val);
        if (residual <= 1e-9 * std::max(1.0, m)) {
            sol.sign = s;
            sol.c = c;
            best_residual = residual;
            break;
        }
        if (residual < best_residual) {
            best_residual = residual;
            sol.sign = s;
            sol.c = c;
        }
    }

    const double s = static_cast<double>(sol.sign);
    sol.jet_at_c.value = detail::poly_eval(x, px, sol.c) - s * (m / 2.0) * dist2(x, sol.c);
    sol.jet_at_c.grad = axpy(px.grad, s * m, sub(x, sol.c));
    return sol;
}

inline BiponctualSolution biponctual_solve(const JetField& f, index_t i, index_t j) {
    if (i == j) throw coincident_points("biponctual_solve: i == j");
    return biponctual_solve(f.domain().point(i), f.at(i), f.domain().point(j), f.at(j));
}

/// Value and gradient of the explicit minimal extension at z. With A = 0 a
/// single quadratic formula applies everywhere; otherwise four regions keyed
/// by the signs of p(z) = (x-c).(z-c) and q(z) = (y-c).(z-c), checked in the
/// listed order so interface points resolve deterministically. The branches
/// agree in value and gradient on the interfaces.
inline Jet biponctual_eval_jet(const BiponctualSolution& sol, cspan z) {
    const double s = static_cast<double>(sol.sign);
    const vecd xc = sub(sol.x, sol.c);
    const vecd yc = sub(sol.y, sol.c);
    const double xc2 = norm2(xc);
    const double yc2 = norm2(yc);
    const vecd zc = sub(z, sol.c);
    const double p = dot(xc, zc);
    const double q = dot(yc, zc);

    bool use_x_term = false, use_y_term = false;
    if (sol.a_zero) {
        use_x_term = xc2 > 0.0; // a zero-length leg contributes nothing
        use_y_term = yc2 > 0.0;
    } else if (p >= 0.0 && q <= 0.0) {
        use_x_term = true;
    } else if (p <= 0.0 && q >= 0.0) {
        use_y_term = true;
    } else if (p <= 0.0 && q <= 0.0) {
        // pure polynomial region
    } else {
        use_x_term = use_y_term = true;
    }

    Jet out;
    out.value = sol.jet_at_c.value + dot(sol.jet_at_c.grad, zc);
    out.grad = sol.jet_at_c.grad;
    if (use_x_term) {
        out.value -= s * (sol.m / 2.0) * (p * p) / xc2;
        out.grad = axpy(out.grad, -s * sol.m * p / xc2, xc);
    }
    if (use_y_term) {
        out.value += s * (sol.m / 2.0) * (q * q) / yc2;
        out.grad = axpy(out.grad, s * sol.m * q / yc2, yc);
    }
    return out;
}

inline double biponctual_eval(const BiponctualSolution& sol, cspan z) {
    return biponctual_eval_jet(sol, z).value;
}

/// Points along the broken segment x -> c -> y, count >= 2, endpoints and the
/// touching point included, spaced by arc length.
inline std::vector<vecd> biponctual_curve(const BiponctualSolution& sol, int count) {
    const double len1 = dist(sol.x, sol.c);
    const double len2 = dist(sol.c, sol.y);
    const double total = len1 + len2;
    std::vector<vecd> pts;
    if (len1 == 0.0 || len2 == 0.0) {
        // degenerate: c coincides with an endpoint, single segment
        for (int t = 0; t < count; ++t) {
            const double u = static_cast<double>(t) / (count - 1);
            pts.push_back(axpy(sol.x, u, sub(sol.y, sol.x)));
        }
        return pts;
    }
    int n1 = std::max(2, static_cast<int>(std::lround(count * len1 / total)) + 1);
    n1 = std::min(n1, count - 1);
    const int n2 = count - n1 + 1; // c shared between the legs
    for (int t = 0; t < n1; ++t) {
        const double u = static_cast<double>(t) / (n1 - 1);
        pts.push_back(axpy(sol.x, u, sub(sol.c, sol.x)));
    }
    for (int t = 1; t < n2; ++t) {
        const double u = static_cast<double>(t) / (n2 - 1);
        pts.push_back(axpy(sol.c, u, sub(sol.y, sol.c)));
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Jets of a differentiable function
// ---------------------------------------------------------------------------

/// First-order data of an evaluator over selected domain points. The
/// evaluator returns value and analytic gradient at a coordinate point.
template <class EvalFn>
JetField jets_of_function(const DiscreteDomain& dom, EvalFn&& eval, const index_set& sample) {
    JetField out(dom);
    for (index_t i : sample) out.set(i, eval(dom.point(i)));
    return out;
}

// ---------------------------------------------------------------------------
// Minimal extension dispatch (used as the initial extension of the solver)
// ---------------------------------------------------------------------------

inline ScalarField minimal_extension(const ScalarField& f, const index_set& targets) {
    return minimal_extension_scalar(f, targets);
}

/// First-order minimal extension. Only one- and two-point constraint sets are
/// supported: the one-point case extends the polynomial itself, the two-point
/// case uses the explicit biponctual formulas. Larger first-order constraint
/// sets have no extender here.
inline JetField minimal_extension(const JetField& f, const index_set& targets) {
    const DiscreteDomain& dom = f.domain();
    const index_set support = f.support();
    if (support.empty()) throw empty_constraints("extension: constraint data is empty");

    JetField out(dom);
    for (index_t e : support) out.set(e, f.at(e));

    auto set_polynomial = [&](const Jet& base_jet, cspan base) {
        for (index_t t : targets) {
            if (out.has(t)) continue;
            Jet jet;
            jet.value = base_jet.eval(base, dom.point(t));
            jet.grad = base_jet.grad;
            out.set(t, jet);
        }
    };

    if (support.size() == 1) {
        set_polynomial(f.at(support[0]), dom.point(support[0]));
        return out;
    }
    if (support.size() != 2)
        throw unsupported_operation(
            "first-order minimal extension: only one- or two-point constraint sets are supported");

    try {
        const BiponctualSolution sol = biponctual_solve(f, support[0], support[1]);
        for (index_t t : targets) {
            if (out.has(t)) continue;
            out.set(t, biponctual_eval_jet(sol, dom.point(t)));
        }
    } catch (const degenerate_field&) {
        set_polynomial(f.at(support[0]), dom.point(support[0]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Local correction
// ---------------------------------------------------------------------------

namespace detail {

inline ScalarField extend_from_boundary(const ScalarField& u, const index_set& boundary,
                                        const index_set& interior) {
    const DiscreteDomain& dom = u.domain();
    ScalarField trace(dom);
    for (index_t b : boundary) trace.set(b, u.at(b));
    // Re-extends with the boundary trace's own constant, so the corrected
    // interior carries exactly the boundary's functional value.
    return minimal_extension_scalar(trace, interior);
}

inline JetField extend_from_boundary(const JetField& u, const index_set& boundary,
                                     const index_set& interior) {
    if (boundary.size() != 2)
        throw unsupported_operation(
            "first-order correction: boundary trace must consist of exactly two points");
    const DiscreteDomain& dom = u.domain();
    JetField trace(dom);
    for (index_t b : boundary) trace.set(b, u.at(b));
    return minimal_extension(trace, interior);
}

} // namespace detail

/// Replace a field inside the region by the minimal extension of its own
/// boundary trace. The result equals the input off the interior, and the
/// functional over the interior is bounded by the boundary's value.
template <class FieldT>
FieldT local_correction(const FieldT& u, const BallUnion& omega,
                        double boundary_factor = kDefaultBoundaryFactor) {
    const DiscreteDomain& dom = u.domain();
    const index_set interior = interior_members(dom, omega);
    if (interior.empty()) throw error("local_correction: region has empty interior");
    for (index_t i : interior)
        if (dom.is_constraint(i))
            throw constraint_overlap("local_correction: region interior contains constraint point " +
                                     std::to_string(i));
    const index_set boundary = discrete_boundary_of_set(dom, interior, boundary_factor);
    const FieldT patch = detail::extend_from_boundary(u, boundary, interior);
    FieldT out = u;
    for (index_t i : interior) out.set(i, patch.at(i));
    return out;
}

} // namespace qamle
