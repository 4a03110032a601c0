#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "qamle/refine.hpp"

namespace qamle {

using json = nlohmann::ordered_json;

/// Result of one finite-instance check. passed is equivalent to
/// worst_violation <= tolerance; the witness serializes the worst case.
struct CheckReport {
    std::string name;
    bool passed = false;
    double worst_violation = 0.0;
    double tolerance = 0.0;
    json witness = json::object();
};

namespace detail {

template <class FieldT>
double global_constant(const FieldT& f) {
    return phi_set_or_zero(f, f.support());
}

/// For first-order fields the curve bends through the touching point of the
/// endpoint jets; degenerate pairs fall back to the straight segment.
inline std::optional<index_t> chasles_via(const ScalarField&, index_t, index_t) {
    return std::nullopt;
}

inline std::optional<index_t> chasles_via(const JetField& f, index_t i, index_t j) {
    try {
        const BiponctualSolution sol = biponctual_solve(f, i, j);
        return snap_to_domain(f.domain(), sol.c);
    } catch (const degenerate_field&) {
        return std::nullopt;
    }
}

} // namespace detail

/// Chasles inequality along the discrete monotone curve: the pair value is
/// dominated by the best over curve points of the two-leg maximum, up to
/// mesh slack 1e-6 + 4 h K.
template <class FieldT>
CheckReport check_chasles(const FieldT& f, index_t i, index_t j,
                          std::optional<index_t> via = std::nullopt) {
    const DiscreteDomain& dom = f.domain();
    for (index_t m : half_ball_members(dom, i, j))
        if (!f.has(m))
            throw error("check_chasles: field is not defined on the inflated half-ball");

    if (!via) via = detail::chasles_via(f, i, j);
    const CurveSample curve = chasles_curve(dom, i, j, via);
    const double pair = pair_value(f, i, j);
    const double k = detail::global_constant(f);

    double best = kInf;
    index_t best_point = i;
    for (index_t t : curve.points) {
        double legs = -kInf;
        if (t != i) legs = std::max(legs, pair_value(f, i, t));
        if (t != j) legs = std::max(legs, pair_value(f, t, j));
        if (legs == -kInf) continue;
        if (legs < best) {
            best = legs;
            best_point = t;
        }
    }

    CheckReport report;
    report.name = "chasles";
    report.worst_violation = pair - best;
    report.tolerance = 1e-6 + 4.0 * dom.h() * k;
    report.passed = report.worst_violation <= report.tolerance;
    report.witness = {{"i", i},
                      {"j", j},
                      {"pair_value", pair},
                      {"curve", curve.points},
                      {"best_curve_point", best_point},
                      {"best_leg_max", best}};
    return report;
}

/// After a sequence of local corrections each bounded by C, every pair whose
/// base ball stays inside the union of corrected regions is bounded by C too,
/// up to mesh slack.
template <class FieldT>
CheckReport check_customs(const FieldT& u_final, const std::vector<BallUnion>& omegas, double c) {
    const DiscreteDomain& dom = u_final.domain();
    index_set covered;
    for (const BallUnion& omega : omegas) {
        index_set m = interior_members(dom, omega);
        index_set merged;
        std::set_union(covered.begin(), covered.end(), m.begin(), m.end(),
                       std::back_inserter(merged));
        covered = std::move(merged);
    }

    const double k = detail::global_constant(u_final);
    CheckReport report;
    report.name = "customs";
    report.tolerance = 1e-6 + 4.0 * dom.h() * k;

    double worst = -kInf;
    index_t wx = 0, wy = 0;
    if (!covered.empty()) {
        std::vector<char> inside(dom.size(), 0);
        for (index_t m : covered) inside[m] = 1;
        for (index_t x : covered) {
            const double reach = escape_radius(dom, inside, x);
            for (index_t y : covered) {
                if (y == x || dom.distance(x, y) > reach) continue;
                const double v = pair_value(u_final, x, y) - c;
                if (v > worst) {
                    worst = v;
                    wx = x;
                    wy = y;
                }
            }
        }
    }
    if (worst == -kInf) worst = 0.0; // no admissible pair: vacuously bounded
    report.worst_violation = worst;
    report.passed = report.worst_violation <= report.tolerance;
    report.witness = {{"c", c},
                      {"covered_points", covered.size()},
                      {"regions", omegas.size()},
                      {"worst_pair", {wx, wy}}};
    return report;
}

/// The local correction never raises the global functional value.
template <class FieldT>
CheckReport check_h_monotone(const FieldT& u, const BallUnion& omega,
                             double boundary_factor = kDefaultBoundaryFactor) {
    index_set all(u.domain().size());
    std::iota(all.begin(), all.end(), index_t{0});
    const double before = detail::phi_set_or_zero(u, all);
    const FieldT corrected = local_correction(u, omega, boundary_factor);
    const double after = detail::phi_set_or_zero(corrected, all);

    CheckReport report;
    report.name = "hmono";
    report.worst_violation = after - before;
    report.tolerance = 1e-9;
    report.passed = report.worst_violation <= report.tolerance;
    report.witness = {{"phi_before", before}, {"phi_after", after}};
    return report;
}

/// With zero depth the functional over the closed region splits into the
/// localized part and the boundary part: Phi(f;V) = max{Psi(f;V;0),
/// Phi(f;boundary)}, up to mesh slack 1e-6 + 8 h K.
template <class FieldT>
CheckReport check_prop_alpha_zero(const FieldT& f, const index_set& v,
                                  double boundary_factor = kDefaultBoundaryFactor) {
    const DiscreteDomain& dom = f.domain();
    const index_set boundary = discrete_boundary_of_set(dom, v, boundary_factor);
    index_set closure;
    std::set_union(v.begin(), v.end(), boundary.begin(), boundary.end(),
                   std::back_inserter(closure));

    const double lhs = phi_set(f, closure);
    const double psi = psi_localized(f, v, 0.0, boundary_factor);
    const double boundary_phi = detail::phi_set_or_zero(f, boundary);
    const double rhs = std::max(psi, boundary_phi);
    const double k = detail::global_constant(f);

    CheckReport report;
    report.name = "prop1";
    report.worst_violation = std::abs(lhs - rhs);
    report.tolerance = 1e-6 + 8.0 * dom.h() * k;
    report.passed = report.worst_violation <= report.tolerance;
    report.witness = {{"phi_closure", lhs},
                      {"psi_zero", psi == kNoAdmissiblePair ? json() : json(psi)},
                      {"phi_boundary", boundary_phi}};
    return report;
}

/// Stability of ball coverage under truncation of a ball list: find the
/// smallest prefix such that every domain-centered ball of radius >= beta
/// inside the full union keeps its epsilon-shrink inside the prefix union.
inline CheckReport check_geometrical(const DiscreteDomain& dom, const std::vector<Ball>& balls,
                                     double beta, double epsilon) {
    if (balls.empty()) throw error("check_geometrical: empty ball list");
    if (!(beta > 0.0) || !(epsilon > 0.0))
        throw error("check_geometrical: beta and epsilon must be positive");
    for (const Ball& b : balls)
        if (!(b.radius > beta))
            throw error("check_geometrical: every radius must exceed beta");

    auto union_mask = [&](std::size_t prefix) {
        std::vector<char> inside(dom.size(), 0);
        for (std::size_t t = 0; t < prefix; ++t)
            for (index_t m : ball_members(dom, balls[t].center, balls[t].radius)) inside[m] = 1;
        return inside;
    };

    const std::vector<char> full = union_mask(balls.size());
    // Largest admissible test radius per center; the shrink requirement is
    // monotone in r, so only that radius needs checking.
    std::vector<double> full_escape(dom.size(), 0.0);
    for (index_t x = 0; x < dom.size(); ++x)
        if (full[x]) full_escape[x] = escape_radius(dom, full, x);

    CheckReport report;
    report.name = "geom";
    report.tolerance = 0.0;

    for (std::size_t n = 1; n <= balls.size(); ++n) {
        const std::vector<char> prefix = union_mask(n);
        double deficiency = 0.0;
        index_t worst = 0;
        for (index_t x = 0; x < dom.size(); ++x) {
            if (!full[x] || full_escape[x] < beta) continue;
            double gap;
            if (full_escape[x] == kInf) {
                gap = prefix[x] && escape_radius(dom, prefix, x) == kInf ? 0.0 : kInf;
            } else {
                const double en = prefix[x] ? escape_radius(dom, prefix, x) : 0.0;
                gap = full_escape[x] - epsilon - en;
            }
            if (gap > deficiency) {
                deficiency = gap;
                worst = x;
            }
        }
        if (deficiency <= 0.0) {
            report.passed = true;
            report.worst_violation = 0.0;
            report.witness = {{"n_epsilon", n}, {"beta", beta}, {"epsilon", epsilon}};
            return report;
        }
        if (n == balls.size()) {
            report.passed = false;
            report.worst_violation = deficiency;
            report.witness = {{"n_epsilon", json()}, {"worst_center", worst}};
        }
    }
    return report;
}

/// Continuity probe: perturb the second point of a pair within shrinking
/// radii and require the worst value change to decrease monotonically. The
/// modulus itself is not specified, so the check is informational.
template <class FieldT>
CheckReport check_p4_continuity(const FieldT& f, index_t i, index_t j, double eta_probe) {
    if (!(eta_probe > 0.0)) throw error("check_p4_continuity: eta must be positive");
    const DiscreteDomain& dom = f.domain();
    const double base = pair_value(f, i, j);

    std::vector<double> maxima;
    double eta = eta_probe;
    for (int level = 0; level < 5; ++level) {
        double m = 0.0;
        for (index_t z = 0; z < dom.size(); ++z) {
            if (z == i || !f.has(z) || dom.distance(j, z) > eta) continue;
            m = std::max(m, std::abs(base - pair_value(f, i, z)));
        }
        maxima.push_back(m);
        eta /= 2.0;
    }

    double worst_increase = 0.0;
    for (std::size_t t = 1; t < maxima.size(); ++t)
        worst_increase = std::max(worst_increase, maxima[t] - maxima[t - 1]);

    CheckReport report;
    report.name = "p4";
    report.worst_violation = worst_increase;
    report.tolerance = 1e-12;
    report.passed = report.worst_violation <= report.tolerance;
    report.witness = {{"eta", eta_probe}, {"maxima", maxima}};
    return report;
}

} // namespace qamle
