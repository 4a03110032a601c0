#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qamle/fields.hpp"

namespace qamle {

/// Sentinel returned by the localized functional when no pair is admissible.
inline constexpr double kNoAdmissiblePair = -kInf;

// ---------------------------------------------------------------------------
// Pairwise functionals
// ---------------------------------------------------------------------------

/// |f(x) - f(y)| / d(x,y), the slope of a scalar field over one pair.
inline double lip_pair(const ScalarField& f, index_t i, index_t j) {
    if (i == j) throw coincident_points("lip_pair: i == j");
    const double d = f.domain().distance(i, j);
    if (d == 0.0) throw coincident_points("lip_pair: coincident points");
    return std::abs(f.at(i) - f.at(j)) / d;
}

/// Second-order mismatch of two jets, computed from raw coordinates:
/// (2(f_x - f_y) + (D_x f + D_y f) . (y - x)) / |x - y|^2.
/// Antisymmetric under swapping the pair; the functional below uses |A|.
inline double a_functional_raw(cspan x, const Jet& px, cspan y, const Jet& py) {
    const double d2v = dist2(x, y);
    if (d2v == 0.0) throw coincident_points("a_functional: coincident points");
    double cross = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
        cross += (px.grad[k] + py.grad[k]) * (y[k] - x[k]);
    return (2.0 * (px.value - py.value) + cross) / d2v;
}

/// Gradient mismatch |D_x f - D_y f| / |x - y|. Symmetric, nonnegative.
inline double b_functional_raw(cspan x, const Jet& px, cspan y, const Jet& py) {
    const double d2v = dist2(x, y);
    if (d2v == 0.0) throw coincident_points("b_functional: coincident points");
    double g2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double g = px.grad[k] - py.grad[k];
        g2 += g * g;
    }
    return std::sqrt(g2 / d2v);
}

/// Closed form of the first-order Lipschitz functional over one pair:
/// sqrt(A^2 + B^2) + |A|. Guards against transcription slips by checking
/// that A flips sign exactly under the pair swap.
inline double gamma1_pair_raw(cspan x, const Jet& px, cspan y, const Jet& py) {
    const double a = a_functional_raw(x, px, y, py);
    const double a_swapped = a_functional_raw(y, py, x, px);
    if (std::abs(a + a_swapped) > 1e-12 * std::max(1.0, std::abs(a)))
        throw internal_error("gamma1_pair: A is not antisymmetric under the pair swap");
    const double b = b_functional_raw(x, px, y, py);
    return std::sqrt(a * a + b * b) + std::abs(a);
}

inline double a_functional(const JetField& f, index_t i, index_t j) {
    if (i == j) throw coincident_points("a_functional: i == j");
    return a_functional_raw(f.domain().point(i), f.at(i), f.domain().point(j), f.at(j));
}

inline double b_functional(const JetField& f, index_t i, index_t j) {
    if (i == j) throw coincident_points("b_functional: i == j");
    return b_functional_raw(f.domain().point(i), f.at(i), f.domain().point(j), f.at(j));
}

inline double gamma1_pair(const JetField& f, index_t i, index_t j) {
    if (i == j) throw coincident_points("gamma1_pair: i == j");
    return gamma1_pair_raw(f.domain().point(i), f.at(i), f.domain().point(j), f.at(j));
}

/// Uniform pair evaluation across field kinds.
inline double pair_value(const ScalarField& f, index_t i, index_t j) { return lip_pair(f, i, j); }
inline double pair_value(const JetField& f, index_t i, index_t j) { return gamma1_pair(f, i, j); }

// ---------------------------------------------------------------------------
// Definition-based oracle for the first-order functional
// ---------------------------------------------------------------------------

namespace detail {

/// Branch-and-bound maximization of 2|g(a)| / (|x-a|^2 + |y-a|^2) over a
/// regular grid centered at the pair midpoint. g is affine, so its absolute
/// value over an axis-aligned box is maximized at a corner; the denominator
/// is minimized at the box point nearest the midpoint. Returns the exact
/// maximum over the grid but visits only boxes whose bound survives.
class gamma1_grid_search {
public:
    gamma1_grid_search(cspan x, const Jet& px, cspan y, const Jet& py, double radius, double step)
        : dim_(static_cast<int>(x.size())), step_(step) {
        mid_ = midpoint_of(x, y);
        // g(a) = g0 + w . a   with g(a) = f(x)(a) - f(y)(a)
        g0_ = px.value - dot(px.grad, x) - (py.value - dot(py.grad, y));
        w_ = sub(px.grad, py.grad);
        base_den_ = dist2(x, y) / 2.0; // |x-a|^2 + |y-a|^2 = 2|a-m|^2 + |x-y|^2 / 2
        half_span_ = static_cast<long>(std::floor(radius / step + 1e-12));
    }

    double run() {
        best_ = value_at_offsets(std::vector<long>(dim_, 0));
        std::vector<long> lo(dim_, -half_span_), hi(dim_, half_span_);
        descend(lo, hi);
        return best_;
    }

private:
    double value_at_point(cspan a) const {
        const double num = 2.0 * std::abs(g0_ + dot(w_, a));
        const double den = 2.0 * dist2(a, mid_) + base_den_;
        return num / den;
    }

    double value_at_offsets(const std::vector<long>& k) const {
        vecd a(dim_);
        for (int t = 0; t < dim_; ++t) a[t] = mid_[t] + step_ * static_cast<double>(k[t]);
        return value_at_point(a);
    }

    double box_bound(const std::vector<long>& lo, const std::vector<long>& hi) const {
        double max_abs_g = 0.0;
        // |g| at the 2^dim corners
        for (unsigned mask = 0; mask < (1u << dim_); ++mask) {
            double g = g0_;
            for (int t = 0; t < dim_; ++t) {
                const long k = (mask >> t & 1u) ? hi[t] : lo[t];
                g += w_[t] * (mid_[t] + step_ * static_cast<double>(k));
            }
            max_abs_g = std::max(max_abs_g, std::abs(g));
        }
        double min_sq = 0.0;
        for (int t = 0; t < dim_; ++t) {
            if (lo[t] <= 0 && 0 <= hi[t]) continue;
            const double off = step_ * static_cast<double>(std::min(std::abs(lo[t]), std::abs(hi[t])));
            min_sq += off * off;
        }
        return 2.0 * max_abs_g / (2.0 * min_sq + base_den_);
    }

    void descend(std::vector<long> lo, std::vector<long> hi) {
        if (box_bound(lo, hi) <= best_) return;
        long cells = 1;
        for (int t = 0; t < dim_; ++t) {
            cells *= hi[t] - lo[t] + 1;
            if (cells > 64) break;
        }
        if (cells <= 64) {
            std::vector<long> k(lo);
            for (;;) {
                best_ = std::max(best_, value_at_offsets(k));
                int t = 0;
                while (t < dim_ && ++k[t] > hi[t]) {
                    k[t] = lo[t];
                    ++t;
                }
                if (t == dim_) break;
            }
            return;
        }
        int widest = 0;
        for (int t = 1; t < dim_; ++t)
            if (hi[t] - lo[t] > hi[widest] - lo[widest]) widest = t;
        const long mid = lo[widest] + (hi[widest] - lo[widest]) / 2;
        std::vector<long> hi_left(hi), lo_right(lo);
        hi_left[widest] = mid;
        lo_right[widest] = mid + 1;
        descend(lo, hi_left);
        descend(lo_right, hi);
    }

    int dim_;
    double step_;
    vecd mid_, w_;
    double g0_ = 0.0, base_den_ = 0.0, best_ = 0.0;
    long half_span_ = 0;
};

} // namespace detail

/// Grid maximization of the defining supremum of the first-order functional.
/// Lower-bounds the closed form and converges to it as step -> 0 and
/// radius -> infinity. Test oracle; the closed form is used everywhere else.
inline double gamma1_sup_oracle_raw(cspan x, const Jet& px, cspan y, const Jet& py, double radius,
                                    double step) {
    if (dist2(x, y) == 0.0) throw coincident_points("gamma1_sup_oracle: coincident points");
    if (!(step > 0.0)) throw error("gamma1_sup_oracle: step must be positive");
    return detail::gamma1_grid_search(x, px, y, py, radius, step).run();
}

inline double gamma1_sup_oracle(const JetField& f, index_t i, index_t j, double radius,
                                double step) {
    if (i == j) throw coincident_points("gamma1_sup_oracle: i == j");
    return gamma1_sup_oracle_raw(f.domain().point(i), f.at(i), f.domain().point(j), f.at(j), radius,
                                 step);
}

// ---------------------------------------------------------------------------
// Set suprema
// ---------------------------------------------------------------------------

/// Exact maximum of the pairwise functional over all distinct pairs of D.
template <class FieldT>
double phi_set(const FieldT& f, const index_set& d) {
    if (d.size() < 2) throw too_few_points("phi_set: need at least two points");
    double m = 0.0;
    for (std::size_t a = 0; a < d.size(); ++a)
        for (std::size_t b = a + 1; b < d.size(); ++b)
            m = std::max(m, pair_value(f, d[a], d[b]));
    return m;
}

namespace detail {

/// Pair sup with the empty-pair convention Phi = 0; used where sets of size
/// one arise naturally (e.g. one-point boundaries).
template <class FieldT>
double phi_set_or_zero(const FieldT& f, const index_set& d) {
    if (d.size() < 2) return 0.0;
    return phi_set(f, d);
}

/// Per-point admissibility data for the localized functional over a region:
/// escape(x) = distance to the nearest point outside the region, and
/// depth(x) = distance to the discrete boundary of the region.
struct region_profile {
    index_set interior;
    index_set boundary; // may be empty only when the region covers the domain
    std::vector<double> escape;
    std::vector<double> depth;
};

inline region_profile profile_region(const DiscreteDomain& dom, const index_set& region,
                                     double boundary_factor) {
    region_profile p;
    p.interior = region;
    std::vector<char> inside(dom.size(), 0);
    for (index_t m : region) inside[m] = 1;
    bool covers_all = region.size() == dom.size();
    if (!covers_all) p.boundary = discrete_boundary_of_set(dom, region, boundary_factor);
    p.escape.reserve(region.size());
    p.depth.reserve(region.size());
    for (index_t x : region) {
        p.escape.push_back(escape_radius(dom, inside, x));
        p.depth.push_back(covers_all ? kInf : distance_to_set(dom, x, p.boundary));
    }
    return p;
}

/// Sup of the pairwise functional over pairs (x, y) with B(x; d(x,y))
/// contained in the region and x at depth >= alpha. On a finite domain the
/// open-ball containment is equivalent to d(x,y) <= escape(x).
/// Returns kNoAdmissiblePair when no pair qualifies. If stop_above is finite,
/// the scan returns early once a pair value >= stop_above is seen.
template <class FieldT>
double psi_over_profile(const FieldT& f, const region_profile& p, double alpha,
                        double stop_above = kInf) {
    const DiscreteDomain& dom = f.domain();
    double sup = kNoAdmissiblePair;
    for (std::size_t t = 0; t < p.interior.size(); ++t) {
        if (p.depth[t] < alpha) continue;
        const index_t x = p.interior[t];
        const double reach = p.escape[t];
        if (dom.has_dense_cache()) {
            const auto order = dom.neighbors_by_distance(x);
            for (std::size_t rank = 1; rank < order.size(); ++rank) {
                const index_t y = order[rank];
                if (dom.distance(x, y) > reach) break;
                sup = std::max(sup, pair_value(f, x, y));
                if (sup >= stop_above) return sup;
            }
        } else {
            for (index_t y = 0; y < dom.size(); ++y) {
                if (y == x || dom.distance(x, y) > reach) continue;
                sup = std::max(sup, pair_value(f, x, y));
                if (sup >= stop_above) return sup;
            }
        }
    }
    return sup;
}

} // namespace detail

/// Localized functional over an open region V: sup of pair values whose base
/// ball stays inside V and whose base point sits at depth >= alpha from the
/// discrete boundary of V. Sentinel kNoAdmissiblePair when no pair qualifies.
template <class FieldT>
double psi_localized(const FieldT& f, const index_set& v, double alpha,
                     double boundary_factor = kDefaultBoundaryFactor) {
    if (v.empty()) throw empty_set("psi_localized: region is empty");
    if (alpha < 0.0) throw error("psi_localized: alpha must be nonnegative");
    const auto profile = detail::profile_region(f.domain(), v, boundary_factor);
    return detail::psi_over_profile(f, profile, alpha);
}

} // namespace qamle
