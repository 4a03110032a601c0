#pragma once

#include <memory>

#include "qamle/qamle.hpp"

namespace qt {

using namespace qamle;

/// Uniform grid on [0,1] with n points.
inline std::unique_ptr<DiscreteDomain> grid_1d(int n, index_set constraints) {
    std::vector<vecd> pts;
    for (int k = 0; k < n; ++k) pts.push_back({static_cast<double>(k) / (n - 1)});
    return std::make_unique<DiscreteDomain>(std::move(pts), MetricSpec::euclidean(),
                                            std::move(constraints));
}

/// Uniform grid on [0,1]^2 with n x n points, row-major indexing.
inline std::unique_ptr<DiscreteDomain> grid_2d(int n, index_set constraints) {
    std::vector<vecd> pts;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            pts.push_back({static_cast<double>(c) / (n - 1), static_cast<double>(r) / (n - 1)});
    return std::make_unique<DiscreteDomain>(std::move(pts), MetricSpec::euclidean(),
                                            std::move(constraints));
}

/// Random point cloud in [0,1]^dim with a minimum separation, so that h and
/// pairwise quotients stay well-conditioned.
inline std::unique_ptr<DiscreteDomain> random_cloud(rng64& rng, int count, int dim,
                                                    index_set constraints,
                                                    double min_gap = 1e-3) {
    std::vector<vecd> pts;
    while (static_cast<int>(pts.size()) < count) {
        vecd p(dim);
        for (int k = 0; k < dim; ++k) p[k] = rng.next_unit();
        bool ok = true;
        for (const vecd& q : pts)
            if (dist(p, q) < min_gap) {
                ok = false;
                break;
            }
        if (ok) pts.push_back(std::move(p));
    }
    return std::make_unique<DiscreteDomain>(std::move(pts), MetricSpec::euclidean(),
                                            std::move(constraints));
}

inline ScalarField random_scalar_field(rng64& rng, const DiscreteDomain& dom,
                                       const index_set& support, double lo = -1.0,
                                       double hi = 1.0) {
    ScalarField f(dom);
    for (index_t i : support) f.set(i, rng.next_in(lo, hi));
    return f;
}

inline Jet random_jet(rng64& rng, int dim) {
    Jet jet;
    jet.value = rng.next_in(-1.0, 1.0);
    jet.grad.resize(dim);
    for (int k = 0; k < dim; ++k) jet.grad[k] = rng.next_in(-1.0, 1.0);
    return jet;
}

inline index_set all_indices(const DiscreteDomain& dom) {
    index_set all(dom.size());
    std::iota(all.begin(), all.end(), index_t{0});
    return all;
}

/// Exhaustive pair maximum, independent of phi_set's implementation path.
template <class FieldT>
double brute_force_sup(const FieldT& f, const index_set& d) {
    double m = 0.0;
    for (std::size_t a = 0; a < d.size(); ++a)
        for (std::size_t b = 0; b < d.size(); ++b)
            if (a != b) m = std::max(m, pair_value(f, d[a], d[b]));
    return m;
}

/// Brute-force grid maximum of the defining quotient of the first-order
/// functional; reference for the pruned search.
inline double brute_force_gamma1_grid(cspan x, const Jet& px, cspan y, const Jet& py,
                                      double radius, double step) {
    const int dim = static_cast<int>(x.size());
    const vecd mid = midpoint_of(x, y);
    const long half = static_cast<long>(std::floor(radius / step + 1e-12));
    const long per_axis = 2 * half + 1;
    long total = 1;
    for (int k = 0; k < dim; ++k) total *= per_axis;
    double best = 0.0;
    vecd a(dim);
    for (long flat = 0; flat < total; ++flat) {
        long rest = flat;
        for (int k = 0; k < dim; ++k) {
            a[k] = mid[k] + step * static_cast<double>(rest % per_axis - half);
            rest /= per_axis;
        }
        const double num = std::abs(px.eval(x, a) - py.eval(y, a));
        const double den = dist2(x, a) + dist2(y, a);
        best = std::max(best, 2.0 * num / den);
    }
    return best;
}

} // namespace qt
