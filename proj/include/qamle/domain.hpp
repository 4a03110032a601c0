#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "qamle/errors.hpp"
#include "qamle/vec.hpp"

namespace qamle {

using index_t = std::uint32_t;
using index_set = std::vector<index_t>; // canonical form: sorted ascending, unique

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense distance matrix and per-row neighbor orderings are kept only up to
/// this point count; beyond it distances are computed on demand.
inline constexpr std::size_t kDenseCacheLimit = 4096;

/// Default thickness factor of the discrete boundary layer, in units of h.
inline constexpr double kDefaultBoundaryFactor = 1.5;

struct MetricSpec {
    enum class Kind { euclidean, graph } kind = Kind::euclidean;
    int k_neighbors = 0; // graph only

    static MetricSpec euclidean() { return {}; }
    static MetricSpec graph(int k) { return {Kind::graph, k}; }
};

/// Finite point cloud standing in for a compact metric domain. Holds the
/// metric, the mesh scale h, and the constraint subset E on which data is
/// prescribed. Immutable after construction; all queries are const.
class DiscreteDomain {
public:
    DiscreteDomain(std::vector<vecd> points, MetricSpec metric, index_set constraints,
                   double h = 0.0 /* 0 = derive from the point cloud */)
        : metric_(metric) {
        n_ = points.size();
        if (n_ == 0) throw parse_error("domain: empty point list");
        dim_ = static_cast<int>(points[0].size());
        if (dim_ < 1) throw parse_error("domain: points must have dimension >= 1");
        coords_.reserve(n_ * dim_);
        for (std::size_t i = 0; i < n_; ++i) {
            if (static_cast<int>(points[i].size()) != dim_)
                throw parse_error("domain: point " + std::to_string(i) + " has inconsistent dimension");
            coords_.insert(coords_.end(), points[i].begin(), points[i].end());
        }
        if (metric_.kind == MetricSpec::Kind::graph) {
            if (metric_.k_neighbors < 1) throw parse_error("domain: graph metric requires k >= 1");
            build_knn_graph();
        }
        if (n_ <= kDenseCacheLimit) build_dense_matrix();
        check_distinct_points();
        init_h(h);
        set_constraints(std::move(constraints));
    }

    std::size_t size() const { return n_; }
    int dim() const { return dim_; }
    double h() const { return h_; }
    const MetricSpec& metric() const { return metric_; }
    bool has_dense_cache() const { return !dist_.empty(); }

    cspan point(index_t i) const {
        check_index(i);
        return cspan(coords_.data() + static_cast<std::size_t>(i) * dim_, dim_);
    }

    const index_set& constraint_set() const { return constraints_; }
    bool is_constraint(index_t i) const { check_index(i); return is_constraint_[i] != 0; }

    /// Metric distance between two domain points. Exact for the euclidean
    /// metric; exact shortest-path length for the graph metric.
    double distance(index_t i, index_t j) const {
        check_index(i);
        check_index(j);
        if (!dist_.empty()) return dist_[static_cast<std::size_t>(i) * n_ + j];
        if (metric_.kind == MetricSpec::Kind::euclidean) return dist(point(i), point(j));
        return graph_row(i)[j];
    }

    double diameter() const {
        double d = 0.0;
        for (index_t i = 0; i < n_; ++i)
            for (index_t j = i + 1; j < n_; ++j) d = std::max(d, distance(i, j));
        return d;
    }

    /// Indices of all points sorted by distance from i (self first).
    /// Only available with the dense cache; built lazily, thread-safe.
    std::span<const index_t> neighbors_by_distance(index_t i) const {
        check_index(i);
        if (dist_.empty())
            throw unsupported_operation("neighbors_by_distance: domain exceeds the dense cache limit");
        std::call_once(order_once_, [this] { build_order(); });
        return std::span<const index_t>(order_.data() + static_cast<std::size_t>(i) * n_, n_);
    }

    /// Domain point minimizing max{d(i,m), d(m,j)}; ties broken by lowest index.
    index_t midpoint(index_t i, index_t j) const {
        check_index(i);
        check_index(j);
        if (i == j) throw coincident_points("midpoint: i == j");
        index_t best = 0;
        double best_val = kInf;
        for (index_t m = 0; m < n_; ++m) {
            const double v = std::max(distance(i, m), distance(m, j));
            if (v < best_val) {
                best_val = v;
                best = m;
            }
        }
        return best;
    }

private:
    void check_index(index_t i) const {
        if (i >= n_) throw index_error("point index " + std::to_string(i) + " out of range");
    }

    void check_distinct_points() const {
        // With the dense cache this is a full pairwise check; otherwise a
        // lexicographic sort finds coincident coordinates.
        if (!dist_.empty()) {
            for (index_t i = 0; i < n_; ++i)
                for (index_t j = i + 1; j < n_; ++j)
                    if (metric_.kind == MetricSpec::Kind::euclidean
                            ? dist_[static_cast<std::size_t>(i) * n_ + j] == 0.0
                            : dist2(point(i), point(j)) == 0.0)
                        throw parse_error("domain: points " + std::to_string(i) + " and " +
                                          std::to_string(j) + " coincide");
            return;
        }
        std::vector<index_t> idx(n_);
        std::iota(idx.begin(), idx.end(), index_t{0});
        std::sort(idx.begin(), idx.end(), [this](index_t a, index_t b) {
            const cspan pa = point(a), pb = point(b);
            return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
        });
        for (std::size_t k = 1; k < n_; ++k)
            if (dist2(point(idx[k - 1]), point(idx[k])) == 0.0)
                throw parse_error("domain: points " + std::to_string(idx[k - 1]) + " and " +
                                  std::to_string(idx[k]) + " coincide");
    }

    void init_h(double h) {
        if (n_ == 1) {
            h_ = h > 0.0 ? h : 1.0;
            return;
        }
        double max_gap = 0.0;
        for (index_t i = 0; i < n_; ++i) {
            double nearest = kInf;
            for (index_t j = 0; j < n_; ++j)
                if (j != i) nearest = std::min(nearest, distance(i, j));
            max_gap = std::max(max_gap, nearest);
        }
        if (h > 0.0) {
            // Supplied h must leave every point a neighbor strictly inside B(x;h).
            if (h <= max_gap)
                throw parse_error("domain: h = " + std::to_string(h) +
                                  " does not upper-bound the fill distance (need > " +
                                  std::to_string(max_gap) + ")");
            h_ = h;
        } else {
            h_ = max_gap * (1.0 + 1e-9);
        }
    }

    void set_constraints(index_set constraints) {
        std::sort(constraints.begin(), constraints.end());
        constraints.erase(std::unique(constraints.begin(), constraints.end()), constraints.end());
        if (constraints.empty()) throw parse_error("domain: constraint set E is empty");
        if (constraints.back() >= n_)
            throw index_error("domain: constraint index " + std::to_string(constraints.back()) +
                              " out of range");
        constraints_ = std::move(constraints);
        is_constraint_.assign(n_, 0);
        for (index_t e : constraints_) is_constraint_[e] = 1;
    }

    void build_knn_graph() {
        const int k = std::min<int>(metric_.k_neighbors, static_cast<int>(n_) - 1);
        if (k < 1) throw graph_disconnected("graph metric: need at least 2 points");
        adj_.assign(n_, {});
        std::vector<std::pair<double, index_t>> cand(n_);
        for (index_t i = 0; i < n_; ++i) {
            cand.clear();
            for (index_t j = 0; j < n_; ++j)
                if (j != i) cand.emplace_back(dist(point(i), point(j)), j);
            std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
            for (int t = 0; t < k; ++t) add_edge(i, cand[t].second, cand[t].first);
        }
        // connectivity
        std::vector<char> seen(n_, 0);
        std::vector<index_t> stack{0};
        seen[0] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const index_t u = stack.back();
            stack.pop_back();
            for (const auto& [v, w] : adj_[u])
                if (!seen[v]) {
                    seen[v] = 1;
                    ++reached;
                    stack.push_back(v);
                }
        }
        if (reached != n_)
            throw graph_disconnected("graph metric: k-NN graph with k = " +
                                     std::to_string(metric_.k_neighbors) + " is not connected");
    }

    void add_edge(index_t a, index_t b, double w) {
        auto& la = adj_[a];
        if (std::none_of(la.begin(), la.end(), [b](const auto& e) { return e.first == b; }))
            la.emplace_back(b, w);
        auto& lb = adj_[b];
        if (std::none_of(lb.begin(), lb.end(), [a](const auto& e) { return e.first == a; }))
            lb.emplace_back(a, w);
    }

    std::vector<double> dijkstra(index_t src) const {
        std::vector<double> d(n_, kInf);
        using qe = std::pair<double, index_t>;
        std::priority_queue<qe, std::vector<qe>, std::greater<>> q;
        d[src] = 0.0;
        q.emplace(0.0, src);
        while (!q.empty()) {
            const auto [du, u] = q.top();
            q.pop();
            if (du > d[u]) continue;
            for (const auto& [v, w] : adj_[u])
                if (du + w < d[v]) {
                    d[v] = du + w;
                    q.emplace(d[v], v);
                }
        }
        return d;
    }

    void build_dense_matrix() {
        dist_.resize(n_ * n_);
        if (metric_.kind == MetricSpec::Kind::euclidean) {
            for (index_t i = 0; i < n_; ++i) {
                dist_[static_cast<std::size_t>(i) * n_ + i] = 0.0;
                for (index_t j = i + 1; j < n_; ++j) {
                    const double d = dist(point(i), point(j));
                    dist_[static_cast<std::size_t>(i) * n_ + j] = d;
                    dist_[static_cast<std::size_t>(j) * n_ + i] = d;
                }
            }
        } else {
            for (index_t i = 0; i < n_; ++i) {
                const auto row = dijkstra(i);
                std::copy(row.begin(), row.end(), dist_.begin() + static_cast<std::size_t>(i) * n_);
            }
        }
    }

    void build_order() const {
        order_.resize(n_ * n_);
        for (index_t i = 0; i < n_; ++i) {
            index_t* row = order_.data() + static_cast<std::size_t>(i) * n_;
            std::iota(row, row + n_, index_t{0});
            const double* drow = dist_.data() + static_cast<std::size_t>(i) * n_;
            std::sort(row, row + n_, [drow](index_t a, index_t b) {
                return drow[a] != drow[b] ? drow[a] < drow[b] : a < b;
            });
        }
    }

    const std::vector<double>& graph_row(index_t i) const {
        std::lock_guard<std::mutex> lock(graph_row_mutex_);
        auto& slot = graph_rows_[i];
        if (slot.empty()) slot = dijkstra(i);
        return slot;
    }

    std::size_t n_ = 0;
    int dim_ = 0;
    std::vector<double> coords_;
    MetricSpec metric_;
    double h_ = 0.0;
    index_set constraints_;
    std::vector<char> is_constraint_;
    std::vector<std::vector<std::pair<index_t, double>>> adj_;
    std::vector<double> dist_;
    mutable std::vector<index_t> order_;
    mutable std::once_flag order_once_;
    mutable std::map<index_t, std::vector<double>> graph_rows_;
    mutable std::mutex graph_row_mutex_;
};

// ---------------------------------------------------------------------------
// Ball unions
// ---------------------------------------------------------------------------

struct Ball {
    index_t center = 0;
    double radius = 0.0;
};

/// Union of open balls; the admissible region family is parametrized by a
/// minimum radius rho and a maximum ball count N0.
struct BallUnion {
    std::vector<Ball> balls;

    std::size_t count() const { return balls.size(); }

    void validate(const DiscreteDomain& dom, double rho, std::size_t n0) const {
        if (balls.empty()) throw error("ball union: needs at least one ball");
        if (balls.size() > n0)
            throw error("ball union: " + std::to_string(balls.size()) + " balls exceeds N0 = " +
                        std::to_string(n0));
        for (const Ball& b : balls) {
            if (b.center >= dom.size()) throw index_error("ball union: center index out of range");
            if (b.radius < rho)
                throw error("ball union: radius " + std::to_string(b.radius) + " below rho = " +
                            std::to_string(rho));
        }
    }
};

/// Open-ball membership: strictly closer than r to the center.
inline index_set ball_members(const DiscreteDomain& dom, index_t center, double r) {
    if (!(r > 0.0)) throw error("ball_members: radius must be positive");
    index_set out;
    if (dom.has_dense_cache()) {
        const auto order = dom.neighbors_by_distance(center);
        for (index_t rank = 0; rank < order.size(); ++rank) {
            const index_t j = order[rank];
            if (dom.distance(center, j) >= r) break;
            out.push_back(j);
        }
        std::sort(out.begin(), out.end());
    } else {
        for (index_t j = 0; j < dom.size(); ++j)
            if (dom.distance(center, j) < r) out.push_back(j);
    }
    return out;
}

/// Union of open-ball member sets; the discrete interior of Omega.
inline index_set interior_members(const DiscreteDomain& dom, const BallUnion& omega) {
    index_set out;
    for (const Ball& b : omega.balls) {
        index_set m = ball_members(dom, b.center, b.radius);
        index_set merged;
        merged.reserve(out.size() + m.size());
        std::set_union(out.begin(), out.end(), m.begin(), m.end(), std::back_inserter(merged));
        out = std::move(merged);
    }
    return out;
}

/// Closed half-ball between i and j, inflated by h so that discrete curve
/// samples near the continuum half-ball stay admissible.
inline index_set half_ball_members(const DiscreteDomain& dom, index_t i, index_t j) {
    if (i == j) throw coincident_points("half_ball_members: i == j");
    const index_t m = dom.midpoint(i, j);
    const double r = dom.distance(i, j) / 2.0 + dom.h();
    index_set out;
    for (index_t z = 0; z < dom.size(); ++z)
        if (dom.distance(m, z) <= r) out.push_back(z);
    return out;
}

/// Points of the complement within c_b * h of a region; the discrete stand-in
/// for the topological boundary of the open region.
inline index_set discrete_boundary_of_set(const DiscreteDomain& dom, const index_set& region,
                                          double boundary_factor = kDefaultBoundaryFactor) {
    if (region.empty()) throw error("discrete_boundary: region is empty");
    std::vector<char> inside(dom.size(), 0);
    for (index_t m : region) inside[m] = 1;
    const double reach = boundary_factor * dom.h();
    index_set out;
    for (index_t x = 0; x < dom.size(); ++x) {
        if (inside[x]) continue;
        double dmin = kInf;
        if (dom.has_dense_cache()) {
            const auto order = dom.neighbors_by_distance(x);
            for (index_t rank = 0; rank < order.size(); ++rank) {
                if (inside[order[rank]]) {
                    dmin = dom.distance(x, order[rank]);
                    break;
                }
            }
        } else {
            for (index_t m : region) dmin = std::min(dmin, dom.distance(x, m));
        }
        if (dmin <= reach) out.push_back(x);
    }
    if (out.empty())
        throw empty_boundary("discrete_boundary: region covers the whole domain");
    return out;
}

inline index_set discrete_boundary(const DiscreteDomain& dom, const BallUnion& omega,
                                   double boundary_factor = kDefaultBoundaryFactor) {
    const index_set interior = interior_members(dom, omega);
    if (interior.empty()) throw error("discrete_boundary: ball union has empty interior");
    return discrete_boundary_of_set(dom, interior, boundary_factor);
}

inline bool contains_ball(const DiscreteDomain& dom, const index_set& region, index_t center,
                          double r) {
    std::vector<char> inside(dom.size(), 0);
    for (index_t m : region) inside[m] = 1;
    for (index_t j = 0; j < dom.size(); ++j)
        if (dom.distance(center, j) < r && !inside[j]) return false;
    return true;
}

/// Largest radius whose open ball around x stays inside the region, i.e. the
/// distance from x to the nearest point outside it (infinite if none).
inline double escape_radius(const DiscreteDomain& dom, const std::vector<char>& inside, index_t x) {
    if (dom.has_dense_cache()) {
        const auto order = dom.neighbors_by_distance(x);
        for (index_t rank = 0; rank < order.size(); ++rank)
            if (!inside[order[rank]]) return dom.distance(x, order[rank]);
        return kInf;
    }
    double e = kInf;
    for (index_t j = 0; j < dom.size(); ++j)
        if (!inside[j]) e = std::min(e, dom.distance(x, j));
    return e;
}

/// Distance from x to a finite index set (infinite if the set is empty).
inline double distance_to_set(const DiscreteDomain& dom, index_t x, const index_set& s) {
    double d = kInf;
    for (index_t m : s) d = std::min(d, dom.distance(x, m));
    return d;
}

inline double hausdorff_distance(const DiscreteDomain& dom, const index_set& a,
                                 const index_set& b) {
    if (a.empty() || b.empty()) throw empty_set("hausdorff_distance: empty set");
    double h = 0.0;
    for (index_t x : a) h = std::max(h, distance_to_set(dom, x, b));
    for (index_t y : b) h = std::max(h, distance_to_set(dom, y, a));
    return h;
}

// ---------------------------------------------------------------------------
// Monotone curves
// ---------------------------------------------------------------------------

/// Ordered domain-point sample of a curve from x to y staying inside the
/// h-inflated closed half-ball, with d(x, .) strictly increasing.
struct CurveSample {
    index_set points; // first = x, last = y
};

namespace detail {

inline index_t snap_to_domain(const DiscreteDomain& dom, cspan p) {
    index_t best = 0;
    double best_d = kInf;
    for (index_t j = 0; j < dom.size(); ++j) {
        const double d = dist2(p, dom.point(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

inline void append_segment_snaps(const DiscreteDomain& dom, cspan a, cspan b, double step,
                                 std::vector<index_t>& out) {
    const double len = dist(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int t = 1; t <= steps; ++t) {
        const double u = static_cast<double>(t) / steps;
        vecd p(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) p[k] = a[k] + u * (b[k] - a[k]);
        out.push_back(snap_to_domain(dom, p));
    }
}

} // namespace detail

/// Discrete monotone curve used by the Chasles checks: nearest domain points
/// to the straight segment x -> y, or to the broken segment x -> via -> y.
/// Samples at spacing h/2, then enforces strict monotonicity in d(x, .) by
/// dropping violators.
inline CurveSample chasles_curve(const DiscreteDomain& dom, index_t i, index_t j,
                                 std::optional<index_t> via = std::nullopt) {
    if (i == j) throw coincident_points("chasles_curve: i == j");
    const double dij = dom.distance(i, j);
    const index_t mid = dom.midpoint(i, j);
    const double ball_limit = dij / 2.0 + dom.h();
    const double step = dom.h() / 2.0;

    std::vector<index_t> raw{i};
    if (via && *via != i && *via != j) {
        if (dom.distance(mid, *via) > ball_limit)
            throw disconnected_curve("chasles_curve: via point leaves the half-ball");
        detail::append_segment_snaps(dom, dom.point(i), dom.point(*via), step, raw);
        detail::append_segment_snaps(dom, dom.point(*via), dom.point(j), step, raw);
    } else {
        detail::append_segment_snaps(dom, dom.point(i), dom.point(j), step, raw);
    }

    CurveSample curve;
    curve.points.push_back(i);
    for (index_t s : raw) {
        if (s == curve.points.back() || s == j) continue;
        if (dom.distance(i, s) <= dom.distance(i, curve.points.back())) continue; // monotone filter
        if (dom.distance(mid, s) > ball_limit) continue;
        curve.points.push_back(s);
    }
    while (curve.points.size() > 1 &&
           dom.distance(i, curve.points.back()) >= dij)
        curve.points.pop_back();
    curve.points.push_back(j);

    // The sample is connected when consecutive points stay within a few mesh
    // lengths of each other.
    for (std::size_t k = 1; k < curve.points.size(); ++k)
        if (dom.distance(curve.points[k - 1], curve.points[k]) > 3.0 * dom.h())
            throw disconnected_curve("chasles_curve: gap between consecutive samples exceeds 3h");
    return curve;
}

} // namespace qamle
