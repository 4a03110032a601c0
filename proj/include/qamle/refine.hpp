#pragma once

#include <atomic>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "qamle/extension.hpp"

namespace qamle {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ScanMode { exhaustive, random };

inline const char* to_string(ScanMode m) {
    return m == ScanMode::exhaustive ? "exhaustive" : "random";
}

struct RefinementConfig {
    double rho = 0.0;    ///< minimum ball radius of the admissible family
    std::size_t n0 = 3;  ///< maximum ball count per union
    double alpha = 0.0;  ///< depth requirement of the localized functional
    double sigma0 = 0.0; ///< violation threshold
    long max_iter = 0;   ///< 0 = derive from the data
    ScanMode scan = ScanMode::exhaustive;
    std::uint64_t seed = 0;
    int samples_per_iter = 64; ///< random scan only
    double boundary_factor = kDefaultBoundaryFactor;

    void validate() const {
        if (!(rho > 0.0)) throw error("config: rho must be positive");
        if (!(alpha > 0.0)) throw error("config: alpha must be positive");
        if (!(sigma0 > 0.0)) throw error("config: sigma0 must be positive");
        if (n0 < 1) throw error("config: N0 must be at least 1");
        if (max_iter < 1) throw error("config: max_iter must be at least 1");
        if (scan == ScanMode::random && samples_per_iter < 1)
            throw error("config: samples_per_iter must be at least 1");
    }
};

/// Fill unset parameters from the data scale: sigma0 = 0.05 K, alpha = 2h,
/// rho = 4h, and a correction budget of 10 * ceil(2K / sigma0) * |X|.
inline RefinementConfig resolved_with_defaults(RefinementConfig cfg, double k,
                                               const DiscreteDomain& dom) {
    if (!(cfg.rho > 0.0)) cfg.rho = 4.0 * dom.h();
    if (!(cfg.alpha > 0.0)) cfg.alpha = 2.0 * dom.h();
    if (!(cfg.sigma0 > 0.0)) cfg.sigma0 = std::max(0.05 * k, 1e-12);
    if (cfg.max_iter < 1) {
        const double levels = std::ceil(2.0 * k / cfg.sigma0);
        cfg.max_iter =
            std::max<long>(1, static_cast<long>(10.0 * levels * static_cast<double>(dom.size())));
    }
    return cfg;
}

/// One accepted correction: the region, the violation gap that triggered it,
/// and the interior functional value before and after.
struct IterationRecord {
    BallUnion omega;
    double gap = 0.0;
    double phi_before = 0.0;
    double phi_after = 0.0;
};

enum class SolveStatus { converged, max_iter_exceeded };

template <class FieldT>
struct SolveResult {
    FieldT u;
    double k = 0.0;
    std::vector<IterationRecord> log;
    SolveStatus status = SolveStatus::converged;
    /// Exact maximum gap over the scanned family at termination
    /// (kNoAdmissiblePair when the family is empty).
    double final_max_gap = kNoAdmissiblePair;
    long iterations() const { return static_cast<long>(log.size()); }
};

// ---------------------------------------------------------------------------
// Candidate regions
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> radius_ladder(double rho, double diameter) {
    std::vector<double> radii;
    for (double r = rho; r <= diameter; r *= 2.0) radii.push_back(r);
    return radii;
}

/// A candidate region with its fixed geometry and a cached gap value.
struct Candidate {
    BallUnion omega;
    region_profile profile;
    index_t anchor = 0;      ///< dirty-test reference point
    double influence = 0.0;  ///< changes farther than this from the anchor cannot move the gap
    double gap = kNoAdmissiblePair;
    bool gap_valid = false;
};

inline double candidate_influence(const DiscreteDomain& dom, const Candidate& c) {
    double r = 0.0;
    for (std::size_t t = 0; t < c.profile.interior.size(); ++t) {
        const double e = c.profile.escape[t];
        r = std::max(r, dom.distance(c.anchor, c.profile.interior[t]) + (e == kInf ? 0.0 : e));
    }
    for (index_t b : c.profile.boundary) r = std::max(r, dom.distance(c.anchor, b));
    return r;
}

/// Admissibility filter shared by the exhaustive and random streams:
/// nonempty interior avoiding every constraint point, nonempty boundary.
inline std::optional<Candidate> make_candidate(const DiscreteDomain& dom, BallUnion omega,
                                               double boundary_factor) {
    index_set interior = interior_members(dom, omega);
    if (interior.empty()) return std::nullopt;
    for (index_t i : interior)
        if (dom.is_constraint(i)) return std::nullopt;
    Candidate c;
    c.omega = std::move(omega);
    try {
        c.profile = profile_region(dom, interior, boundary_factor);
    } catch (const empty_boundary&) {
        return std::nullopt;
    }
    if (c.profile.boundary.empty()) return std::nullopt;
    c.anchor = c.omega.balls.front().center;
    c.influence = candidate_influence(dom, c);
    return c;
}

/// All single balls centered at non-constraint points with radii from the
/// doubling ladder {rho * 2^k} up to the domain diameter, in stream order:
/// radius ascending, then center ascending.
inline std::vector<Candidate> exhaustive_candidates(const DiscreteDomain& dom,
                                                    const RefinementConfig& cfg) {
    std::vector<Candidate> out;
    const double diam = dom.diameter();
    for (const double r : radius_ladder(cfg.rho, diam)) {
        for (index_t center = 0; center < dom.size(); ++center) {
            if (dom.is_constraint(center)) continue;
            BallUnion omega;
            omega.balls.push_back(Ball{center, r});
            if (auto c = make_candidate(dom, std::move(omega), cfg.boundary_factor))
                out.push_back(std::move(*c));
        }
    }
    return out;
}

/// Seeded stream of random unions of at most N0 balls with radii in
/// [rho, diameter], filtered by the shared admissibility rules.
class random_union_stream {
public:
    random_union_stream(const DiscreteDomain& dom, const RefinementConfig& cfg)
        : dom_(&dom), cfg_(&cfg), rng_(cfg.seed), diam_(dom.diameter()) {}

    /// Draw one admissible union; empty if the draw was rejected.
    std::optional<Candidate> next() {
        BallUnion omega;
        const std::size_t count = 1 + static_cast<std::size_t>(rng_.next_below(cfg_->n0));
        for (std::size_t b = 0; b < count; ++b) {
            Ball ball;
            ball.center = static_cast<index_t>(rng_.next_below(dom_->size()));
            // log-uniform radius over the admissible range
            const double t = rng_.next_unit();
            ball.radius = cfg_->rho * std::exp(t * std::log(std::max(1.0, diam_ / cfg_->rho)));
            omega.balls.push_back(ball);
        }
        return make_candidate(*dom_, std::move(omega), cfg_->boundary_factor);
    }

private:
    const DiscreteDomain* dom_;
    const RefinementConfig* cfg_;
    rng64 rng_;
    double diam_;
};

inline std::uint64_t omega_key(const BallUnion& omega) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Ball& b : omega.balls) {
        h = fnv1a(&b.center, sizeof(b.center), h);
        h = fnv1a(&b.radius, sizeof(b.radius), h);
    }
    return h;
}

inline int scan_thread_count() {
    const char* env = std::getenv("QAMLE_THREADS");
    if (!env) return 1;
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) return 1;
    return static_cast<int>(std::min<long>(v, 64));
}

/// Exact violation gap of a candidate: localized functional minus the
/// boundary value.
template <class FieldT>
double candidate_gap(const FieldT& u, const Candidate& c, double alpha) {
    const double boundary_phi = phi_set_or_zero(u, c.profile.boundary);
    const double psi = psi_over_profile(u, c.profile, alpha);
    return psi == kNoAdmissiblePair ? kNoAdmissiblePair : psi - boundary_phi;
}

template <class FieldT>
void evaluate_candidates(const FieldT& u, std::vector<Candidate>& cands, double alpha) {
    const int threads = scan_thread_count();
    if (threads <= 1 || cands.size() < 2) {
        for (Candidate& c : cands)
            if (!c.gap_valid) {
                c.gap = candidate_gap(u, c, alpha);
                c.gap_valid = true;
            }
        return;
    }
    if (u.domain().has_dense_cache()) u.domain().neighbors_by_distance(0); // warm the shared cache
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= cands.size()) return;
            Candidate& c = cands[i];
            if (!c.gap_valid) {
                c.gap = candidate_gap(u, c, alpha);
                c.gap_valid = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

} // namespace detail

/// The admissible regions scanned by the exhaustive mode, in stream order.
inline std::vector<BallUnion> exhaustive_candidate_family(const DiscreteDomain& dom,
                                                          const RefinementConfig& cfg) {
    std::vector<BallUnion> out;
    for (auto& c : detail::exhaustive_candidates(dom, cfg)) out.push_back(std::move(c.omega));
    return out;
}

/// First region of the exhaustive family violating the quasi-AMLE condition,
/// with its exact gap; empty when the whole family satisfies it.
template <class FieldT>
std::optional<std::pair<BallUnion, double>> find_first_violation(const FieldT& u,
                                                                 const RefinementConfig& cfg) {
    auto candidates = detail::exhaustive_candidates(u.domain(), cfg);
    for (auto& c : candidates) {
        const double gap = detail::candidate_gap(u, c, cfg.alpha);
        if (gap >= cfg.sigma0) return std::make_pair(c.omega, gap);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Violation scan and correction step
// ---------------------------------------------------------------------------

template <class FieldT>
struct Violation {
    BallUnion omega;
    double gap = 0.0;
    std::size_t candidate_index = 0; // exhaustive mode only
};

/// One correction: replace u inside the region by the minimal extension of
/// its boundary trace, verifying the step inequalities. Returns the new field
/// and the iteration record.
template <class FieldT>
std::pair<FieldT, IterationRecord> refine_step(const FieldT& u, double k,
                                               const RefinementConfig& cfg,
                                               const BallUnion& omega, double gap) {
    const DiscreteDomain& dom = u.domain();
    const index_set interior = interior_members(dom, omega);
    const index_set boundary = discrete_boundary_of_set(dom, interior, cfg.boundary_factor);
    const double boundary_phi = detail::phi_set_or_zero(u, boundary);
    const double phi_before = detail::phi_set_or_zero(u, interior);

    FieldT corrected = local_correction(u, omega, cfg.boundary_factor);

    const double phi_after = detail::phi_set_or_zero(corrected, interior);
    if (phi_after > boundary_phi + 1e-9)
        throw internal_error("refine_step: corrected interior exceeds the boundary value");
    if (gap >= cfg.sigma0 && phi_after > k - cfg.sigma0 + 1e-9)
        throw internal_error("refine_step: corrected interior exceeds K - sigma0");

    IterationRecord rec;
    rec.omega = omega;
    rec.gap = gap;
    rec.phi_before = phi_before;
    rec.phi_after = phi_after;
    return {std::move(corrected), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Full solve
// ---------------------------------------------------------------------------

namespace detail {

template <class FieldT>
bool correctable(const Candidate& c) {
    // First-order corrections need a two-point boundary trace.
    if constexpr (functional_kind_v<FieldT> == FunctionalKind::gamma1)
        return c.profile.boundary.size() == 2;
    else
        return true;
}

template <class FieldT>
class solver {
public:
    solver(const FieldT& f, const RefinementConfig& cfg) : f_(f), cfg_(cfg) {}

    SolveResult<FieldT> run() {
        const DiscreteDomain& dom = f_.domain();
        const index_set constraints = f_.support();
        if (constraints.empty()) throw empty_constraints("solve: constraint data is empty");
        for (index_t e : constraints)
            if (!dom.is_constraint(e))
                throw error("solve: field support must coincide with the domain constraint set");
        if (constraints.size() != dom.constraint_set().size())
            throw error("solve: field support must coincide with the domain constraint set");

        const double k = phi_set_or_zero(f_, constraints);
        index_set all(dom.size());
        std::iota(all.begin(), all.end(), index_t{0});

        SolveResult<FieldT> result{minimal_extension(f_, all), k};
        if (cfg_.scan == ScanMode::exhaustive)
            candidates_ = exhaustive_candidates(dom, cfg_);

        long corrections = 0;
        for (;;) {
            std::optional<Violation<FieldT>> violation = cfg_.scan == ScanMode::exhaustive
                                                             ? scan_exhaustive(result.u)
                                                             : scan_random(result.u);
            if (!violation) {
                result.status = SolveStatus::converged;
                result.final_max_gap = terminal_max_gap(result.u);
                break;
            }
            if (corrections >= cfg_.max_iter) {
                result.status = SolveStatus::max_iter_exceeded;
                result.final_max_gap = terminal_max_gap(result.u);
                break;
            }
            auto [next, rec] = refine_step(result.u, k, cfg_, violation->omega, violation->gap);
            verify_invariants(next, k, constraints);
            corrected_trace_[omega_key(violation->omega)] =
                next.trace_hash(boundary_of(violation->omega, next.domain()));
            mark_dirty(interior_members(dom, violation->omega), dom);
            result.u = std::move(next);
            result.log.push_back(std::move(rec));
            ++corrections;
        }
        return result;
    }

private:
    index_set boundary_of(const BallUnion& omega, const DiscreteDomain& dom) const {
        return discrete_boundary_of_set(dom, interior_members(dom, omega), cfg_.boundary_factor);
    }

    bool cycle_guarded(const FieldT& u, const Candidate& c) const {
        const auto it = corrected_trace_.find(omega_key(c.omega));
        if (it == corrected_trace_.end()) return false;
        return it->second == u.trace_hash(c.profile.boundary);
    }

    std::optional<Violation<FieldT>> scan_exhaustive(const FieldT& u) {
        evaluate_candidates(u, candidates_, cfg_.alpha);
        for (std::size_t i = 0; i < candidates_.size(); ++i) {
            const Candidate& c = candidates_[i];
            if (c.gap < cfg_.sigma0) continue;
            if (!correctable<FieldT>(c)) continue;
            if (cycle_guarded(u, c)) continue;
            return Violation<FieldT>{c.omega, c.gap, i};
        }
        return std::nullopt;
    }

    std::optional<Violation<FieldT>> scan_random(const FieldT& u) {
        if (!random_stream_) random_stream_.emplace(u.domain(), cfg_);
        last_batch_max_gap_ = kNoAdmissiblePair;
        for (int s = 0; s < cfg_.samples_per_iter; ++s) {
            auto cand = random_stream_->next();
            if (!cand) continue;
            const double gap = candidate_gap(u, *cand, cfg_.alpha);
            last_batch_max_gap_ = std::max(last_batch_max_gap_, gap);
            if (gap < cfg_.sigma0) continue;
            if (!correctable<FieldT>(*cand)) continue;
            if (cycle_guarded(u, *cand)) continue;
            return Violation<FieldT>{cand->omega, gap, 0};
        }
        return std::nullopt;
    }

    double terminal_max_gap(const FieldT& u) {
        if (cfg_.scan == ScanMode::random) return last_batch_max_gap_;
        evaluate_candidates(u, candidates_, cfg_.alpha);
        double m = kNoAdmissiblePair;
        for (const Candidate& c : candidates_) m = std::max(m, c.gap);
        return m;
    }

    void mark_dirty(const index_set& changed, const DiscreteDomain& dom) {
        for (Candidate& c : candidates_) {
            if (!c.gap_valid) continue;
            for (index_t p : changed) {
                if (dom.distance(c.anchor, p) <= c.influence) {
                    c.gap_valid = false;
                    break;
                }
            }
        }
    }

    void verify_invariants(const FieldT& u, double k, const index_set& constraints) const {
        index_set all(u.domain().size());
        std::iota(all.begin(), all.end(), index_t{0});
        if (phi_set_or_zero(u, all) > k + 1e-9)
            throw internal_error("solve: minimality lost after correction");
        for (index_t e : constraints)
            if (!matches_constraint(u, e))
                throw internal_error("solve: constraint value changed at point " +
                                     std::to_string(e));
    }

    bool matches_constraint(const ScalarField& u, index_t e) const {
        return u.at(e) == f_.at(e);
    }
    bool matches_constraint(const JetField& u, index_t e) const {
        return u.at(e).value == f_.at(e).value && u.at(e).grad == f_.at(e).grad;
    }

    const FieldT& f_;
    const RefinementConfig& cfg_;
    std::vector<Candidate> candidates_;
    std::optional<random_union_stream> random_stream_;
    std::map<std::uint64_t, std::uint64_t> corrected_trace_;
    double last_batch_max_gap_ = kNoAdmissiblePair;
};

} // namespace detail

/// Compute a quasi absolutely minimal extension: start from the minimal
/// extension of the constraint data, scan the admissible region family for
/// violations of the local condition, correct the first one found, repeat.
/// The returned field agrees with the data on E, preserves the functional
/// value, and leaves no violation of size sigma0 in the scanned family
/// (unless the correction budget ran out, reported in the status).
template <class FieldT>
SolveResult<FieldT> solve_quasi_amle(const FieldT& f, const RefinementConfig& cfg) {
    cfg.validate();
    return detail::solver<FieldT>(f, cfg).run();
}

// ---------------------------------------------------------------------------
// Post-hoc certificate
// ---------------------------------------------------------------------------

struct CertificateReport {
    double max_gap = kNoAdmissiblePair;
    BallUnion argmax;
    std::size_t candidates = 0;
    std::size_t no_admissible_pair = 0;
    std::vector<std::size_t> histogram; ///< 16 equal bins over [0, max(max_gap, 0)]
};

/// Exhaustively re-scan the single-ball family and report the largest gap.
/// Audits the quasi-AMLE condition of a finished extension. The correction
/// budget plays no role here.
template <class FieldT>
CertificateReport violation_certificate(const FieldT& u, RefinementConfig cfg) {
    cfg.max_iter = std::max<long>(cfg.max_iter, 1);
    cfg.validate();
    if (!u.total()) throw error("violation_certificate: field must be total on the domain");
    auto candidates = detail::exhaustive_candidates(u.domain(), cfg);
    detail::evaluate_candidates(u, candidates, cfg.alpha);

    CertificateReport report;
    report.candidates = candidates.size();
    for (const auto& c : candidates) {
        if (c.gap == kNoAdmissiblePair) ++report.no_admissible_pair;
        if (c.gap > report.max_gap) {
            report.max_gap = c.gap;
            report.argmax = c.omega;
        }
    }
    report.histogram.assign(16, 0);
    const double top = std::max(report.max_gap, 0.0);
    if (top > 0.0) {
        for (const auto& c : candidates) {
            if (c.gap == kNoAdmissiblePair || c.gap < 0.0) continue;
            const auto bin = std::min<std::size_t>(
                15, static_cast<std::size_t>(std::floor(c.gap / top * 16.0)));
            ++report.histogram[bin];
        }
    }
    return report;
}

} // namespace qamle
