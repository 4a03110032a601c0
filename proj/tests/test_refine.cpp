#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace qt;

namespace {

RefinementConfig basic_config(double rho, double alpha, double sigma0) {
    RefinementConfig cfg;
    cfg.rho = rho;
    cfg.alpha = alpha;
    cfg.sigma0 = sigma0;
    cfg.n0 = 3;
    cfg.max_iter = 1000;
    return cfg;
}

/// Constraint data (0, 0, 1) at {0, 1/2, 1} on a 33-point grid; the upper
/// extension has a tent over the flat half.
struct TentSetup {
    std::unique_ptr<DiscreteDomain> dom;
    ScalarField data;
    ScalarField tent;

    TentSetup()
        : dom(grid_1d(33, {0, 16, 32})), data(*dom), tent(*dom) {
        data.set(0, 0.0);
        data.set(16, 0.0);
        data.set(32, 1.0);
        tent = mcshane_upper(data, all_indices(*dom));
    }
};

} // namespace

TEST_CASE("exhaustive candidate family") {
    SECTION("rho beyond the diameter leaves nothing to scan") {
        auto dom = grid_1d(9, {0, 8});
        CHECK(exhaustive_candidate_family(*dom, basic_config(2.0, 0.05, 0.1)).empty());
    }
    SECTION("doubling ladder with admissibility filters") {
        auto dom = grid_1d(5, {0, 4});
        const auto family = exhaustive_candidate_family(*dom, basic_config(0.2, 0.05, 0.1));
        CHECK(!family.empty());
        for (const BallUnion& omega : family) {
            REQUIRE(omega.balls.size() == 1);
            const double r = omega.balls[0].radius;
            CHECK((r == 0.2 || r == 0.4 || r == 0.8));
            CHECK(!dom->is_constraint(omega.balls[0].center));
            omega.validate(*dom, 0.2, 3);
            const auto interior = interior_members(*dom, omega);
            CHECK(!interior.empty());
            for (index_t i : interior) CHECK(!dom->is_constraint(i));
            CHECK(!discrete_boundary(*dom, omega).empty());
        }
    }
    SECTION("random stream emits admissible unions") {
        auto dom = grid_2d(9, {0, 8, 72, 80});
        RefinementConfig cfg = basic_config(0.1, 0.05, 0.1);
        cfg.seed = 9;
        detail::random_union_stream stream(*dom, cfg);
        int produced = 0;
        for (int t = 0; t < 200 && produced < 40; ++t) {
            auto cand = stream.next();
            if (!cand) continue;
            ++produced;
            cand->omega.validate(*dom, cfg.rho, cfg.n0);
            for (index_t i : cand->profile.interior) CHECK(!dom->is_constraint(i));
            CHECK(!cand->profile.boundary.empty());
        }
        CHECK(produced == 40);
    }
}

TEST_CASE("violation scan") {
    TentSetup t;
    RefinementConfig cfg = basic_config(0.05, 0.05, 0.1);

    SECTION("the linear interpolant has no violation") {
        auto dom = grid_1d(33, {0, 32});
        ScalarField lin(*dom);
        for (index_t i = 0; i < dom->size(); ++i) lin.set(i, dom->point(i)[0]);
        CHECK(!find_first_violation(lin, cfg).has_value());
    }
    SECTION("the tent violates with gap about 2") {
        const auto hit = find_first_violation(t.tent, cfg);
        REQUIRE(hit.has_value());
        CHECK(hit->second >= 0.1);
        const auto cert = violation_certificate(t.tent, cfg);
        CHECK(cert.max_gap == Catch::Approx(2.0).margin(0.15));
        // worst region sits around the tent peak at 0.25
        CHECK(std::abs(t.dom->point(cert.argmax.balls[0].center)[0] - 0.25) <= 0.15);
    }
    SECTION("a threshold above 2K is never violated") {
        const double k = phi_set(t.data, {0, 16, 32});
        RefinementConfig big = basic_config(0.05, 0.05, 2.0 * k + 0.1);
        CHECK(!find_first_violation(t.tent, big).has_value());
    }
}

TEST_CASE("single correction step") {
    TentSetup t;
    RefinementConfig cfg = basic_config(0.05, 0.05, 0.1);
    const double k = phi_set(t.data, {0, 16, 32});
    const auto hit = find_first_violation(t.tent, cfg);
    REQUIRE(hit.has_value());

    auto [corrected, rec] = refine_step(t.tent, k, cfg, hit->first, hit->second);
    CHECK(rec.gap >= cfg.sigma0);
    CHECK(rec.phi_after <= rec.phi_before + 1e-9);
    CHECK(rec.phi_after <= k - cfg.sigma0 + 1e-9);

    SECTION("correcting again with unchanged boundary is a fixed point") {
        auto [again, rec2] = refine_step(corrected, k, cfg, hit->first, 0.0);
        for (index_t i = 0; i < t.dom->size(); ++i) CHECK(again.at(i) == corrected.at(i));
    }
}

TEST_CASE("full solve on the flat-tent data") {
    TentSetup t;
    RefinementConfig cfg = basic_config(0.05, 0.05, 0.1);
    const auto result = solve_quasi_amle(t.data, cfg);

    CHECK(result.status == SolveStatus::converged);
    CHECK(result.k == Catch::Approx(2.0));
    CHECK(result.final_max_gap < cfg.sigma0);
    // data reproduced exactly
    CHECK(result.u.at(0) == 0.0);
    CHECK(result.u.at(16) == 0.0);
    CHECK(result.u.at(32) == 1.0);
    // constant preserved
    CHECK(phi_set(result.u, all_indices(*t.dom)) <= result.k + 1e-9);
    // the flat half stays near zero
    const double bound = 2.0 * t.dom->h() * result.k;
    for (index_t i = 1; i < 16; ++i) CHECK(std::abs(result.u.at(i)) <= bound);
    // certificate agrees with the terminal scan
    const auto cert = violation_certificate(result.u, cfg);
    CHECK(cert.max_gap == result.final_max_gap);
}

TEST_CASE("ramp data needs corrections and settles") {
    // (0, 0.1, 1) at {0, 3/8, 1}: the extremal average has a slope-K ramp
    // inside the left span, which the corrections flatten out.
    auto dom = grid_1d(65, {0, 24, 64});
    ScalarField data(*dom);
    data.set(0, 0.0);
    data.set(24, 0.1);
    data.set(64, 1.0);
    RefinementConfig cfg = basic_config(0.05, 0.03, 0.05);
    const auto result = solve_quasi_amle(data, cfg);
    CHECK(result.status == SolveStatus::converged);
    CHECK(result.iterations() >= 1);
    CHECK(result.final_max_gap < cfg.sigma0);
    CHECK(phi_set(result.u, all_indices(*dom)) <= result.k + 1e-9);
    for (const IterationRecord& rec : result.log) {
        CHECK(rec.gap >= cfg.sigma0);
        CHECK(rec.phi_after <= result.k - cfg.sigma0 + 1e-9);
    }
}

TEST_CASE("constraints covering the whole domain solve trivially") {
    auto dom = grid_1d(5, {0, 1, 2, 3, 4});
    ScalarField data(*dom);
    for (index_t i = 0; i < 5; ++i) data.set(i, 0.3 * i);
    const auto result = solve_quasi_amle(data, basic_config(0.2, 0.05, 0.1));
    CHECK(result.status == SolveStatus::converged);
    CHECK(result.iterations() == 0);
    for (index_t i = 0; i < 5; ++i) CHECK(result.u.at(i) == data.at(i));
}

TEST_CASE("correction budget is honored") {
    auto dom = grid_2d(9, {0, 8, 72, 80});
    ScalarField data(*dom);
    data.set(0, 0.0);
    data.set(8, 1.0);
    data.set(72, 1.0);
    data.set(80, 0.0);
    RefinementConfig cfg = basic_config(2.0 / 8.0, 0.06, 0.01);
    cfg.max_iter = 1;
    const auto result = solve_quasi_amle(data, cfg);
    if (result.status == SolveStatus::max_iter_exceeded) {
        CHECK(result.iterations() == 1);
        CHECK(result.final_max_gap >= cfg.sigma0);
    } else {
        CHECK(result.iterations() <= 1);
    }
}

TEST_CASE("solves are deterministic") {
    auto dom = grid_2d(9, {0, 8, 72, 80});
    ScalarField data(*dom);
    data.set(0, 0.0);
    data.set(8, 1.0);
    data.set(72, 1.0);
    data.set(80, 0.0);

    SECTION("exhaustive scan") {
        RefinementConfig cfg = basic_config(0.25, 0.06, 0.05);
        const auto a = solve_quasi_amle(data, cfg);
        const auto b = solve_quasi_amle(data, cfg);
        REQUIRE(a.log.size() == b.log.size());
        for (std::size_t t = 0; t < a.log.size(); ++t) {
            CHECK(a.log[t].gap == b.log[t].gap);
            CHECK(a.log[t].phi_after == b.log[t].phi_after);
        }
        for (index_t i = 0; i < dom->size(); ++i) CHECK(a.u.at(i) == b.u.at(i));
        CHECK(a.final_max_gap == b.final_max_gap);
    }
    SECTION("random scan with a fixed seed") {
        RefinementConfig cfg = basic_config(0.25, 0.06, 0.05);
        cfg.scan = ScanMode::random;
        cfg.seed = 1234;
        cfg.samples_per_iter = 32;
        const auto a = solve_quasi_amle(data, cfg);
        const auto b = solve_quasi_amle(data, cfg);
        REQUIRE(a.log.size() == b.log.size());
        for (index_t i = 0; i < dom->size(); ++i) CHECK(a.u.at(i) == b.u.at(i));
    }
}

TEST_CASE("first-order solve with endpoint jets") {
    auto dom = grid_1d(17, {0, 16});
    JetField data(*dom);
    data.set(0, Jet{0.0, {0.0}});
    data.set(16, Jet{1.0, {0.0}});
    RefinementConfig cfg = basic_config(0.2, 0.1, 0.5);
    const auto result = solve_quasi_amle(data, cfg);
    CHECK(result.k == Catch::Approx(4.0));
    CHECK(result.u.at(0).value == 0.0);
    CHECK(result.u.at(16).value == 1.0);
    CHECK(result.status == SolveStatus::converged);
    CHECK(phi_set(result.u, all_indices(*dom)) <= result.k + 1e-9);
}

TEST_CASE("defaults derived from the data") {
    auto dom = grid_1d(33, {0, 32});
    ScalarField data(*dom);
    data.set(0, 0.0);
    data.set(32, 1.0);
    const double k = phi_set(data, {0, 32});
    RefinementConfig cfg; // everything unset
    cfg = resolved_with_defaults(cfg, k, *dom);
    CHECK(cfg.sigma0 == Catch::Approx(0.05 * k));
    CHECK(cfg.alpha == Catch::Approx(2.0 * dom->h()));
    CHECK(cfg.rho == Catch::Approx(4.0 * dom->h()));
    CHECK(cfg.n0 == 3);
    CHECK(cfg.max_iter ==
          static_cast<long>(10.0 * std::ceil(2.0 * k / cfg.sigma0) * dom->size()));
    CHECK_NOTHROW(cfg.validate());
}
