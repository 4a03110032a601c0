#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace qt;

TEST_CASE("chasles check on scalar fields") {
    SECTION("affine field: zero violation") {
        auto dom = grid_1d(17, {0, 16});
        ScalarField f(*dom);
        for (index_t i = 0; i < dom->size(); ++i) f.set(i, 1.5 * dom->point(i)[0] - 0.25);
        const auto report = check_chasles(f, 0, 16);
        CHECK(report.passed);
        CHECK(report.worst_violation == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("tent between the left end and the peak region") {
        auto dom = grid_1d(33, {0, 16, 32});
        ScalarField data(*dom);
        data.set(0, 0.0);
        data.set(16, 0.0);
        data.set(32, 1.0);
        const ScalarField tent = mcshane_upper(data, all_indices(*dom));
        const auto report = check_chasles(tent, 0, 16);
        CHECK(report.passed);
    }
    SECTION("undefined half-ball is rejected") {
        auto dom = grid_1d(9, {0, 8});
        ScalarField partial(*dom);
        partial.set(0, 0.0);
        partial.set(8, 1.0);
        CHECK_THROWS_AS(check_chasles(partial, 0, 8), qamle::error);
    }
}

TEST_CASE("chasles check along the biponctual curve") {
    rng64 rng(67);
    int done = 0;
    while (done < 15) {
        const int dim = 1 + static_cast<int>(rng.next_below(2));
        vecd x(dim), y(dim);
        for (int k = 0; k < dim; ++k) {
            x[k] = rng.next_in(-1.0, 1.0);
            y[k] = rng.next_in(-1.0, 1.0);
        }
        if (dist(x, y) < 0.4) continue;
        const Jet px = random_jet(rng, dim), py = random_jet(rng, dim);
        if (gamma1_pair_raw(x, px, y, py) <= 1e-3) continue;
        const auto sol = biponctual_solve(x, px, y, py);

        // sample the explicit extension along the bent curve into a domain
        const auto pts = biponctual_curve(sol, 20);
        std::vector<vecd> coords;
        for (const auto& p : pts)
            if (coords.empty() || dist(coords.back(), p) > 0.0) coords.push_back(p);
        if (coords.size() < 5) continue;
        DiscreteDomain curve_dom(coords, MetricSpec::euclidean(), {0});
        JetField f(curve_dom);
        for (index_t i = 0; i < curve_dom.size(); ++i)
            f.set(i, biponctual_eval_jet(sol, curve_dom.point(i)));

        const auto report =
            check_chasles(f, 0, static_cast<index_t>(curve_dom.size() - 1));
        CHECK(report.passed);
        ++done;
    }
}

TEST_CASE("customs check") {
    auto dom = grid_1d(33, {0, 32});
    ScalarField data(*dom);
    data.set(0, 0.0);
    data.set(32, 1.0);
    ScalarField u = minimal_extension_scalar(data, all_indices(*dom));

    SECTION("single region reduces to the region bound") {
        BallUnion omega{{Ball{8, 0.2}}};
        const ScalarField corrected = local_correction(u, omega);
        const double c = phi_set(corrected, interior_members(*dom, omega));
        const auto report = check_customs(corrected, {omega}, c);
        CHECK(report.passed);
    }
    SECTION("two overlapping regions after two corrections") {
        BallUnion first{{Ball{8, 0.2}}};
        BallUnion second{{Ball{12, 0.2}}};
        ScalarField u1 = local_correction(u, first);
        ScalarField u2 = local_correction(u1, second);
        const double c1 = phi_set(u1, interior_members(*dom, first));
        const double c2 = phi_set(u2, interior_members(*dom, second));
        const auto report = check_customs(u2, {first, second}, std::max(c1, c2));
        CHECK(report.passed);
    }
    SECTION("pairs whose ball escapes the union are not checked") {
        // steep field outside the covered region must not trip the check
        ScalarField steep = u;
        steep.set(32, 50.0);
        BallUnion omega{{Ball{8, 0.15}}};
        const ScalarField corrected = local_correction(steep, omega);
        const double c = phi_set(corrected, interior_members(*dom, omega));
        const auto report = check_customs(corrected, {omega}, c);
        CHECK(report.passed);
    }
}

TEST_CASE("correction monotonicity check") {
    SECTION("random fields never increase") {
        rng64 rng(71);
        int done = 0;
        while (done < 30) {
            auto dom = random_cloud(rng, 30, 2, {0});
            ScalarField u = random_scalar_field(rng, *dom, all_indices(*dom));
            BallUnion omega;
            omega.balls.push_back(Ball{static_cast<index_t>(1 + rng.next_below(dom->size() - 1)),
                                       rng.next_in(0.08, 0.5)});
            const auto interior = interior_members(*dom, omega);
            if (interior.size() == dom->size() ||
                std::binary_search(interior.begin(), interior.end(), index_t{0}))
                continue;
            const auto report = check_h_monotone(u, omega);
            CHECK(report.passed);
            ++done;
        }
    }
    SECTION("constant field: exact equality") {
        auto dom = grid_1d(9, {0});
        ScalarField u(*dom);
        for (index_t i = 0; i < dom->size(); ++i) u.set(i, 2.5);
        const auto report = check_h_monotone(u, BallUnion{{Ball{4, 0.2}}});
        CHECK(report.passed);
        CHECK(report.worst_violation == 0.0);
    }
    SECTION("sawtooth strictly decreases") {
        auto dom = grid_1d(5, {0});
        ScalarField u(*dom);
        const double vals[] = {0.0, 0.5, 0.0, 0.5, 0.0};
        for (index_t i = 0; i < 5; ++i) u.set(i, vals[i]);
        const auto report = check_h_monotone(u, BallUnion{{Ball{2, 0.3}}});
        CHECK(report.passed);
        CHECK(report.worst_violation < 0.0);
    }
}

TEST_CASE("zero-depth localization identity") {
    SECTION("constant field: both sides vanish") {
        auto dom = grid_1d(17, {0});
        ScalarField f(*dom);
        for (index_t i = 0; i < dom->size(); ++i) f.set(i, 1.0);
        const auto report = check_prop_alpha_zero(f, ball_members(*dom, 8, 0.2));
        CHECK(report.passed);
        CHECK(report.worst_violation == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("affine field: both sides equal the slope") {
        auto dom = grid_1d(17, {0});
        ScalarField f(*dom);
        for (index_t i = 0; i < dom->size(); ++i) f.set(i, 2.0 * dom->point(i)[0]);
        const auto report = check_prop_alpha_zero(f, ball_members(*dom, 8, 0.2));
        CHECK(report.passed);
    }
    SECTION("tent: both sides see the peak slope") {
        auto dom = grid_1d(33, {0, 16, 32});
        ScalarField data(*dom);
        data.set(0, 0.0);
        data.set(16, 0.0);
        data.set(32, 1.0);
        const ScalarField tent = mcshane_upper(data, all_indices(*dom));
        const auto report = check_prop_alpha_zero(tent, ball_members(*dom, 8, 0.2));
        CHECK(report.passed);
        CHECK(report.witness["phi_closure"].get<double>() == Catch::Approx(2.0));
    }
    SECTION("random fields and regions stay within the mesh slack") {
        rng64 rng(73);
        int done = 0;
        while (done < 30) {
            const bool flat = rng.next_below(2) == 0;
            auto dom = flat ? grid_1d(25, {0}) : grid_2d(9, {0});
            ScalarField f = random_scalar_field(rng, *dom, all_indices(*dom));
            BallUnion omega;
            omega.balls.push_back(Ball{static_cast<index_t>(rng.next_below(dom->size())),
                                       rng.next_in(0.1, 0.45)});
            const auto v = interior_members(*dom, omega);
            if (v.empty() || v.size() == dom->size()) continue;
            const auto report = check_prop_alpha_zero(f, v);
            CHECK(report.passed);
            ++done;
        }
    }
}

TEST_CASE("ball-list truncation stability") {
    auto dom = grid_1d(33, {0});
    SECTION("single ball: the first prefix suffices") {
        const auto report = check_geometrical(*dom, {Ball{16, 0.3}}, 0.1, 0.05);
        CHECK(report.passed);
        CHECK(report.witness["n_epsilon"].get<int>() == 1);
    }
    SECTION("nested balls: the shrink fits in the first") {
        const auto report =
            check_geometrical(*dom, {Ball{16, 0.4}, Ball{16, 0.41}}, 0.1, 0.05);
        CHECK(report.passed);
        CHECK(report.witness["n_epsilon"].get<int>() == 1);
    }
    SECTION("prefix unions approach the full union in hausdorff distance") {
        std::vector<Ball> balls;
        rng64 rng(79);
        for (int t = 0; t < 6; ++t)
            balls.push_back(
                Ball{static_cast<index_t>(rng.next_below(dom->size())), rng.next_in(0.15, 0.3)});
        index_set full;
        for (const Ball& b : balls) {
            auto m = ball_members(*dom, b.center, b.radius);
            index_set merged;
            std::set_union(full.begin(), full.end(), m.begin(), m.end(),
                           std::back_inserter(merged));
            full = std::move(merged);
        }
        double previous = kInf;
        for (std::size_t n = 1; n <= balls.size(); ++n) {
            index_set prefix;
            for (std::size_t t = 0; t < n; ++t) {
                auto m = ball_members(*dom, balls[t].center, balls[t].radius);
                index_set merged;
                std::set_union(prefix.begin(), prefix.end(), m.begin(), m.end(),
                               std::back_inserter(merged));
                prefix = std::move(merged);
            }
            const double d = hausdorff_distance(*dom, prefix, full);
            CHECK(d <= previous + 1e-15);
            previous = d;
        }
        CHECK(previous == 0.0);
    }
}

TEST_CASE("continuity probe") {
    SECTION("affine scalar field") {
        auto dom = grid_1d(33, {0});
        ScalarField f(*dom);
        for (index_t i = 0; i < dom->size(); ++i) f.set(i, 3.0 * dom->point(i)[0]);
        const auto report = check_p4_continuity(f, 0, 16, 0.2);
        CHECK(report.passed);
        const auto maxima = report.witness["maxima"].get<std::vector<double>>();
        CHECK(maxima.front() >= maxima.back());
    }
    SECTION("probe below the grid gap sees only the point itself") {
        auto dom = grid_1d(9, {0});
        ScalarField f = [&] {
            rng64 rng(83);
            return random_scalar_field(rng, *dom, all_indices(*dom));
        }();
        const auto report = check_p4_continuity(f, 0, 4, 0.05);
        CHECK(report.passed);
        CHECK(report.witness["maxima"].get<std::vector<double>>().back() == 0.0);
    }
    SECTION("first-order field in two dimensions") {
        auto dom = grid_2d(9, {0});
        rng64 rng(89);
        JetField f(*dom);
        for (index_t i = 0; i < dom->size(); ++i) f.set(i, random_jet(rng, 2));
        const auto report = check_p4_continuity(f, 0, 40, 0.6);
        CHECK(report.witness["maxima"].is_array());
        CHECK(report.passed);
    }
}
