#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geopulse/eikonal.hpp"
#include "test_systems.hpp"

using namespace geopulse;

TEST_CASE("constant coefficients give the linear closed form") {
    // lambda_k constant: psi = y0 - gamma_k yn, phi = gamma_k yn, beta = 1
    SystemSpec s = testsys::const_diag2();
    Grid grid = Grid::make(1, s.domain, 1.0 / 64, 0, 1.0 / 64);
    RaySettings rs;
    rs.lattice_h = 1.0 / 64;
    for (int k = 0; k < 2; ++k) {
        PhaseField ph = solve_phase(s, grid, k, rs);
        double gamma = (k == 0) ? -1.0 : 0.5;
        CHECK(ph.gamma_k == doctest::Approx(gamma));
        double worst_psi = 0, worst_phi = 0, worst_beta = 0, worst_omega = 0;
        const FieldLattice& lat = ph.lat;
        for (int j0 = 0; j0 < lat.l0.count; ++j0)
            for (int jn = 0; jn < lat.ln.count; ++jn) {
                double y0 = lat.l0.at(j0), yn = lat.ln.at(jn);
                worst_psi = std::max(worst_psi,
                                     std::abs(ph.psi[lat.index(j0, 0, jn)] -
                                              (y0 - gamma * yn)));
                worst_beta =
                    std::max(worst_beta, std::abs(ph.beta[lat.index(j0, 0, jn)] - 1.0));
            }
        for (int jn = 0; jn < lat.ln.count; ++jn)
            worst_phi = std::max(worst_phi, std::abs(ph.phi[jn] - gamma * lat.ln.at(jn)));
        for (int j0 = 0; j0 < lat.l0.count; ++j0)
            worst_omega = std::max(worst_omega, std::abs(ph.omega[j0] + gamma));
        CHECK(worst_psi < 1e-10);
        CHECK(worst_phi < 1e-10);
        CHECK(worst_beta < 1e-8);
        CHECK(worst_omega < 1e-12);
        // boundary trace is exactly y0
        for (int j0 = 0; j0 < lat.l0.count; ++j0)
            CHECK(ph.psi[lat.index(j0, 0, 0)] == doctest::Approx(lat.l0.at(j0)).epsilon(1e-14));
    }
}

TEST_CASE("scalar variable coefficient matches the quadratic closed form") {
    // B0 = 1 + a*yn: psi = y0 - (yn + a yn^2/2), beta = 1
    const double a = 0.4;
    SystemSpec s = testsys::riccati1(a);
    Grid grid = Grid::make(1, s.domain, 1.0 / 64, 0, 1.0 / 64);
    RaySettings rs;
    rs.lattice_h = 1.0 / 64;
    PhaseField ph = solve_phase(s, grid, 0, rs);
    const FieldLattice& lat = ph.lat;
    double worst = 0;
    for (int j0 = 0; j0 < lat.l0.count; ++j0)
        for (int jn = 0; jn < lat.ln.count; ++jn) {
            double y0 = lat.l0.at(j0), yn = lat.ln.at(jn);
            double exact = y0 - (yn + 0.5 * a * yn * yn);
            worst = std::max(worst, std::abs(ph.psi[lat.index(j0, 0, jn)] - exact));
        }
    CHECK(worst < 1e-8);

    SUBCASE("28k(c) quadratic constant matches a/2 within 10 percent") {
        auto rep = phase_relations_check(s, {ph}, 0.25);
        CHECK(std::abs(rep.fitted_quad_coeff - 0.5 * a) < 0.05 * a);
    }
}

TEST_CASE("eikonal residual is small and drops at least 8x under halving") {
    SystemSpec s = testsys::sym3_1d();
    Grid grid = Grid::make(1, s.domain, 1.0 / 32, 0, 1.0 / 32);
    RaySettings coarse, fine;
    coarse.lattice_h = 1.0 / 32;
    fine.lattice_h = 1.0 / 64;
    double rc = 0, rf = 0;
    for (int k = 0; k < 3; ++k) {
        rc = std::max(rc, eikonal_residual(s, solve_phase(s, grid, k, coarse)));
        rf = std::max(rf, eikonal_residual(s, solve_phase(s, grid, k, fine)));
    }
    CHECK(rc < 1e-4);
    CHECK(rc / rf >= 8.0);
}

TEST_CASE("variable 2-D phase has residual below 1e-6 at h=1/256") {
    SystemSpec s = testsys::sym3_2d();
    Domain dom = s.domain;  // shrink the box to keep the test quick
    dom.T = 0.12;
    dom.y1_half = 0.2;
    dom.yn_max = 0.12;
    dom.y0_min = -0.02;
    Grid grid = Grid::make(2, dom, 1.0 / 256, 1.0 / 256, 1.0 / 256);
    RaySettings rs;
    rs.lattice_h = 1.0 / 256;
    PhaseField ph = solve_phase(s, grid, 1, rs);
    CHECK(eikonal_residual(s, ph) < 1e-6);
}

TEST_CASE("phase relations and separation for the 3-mode system") {
    SystemSpec s = testsys::sym3_1d();
    Grid grid = Grid::make(1, s.domain, 1.0 / 64, 0, 1.0 / 64);
    RaySettings rs;
    rs.lattice_h = 1.0 / 64;
    std::vector<PhaseField> phases;
    std::vector<double> gammas;
    for (int k = 0; k < 3; ++k) {
        phases.push_back(solve_phase(s, grid, k, rs));
        gammas.push_back(phases.back().gamma_k);
    }
    double delta = wedge_delta_from_gammas(gammas);
    auto rep = phase_relations_check(s, phases, delta);
    CHECK(rep.separation_ok);
    CHECK(rep.wedge_constants_ok);
    CHECK(rep.min_d0psi >= 0.5);
    CHECK(rep.transversality_cells <= 2.0);
    CHECK(rep.max_rel_28kc < 2.0);

    SUBCASE("constant coefficients: relations hold exactly") {
        SystemSpec c = testsys::const_diag2();
        Grid cgrid = Grid::make(1, c.domain, 1.0 / 64, 0, 1.0 / 64);
        std::vector<PhaseField> cph;
        for (int k = 0; k < 2; ++k) cph.push_back(solve_phase(c, cgrid, k, rs));
        auto crep = phase_relations_check(c, cph, wedge_delta_from_gammas({-1.0, 0.5}));
        CHECK(crep.max_abs_psi_minus_graph < 1e-9);
        CHECK(crep.max_rel_28kc < 1e-9);
        CHECK(std::abs(crep.fitted_quad_coeff) < 1e-8);
    }
}

TEST_CASE("monotone increase of psi in y0") {
    SystemSpec s = testsys::sym3_1d();
    Grid grid = Grid::make(1, s.domain, 1.0 / 64, 0, 1.0 / 64);
    RaySettings rs;
    rs.lattice_h = 1.0 / 64;
    PhaseField ph = solve_phase(s, grid, 0, rs);
    const FieldLattice& lat = ph.lat;
    for (int jn = 0; jn < lat.ln.count; ++jn)
        for (int j0 = 0; j0 + 1 < lat.l0.count; ++j0)
            CHECK(ph.psi[lat.index(j0 + 1, 0, jn)] > ph.psi[lat.index(j0, 0, jn)]);
}
