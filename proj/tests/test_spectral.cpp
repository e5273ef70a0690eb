#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geopulse/errors.hpp"
#include "geopulse/spectral.hpp"
#include "test_systems.hpp"

using namespace geopulse;

TEST_CASE("symbol of a constant diagonal system") {
    SystemSpec s = testsys::const_diag2();
    double y[2] = {0.1, 0.2};
    double etap = 1.0;
    Eigen::MatrixXd A = symbol(s, y, &etap);
    CHECK(A(0, 0) == doctest::Approx(0.5));
    CHECK(A(1, 1) == doctest::Approx(-1.0));
    CHECK(A(0, 1) == 0.0);

    double etap2 = 2.0;
    Eigen::MatrixXd A2 = symbol(s, y, &etap2);
    CHECK((A2 - 2.0 * A).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("eigendecompose the diagonal case") {
    SystemSpec s = testsys::const_diag2();
    double y[2] = {0.0, 0.0};
    double etap = 1.0;
    EigenFrame f = eigendecompose(s, y, &etap);
    CHECK(f.lambda[0] == doctest::Approx(-1.0));
    CHECK(f.lambda[1] == doctest::Approx(0.5));
    // eigenvectors are the standard basis, reordered by eigenvalue
    CHECK(std::abs(f.R(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(f.R(0, 1)) == doctest::Approx(1.0));
    for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXd Pk = f.Pi(k);
        CHECK((Pk * Pk - Pk).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK((f.Pi(0) + f.Pi(1) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("projector and reconstruction identities on 1000 cone samples") {
    SystemSpec s = testsys::sym3_1d();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst_sum = 0.0, worst_rec = 0.0, worst_hom = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        double y[2] = {-0.05 + 0.3 * u01(rng), 0.35 * u01(rng)};
        double etap = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.25 + 2.0 * u01(rng));
        EigenFrame f = eigendecompose(s, y, &etap);
        Eigen::MatrixXd A = symbol(s, y, &etap);
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
        Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(3, 3);
        for (int k = 0; k < 3; ++k) {
            sum += f.Pi(k);
            rec += f.lambda[k] * f.Pi(k);
        }
        worst_sum = std::max(worst_sum,
                             (sum - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff());
        worst_rec = std::max(worst_rec, (rec - A).cwiseAbs().maxCoeff());
        // orthogonality of distinct projectors
        CHECK((f.Pi(0) * f.Pi(1)).cwiseAbs().maxCoeff() < 1e-10);

        // degree-1 homogeneity
        double s2 = 2.5;
        double etap2 = s2 * etap;
        EigenFrame f2 = eigendecompose(s, y, &etap2);
        for (int k = 0; k < 3; ++k) {
            int k2 = etap > 0 || s2 > 0 ? k : k;  // same ordering for positive scaling
            worst_hom = std::max(worst_hom,
                                 std::abs(f2.lambda[k2] - s2 * f.lambda[k]));
        }
    }
    CHECK(worst_sum < 1e-10);
    CHECK(worst_rec < 1e-9);
    CHECK(worst_hom < 1e-10);
}

TEST_CASE("Lax identity against finite differences of lambda") {
    SystemSpec s = testsys::sym3_2d();
    double worst = 0.0;
    for (double y1 : {-0.2, 0.0, 0.3}) {
        for (double yn : {0.0, 0.1}) {
            double y[3] = {0.05, y1, yn};
            double etap[2] = {1.0, 0.007};
            EigenFrame f = eigendecompose(s, y, etap);
            for (int m = 0; m < 3; ++m) {
                for (int j = 0; j < 2; ++j) {
                    double exact = lambda_eta_derivative(s, f, y, m, j);
                    double step = 1e-5;
                    double ep[2] = {etap[0], etap[1]};
                    double em[2] = {etap[0], etap[1]};
                    ep[j] += step;
                    em[j] -= step;
                    double lp = eigendecompose(s, y, ep).lambda[m];
                    double lm = eigendecompose(s, y, em).lambda[m];
                    worst = std::max(worst, std::abs(exact - (lp - lm) / (2 * step)));
                }
            }
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("mode classification") {
    SUBCASE("diag(1/2,-1): one incoming mode") {
        SystemSpec s = testsys::const_diag2();
        ModeSplit m = classify_modes(s);
        CHECK(m.p() == 1);
        CHECK(m.incoming == std::vector<int>{1});  // lambda = 1/2 after sorting
        CHECK(m.outgoing == std::vector<int>{0});
    }
    SUBCASE("all eigenvalues positive: p = N") {
        SystemSpec s = testsys::sym3_2d();
        ModeSplit m = classify_modes(s);
        CHECK(m.p() == 3);
        CHECK(m.outgoing.empty());
    }
    SUBCASE("all eigenvalues negative: p = 0, empty boundary accepted") {
        SystemSpec s = testsys::const_diag2();
        s.Bcoef = {testsys::parse_matrix({{"-0.5", "0"}, {"0", "-1"}}, s.yvar_names())};
        s.boundary.clear();
        s.g.clear();
        ModeSplit m = classify_modes(s);
        CHECK(m.p() == 0);
        CHECK(m.outgoing.size() == 2);
    }
    SUBCASE("rank mismatch reported") {
        SystemSpec s = testsys::const_diag2();
        s.boundary = testsys::parse_matrix({{"1", "0"}, {"0", "1"}}, s.ypvar_names());
        CHECK_THROWS_AS(classify_modes(s), BoundaryRankMismatch);
    }
}

TEST_CASE("lopatinski consequence") {
    SUBCASE("B=(1 0) against r1=e1 passes") {
        SystemSpec s = testsys::const_diag2();
        CHECK(check_lopatinski_consequence(s, classify_modes(s)));
    }
    SUBCASE("B=(0 1) against r1=e1 fails") {
        SystemSpec s = testsys::const_diag2();
        s.boundary = testsys::parse_matrix({{"0", "1"}}, s.ypvar_names());
        CHECK(!check_lopatinski_consequence(s, classify_modes(s)));
    }
    SUBCASE("3x3 with p=2 matches the determinant oracle") {
        SystemSpec s = testsys::sym3_1d();
        ModeSplit m = classify_modes(s);
        REQUIRE(m.p() == 2);
        double y[2] = {0.0, 0.0};
        double etap = 1.0;
        EigenFrame f = eigendecompose(s, y, &etap);
        Eigen::MatrixXd B = s.eval_boundary_matrix(y);
        Eigen::Vector2d c0 = B * f.R.col(m.incoming[0]);
        Eigen::Vector2d c1 = B * f.R.col(m.incoming[1]);
        double det = c0[0] * c1[1] - c0[1] * c1[0];
        CHECK(std::abs(det) > 1e-6);
        CHECK(check_lopatinski_consequence(s, m));
    }
}

TEST_CASE("near-degenerate and nonreal failures are detected") {
    Eigen::MatrixXd A(2, 2);
    A << 1.0, 1e-12, 0.0, 1.0 + 1e-12;
    CHECK_THROWS_AS(eigendecompose_matrix(A), NearDegenerate);
    Eigen::MatrixXd Rot(2, 2);
    Rot << 0.0, -1.0, 1.0, 0.0;
    CHECK_THROWS_AS(eigendecompose_matrix(Rot), NonReal);
}

TEST_CASE("frame continuity along a path in y") {
    SystemSpec s = testsys::sym3_1d();
    double etap = 1.0;
    Eigen::MatrixXd prev;
    const int steps = 60;
    for (int i = 0; i <= steps; ++i) {
        double y[2] = {0.0, 0.35 * i / steps};
        EigenFrame f = eigendecompose(s, y, &etap);
        if (i > 0) {
            double jump = (f.R - prev).cwiseAbs().maxCoeff();
            CHECK(jump < 10.0 * (0.35 / steps));
        }
        prev = f.R;
    }
}

TEST_CASE("cone delta estimate keeps eigenvalues real and distinct") {
    SystemSpec s = testsys::sym3_2d();
    double delta = estimate_cone_delta(s);
    CHECK(delta > 0.0);
    double y[3] = {0.0, 0.1, 0.05};
    double etap[2] = {1.0, delta * 0.9};
    CHECK_NOTHROW(eigendecompose(s, y, etap));
}
