#include "mcmcnet/analysis.hpp"
#include "mcmcnet/error.hpp"

#include "doctest.h"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace mcmcnet;

TEST_SUITE("analysis") {

TEST_CASE("quantile interpolates between order statistics") {
    CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == 2.5);
    CHECK(quantile({5.0}, 0.2) == 5.0);
    CHECK(quantile({0.0, 10.0}, 0.2) == doctest::Approx(2.0));
}

TEST_CASE("credible bounds of constant and two-valued chains") {
    const std::vector<std::vector<double>> constant(10, {1.0, -2.0});
    const CredibleBounds c = credible_bounds(constant, 0.2);
    CHECK(c.lower == std::vector<double>{1.0, -2.0});
    CHECK(c.upper == std::vector<double>{1.0, -2.0});

    std::vector<std::vector<double>> two;
    for (int i = 0; i < 20; ++i) two.push_back({i % 2 ? 3.0 : 7.0});
    const CredibleBounds t = credible_bounds(two, 0.2);
    CHECK((t.lower[0] == 3.0 || t.lower[0] == 7.0));
    CHECK((t.upper[0] == 3.0 || t.upper[0] == 7.0));
    CHECK(t.lower[0] <= t.upper[0]);
}

TEST_CASE("credible bounds on normal draws match normal quantiles") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::vector<double>> mapped(10000, std::vector<double>(2));
    for (auto& m : mapped)
        for (double& v : m) v = n(rng);
    const CredibleBounds b = credible_bounds(mapped, 0.2);
    const double q = boost::math::quantile(boost::math::normal(), 0.2);
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(b.lower[i] - q) <= 0.05);
        CHECK(std::abs(b.upper[i] + q) <= 0.05);
    }
}

TEST_CASE("credible bounds close in on the median") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::vector<double>> mapped(4001, std::vector<double>(1));
    std::vector<double> flat;
    for (auto& m : mapped) flat.push_back(m[0] = n(rng));
    const double med = quantile(flat, 0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.2, 0.1, 0.01, 0.001}) {
        const CredibleBounds b = credible_bounds(mapped, 0.5 - eps);
        CHECK(b.lower[0] <= med);
        CHECK(b.upper[0] >= med);
        CHECK(b.upper[0] - b.lower[0] <= prev);
        prev = b.upper[0] - b.lower[0];
    }
    CHECK(prev < 0.01);
}

TEST_CASE("credible bounds through a field map") {
    Chain c;
    c.samples = {Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(3.0, 4.0)};
    const FieldMap twice = [](std::span<const double> q) { return std::vector<double>{2.0 * q[0], 2.0 * q[1]}; };
    const CredibleBounds b = credible_bounds(c, twice, 0.25);
    CHECK(b.lower[0] == doctest::Approx(3.0));
    CHECK(b.lower[1] == doctest::Approx(5.0));
    CHECK(b.upper[0] == doctest::Approx(5.0));
    CHECK(b.upper[1] == doctest::Approx(7.0));
}

TEST_CASE("error metrics on constructed cases") {
    const std::vector<double> truth{1.0, 2.0, 3.0, 4.0};
    const ErrorReport same = error_metrics(truth, truth);
    CHECK(same.mae == 0.0);
    CHECK(same.mse == 0.0);
    CHECK(same.linf == 0.0);

    std::vector<double> shifted = truth;
    for (double& v : shifted) v -= 0.5;
    const ErrorReport s = error_metrics(shifted, truth);
    CHECK(s.mae == 0.5);
    CHECK(s.mse == 0.25);
    CHECK(s.linf == 0.5);

    std::vector<double> one = truth;
    one[2] += 2.0;
    const ErrorReport o = error_metrics(one, truth);
    CHECK(o.mae == 0.5);
    CHECK(o.mse == 1.0);
    CHECK(o.linf == 2.0);
    CHECK_THROWS_AS(error_metrics(std::vector<double>{1.0}, truth), InvalidArgument);
}

TEST_CASE("error metrics satisfy norm inequalities") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> a(30), b(30);
        for (int i = 0; i < 30; ++i) {
            a[i] = n(rng);
            b[i] = n(rng);
        }
        const ErrorReport r = error_metrics(a, b);
        CHECK(r.mae <= r.linf);
        CHECK(r.mae * r.mae <= r.mse * (1.0 + 1e-12));
    }
}

TEST_CASE("error metrics reject fields from different meshes") {
    const ParamField a{FieldKind::conductivity, {1.0, 2.0}, 11};
    const ParamField b{FieldKind::conductivity, {1.0, 2.0}, 12};
    CHECK_THROWS_AS(error_metrics(a, b), InvalidArgument);
}

TEST_CASE("masked error") {
    const std::vector<double> r{1.0, 5.0, 3.0}, t{1.0, 1.0, 1.0};
    CHECK(masked_mae(r, t, {false, true, true}) == 3.0);
}

TEST_CASE("Hellinger distance of equal and shifted potentials") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    std::vector<double> phi(1000), shifted(1000), zero(1000, 0.0), constant(1000, 3.0);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        phi[i] = u(rng);
        shifted[i] = phi[i] + 5.0;
    }
    CHECK(hellinger_from_potentials(phi, phi) == 0.0);
    CHECK(hellinger_from_potentials(zero, constant) == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<double> other(1000);
    for (double& v : other) v = u(rng);
    const double h = hellinger_from_potentials(phi, other);
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
    CHECK(hellinger_from_potentials(shifted, std::vector<double>(other.begin(), other.end())) >= 0.0);
    std::vector<double> other_shifted = other;
    for (double& v : other_shifted) v += 5.0;
    CHECK(hellinger_from_potentials(shifted, other_shifted) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("Hellinger estimate for two Gaussian posteriors") {
    const GPPrior prior = diagonal_prior(std::vector<double>{1.0});
    const Potential phi = [](const Eigen::VectorXd& q) { return 0.5 * (1.0 - q[0]) * (1.0 - q[0]); };
    const Potential phi_theta = [](const Eigen::VectorXd& q) { return 0.5 * (1.2 - q[0]) * (1.2 - q[0]); };
    Rng rng(7);
    const double h = hellinger_estimate(prior, phi, phi_theta, 100000, rng);
    CHECK(std::abs(h - std::sqrt(1.0 - std::exp(-0.0025))) <= 0.02);
}

TEST_CASE("surrogate error against itself and a constant offset") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 4);
    const LinearBackend fem(a);
    const FunctionBackend same(BackendKind::surrogate, [&](std::span<const double> q) {
        return Eigen::MatrixXd(a * Eigen::Map<const Eigen::VectorXd>(q.data(), 4));
    });
    const FunctionBackend offset(BackendKind::surrogate, [&](std::span<const double> q) {
        return Eigen::MatrixXd((a * Eigen::Map<const Eigen::VectorXd>(q.data(), 4)).array() + 0.3);
    });
    const GPPrior prior = diagonal_prior(std::vector<double>(4, 1.0));
    Rng r1(1), r2(1);
    CHECK(surrogate_l2mu_error(fem, same, prior, 50, r1) == 0.0);
    CHECK(surrogate_l2mu_error(fem, offset, prior, 50, r2) == doctest::Approx(std::sqrt(6.0) * 0.3));
}

TEST_CASE("Spearman correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(spearman(x, std::vector<double>{2, 4, 6, 8, 10}) == doctest::Approx(1.0));
    CHECK(spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman(x, std::vector<double>{1, 1, 2, 2, 3}) > 0.0);
}

TEST_CASE("scaling study rows") {
    ProblemConfig pc;
    ScalingConfig sc;
    sc.refinements = {2, 3, 4};
    sc.iterations = 2;
    sc.arch.channels = 4;
    sc.arch.conv_layers = 2;
    const auto rows = scaling_study(pc, sc);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.iterations == 2);
        CHECK(r.fem_seconds >= 0.0);
        CHECK(r.net_seconds >= 0.0);
    }
    CHECK(rows[1].dim > rows[0].dim);
    std::stringstream s;
    write_scaling_csv(s, rows);
    CHECK(s.str().rfind("dim,fem_seconds,net_seconds\n", 0) == 0);
}

TEST_CASE("CSV writers") {
    std::stringstream m;
    write_metrics_csv(m, "fem", ErrorReport{0.5, 0.25, 1.0, 2.0}, true);
    CHECK(m.str() == "label,mae,mse,linf,inv_time_seconds\nfem,0.5,0.25,1,2\n");
    TriMesh mesh;
    mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    mesh.triangles = {{0, 1, 2}};
    std::stringstream f;
    write_field_csv(f, mesh, std::vector<double>{4.0});
    CHECK(f.str().rfind("element_id,x_centroid,y_centroid,value\n0,", 0) == 0);
}

}
