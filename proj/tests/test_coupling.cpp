#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "spinglass/coupling.hpp"

using namespace spinglass;

namespace {

// independent dense symmetric eigensolver oracle for the spectral norm
double eigen_norm(const CouplingMatrix& j) {
    const int n = j.size();
    Eigen::MatrixXd a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = j.at(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    const auto& ev = solver.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
}

}  // namespace

TEST_CASE("Curie-Weiss couplings are 1/n off the diagonal", "[coupling]") {
    const auto j = build(ModelSpec::curie_weiss(4));
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            if (a == b) REQUIRE(j.at(a, b) == 0.0);
            else REQUIRE(j.at(a, b) == 0.25);
        }
}

TEST_CASE("Hopfield couplings from a known pattern", "[coupling]") {
    // single pattern eta = (+1, +1, -1): J_ij = eta_i eta_j / 3
    const int eta[3] = {1, 1, -1};
    const auto j = hopfield_from_patterns(3, 1, std::span<const int>(eta, 3));
    CHECK(j.at(0, 1) == Catch::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(j.at(0, 2) == Catch::Approx(-1.0 / 3).epsilon(1e-15));
    CHECK(j.at(1, 2) == Catch::Approx(-1.0 / 3).epsilon(1e-15));
    CHECK(j.at(0, 0) == 0.0);
}

TEST_CASE("SK entries pass a standard-normal moment check", "[coupling]") {
    const int n = 500;
    const auto j = build(ModelSpec::sk(n, 2024));
    const double scale = std::sqrt(double(n));
    double sum = 0.0, sq = 0.0;
    for (double v : j.upper()) {
        sum += scale * v;
        sq += scale * v * scale * v;
    }
    const double count = double(j.upper().size());
    REQUIRE(count == n * (n - 1) / 2.0);
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    CHECK(std::abs(mean) < 0.1);
    CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("generation is a pure function of the spec", "[coupling]") {
    const auto a = build(ModelSpec::sk(40, 7));
    const auto b = build(ModelSpec::sk(40, 7));
    REQUIRE(a.upper() == b.upper());  // bitwise
    const auto c = build(ModelSpec::sk(40, 8));
    CHECK(a.upper() != c.upper());

    const auto h1 = build(ModelSpec::hopfield(24, 3, 11));
    const auto h2 = build(ModelSpec::hopfield(24, 3, 11));
    REQUIRE(h1.upper() == h2.upper());
}

TEST_CASE("symmetry and zero diagonal hold exactly", "[coupling]") {
    const auto j = build(ModelSpec::sk(20, 3));
    for (int a = 0; a < 20; ++a) {
        REQUIRE(j.at(a, a) == 0.0);
        for (int b = 0; b < 20; ++b) REQUIRE(j.at(a, b) == j.at(b, a));
    }
}

TEST_CASE("invalid specs are rejected", "[coupling]") {
    CHECK_THROWS_AS(build(ModelSpec::curie_weiss(1)), std::invalid_argument);
    CHECK_THROWS_AS(build(ModelSpec::hopfield(8, 0, 1)), std::invalid_argument);
    ModelSpec bad_lattice = ModelSpec::lattice2d(4);
    bad_lattice.n = 15;  // not side^2
    CHECK_THROWS_AS(build(bad_lattice), std::invalid_argument);
}

TEST_CASE("operator norm closed forms", "[coupling]") {
    // Curie-Weiss eigenvalues are (n-1)/n and -1/n
    CHECK(operator_norm(build(ModelSpec::curie_weiss(4))) == Catch::Approx(0.75).margin(1e-12));

    CouplingMatrix two(2);
    two.set(0, 1, 0.5);
    CHECK(operator_norm(two) == Catch::Approx(0.5).margin(1e-12));

    for (int n = 2; n <= 64; ++n) {
        const auto j = build(ModelSpec::curie_weiss(n));
        REQUIRE(operator_norm(j) == Catch::Approx((n - 1.0) / n).margin(1e-12));
    }
}

TEST_CASE("power iteration agrees with a dense eigensolver on SK", "[coupling]") {
    double norm_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto j = build(ModelSpec::sk(500, seed));
        const double via_power = operator_norm(j);
        const double via_eigen = eigen_norm(j);
        REQUIRE(via_power == Catch::Approx(via_eigen).epsilon(1e-5));
        norm_sum += via_power;
    }
    const double mean_norm = norm_sum / 20.0;
    CHECK(mean_norm > 1.7);
    CHECK(mean_norm < 2.2);
}

TEST_CASE("norm survives a bipartite (paired +/- spectrum) matrix", "[coupling]") {
    // periodic 2D lattice: spectrum symmetric around 0
    const auto j = build(ModelSpec::lattice2d(4));
    CHECK(operator_norm(j) == Catch::Approx(eigen_norm(j)).epsilon(1e-8));
}

TEST_CASE("norm scales linearly", "[coupling]") {
    const auto j = build(ModelSpec::sk(50, 9));
    const double base = operator_norm(j);
    for (double c : {-2.0, 0.5, 10.0}) {
        CouplingMatrix scaled(j.size());
        j.for_each_upper([&](int a, int b, double v) { scaled.set(a, b, c * v); });
        REQUIRE(operator_norm(scaled) == Catch::Approx(std::abs(c) * base).epsilon(1e-9));
    }
}

TEST_CASE("norm dominates entries and is below the L-infinity bound", "[coupling]") {
    const auto j = build(ModelSpec::sk(30, 4));
    const double norm = operator_norm(j);
    double max_entry = 0.0, max_row_sum = 0.0;
    for (int a = 0; a < j.size(); ++a) {
        double row = 0.0;
        for (int b = 0; b < j.size(); ++b) {
            max_entry = std::max(max_entry, std::abs(j.at(a, b)));
            row += std::abs(j.at(a, b));
        }
        max_row_sum = std::max(max_row_sum, row);
    }
    CHECK(norm >= max_entry - 1e-9);
    CHECK(norm <= max_row_sum + 1e-9);
}

TEST_CASE("normalize divides by the norm", "[coupling]") {
    auto [unit, scale] = normalize(build(ModelSpec::curie_weiss(4)));
    CHECK(scale == Catch::Approx(0.75).margin(1e-12));
    CHECK(unit.at(0, 1) == Catch::Approx(1.0 / 3).epsilon(1e-12));

    // idempotence
    auto [again, scale2] = normalize(unit);
    CHECK(scale2 == Catch::Approx(1.0).margin(1e-9));
    for (std::size_t p = 0; p < unit.upper().size(); ++p)
        REQUIRE(again.upper()[p] == Catch::Approx(unit.upper()[p]).epsilon(1e-12));

    auto [sk_unit, sk_scale] = normalize(build(ModelSpec::sk(100, 6)));
    CHECK(sk_scale > 0.0);
    CHECK(operator_norm(sk_unit) == Catch::Approx(1.0).margin(1e-8));

    CouplingMatrix zero(3);
    CHECK_THROWS_AS(normalize(zero), std::invalid_argument);
}

TEST_CASE("jmat round trip is bit exact", "[coupling]") {
    for (const auto& j :
         {build(ModelSpec::curie_weiss(4)), build(ModelSpec::sk(30, 12))}) {
        std::stringstream buf;
        write_matrix(j, buf);
        const auto back = read_matrix(buf);
        REQUIRE(back.size() == j.size());
        REQUIRE(back.upper() == j.upper());  // bitwise
    }
}

TEST_CASE("jmat parse errors name the offending line", "[coupling]") {
    auto read_text = [](const std::string& text) {
        std::istringstream in(text);
        return read_matrix(in);
    };
    SECTION("malformed header") {
        CHECK_THROWS_WITH(read_text("jmat 2\nn 4\n0 1 0.5\n"),
                          Catch::Matchers::ContainsSubstring("line 1"));
    }
    SECTION("diagonal entry") {
        CHECK_THROWS_WITH(read_text("jmat 1\nn 4\n2 2 0.5\n"),
                          Catch::Matchers::ContainsSubstring("diagonal") &&
                              Catch::Matchers::ContainsSubstring("line 3"));
    }
    SECTION("index out of range") {
        CHECK_THROWS_WITH(read_text("jmat 1\nn 4\n1 7 0.5\n"),
                          Catch::Matchers::ContainsSubstring("out of range"));
    }
    SECTION("duplicate entry") {
        CHECK_THROWS_WITH(read_text("jmat 1\nn 4\n0 1 0.5\n0 1 0.25\n"),
                          Catch::Matchers::ContainsSubstring("duplicate") &&
                              Catch::Matchers::ContainsSubstring("line 4"));
    }
    SECTION("zero matrix") {
        CHECK_THROWS_WITH(read_text("jmat 1\nn 4\n"),
                          Catch::Matchers::ContainsSubstring("zero matrix"));
    }
    SECTION("comments and blank lines are fine") {
        const auto j = read_text("# a comment\njmat 1\nn 3\n\n0 2 1.5\n# tail\n");
        CHECK(j.at(0, 2) == 1.5);
    }
}
