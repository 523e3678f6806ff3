#include <catch_amalgamated.hpp>

#include "mann/matrix.hpp"
#include "mann/rng.hpp"

using namespace mann;

namespace {

Matrix random_symmetric(std::size_t n, SplitMix64& rng) {
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.next_double(-1.0, 1.0);
            s(i, j) = v;
            s(j, i) = v;
        }
    return s;
}

double eig_residual(const Matrix& s, const EigenDecomposition& e) {
    const Matrix sv = mat_mul(s, e.vectors);
    Matrix vl = e.vectors;
    for (std::size_t i = 0; i < vl.rows(); ++i)
        for (std::size_t j = 0; j < vl.cols(); ++j)
            vl(i, j) *= e.values[j];
    return max_abs(mat_sub(sv, vl));
}

double ortho_residual(const Matrix& v) {
    return max_abs(mat_sub(mat_mul(transpose(v), v), Matrix::identity(v.cols())));
}

} // namespace

TEST_CASE("mat_mul basics") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});

    SECTION("identity") {
        const Matrix i3 = Matrix::identity(3);
        const Matrix b = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
        CHECK(mat_mul(i3, b) == b);
    }
    SECTION("hand example") {
        const Matrix b = Matrix::from_rows({{5}, {6}});
        const Matrix p = mat_mul(a, b);
        REQUIRE(p.rows() == 2);
        REQUIRE(p.cols() == 1);
        CHECK(p(0, 0) == 17.0);
        CHECK(p(1, 0) == 39.0);
    }
    SECTION("zero case") {
        const Matrix z(2, 2);
        CHECK(mat_mul(z, a) == z);
    }
    SECTION("dimension mismatch names both shapes") {
        const Matrix b(3, 2);
        try {
            mat_mul(a, b);
            FAIL("expected shape_error");
        } catch (const shape_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("2x2") != std::string::npos);
            CHECK(msg.find("3x2") != std::string::npos);
        }
    }
    SECTION("associativity on random conformable triples") {
        SplitMix64 rng(11);
        for (int trial = 0; trial < 10; ++trial) {
            Matrix x(3, 4), y(4, 2), z(2, 5);
            for (double& v : x.data()) v = rng.next_double(-1, 1);
            for (double& v : y.data()) v = rng.next_double(-1, 1);
            for (double& v : z.data()) v = rng.next_double(-1, 1);
            const Matrix lhs = mat_mul(mat_mul(x, y), z);
            const Matrix rhs = mat_mul(x, mat_mul(y, z));
            CHECK(max_abs(mat_sub(lhs, rhs)) <= 1e-10);
        }
    }
}

TEST_CASE("transpose basics") {
    const Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    CHECK(transpose(transpose(a)) == a);

    const Matrix s = Matrix::from_rows({{1, 2}, {2, 3}});
    CHECK(transpose(s) == s);

    const Matrix row = Matrix::from_rows({{1, 2, 3}});
    CHECK(transpose(row) == Matrix::from_rows({{1}, {2}, {3}}));
}

TEST_CASE("jacobi_eigh on hand-solved matrices") {
    SECTION("already diagonal") {
        const auto e = jacobi_eigh(Matrix::from_rows({{2, 0}, {0, 1}}));
        CHECK(e.values[0] == Catch::Approx(2.0).margin(1e-12));
        CHECK(e.values[1] == Catch::Approx(1.0).margin(1e-12));
        CHECK(max_abs(mat_sub(e.vectors, Matrix::identity(2))) <= 1e-12);
    }
    SECTION("off-diagonal swap matrix") {
        const auto e = jacobi_eigh(Matrix::from_rows({{0, 1}, {1, 0}}));
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(e.values[0] == Catch::Approx(1.0).margin(1e-10));
        CHECK(e.values[1] == Catch::Approx(-1.0).margin(1e-10));
        CHECK(e.vectors(0, 0) == Catch::Approx(r).margin(1e-10));
        CHECK(e.vectors(1, 0) == Catch::Approx(r).margin(1e-10));
        CHECK(e.vectors(0, 1) == Catch::Approx(r).margin(1e-10));
        CHECK(e.vectors(1, 1) == Catch::Approx(-r).margin(1e-10));
    }
    SECTION("rank-1 covariance") {
        const auto e = jacobi_eigh(Matrix::from_rows({{0.5, -0.5}, {-0.5, 0.5}}));
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(e.values[0] == Catch::Approx(1.0).margin(1e-10));
        CHECK(e.values[1] == Catch::Approx(0.0).margin(1e-10));
        CHECK(e.vectors(0, 0) == Catch::Approx(r).margin(1e-10));
        CHECK(e.vectors(1, 0) == Catch::Approx(-r).margin(1e-10));
    }
}

TEST_CASE("jacobi_eigh properties on random symmetric matrices") {
    SplitMix64 rng(2024);
    for (std::size_t n = 2; n <= 12; ++n) {
        const Matrix s = random_symmetric(n, rng);
        const auto e = jacobi_eigh(s);

        CHECK(eig_residual(s, e) <= 1e-8);
        CHECK(ortho_residual(e.vectors) <= 1e-8);

        double sum = 0.0;
        for (double v : e.values) sum += v;
        CHECK(sum == Catch::Approx(trace(s)).margin(1e-8));

        for (std::size_t j = 1; j < n; ++j) CHECK(e.values[j - 1] >= e.values[j]);
    }
}

TEST_CASE("jacobi_eigh is bit-identical across calls") {
    SplitMix64 rng(7);
    const Matrix s = random_symmetric(8, rng);
    const auto a = jacobi_eigh(s);
    const auto b = jacobi_eigh(s);
    CHECK(a.values == b.values);
    CHECK(a.vectors == b.vectors);
}

TEST_CASE("jacobi_eigh rejects bad input") {
    CHECK_THROWS_AS(jacobi_eigh(Matrix(2, 3)), shape_error);
    CHECK_THROWS_AS(jacobi_eigh(Matrix::from_rows({{0, 1}, {0, 0}})), shape_error);
    CHECK_THROWS_AS(jacobi_eigh(Matrix::identity(2), 0.0), parameter_error);
}
