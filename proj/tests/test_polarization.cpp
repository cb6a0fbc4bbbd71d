#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cqed/polarization.hpp"

using namespace cqed;

namespace {

Vec3 random_k(std::mt19937& rng) {
    std::uniform_real_distribution<double> d(-1, 1);
    for (;;) {
        Vec3 k{d(rng), d(rng), d(rng)};
        if (norm3(k) > 1e-3) return k;
    }
}

} // namespace

TEST_CASE("rotation maps z to khat and is orthogonal") {
    Vec3 kz{0, 0, 2.5};
    auto Rz = rotation(kz);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(Rz[i][j] - (i == j ? 1.0 : 0.0)) < 1e-14);

    Vec3 kx{1.7, 0, 0};
    auto Rx = rotation(kx);
    CHECK(std::abs(Rx[0][2] - 1.0) < 1e-14); // R e_z = e_x
    CHECK(std::abs(Rx[1][2]) < 1e-14);
    CHECK(std::abs(Rx[2][2]) < 1e-14);

    std::mt19937 rng(3);
    for (int t = 0; t < 200; ++t) {
        Vec3 k = random_k(rng);
        auto R = rotation(k);
        // R^T R = 1
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double dot = 0;
                for (int l = 0; l < 3; ++l) dot += R[l][i] * R[l][j];
                CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-14);
            }
        // R z = khat
        double n = norm3(k);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(R[i][2] - k[i] / n) < 1e-13);
    }
    CHECK_THROWS_AS(rotation(Vec3{0, 0, 0}), DirectionError);
}

TEST_CASE("basis along z matches the reference columns") {
    Vec3 kz{0, 0, 1};
    auto [ep, em] = basis(kz);
    double s2 = 1 / std::sqrt(2.0);
    CHECK(std::abs(ep[0] - s2) < 1e-15);
    CHECK(std::abs(ep[1] - cplx(0, s2)) < 1e-15);
    CHECK(std::abs(ep[2]) < 1e-15);
    CHECK(std::abs(em[0] - s2) < 1e-15);
    CHECK(std::abs(em[1] - cplx(0, -s2)) < 1e-15);
    CHECK(std::abs(em[2]) < 1e-15);
}

TEST_CASE("transversality, orthonormality, completeness") {
    std::mt19937 rng(9);
    auto check_k = [&](const Vec3& k) {
        auto [ep, em] = basis(k);
        cplx kdotp = 0, kdotm = 0, pp = 0, mm = 0, pm = 0;
        for (int i = 0; i < 3; ++i) {
            kdotp += k[i] * ep[i];
            kdotm += k[i] * em[i];
            pp += std::conj(ep[i]) * ep[i];
            mm += std::conj(em[i]) * em[i];
            pm += std::conj(ep[i]) * em[i];
        }
        CHECK(std::abs(kdotp) < 1e-13 * norm3(k));
        CHECK(std::abs(kdotm) < 1e-13 * norm3(k));
        CHECK(std::abs(pp - 1.0) < 1e-14);
        CHECK(std::abs(mm - 1.0) < 1e-14);
        CHECK(std::abs(pm) < 1e-14);
        // completeness = transverse projector
        auto P = transverse_projector(k);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                cplx sum = ep[i] * std::conj(ep[j]) + em[i] * std::conj(em[j]);
                CHECK(std::abs(sum - P[i][j]) < 1e-14);
            }
    };
    for (int t = 0; t < 500; ++t) check_k(random_k(rng));
    // poles are well defined
    check_k(Vec3{0, 0, 1});
    check_k(Vec3{0, 0, -3.2});
}

TEST_CASE("mode projection identity") {
    CHECK(mode_projection_identity(Vec3{0, 0, 1.0}) < 1e-15);
    std::mt19937 rng(11);
    double worst = 0;
    for (int t = 0; t < 1000; ++t) worst = std::max(worst, mode_projection_identity(random_k(rng)));
    CHECK(worst < 1e-13);
}

TEST_CASE("polarization state validation") {
    CHECK_THROWS_AS(PolarizationState(Vec3{0, 0, 0}, 1.0, 0.0), DirectionError);
    CHECK_THROWS_AS(PolarizationState(Vec3{0, 0, 1}, 1.0, 1.0), std::invalid_argument);
    PolarizationState circular(Vec3{0, 1, 0}, cplx(0, 1), 0.0);
    auto e = circular.vector();
    cplx kdote = e[1]; // k along y
    CHECK(std::abs(kdote) < 1e-14);
}
