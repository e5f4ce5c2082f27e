#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mpcad/losses.hpp"
#include "test_support.hpp"

using namespace mpcad;

namespace {

// Central-difference gradient of the dice loss at one coordinate.
double dice_fd(std::vector<double> pred, const std::vector<double>& target, std::size_t i, double h = 1e-4) {
    pred[i] += h;
    double up = dice_loss(pred, target).loss;
    pred[i] -= 2 * h;
    double dn = dice_loss(pred, target).loss;
    return (up - dn) / (2 * h);
}

}  // namespace

TEST_CASE("dice loss on a perfect binary match is zero at eps 1") {
    std::vector<double> p{1, 1, 1, 1, 0, 0, 0, 0};
    DiceResult r = dice_loss(p, p);
    CHECK(r.loss == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("dice loss on disjoint four-pixel masks") {
    std::vector<double> p{1, 1, 1, 1, 0, 0, 0, 0};
    std::vector<double> t{0, 0, 0, 0, 1, 1, 1, 1};
    DiceResult r = dice_loss(p, t);
    // (2*0 + 1) / (4 + 4 + 1) = 1/9.
    CHECK(r.loss == Catch::Approx(1.0 - 1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("dice loss is symmetric in pred and target for the value") {
    Rng rng(41);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> p(16), t(16);
        for (auto& v : p) v = rng.uniform();
        for (auto& v : t) v = rng.uniform();
        CHECK(dice_loss(p, t).loss == Catch::Approx(dice_loss(t, p).loss).epsilon(1e-12));
    }
}

TEST_CASE("dice gradient matches central differences on random 8x8 masks") {
    Rng rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> p(64), t(64);
        for (auto& v : p) v = rng.uniform(0.05, 0.95);
        for (auto& v : t) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        DiceResult r = dice_loss(p, t);
        for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{63}}) {
            double fd = dice_fd(p, t, i);
            REQUIRE(support::rel_err(r.grad[i], fd) < 1e-5);
        }
    }
}

TEST_CASE("dice validates its inputs") {
    CHECK_THROWS_AS(dice_loss({1, 2}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(dice_loss({1}, {1}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(dice_loss({1}, {1}, -1.0), std::invalid_argument);
}

TEST_CASE("empty masks give zero dice loss") {
    DiceResult r = dice_loss({}, {});
    CHECK(r.loss == 0.0);  // eps / eps
    CHECK(r.grad.empty());
}

TEST_CASE("bce values at the anchors") {
    CHECK(bce_loss(0.5, 1).loss == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(0.5, 0).loss == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(1.0, 1).loss == Catch::Approx(0.0).margin(2e-7));
    CHECK(bce_loss(0.0, 0).loss == Catch::Approx(0.0).margin(2e-7));
}

TEST_CASE("bce clamps away from the log singularities") {
    BceResult r = bce_loss(0.0, 1);
    CHECK(r.loss == Catch::Approx(-std::log(1e-7)).epsilon(1e-9));
    CHECK(std::isfinite(r.loss));
    CHECK(std::isfinite(r.dloss_dp));
    CHECK(std::isfinite(bce_loss(1.0, 0).loss));
}

TEST_CASE("bce gradient matches central differences across the open interval") {
    for (double p : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        for (int y : {0, 1}) {
            double h = 1e-6;
            double fd = (bce_loss(p + h, y).loss - bce_loss(p - h, y).loss) / (2 * h);
            REQUIRE(support::rel_err(bce_loss(p, y).dloss_dp, fd) < 1e-6);
        }
    }
}

TEST_CASE("bce gradient signs push toward the label") {
    CHECK(bce_loss(0.3, 1).dloss_dp < 0);  // raising p lowers the loss
    CHECK(bce_loss(0.3, 0).dloss_dp > 0);
    CHECK_THROWS_AS(bce_loss(0.5, 2), std::invalid_argument);
}

TEST_CASE("bce is monotone in the distance from the label") {
    double prev = bce_loss(0.9, 1).loss;
    for (double p : {0.7, 0.5, 0.3, 0.1}) {
        double cur = bce_loss(p, 1).loss;
        CHECK(cur > prev);
        prev = cur;
    }
}
