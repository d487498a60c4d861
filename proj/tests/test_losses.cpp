#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pointseg/errors.hpp"
#include "pointseg/losses.hpp"
#include "pointseg/raster.hpp"
#include "pointseg/rng.hpp"

using namespace pointseg;

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr double kNegLnEps = 16.11809565095832;  // -ln(1e-7)
}  // namespace

TEST_SUITE("losses") {

TEST_CASE("discriminator loss on coin-flip outputs is 2 ln 2") {
  const std::vector<double> half = {0.5, 0.5};
  const DLoss<double> out = loss_d(half, half);
  CHECK(out.value == doctest::Approx(2.0 * kLn2).epsilon(1e-14));
  for (double g : out.d_real) CHECK(g == doctest::Approx(-1.0));
  for (double g : out.d_fake) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("discriminator loss clamps extreme probabilities") {
  const DLoss<double> out = loss_d<double>({1e-12}, {1.0});
  CHECK(out.value == doctest::Approx(2.0 * kNegLnEps).epsilon(1e-8));
  // Inside the clamp there is no slope.
  CHECK(out.d_real[0] == 0.0);
  CHECK(out.d_fake[0] == 0.0);
}

TEST_CASE("discriminator loss is invariant to batch order") {
  Rng rng(401);
  std::vector<double> real(6), fake(6);
  for (double& v : real) v = rng.uniform(0.05, 0.95);
  for (double& v : fake) v = rng.uniform(0.05, 0.95);
  const double base = loss_d(real, fake).value;
  std::vector<double> real2(real.rbegin(), real.rend());
  std::vector<double> fake2(fake.rbegin(), fake.rend());
  CHECK(loss_d(real2, fake2).value == doctest::Approx(base).epsilon(1e-14));
  // and mixing the pairing leaves the mean untouched too
  std::swap(fake2[0], fake2[3]);
  CHECK(loss_d(real2, fake2).value == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("discriminator gradients match finite differences") {
  Rng rng(402);
  std::vector<double> real(5), fake(5);
  for (double& v : real) v = rng.uniform(0.05, 0.95);
  for (double& v : fake) v = rng.uniform(0.05, 0.95);
  const DLoss<double> out = loss_d(real, fake);
  const double eps = 1e-7;
  for (std::size_t i = 0; i < real.size(); ++i) {
    auto fd = [&](std::vector<double>& v) {
      v[i] += eps;
      const double up = loss_d(real, fake).value;
      v[i] -= 2 * eps;
      const double dn = loss_d(real, fake).value;
      v[i] += eps;
      return (up - dn) / (2 * eps);
    };
    CHECK(out.d_real[i] == doctest::Approx(fd(real)).epsilon(1e-5));
    CHECK(out.d_fake[i] == doctest::Approx(fd(fake)).epsilon(1e-5));
  }
}

TEST_CASE("discriminator loss validates its batches") {
  CHECK_THROWS_AS(loss_d<double>({0.5}, {0.5, 0.5}), ContractError);
  CHECK_THROWS_AS(loss_d<double>({}, {}), ContractError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(loss_d<double>({nan}, {0.5}), TrainError);
}

TEST_CASE("uniform 0.5 predictions cost exactly ln 2 per pixel") {
  Rng rng(403);
  std::vector<double> y_hat(64, 0.5), y_tilde(64);
  for (double& t : y_tilde) t = rng.uniform01() < 0.3 ? 1.0 : 0.0;
  CHECK(loc_bce(y_hat.data(), y_tilde.data(), 64) ==
        doctest::Approx(kLn2).epsilon(1e-14));
}

TEST_CASE("perfect binary predictions cost only the clamp") {
  std::vector<double> y(32);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0 ? 1.0 : 0.0;
  CHECK(loc_bce(y.data(), y.data(), y.size()) < 2e-7);
}

TEST_CASE("pixel loss gradient matches finite differences") {
  Rng rng(404);
  const std::size_t n = 50;
  std::vector<double> y_hat(n), y_tilde(n), grad(n, 0.0);
  for (double& v : y_hat) v = rng.uniform(0.01, 0.99);
  for (double& t : y_tilde) t = rng.uniform01() < 0.5 ? 1.0 : 0.0;
  const double scale = 0.7;
  loc_bce_grad(y_hat.data(), y_tilde.data(), n, scale, grad.data());
  const double eps = 1e-7;
  for (std::size_t i = 0; i < n; i += 7) {
    y_hat[i] += eps;
    const double up = scale * loc_bce(y_hat.data(), y_tilde.data(), n);
    y_hat[i] -= 2 * eps;
    const double dn = scale * loc_bce(y_hat.data(), y_tilde.data(), n);
    y_hat[i] += eps;
    CHECK(grad[i] == doctest::Approx((up - dn) / (2 * eps)).epsilon(1e-5));
  }
}

TEST_CASE("pixel loss gradient is silent where the clamp binds") {
  std::vector<double> y_hat = {0.0, 1.0, 0.5};
  std::vector<double> y_tilde = {1.0, 0.0, 1.0};
  std::vector<double> grad(3, 0.0);
  loc_bce_grad(y_hat.data(), y_tilde.data(), 3, 1.0, grad.data());
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] == 0.0);
  CHECK(grad[2] != 0.0);
}

TEST_CASE("localization guidance equals mean BCE below the cap") {
  Rng rng(405);
  Raster y_hat(8, 8, 1), y_tilde(8, 8, 1);
  // Mostly-right prediction keeps the BCE well under the cap.
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    y_tilde.data[i] = i % 4 == 0 ? 1.0f : 0.0f;
    y_hat.data[i] = y_tilde.data[i] == 1.0f
                        ? static_cast<float>(rng.uniform(0.8, 0.99))
                        : static_cast<float>(rng.uniform(0.01, 0.2));
  }
  std::vector<double> p(y_hat.size()), t(y_tilde.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = y_hat.data[i];
    t[i] = y_tilde.data[i];
  }
  const double plain = loc_bce(p.data(), t.data(), p.size());
  REQUIRE(plain < 0.7);
  CHECK(loss_loc(y_hat, y_tilde, 0.7) == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("fully inverted masks saturate exactly at the cap") {
  Raster y_hat(4, 4, 1), y_tilde(4, 4, 1);
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    y_tilde.data[i] = i % 2 ? 1.0f : 0.0f;
    y_hat.data[i] = 1.0f - y_tilde.data[i];
  }
  CHECK(loss_loc(y_hat, y_tilde, 1.0) == 1.0);
  CHECK(loss_loc(y_hat, y_tilde, 0.7) == 0.7);
}

TEST_CASE("localization guidance stays within [0, rho] on random triples") {
  Rng rng(406);
  for (int trial = 0; trial < 1000; ++trial) {
    const int side = 4 + 2 * rng.uniform_int(3);
    Raster y_hat(side, side, 1), y_tilde(side, side, 1);
    const bool adversarial = trial % 5 == 0;
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
      y_tilde.data[i] = rng.uniform01() < 0.5 ? 1.0f : 0.0f;
      y_hat.data[i] = adversarial
                          ? 1.0f - y_tilde.data[i]
                          : static_cast<float>(rng.uniform01());
    }
    const double rho = rng.uniform(0.05, 2.0);
    const double v = loss_loc(y_hat, y_tilde, rho);
    CHECK(v >= 0.0);
    CHECK(v <= rho);
  }
}

TEST_CASE("localization guidance validates shapes and the cap") {
  CHECK_THROWS_AS(loss_loc(Raster(4, 4, 1), Raster(4, 5, 1), 0.7),
                  ContractError);
  CHECK_THROWS_AS(loss_loc(Raster(4, 4, 3), Raster(4, 4, 1), 0.7),
                  ContractError);
  CHECK_THROWS_AS(loss_loc(Raster(4, 4, 1), Raster(4, 4, 1), 0.0),
                  ContractError);
}

TEST_CASE("generator loss hand values for both variants") {
  const std::vector<double> d1 = {0.5}, d2 = {0.8};

  const GLoss<double> sat = loss_g(d1, d2, 0.25, LossVariant::saturating);
  CHECK(sat.value ==
        doctest::Approx(std::log(0.5) + std::log(0.2) + 0.25).epsilon(1e-14));
  CHECK(sat.d_d1[0] == doctest::Approx(-2.0));
  CHECK(sat.d_d2[0] == doctest::Approx(-5.0));

  const GLoss<double> non = loss_g(d1, d2, 0.25, LossVariant::nonsaturating);
  CHECK(non.value ==
        doctest::Approx(-std::log(0.5) - std::log(0.8) + 0.25).epsilon(1e-14));
  CHECK(non.d_d1[0] == doctest::Approx(-2.0));
  CHECK(non.d_d2[0] == doctest::Approx(-1.25));
}

TEST_CASE("the localization term enters the generator loss additively") {
  Rng rng(407);
  std::vector<double> d1(4), d2(4);
  for (double& v : d1) v = rng.uniform(0.1, 0.9);
  for (double& v : d2) v = rng.uniform(0.1, 0.9);
  for (LossVariant var : {LossVariant::saturating, LossVariant::nonsaturating}) {
    const double with = loss_g(d1, d2, 0.37, var).value;
    const double without = loss_g(d1, d2, 0.0, var).value;
    CHECK(with - without == doctest::Approx(0.37).epsilon(1e-12));
  }
}

TEST_CASE("an absent second discriminator contributes nothing") {
  const std::vector<double> d1 = {0.3, 0.6};
  const GLoss<double> out =
      loss_g<double>(d1, {}, 0.1, LossVariant::nonsaturating);
  CHECK(out.value ==
        doctest::Approx(0.5 * (-std::log(0.3) - std::log(0.6)) + 0.1)
            .epsilon(1e-14));
  CHECK(out.d_d2.empty());
}

TEST_CASE("generator gradients match finite differences") {
  Rng rng(408);
  std::vector<double> d1(5), d2(5);
  for (double& v : d1) v = rng.uniform(0.05, 0.95);
  for (double& v : d2) v = rng.uniform(0.05, 0.95);
  const double eps = 1e-7;
  for (LossVariant var : {LossVariant::saturating, LossVariant::nonsaturating}) {
    const GLoss<double> out = loss_g(d1, d2, 0.2, var);
    for (std::size_t i = 0; i < d1.size(); ++i) {
      auto fd = [&](std::vector<double>& v) {
        v[i] += eps;
        const double up = loss_g(d1, d2, 0.2, var).value;
        v[i] -= 2 * eps;
        const double dn = loss_g(d1, d2, 0.2, var).value;
        v[i] += eps;
        return (up - dn) / (2 * eps);
      };
      CHECK(out.d_d1[i] == doctest::Approx(fd(d1)).epsilon(1e-5));
      CHECK(out.d_d2[i] == doctest::Approx(fd(d2)).epsilon(1e-5));
    }
  }
}

TEST_CASE("generator loss validates its inputs") {
  CHECK_THROWS_AS(loss_g<double>({}, {}, 0.0, LossVariant::nonsaturating),
                  ContractError);
  CHECK_THROWS_AS(
      loss_g<double>({0.5}, {0.5, 0.5}, 0.0, LossVariant::nonsaturating),
      ContractError);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(loss_g<double>({0.5}, {}, inf, LossVariant::nonsaturating),
                  TrainError);
  CHECK_THROWS_AS(
      loss_g<double>({inf}, {}, 0.0, LossVariant::nonsaturating), TrainError);
}

TEST_CASE("the combined objective sums all four parts") {
  LossReport r;
  r.l_d1 = 1.0;
  r.l_d2 = 2.0;
  r.l_g_adv = 3.0;
  r.l_loc = 0.5;
  CHECK(combined_objective(r) == 6.5);
}

}  // TEST_SUITE
