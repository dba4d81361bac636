#include <doctest.h>

#include <cmath>
#include <vector>

#include "gen.hpp"
#include "hhm/constraint.hpp"
#include "hhm/errors.hpp"

using namespace hhm;

namespace {

// Seven-row table of the compound map, direction taken from the raw input.
double table_db(double v, int dir, double held, const DbParams& p) {
  const double c = p.c();
  if (dir > 0) {
    if (v >= p.b_r) return c * v - c * p.b_r - p.d_r();
    if (v <= p.b_l) return c * v - c * p.b_l - p.d_r();
    return -p.d_r();
  }
  if (dir < 0) {
    if (v >= p.b_r) return c * v - c * p.b_r - p.d_l();
    if (v <= p.b_l) return c * v - c * p.b_l - p.d_l();
    return -p.d_l();
  }
  return held;
}

// Triangle wave between -amp and amp with period T; rising on [0, T/2).
double triangle(double t, double amp, double T) {
  const double ph = std::fmod(t, T) / T;
  return ph < 0.5 ? -amp + 4.0 * amp * ph : 3.0 * amp - 4.0 * amp * ph;
}

// Physical gap model solved at the turning points: after a reversal at peak value V the output stays
// at the contact value until the input has crossed the whole gap.
double gap_reference(double t, double amp, double T, const DbParams& p) {
  const double v = triangle(t, amp, T);
  const double ph = std::fmod(t, T) / T;
  if (ph < 0.5) {
    // Rising from -amp: contact on the left side at u = k_b(-amp - B_l).
    const double held = p.k_b * (-amp - p.B_l);
    return std::max(held, p.k_b * (v - p.B_r));
  }
  const double held = p.k_b * (amp - p.B_r);
  return std::min(held, p.k_b * (v - p.B_l));
}

}  // namespace

TEST_CASE("deadzone branches") {
  DbParams p;
  CHECK(deadzone(0.0, p) == 0.0);
  CHECK(deadzone(0.5, p) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(deadzone(-0.5, p) == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(deadzone(p.b_r, p) == 0.0);
  CHECK(deadzone(std::nextafter(p.b_r, 1.0), p) < 1e-15);
  CHECK(deadzone(std::nextafter(p.b_r, 0.0), p) == 0.0);
  p.m_d = 2.0;
  CHECK(deadzone(0.7, p) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("parameter validation") {
  DbParams p;
  CHECK_NOTHROW(p.validate());
  p.b_l = 0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = DbParams{};
  p.B_r = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = DbParams{};
  p.m_d = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("backlash: hold, ramp, hysteresis") {
  DbParams p;
  for (auto model : {BacklashModel::Literal, BacklashModel::Engaged}) {
    DbState s;
    // Rising ramp past B_r.
    double u = 0.0;
    for (int k = 0; k <= 100; ++k) u = backlash_step(0.01 * k, s, p, model);
    CHECK(u == doctest::Approx(p.k_b * (1.0 - p.B_r)).epsilon(1e-14));
    // Constant input holds.
    for (int k = 0; k < 10; ++k) CHECK(backlash_step(1.0, s, p, model) == u);
  }
}

TEST_CASE("backlash literal model follows the direction branch on a triangle wave") {
  DbParams p;
  p.k_b = 1.5;
  const double amp = 1.0, T = 2.0, dt = 1e-3 * std::sqrt(2.0);
  DbState s;
  s.v1_prev = triangle(0.0, amp, T);
  int checked = 0;
  for (int k = 1; k < 5000; ++k) {
    const double t = k * dt;
    const double u = backlash_step(triangle(t, amp, T), s, p, BacklashModel::Literal);
    const double ph = std::fmod(t, T) / T, ph_prev = std::fmod(t - dt, T) / T;
    const bool turning = (ph < 0.5) != (ph_prev < 0.5) || ph < ph_prev;
    if (turning) continue;
    const double ref = ph < 0.5 ? p.k_b * (triangle(t, amp, T) - p.B_r) : p.k_b * (triangle(t, amp, T) - p.B_l);
    CHECK(u == doctest::Approx(ref).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked > 4900);
}

TEST_CASE("backlash engaged model matches the event-driven gap reference") {
  DbParams p;
  p.k_b = 1.2;
  p.B_r = 0.25;
  p.B_l = -0.15;
  const double amp = 1.0, T = 2.0, dt = 1e-3;
  DbState s;
  // Start in contact on the left side at the trough.
  s.v1_prev = -amp;
  s.u_prev = p.k_b * (-amp - p.B_l);
  double worst = 0.0;
  for (int k = 1; k < 6000; ++k) {
    const double t = k * dt;
    const double u = backlash_step(triangle(t, amp, T), s, p, BacklashModel::Engaged);
    worst = std::max(worst, std::abs(u - gap_reference(t, amp, T, p)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("hysteresis loop width equals B_r - B_l") {
  DbParams p;
  p.B_r = 0.3;
  p.B_l = -0.1;
  for (auto model : {BacklashModel::Literal, BacklashModel::Engaged}) {
    DbState s;
    s.v1_prev = -1.0;
    s.u_prev = p.k_b * (-1.0 - p.B_l);
    double up_cross = NAN, down_cross = NAN;
    double u_prev = s.u_prev, v_prev = -1.0;
    const double dt = 1e-4;
    for (int k = 1; k < 40000; ++k) {
      const double v = triangle(k * dt, 1.0, 2.0);
      const double u = backlash_step(v, s, p, model);
      if (u_prev < 0.0 && u >= 0.0 && std::isnan(up_cross)) up_cross = v_prev + (v - v_prev) * (-u_prev) / (u - u_prev);
      if (u_prev > 0.0 && u <= 0.0 && std::isnan(down_cross))
        down_cross = v_prev + (v - v_prev) * u_prev / (u_prev - u);
      u_prev = u;
      v_prev = v;
    }
    REQUIRE(!std::isnan(up_cross));
    REQUIRE(!std::isnan(down_cross));
    CHECK(up_cross - down_cross == doctest::Approx(p.B_r - p.B_l).epsilon(1e-6));
  }
}

TEST_CASE("compound map: composition and the branch table") {
  DbParams p;
  p.m_d = 1.3;
  p.k_b = 0.8;
  gen::Rng rng(4);

  SUBCASE("composition on random signals, replay reproduces outputs") {
    std::vector<double> vs(2000);
    double v = 0.0;
    for (auto& x : vs) x = (v += rng.uniform(-0.05, 0.05));
    DbState a, b, c;
    std::vector<double> first;
    for (double x : vs) {
      const double u = compound_db(x, a, p);
      CHECK(u == backlash_step(deadzone(x, p), b, p));
      first.push_back(u);
    }
    for (std::size_t k = 0; k < vs.size(); ++k) CHECK(compound_db(vs[k], c, p) == first[k]);
  }
  SUBCASE("table rows on monotone sweeps") {
    DbState s;
    s.v1_prev = deadzone(-1.0, p);
    for (int k = 1; k <= 200; ++k) {
      const double v = -1.0 + 0.01 * k;
      CHECK(compound_db(v, s, p) == doctest::Approx(table_db(v, 1, 0.0, p)).epsilon(1e-13));
    }
    for (int k = 1; k <= 200; ++k) {
      const double v = 1.0 - 0.01 * k;
      CHECK(compound_db(v, s, p) == doctest::Approx(table_db(v, -1, 0.0, p)).epsilon(1e-13));
    }
  }
  SUBCASE("entering the dead band while rising gives -d_r, then holds") {
    DbState s;
    compound_db(-0.5, s, p);
    CHECK(compound_db(0.0, s, p) == doctest::Approx(-p.d_r()).epsilon(1e-15));
    CHECK(compound_db(0.05, s, p) == doctest::Approx(-p.d_r()).epsilon(1e-15));
    const double held = compound_db(0.05, s, p);
    CHECK(held == doctest::Approx(-p.d_r()).epsilon(1e-15));
  }
}

TEST_CASE("phi blend limits") {
  CHECK(phi_blend(1e3, 0.0, 0.01) == 1.0);
  CHECK(phi_blend(-1e3, 0.0, 0.01) == 0.0);
  CHECK(phi_blend(0.3, 0.3, 0.01) == 0.5);
}

TEST_CASE("smooth inverse parameterization identity") {
  gen::Rng rng(10);
  for (int k = 0; k < 1000; ++k) {
    DbInverseState inv;
    inv.theta_hat << rng.uniform(0.2, 3.0), rng.uniform(0.0, 1.0), rng.uniform(-1.0, 0.0), rng.uniform(0.0, 1.0),
        rng.uniform(-1.0, 0.0);
    const double u = rng.uniform(-2.0, 2.0) * (k % 3 == 0 ? 0.01 : 1.0);
    const double udot = rng.uniform(-2.0, 2.0) * (k % 5 == 0 ? 0.01 : 1.0);
    const double v = adaptive_inverse(u, udot, inv, 1e-3);
    const Vec5 eta = db_error_regressor(v, udot, u, inv);
    CHECK(-inv.theta_hat.dot(eta) == doctest::Approx(u).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("zero signals give the constant regressor") {
  DbInverseState inv;
  const Vec5 eta = db_error_regressor(0.0, 0.0, 0.0, inv);
  CHECK(eta(0) == 0.0);
  for (int i = 1; i < 5; ++i) CHECK(eta(i) == 0.5);
}

TEST_CASE("filtered inverse: pure offset at zero input, offset settles to the exact branch value") {
  DbParams p;
  DbInverseState inv;
  inv.theta_hat = p.theta();
  inv.w_bar_hat = 0.1;
  CHECK(adaptive_inverse(0.0, 0.0, inv, 1e-3, InverseForm::Filtered) == 0.1);
  // Held at zero input: offset does not move.
  CHECK(inv.w_bar_hat == doctest::Approx(0.1).epsilon(1e-15));

  // Positive input at rest: offset goes to b_r, decaying at rate alpha.
  const double dt = 1e-3;
  for (int k = 0; k < 200; ++k) adaptive_inverse(0.5, 0.0, inv, dt, InverseForm::Filtered);
  const double expected = p.b_r + (0.1 - p.b_r) * std::pow(1.0 - inv.p.alpha * dt, 200);
  CHECK(inv.w_bar_hat == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("inverse offset matches the exact branch inverse") {
  DbParams p;
  p.m_d = 1.4;
  p.k_b = 0.9;
  const Vec5 th = p.theta();
  const double c = p.c();
  // Rising with u > 0: v = u/c + d_r/c + b_r reproduces u through the compound map.
  for (double u : {0.3, 1.0, 2.0}) {
    const double v = u / c + inverse_offset(u, 1.0, th, 1e-6, 0.0);
    DbState s;
    s.v1_prev = -10.0;
    CHECK(compound_db(v, s, p) == doctest::Approx(u).epsilon(1e-13));
  }
  for (double u : {-0.3, -1.0}) {
    const double v = u / c + inverse_offset(u, -1.0, th, 1e-6, 0.0);
    DbState s;
    s.v1_prev = 10.0;
    CHECK(compound_db(v, s, p) == doctest::Approx(u).epsilon(1e-13));
  }
}

TEST_CASE("smooth inverse fidelity on band-limited sign-definite signals") {
  DbParams p;
  p.B_r = p.B_l = 0.0;
  DbInverseState inv;
  inv.theta_hat = p.theta();
  const double dt = 1e-3;
  for (double sign : {1.0, -1.0}) {
    DbState s;
    double worst = 0.0, u_prev = sign * 0.6;
    for (int k = 0; k < 20000; ++k) {
      const double t = k * dt;
      const double u = sign * (0.6 + 0.3 * std::sin(2.0 * t) + 0.15 * std::sin(7.3 * t + 0.4));
      const double v = adaptive_inverse(u, (u - u_prev) / dt, inv, dt);
      u_prev = u;
      const double out = compound_db(v, s, p);
      if (t >= 5.0 / inv.p.alpha) worst = std::max(worst, std::abs(out - u));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("smooth inverse is continuous in time") {
  DbParams p;
  DbInverseState inv;
  inv.theta_hat = p.theta();
  const double dt = 1e-4;
  double v_prev = NAN, worst = 0.0, u_prev = 0.0;
  for (int k = 0; k < 40000; ++k) {
    const double u = 0.5 * std::sin(3.0 * k * dt);
    const double v = adaptive_inverse(u, (u - u_prev) / dt, inv, dt);
    u_prev = u;
    if (!std::isnan(v_prev)) worst = std::max(worst, std::abs(v - v_prev));
    v_prev = v;
  }
  // |du| <= 1.5 dt and |dv| <= |du| (1/c + (b_r - b_l) / (2 x0)) away from udot sign changes; at a
  // sign change of udot the blend in udot moves by at most (d_r - d_l)/c spread over several samples.
  const double bound = 1.5 * dt * (1.0 + 0.4 / (2.0 * 0.01)) + 0.4;
  CHECK(worst <= bound);
}

TEST_CASE("adaptation step") {
  Vec5 th = Vec5::Zero();
  th(0) = 1e-6;
  Vec5 eta;
  eta << -0.5, 1.0, 0.0, 1.0, 0.0;
  SUBCASE("zero error, zero estimate apart from the floor") {
    Vec5 z = th;
    adapt_db_step(z, eta, 0.0, 2.0, 0.1, 0.02, 1e-3);
    CHECK(z(0) == 1e-6);
    CHECK(z.tail<4>().norm() == 0.0);
  }
  SUBCASE("leakage decay") {
    Vec5 x = Vec5::Ones();
    for (int k = 0; k < 10000; ++k) adapt_db_step(x, eta, 0.0, 2.0, 0.5, 0.02, 1e-4);
    CHECK(x(2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
  }
  SUBCASE("one hand-evaluated step") {
    Vec5 x = Vec5::Constant(0.5);
    adapt_db_step(x, eta, 0.01, 2.0, 0.1, 0.02, 1e-3);
    // e/k_x = 0.5; x += 1e-3 * 2 * (eta * 0.5 - 0.05)
    CHECK(x(0) == doctest::Approx(0.5 + 2e-3 * (-0.25 - 0.05)).epsilon(1e-14));
    CHECK(x(1) == doctest::Approx(0.5 + 2e-3 * (0.5 - 0.05)).epsilon(1e-14));
    CHECK(x(2) == doctest::Approx(0.5 - 2e-3 * 0.05).epsilon(1e-14));
  }
  SUBCASE("c is projected onto the floor") {
    Vec5 x = Vec5::Zero();
    x(0) = 1e-3;
    Vec5 e = Vec5::Zero();
    e(0) = -100.0;
    adapt_db_step(x, e, 1.0, 1.0, 0.0, 1.0, 1.0);
    CHECK(x(0) == 1e-6);
  }
}

TEST_CASE("adaptation projection box") {
  DbInverseParams p;
  p.c_floor = 0.1;
  p.c_ceiling = 5.0;
  p.offset_limit = 2.0;
  gen::Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    Vec5 x, eta;
    for (int i = 0; i < 5; ++i) {
      x(i) = rng.uniform(-10.0, 10.0);
      eta(i) = rng.uniform(-10.0, 10.0);
    }
    adapt_db_step(x, eta, rng.uniform(-1e3, 1e3), rng.uniform(0.0, 10.0), 0.1, 0.02, 1e-3, p);
    CHECK(x(0) >= 0.1);
    CHECK(x(0) <= 5.0);
    CHECK(x.tail<4>().cwiseAbs().maxCoeff() <= 2.0);
  }
  SUBCASE("interior step is untouched by the box") {
    Vec5 a = Vec5::Constant(0.5), b = a, eta = Vec5::Constant(0.1);
    adapt_db_step(a, eta, 0.01, 2.0, 0.1, 0.02, 1e-3);
    adapt_db_step(b, eta, 0.01, 2.0, 0.1, 0.02, 1e-3, p);
    CHECK((a - b).norm() == 0.0);
  }
}
