#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "pmon/rng.hpp"
#include "pmon/trajectory.hpp"

using namespace pmon;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

EllipseParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EllipseParams p;
  p.X = 20.0 * u(rng);
  p.Y = 10.0 * u(rng);
  p.b = 0.2 + 3.0 * u(rng);
  p.a = p.b + 4.0 * u(rng);
  p.phi = 4.0 * kPi * u(rng) - 2.0 * kPi;  // deliberately unnormalized
  p.rho0 = 2.0 * kPi * u(rng);
  return p;
}

void shift_component(EllipseParams& p, std::size_t c, double h) {
  switch (c) {
    case kX: p.X += h; break;
    case kY: p.Y += h; break;
    case kA: p.a += h; break;
    case kB: p.b += h; break;
    case kPhi: p.phi += h; break;
    default: break;
  }
}

// Oracle: central finite differences of position() in each parameter.
PositionJacobian fd_jacobian(const EllipseParams& p, double rho, double h) {
  PositionJacobian j{};
  for (std::size_t c = 0; c < kParamsPerAgent; ++c) {
    EllipseParams plus = p;
    EllipseParams minus = p;
    shift_component(plus, c, h);
    shift_component(minus, c, -h);
    const Vec2 fp = position(plus, rho);
    const Vec2 fm = position(minus, rho);
    j.x[c] = (fp.x - fm.x) / (2.0 * h);
    j.y[c] = (fp.y - fm.y) / (2.0 * h);
  }
  return j;
}

// Oracle: Cartesian speed from a central difference along the anomaly.
double fd_arc_speed(const EllipseParams& p, double rho, double h) {
  const Vec2 fp = position(p, rho + h);
  const Vec2 fm = position(p, rho - h);
  const Vec2 drho{(fp.x - fm.x) / (2.0 * h), (fp.y - fm.y) / (2.0 * h)};
  return norm(drho) * anomaly_rate(p, rho);
}

}  // namespace

TEST_CASE("position closed-form points") {
  const EllipseParams axis_aligned{0.0, 0.0, 2.0, 1.0, 0.0, 0.0};
  Vec2 s = position(axis_aligned, 0.0);
  CHECK(s.x == doctest::Approx(2.0));
  CHECK(s.y == doctest::Approx(0.0));
  s = position(axis_aligned, kPi / 2.0);
  CHECK(s.x == doctest::Approx(0.0));
  CHECK(s.y == doctest::Approx(1.0));

  const EllipseParams rotated{3.0, 4.0, 2.0, 1.0, kPi / 2.0, 0.0};
  s = position(rotated, 0.0);
  CHECK(s.x == doctest::Approx(3.0));
  CHECK(s.y == doctest::Approx(6.0));
}

TEST_CASE("position is periodic in the anomaly") {
  auto rng = make_stream(5, Stream::kTesting, 0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 50; ++trial) {
    const EllipseParams p = random_params(rng);
    const double rho = u(rng);
    const Vec2 s0 = position(p, rho);
    const Vec2 s1 = position(p, rho + 2.0 * kPi);
    CHECK(std::abs(s0.x - s1.x) <= 1e-12 * (1.0 + std::abs(s0.x)));
    CHECK(std::abs(s0.y - s1.y) <= 1e-12 * (1.0 + std::abs(s0.y)));
  }
}

TEST_CASE("parameter jacobian matches central finite differences") {
  auto rng = make_stream(6, Stream::kTesting, 0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 100; ++trial) {
    const EllipseParams p = random_params(rng);
    const double rho = u(rng);
    const PositionJacobian jac = position_param_jacobian(p, rho);
    const PositionJacobian ref = fd_jacobian(p, rho, 1e-6);
    for (std::size_t c = 0; c < kParamsPerAgent; ++c) {
      CHECK(std::abs(jac.x[c] - ref.x[c]) <= 1e-7);
      CHECK(std::abs(jac.y[c] - ref.y[c]) <= 1e-7);
    }
  }
}

TEST_CASE("center columns of the jacobian are identity") {
  auto rng = make_stream(8, Stream::kTesting, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const EllipseParams p = random_params(rng);
    const PositionJacobian jac = position_param_jacobian(p, 1.3 * trial);
    CHECK(jac.x[kX] == 1.0);
    CHECK(jac.y[kX] == 0.0);
    CHECK(jac.x[kY] == 0.0);
    CHECK(jac.y[kY] == 1.0);
  }
}

TEST_CASE("minor-axis sensitivity at the top of an axis-aligned ellipse") {
  // phi = 0, rho = pi/2 sits at (X, Y + b): moving b moves the point
  // straight up, so d s / d b = (0, 1). The finite-difference oracle pins
  // down the direction independently of the closed form.
  const EllipseParams p{5.0, 5.0, 2.0, 1.0, 0.0, 0.0};
  const double rho = kPi / 2.0;
  const PositionJacobian jac = position_param_jacobian(p, rho);
  CHECK(jac.x[kB] == doctest::Approx(0.0));
  CHECK(jac.y[kB] == doctest::Approx(1.0));
  const PositionJacobian ref = fd_jacobian(p, rho, 1e-6);
  CHECK(ref.x[kB] == doctest::Approx(0.0));
  CHECK(ref.y[kB] == doctest::Approx(1.0));
}

TEST_CASE("anomaly rate yields unit Cartesian speed") {
  auto rng = make_stream(9, Stream::kTesting, 0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 100; ++trial) {
    const EllipseParams p = random_params(rng);
    const double rho = u(rng);
    // analytic speed: |d position / d rho| * d rho / d t
    const double analytic =
        norm(position_rho_derivative(p, rho)) * anomaly_rate(p, rho);
    CHECK(std::abs(analytic - 1.0) <= 1e-12);
    // numeric arc-speed oracle
    CHECK(std::abs(fd_arc_speed(p, rho, 1e-5) - 1.0) <= 1e-9);
  }
}

TEST_CASE("anomaly rate closed forms") {
  const EllipseParams circle{0.0, 0.0, 3.0, 3.0, 0.7, 0.0};
  for (double rho : {0.0, 0.4, 1.9, 4.4}) {
    CHECK(anomaly_rate(circle, rho) == doctest::Approx(1.0 / 3.0));
  }
  EllipseParams p{0.0, 0.0, 2.0, 1.0, 0.0, 0.0};
  const double rho = 0.7;
  const double expected =
      1.0 / std::sqrt(4.0 * std::sin(rho) * std::sin(rho) +
                      1.0 * std::cos(rho) * std::cos(rho));
  CHECK(anomaly_rate(p, rho) == doctest::Approx(expected));
  // the rate does not depend on the orientation
  EllipseParams q = p;
  q.phi = 1.2;
  CHECK(anomaly_rate(q, rho) == anomaly_rate(p, rho));
}

TEST_CASE("anomaly rate derivatives match finite differences") {
  auto rng = make_stream(10, Stream::kTesting, 0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const EllipseParams p = random_params(rng);
    const double rho = u(rng);
    const AnomalyRateDerivs d = anomaly_rate_derivs(p, rho);

    const double fd_rho =
        (anomaly_rate(p, rho + h) - anomaly_rate(p, rho - h)) / (2.0 * h);
    EllipseParams pa = p;
    pa.a += h;
    EllipseParams ma = p;
    ma.a -= h;
    const double fd_a = (anomaly_rate(pa, rho) - anomaly_rate(ma, rho)) /
                        (2.0 * h);
    EllipseParams pb = p;
    pb.b += h;
    EllipseParams mb = p;
    mb.b -= h;
    const double fd_b = (anomaly_rate(pb, rho) - anomaly_rate(mb, rho)) /
                        (2.0 * h);

    CHECK(std::abs(d.d_rho - fd_rho) <= 1e-5 * std::max(1.0, std::abs(fd_rho)));
    CHECK(std::abs(d.d_a - fd_a) <= 1e-5 * std::max(1.0, std::abs(fd_a)));
    CHECK(std::abs(d.d_b - fd_b) <= 1e-5 * std::max(1.0, std::abs(fd_b)));
  }
}

TEST_CASE("bounding half-widths match a dense sampling oracle") {
  auto rng = make_stream(12, Stream::kTesting, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const EllipseParams p = random_params(rng);
    double max_dx = 0.0;
    double max_dy = 0.0;
    const int samples = 20000;
    for (int i = 0; i < samples; ++i) {
      const double rho = 2.0 * kPi * i / samples;
      const Vec2 s = position(p, rho);
      max_dx = std::max(max_dx, std::abs(s.x - p.X));
      max_dy = std::max(max_dy, std::abs(s.y - p.Y));
    }
    CHECK(bounding_half_width_x(p) == doctest::Approx(max_dx).epsilon(1e-5));
    CHECK(bounding_half_width_y(p) == doctest::Approx(max_dy).epsilon(1e-5));
  }
}

TEST_CASE("a thin ellipse degenerates to its major chord") {
  EllipseParams p{10.0, 5.0, 4.0, kMinMinorAxis, 0.0, 0.0};
  CHECK(bounding_half_width_y(p) == doctest::Approx(kMinMinorAxis));
  for (double rho : {0.0, 0.9, 2.2, 3.7, 5.1}) {
    const Vec2 s = position(p, rho);
    CHECK(std::abs(s.y - p.Y) <= kMinMinorAxis + 1e-15);
    CHECK(std::abs(s.x - p.X) <= p.a + 1e-12);
  }
}

TEST_CASE("angle wrapping preserves the swept path") {
  auto rng = make_stream(13, Stream::kTesting, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const EllipseParams p = random_params(rng);
    const EllipseParams w = wrap_angles(p);
    CHECK(w.phi >= 0.0);
    CHECK(w.phi < kPi);
    CHECK(w.rho0 >= 0.0);
    CHECK(w.rho0 < 2.0 * kPi);
    CHECK(w.a == p.a);
    CHECK(w.b == p.b);
    for (double s : {0.0, 0.37, 1.9, 4.4}) {
      const Vec2 orig = position(p, p.rho0 + s);
      const Vec2 wrapped = position(w, w.rho0 + s);
      CHECK(std::abs(orig.x - wrapped.x) <= 1e-9);
      CHECK(std::abs(orig.y - wrapped.y) <= 1e-9);
      CHECK(std::abs(anomaly_rate(p, p.rho0 + s) -
                     anomaly_rate(w, w.rho0 + s)) <= 1e-9);
    }
  }
}

namespace {

// Oracle: composite Simpson quadrature of the anomaly-space speed
// sqrt(a^2 sin^2 + b^2 cos^2), written independently of arc_length().
double simpson_arc_length(const EllipseParams& p, double rho) {
  const auto speed = [&](double q) {
    const double s = p.a * std::sin(q), c = p.b * std::cos(q);
    return std::sqrt(s * s + c * c);
  };
  const int segments = 20000;  // even
  const double h = rho / segments;
  double acc = speed(0.0) + speed(rho);
  for (int k = 1; k < segments; ++k)
    acc += speed(k * h) * ((k & 1) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("arc length matches a quadrature oracle") {
  auto rng = make_stream(7, Stream::kTesting, 0);
  for (int trial = 0; trial < 12; ++trial) {
    EllipseParams p = random_params(rng);
    if (trial % 2 == 1) std::swap(p.a, p.b);  // exercise b > a
    for (double rho : {0.3, kPi / 2, 2.0, kPi, 5.0, 2.0 * kPi, 9.0}) {
      const double exact = arc_length(p, rho);
      const double oracle = simpson_arc_length(p, rho);
      CHECK(exact == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("a thin ellipse's arc length approaches the traversed chords") {
  // Quadrature oracles lose accuracy at the flat ends, but the half-turn of
  // a degenerate ellipse must approach twice the semi-major axis.
  EllipseParams p;
  p.a = 4.0;
  for (double b : {1e-3, 1e-5}) {
    p.b = b;
    const double half = arc_length(p, kPi);
    CHECK(half > 2.0 * p.a);
    CHECK(half < 2.0 * p.a + 4.0 * b);
  }
}

TEST_CASE("arc length of a circle is radius times angle") {
  EllipseParams p;
  p.a = p.b = 2.5;
  for (double rho : {0.1, 1.0, kPi, 4.0, 2.0 * kPi})
    CHECK(arc_length(p, rho) == doctest::Approx(2.5 * rho).epsilon(1e-12));
}

TEST_CASE("arc length is additive over full turns") {
  auto rng = make_stream(8, Stream::kTesting, 0);
  const EllipseParams p = random_params(rng);
  const double turn = arc_length(p, 2.0 * kPi);
  for (double rho : {0.7, 2.9, 5.5}) {
    CHECK(arc_length(p, rho + 2.0 * kPi) ==
          doctest::Approx(arc_length(p, rho) + turn).epsilon(1e-12));
  }
}

TEST_CASE("advancing the anomaly inverts the arc length") {
  auto rng = make_stream(9, Stream::kTesting, 0);
  for (int trial = 0; trial < 10; ++trial) {
    EllipseParams p = random_params(rng);
    if (trial % 2 == 1) p.b = 2e-4;  // thin: flat ends stress the inversion
    double rho = 2.0 * kPi * trial / 10.0;
    for (double ds : {0.0, 1e-6, 0.01, 0.4, 3.0}) {
      const double next = advance_anomaly(p, rho, ds);
      CHECK(next >= rho);
      const double swept = arc_length(p, next) - arc_length(p, rho);
      CHECK(swept == doctest::Approx(ds).epsilon(1e-9));
    }
  }
}

TEST_CASE("anomaly advance composes like a flow") {
  auto rng = make_stream(10, Stream::kTesting, 0);
  const EllipseParams p = random_params(rng);
  for (double rho : {0.0, 1.3, 4.0}) {
    const double two = advance_anomaly(p, advance_anomaly(p, rho, 0.7), 1.1);
    const double one = advance_anomaly(p, rho, 1.8);
    CHECK(two == doctest::Approx(one).epsilon(1e-10));
  }
}

TEST_CASE("small advances move at the anomaly rate") {
  auto rng = make_stream(11, Stream::kTesting, 0);
  const EllipseParams p = random_params(rng);
  for (double rho : {0.2, 2.0, 5.9}) {
    const double eps = 1e-7;
    const double drho = advance_anomaly(p, rho, eps) - rho;
    CHECK(drho / eps == doctest::Approx(anomaly_rate(p, rho)).epsilon(1e-5));
  }
}
