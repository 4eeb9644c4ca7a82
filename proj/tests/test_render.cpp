#include <catch2/catch_amalgamated.hpp>

#include "ddr/render.hpp"
#include "ddr/rng.hpp"

using namespace ddr;

namespace {
Ray unit_z_ray(double t_near = 0.0, double t_far = 4.0) {
  Ray r;
  r.origin = Vec3::Zero();
  r.direction = Vec3(0, 0, -1);
  r.t_near = t_near;
  r.t_far = t_far;
  return r;
}

RaySampling fill_sampling(int n, double t_near, double t_far) {
  return stratified_sample(unit_z_ray(t_near, t_far), n, nullptr);
}
}  // namespace

TEST_CASE("midpoint sampling covers equal bins") {
  const RaySampling s = fill_sampling(4, 0.0, 4.0);
  CHECK(s.t == std::vector<double>{0.5, 1.5, 2.5, 3.5});
  CHECK(s.delta == std::vector<double>{1.0, 1.0, 1.0, 1.0});
  CHECK(s.mean_delta == 1.0);
}

TEST_CASE("jittered samples stay inside their bins and are reproducible") {
  CounterRng rng(3);
  const Ray ray = unit_z_ray(1.0, 3.0);
  const RaySampling a = stratified_sample(ray, 16, &rng, 7, 11);
  const RaySampling b = stratified_sample(ray, 16, &rng, 7, 11);
  const RaySampling c = stratified_sample(ray, 16, &rng, 7, 12);
  CHECK(a.t == b.t);
  CHECK(a.t != c.t);
  const double width = 2.0 / 16;
  for (int i = 0; i < 16; ++i) {
    CHECK(a.t[i] > 1.0 + i * width);
    CHECK(a.t[i] < 1.0 + (i + 1) * width);
  }
}

TEST_CASE("weights and residual transmittance sum to one") {
  CounterRng rng(5);
  const RaySampling s = fill_sampling(32, 0.0, 5.0);
  std::vector<double> sigma(32);
  std::vector<Vec3> color(32, Vec3(0.5, 0.5, 0.5));
  for (int k = 0; k < 20; ++k) {
    for (int i = 0; i < 32; ++i)
      sigma[i] = 4.0 * rng.uniform(rng_stream::kTest, k, i, 0);
    const RenderResult r = render_samples(s, sigma, color);
    double sum = r.residual_transmittance;
    for (double w : r.weights.w) sum += w;
    CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("vacuum renders the background and zero depth") {
  const RaySampling s = fill_sampling(8, 0.0, 4.0);
  const std::vector<double> sigma(8, 0.0);
  const std::vector<Vec3> color(8, Vec3(1, 0, 0));
  const RenderResult r = render_samples(s, sigma, color, Vec3(0.2, 0.4, 0.6));
  CHECK(r.residual_transmittance == 1.0);
  CHECK(r.depth == 0.0);
  CHECK((r.color - Vec3(0.2, 0.4, 0.6)).norm() < 1e-15);
}

TEST_CASE("homogeneous medium matches the closed form") {
  const int n = 64;
  const double sig = 0.8;
  const RaySampling s = fill_sampling(n, 0.0, 8.0);
  const std::vector<double> sigma(n, sig);
  const std::vector<Vec3> color(n, Vec3::Ones());
  const RenderResult r = render_samples(s, sigma, color);
  const double d = s.mean_delta;
  const double alpha = 1.0 - std::exp(-sig * d);
  for (int i = 0; i < n; ++i) {
    CHECK(r.transmittance[i] == Catch::Approx(std::exp(-sig * d * i)).epsilon(1e-12));
    CHECK(r.weights.w[i] ==
          Catch::Approx(std::exp(-sig * d * i) * alpha).epsilon(1e-12));
  }
  CHECK(r.residual_transmittance == Catch::Approx(std::exp(-sig * 8.0)).epsilon(1e-12));
}

TEST_CASE("an opaque sample saturates the ray at its position") {
  const RaySampling s = fill_sampling(16, 0.0, 4.0);
  std::vector<double> sigma(16, 0.0);
  std::vector<Vec3> color(16, Vec3::Zero());
  sigma[9] = 1e6;
  color[9] = Vec3(0.1, 0.9, 0.3);
  const RenderResult r = render_samples(s, sigma, color, Vec3::Ones());
  CHECK(r.weights.w[9] == Catch::Approx(1.0).epsilon(1e-9));
  CHECK(r.depth == Catch::Approx(s.t[9]).epsilon(1e-9));
  CHECK((r.color - Vec3(0.1, 0.9, 0.3)).norm() < 1e-6);
  CHECK(r.residual_transmittance < 1e-12);
}

TEST_CASE("two half-opaque surfaces split the weight") {
  // alpha = 0.5 at each of two samples: w = {0.5, 0.25}, T_res = 0.25.
  const RaySampling s = fill_sampling(2, 0.0, 2.0);
  const double sig = std::log(2.0);  // alpha = 1 - exp(-sig * 1) = 0.5
  const std::vector<double> sigma(2, sig);
  const std::vector<Vec3> color{Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const RenderResult r = render_samples(s, sigma, color);
  CHECK(r.weights.w[0] == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(r.weights.w[1] == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(r.residual_transmittance == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(r.depth == Catch::Approx(0.5 * 0.5 + 0.25 * 1.5).epsilon(1e-12));
}

TEST_CASE("composite helpers agree with the full forward pass") {
  CounterRng rng(9);
  const RaySampling s = fill_sampling(24, 0.5, 3.5);
  std::vector<double> sigma(24);
  std::vector<Vec3> color(24);
  for (int i = 0; i < 24; ++i) {
    sigma[i] = 3.0 * rng.uniform(rng_stream::kTest, 1, i, 0);
    color[i] = Vec3(rng.uniform(rng_stream::kTest, 2, i, 0),
                    rng.uniform(rng_stream::kTest, 3, i, 0),
                    rng.uniform(rng_stream::kTest, 4, i, 0));
  }
  const Vec3 bg(0.3, 0.3, 0.3);
  const RenderResult r = render_samples(s, sigma, color, bg);
  const WeightDistribution w = compute_weights(s, sigma);
  for (int i = 0; i < 24; ++i)
    CHECK(w.w[i] == Catch::Approx(r.weights.w[i]).margin(1e-15));
  CHECK((composite_color(w, color, r.residual_transmittance, bg) - r.color).norm() <
        1e-12);
  CHECK(composite_depth(w) == Catch::Approx(r.depth).epsilon(1e-12));
}

TEST_CASE("render adjoint matches finite differences") {
  CounterRng rng(13);
  const int n = 12;
  const RaySampling s = fill_sampling(n, 0.0, 3.0);
  std::vector<double> sigma(n);
  std::vector<Vec3> color(n);
  for (int i = 0; i < n; ++i) {
    sigma[i] = 0.1 + 2.0 * rng.uniform(rng_stream::kTest, 10, i, 0);
    color[i] = Vec3(rng.uniform(rng_stream::kTest, 11, i, 0),
                    rng.uniform(rng_stream::kTest, 12, i, 0),
                    rng.uniform(rng_stream::kTest, 13, i, 0));
  }
  const Vec3 bg(0.2, 0.5, 0.8);

  RenderUpstream up;
  up.d_color = Vec3(0.4, -0.7, 0.2);
  up.d_depth = 0.9;
  up.d_residual = -0.3;
  up.d_weights.resize(n);
  for (int i = 0; i < n; ++i)
    up.d_weights[i] = rng.uniform(rng_stream::kTest, 14, i, 0) - 0.5;

  const auto scalar = [&](const std::vector<double>& sg, const std::vector<Vec3>& cl) {
    const RenderResult r = render_samples(s, sg, cl, bg);
    double v = up.d_color.dot(r.color) + up.d_depth * r.depth +
               up.d_residual * r.residual_transmittance;
    for (int i = 0; i < n; ++i) v += up.d_weights[i] * r.weights.w[i];
    return v;
  };

  const RenderResult fwd = render_samples(s, sigma, color, bg);
  std::vector<double> d_sigma;
  std::vector<Vec3> d_color;
  render_backward(s, sigma, color, fwd, up, bg, d_sigma, d_color);

  const double h = 1e-6;
  for (int i = 0; i < n; ++i) {
    auto sp = sigma;
    sp[i] += h;
    auto sm = sigma;
    sm[i] -= h;
    const double fd = (scalar(sp, color) - scalar(sm, color)) / (2 * h);
    CHECK(d_sigma[i] == Catch::Approx(fd).margin(1e-6));
    for (int c = 0; c < 3; ++c) {
      auto cp = color;
      cp[i][c] += h;
      auto cm = color;
      cm[i][c] -= h;
      const double fdc = (scalar(sigma, cp) - scalar(sigma, cm)) / (2 * h);
      CHECK(d_color[i][c] == Catch::Approx(fdc).margin(1e-6));
    }
  }
}
