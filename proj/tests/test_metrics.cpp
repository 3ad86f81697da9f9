#include <cmath>
#include <random>

#include "doctest.h"
#include "rfl/errors.hpp"
#include "rfl/metrics.hpp"
#include "rfl/rng.hpp"

using namespace rfl;

namespace {

Image fixture_a() {
  Image a(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c)
        a.at(x, y)[c] = 0.5 + 0.5 * std::sin(0.7 * x + 1.3 * y + 2.1 * c);
  return a;
}

Image fixture_b() {
  Image b = fixture_a();
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = b.at(x, y)[c] + 0.1 * std::sin(1.9 * x - 0.8 * y + 0.5 * c);
        b.at(x, y)[c] = std::clamp(v, 0.0, 1.0);
      }
  return b;
}

}  // namespace

TEST_CASE("psnr: identical images hit the cap") {
  const Image a = fixture_a();
  CHECK(psnr(a, a) == doctest::Approx(99.0));
}

TEST_CASE("psnr: uniform difference with MSE 0.01 gives 20 dB") {
  Image a(8, 8), b(8, 8);
  for (auto& p : a.pixels) p = {0.45, 0.45, 0.45};
  for (auto& p : b.pixels) p = {0.55, 0.55, 0.55};
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("psnr: matches an independent accumulator on the fixture") {
  // reference value computed once with an independent implementation
  CHECK(psnr(fixture_a(), fixture_b()) ==
        doctest::Approx(23.711865598901763).epsilon(1e-9));
}

TEST_CASE("psnr: symmetry and noise monotonicity") {
  std::mt19937_64 rng(21);
  Image a(12, 12);
  for (auto& p : a.pixels) p = {uniform01(rng), uniform01(rng), uniform01(rng)};
  double prev = 1e9;
  for (double amp : {0.02, 0.05, 0.1, 0.2}) {
    Image b = a;
    std::mt19937_64 noise(77);
    for (auto& p : b.pixels)
      for (int c = 0; c < 3; ++c)
        p[c] = std::clamp(p[c] + amp * (2 * uniform01(noise) - 1), 0.0, 1.0);
    const double v = psnr(a, b);
    CHECK(psnr(b, a) == doctest::Approx(v));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("psnr: shape mismatch") {
  CHECK_THROWS_AS(psnr(Image(4, 4), Image(4, 5)), ShapeMismatch);
}

TEST_CASE("ssim: identical images give 1") {
  const Image a = fixture_a();
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ssim: inverted binary image is strongly negative") {
  Image a(16, 16), b(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const double v = ((x / 2 + y / 2) % 2 == 0) ? 1.0 : 0.0;
      a.at(x, y) = {v, v, v};
      b.at(x, y) = {1 - v, 1 - v, 1 - v};
    }
  CHECK(ssim(a, b) < 0.0);
}

TEST_CASE("ssim: frozen fixture value from a reference implementation") {
  CHECK(ssim(fixture_a(), fixture_b()) ==
        doctest::Approx(0.982677287913801).epsilon(1e-6));
}

TEST_CASE("ssim: symmetry and size guard") {
  const Image a = fixture_a(), b = fixture_b();
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)));
  CHECK_THROWS_AS(ssim(Image(8, 8), Image(8, 8)), TooSmall);
}

TEST_CASE("depth_error: exact, offset, and median tie rule") {
  DepthImage pred(4, 4), gt(4, 4);
  std::vector<uint8_t> mask(16, 1);
  for (int i = 0; i < 16; ++i) gt.values[i] = 2.0 + 0.1 * i;

  pred = gt;
  auto e = depth_error(pred, gt, mask);
  CHECK(e.mae == 0.0);
  CHECK(e.median == 0.0);

  for (int i = 0; i < 16; ++i) pred.values[i] = gt.values[i] + 0.1;
  e = depth_error(pred, gt, mask);
  CHECK(e.mae == doctest::Approx(0.1));
  CHECK(e.median == doctest::Approx(0.1));

  // half exact, half +0.2: MAE 0.1, median takes the lower central statistic
  for (int i = 0; i < 16; ++i) pred.values[i] = gt.values[i] + (i < 8 ? 0.0 : 0.2);
  e = depth_error(pred, gt, mask);
  CHECK(e.mae == doctest::Approx(0.1));
  CHECK(e.median == doctest::Approx(0.0));

  CHECK_THROWS_AS(depth_error(pred, gt, std::vector<uint8_t>(16, 0)), EmptyMask);
}

TEST_CASE("ghost_density_score: zero ghost, equal regions, rescale invariance") {
  const BBox bounds{{-2, -2, -2}, {2, 2, 2}};
  const BBox ghost{{0.5, -0.5, -0.5}, {1.5, 0.5, 0.5}};
  const BBox ref{{-1.5, -0.5, -0.5}, {-0.5, 0.5, 0.5}};

  // two-valued field split at x = 0, regions well inside each half
  VoxelRadianceField f({32, 32, 32}, bounds);
  auto fill_halves = [&](double raw_neg_x, double raw_pos_x) {
    for (int iz = 0; iz < 32; ++iz)
      for (int iy = 0; iy < 32; ++iy)
        for (int ix = 0; ix < 32; ++ix) {
          const double x = -2.0 + 4.0 * ix / 31.0;
          f.density_raw.at(f.density_raw.voxel_index(ix, iy, iz), 0) =
              x < 0 ? raw_neg_x : raw_pos_x;
        }
  };

  fill_halves(0.5, -800.0);  // ghost side exactly empty
  CHECK(ghost_density_score(f, ghost, ref) == doctest::Approx(0.0));

  fill_halves(0.5, 0.5);
  CHECK(ghost_density_score(f, ghost, ref) == doctest::Approx(1.0));

  fill_halves(0.3, 1.1);
  const double base = ghost_density_score(f, ghost, ref);
  // scale the activated density by 3 on both sides
  fill_halves(softplus_inverse(3 * softplus(0.3)), softplus_inverse(3 * softplus(1.1)));
  CHECK(ghost_density_score(f, ghost, ref) == doctest::Approx(base).epsilon(1e-9));

  CHECK_THROWS_AS(
      ghost_density_score(f, BBox{{-3, 0, 0}, {-2.5, 0.5, 0.5}}, ref), InvalidRegion);
}
