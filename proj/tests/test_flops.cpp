#include <doctest.h>

#include "vcm/error.hpp"
#include "vcm/flops.hpp"

using namespace vcm;

namespace {

FlopsProfile unit() {
  FlopsProfile p;
  p.layers = 1;
  p.hidden = 1;
  p.ffn = 1;
  return p;
}

}  // namespace

TEST_CASE("flops_exact") {
  CHECK(flops_exact(unit(), 1) == 8.0);
  CHECK(flops_exact(FlopsProfile{}, 576) == 2986076012544.0);
  const FlopsProfile p;
  CHECK(flops_exact(p, 1152) > 2.0 * flops_exact(p, 576));
}

TEST_CASE("flops_expected") {
  FlopsProfile p;
  p.layers = 1;
  p.hidden = 8;
  p.ffn = 32;
  p.n_mean = 2;
  CHECK(flops_expected(p) == 1600.0);
  CHECK(flops_expected(p) == 25.0 * 512 / 8);

  FlopsProfile noisy = p;
  noisy.n_var = 3.0;
  CHECK(flops_expected(noisy) - flops_expected(p) == doctest::Approx(2.0 * 8 * 3.0));

  for (double d : {64.0, 1024.0, 4096.0}) {
    FlopsProfile q = FlopsProfile::with_default_mean(32, d);
    CHECK(flops_expected(q) ==
          doctest::Approx(expected_unscaled_closed_form(32, d, 0)).epsilon(1e-12));
    CHECK(flops_expected(q) == doctest::Approx(flops_exact(q, q.n_mean)).epsilon(1e-12));
    q.scale = 0.125;
    CHECK(flops_expected(q) ==
          doctest::Approx(expected_eighth_closed_form(32, d, 0)).epsilon(1e-12));
  }
}

TEST_CASE("reduction_ratio") {
  FlopsProfile p = FlopsProfile::with_default_mean(32, 4096);
  p.scale = 0.125;
  const double closed = (3.0 / 8 + 1.0 / 512) / (25.0 / 8);
  CHECK(closed == doctest::Approx(0.120625).epsilon(1e-15));
  CHECK(std::abs(reduction_ratio(p) - closed) <= 1e-12);
  CHECK(1.0 - reduction_ratio(p) >= 0.85);

  p.scale = 1.0;
  CHECK(reduction_ratio(p) == 1.0);

  // scale 1/2 from the expectation terms directly: E[n'] = d/8, E[n'^2] = d^2/64
  p.scale = 0.5;
  const double d = 4096;
  const double direct = (12 * d * d * (d / 8) + 2 * d * (d * d / 64)) /
                        (12 * d * d * (d / 4) + 2 * d * (d * d / 16));
  CHECK(reduction_ratio(p) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(reduction_ratio(p) == doctest::Approx(0.49).epsilon(1e-14));
}

TEST_CASE("reduction_ratio increases with scale") {
  FlopsProfile p = FlopsProfile::with_default_mean(32, 2048);
  p.n_var = 1000;
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    p.scale = i / 100.0;
    const double r = reduction_ratio(p);
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("85% headline holds across large widths with bounded variance") {
  for (double d : {1024.0, 2048.0, 4096.0, 8192.0}) {
    for (double frac : {0.0, 0.25, 0.5, 1.0}) {
      FlopsProfile p = FlopsProfile::with_default_mean(32, d);
      p.n_var = frac * d * d / 100;
      p.scale = 0.125;
      CHECK(1.0 - reduction_ratio(p) >= 0.85);
    }
  }
}

TEST_CASE("profile validation") {
  FlopsProfile p;
  p.scale = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.scale = 1.5;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  FlopsProfile q;
  q.hidden = -1;
  CHECK_THROWS_AS(q.validate(), InvalidArgument);
  FlopsProfile v;
  v.n_var = -1;
  CHECK_THROWS_AS(v.validate(), InvalidArgument);
}
