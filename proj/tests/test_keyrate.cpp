#include <doctest.h>

#include <cmath>

#include "decoy/error.hpp"
#include "decoy/keyrate.hpp"
#include "oracles.hpp"

using namespace decoy;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected decoy::Error");
  return ErrorKind::Domain;
}

}  // namespace

TEST_CASE("gllp_rate") {
  CHECK(gllp_rate(0.0, 0.0) == 1.0);
  CHECK(gllp_rate(0.5, 0.0) == 0.5);
  const double expected = 1.0 - 0.11 - oracle::entropy(0.03) - 0.89 * oracle::entropy(0.03 / 0.89);
  CHECK(gllp_rate(0.11, 0.03) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(gllp_rate(0.5, 0.3) < 0.0);
  CHECK(kind_of([] { gllp_rate(0.6, 0.5); }) == ErrorKind::Domain);
  CHECK(kind_of([] { gllp_rate(1.0, 0.0); }) == ErrorKind::Domain);
}

TEST_CASE("qber_upper") {
  CHECK(qber_upper(0.03, 0.0) == 0.03);
  CHECK(qber_upper(0.03, 0.1) == doctest::Approx(0.033));
  CHECK(qber_upper(0.45, 0.2) == 0.5);
}

TEST_CASE("ideal_rate") {
  CHECK(ideal_rate(Intensity{1.0}, 1e-3, 0.0) == doctest::Approx(1e-3 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(ideal_rate(Intensity{0.572}, 1e-3, 0.03) == doctest::Approx(1.489e-4).epsilon(1e-6 / 1.489e-4));
  CHECK(ideal_rate(Intensity{0.0}, 1e-3, 0.03) == 0.0);
  CHECK(std::abs(ideal_rate(Intensity{1e-9}, 1e-3, 0.03)) < 1e-11);
}

TEST_CASE("tamkr") {
  const auto best = tamkr(1e-3, 0.03);
  CHECK(best.rate == doctest::Approx(1.489e-4).epsilon(1e-6 / 1.489e-4));
  CHECK(best.rate / 1e-3 == doctest::Approx(oracle::tamkr_over_eta(0.03)).epsilon(1e-6));
  CHECK(std::abs(best.mu.value() - 0.572) <= 0.002);

  const auto lossless_errors = tamkr(1e-3, 0.0);
  CHECK(lossless_errors.rate == doctest::Approx(1e-3 * std::exp(-1.0)).epsilon(1e-7));
  CHECK(std::abs(lossless_errors.mu.value() - 1.0) <= 0.002);

  SUBCASE("eta is a common factor") {
    for (double t1 : {0.0, 0.01, 0.03, 0.06}) {
      const auto a = tamkr(1e-3, t1);
      const auto b = tamkr(2e-3, t1);
      CHECK(b.rate == doctest::Approx(2.0 * a.rate).epsilon(1e-12));
      CHECK(b.mu.value() == a.mu.value());
    }
  }

  CHECK(kind_of([] { tamkr(1e-3, 0.2); }) == ErrorKind::OptimizationFailure);
  CHECK(kind_of([] { tamkr(1e-3, 0.5); }) == ErrorKind::Domain);
}

TEST_CASE("phase_error_factor") {
  CHECK(phase_error_factor(Intensity{0.1}, 1e-3, 0.958e-3) == doctest::Approx(1.15362).epsilon(1e-5));
  CHECK(phase_error_factor(Intensity{0.22}, 1e-4, 0.821e-4) == doctest::Approx(1.51775).epsilon(1e-5));
  CHECK(phase_error_factor(Intensity{0.3}, 1e-3, std::exp(0.3) * 1e-3) == doctest::Approx(1.0));
  CHECK(kind_of([] { phase_error_factor(Intensity{0.1}, 1e-3, 0.0); }) == ErrorKind::DivisionByZero);
}

TEST_CASE("delta_s") {
  CHECK(delta_s(Intensity{0.550}, 0.958e-3, 1e-3).value == doctest::Approx(0.44728).epsilon(1e-4));
  CHECK(delta_s(Intensity{0.478}, 0.821e-4, 1e-4).value == doctest::Approx(0.49094).epsilon(1e-4));
  const auto none = delta_s(Intensity{0.4}, std::exp(0.4) * 1e-3, 1e-3);
  CHECK(none.value == doctest::Approx(0.0).epsilon(1e-12));
  const auto over = delta_s(Intensity{0.4}, 2e-3, 1e-3);
  CHECK(over.value == 0.0);
  CHECK(over.clamped);
}

TEST_CASE("signal_key_rate") {
  SUBCASE("key-rate table column 1") {
    const auto rep = signal_key_rate(Intensity{0.550}, {1e-3, 1e-6, 0.03}, 0.958e-3, Intensity{0.1});
    CHECK(rep.r_signal / 1e-3 == doctest::Approx(oracle::signal_rate_over_eta(0.55, 0.958, 0.1, 0.03)));
    CHECK(rep.r_signal / 1e-3 == doctest::Approx(0.13114).epsilon(1e-4));
    CHECK(std::abs(rep.ratio - 0.880) <= 0.005);
    CHECK(rep.ratio == doctest::Approx(rep.r_signal / rep.r_tamkr));
    CHECK(rep.e_phase == doctest::Approx(rep.f * 0.03));
    CHECK(rep.f == rep.f_literal);
  }
  SUBCASE("key-rate table column 3") {
    const auto rep = signal_key_rate(Intensity{0.478}, {1e-4, 1e-6, 0.03}, 0.821e-4, Intensity{0.22});
    CHECK(std::abs(rep.ratio - 0.573) <= 0.005);
  }
  SUBCASE("no errors and no tagging") {
    const double mu_s = 0.4;
    const auto rep = signal_key_rate(Intensity{mu_s}, {1e-3, 0.0, 0.0}, std::exp(mu_s) * 1e-3, Intensity{mu_s});
    CHECK(rep.r_signal == doctest::Approx(1e-3 * mu_s).epsilon(1e-12));
  }
  SUBCASE("physical convention uses mu_s in the exponent") {
    const auto rep = signal_key_rate(Intensity{0.55}, {1e-3, 1e-6, 0.03}, 0.958e-3, Intensity{0.1},
                                     FConvention::Physical);
    CHECK(rep.f == rep.f_physical);
    CHECK(rep.f == doctest::Approx(1.0 / (1.0 - rep.delta_s)));
    CHECK(rep.r_signal < signal_key_rate(Intensity{0.55}, {1e-3, 1e-6, 0.03}, 0.958e-3, Intensity{0.1}).r_signal);
  }
  SUBCASE("phase error beyond one half yields a flagged zero rate") {
    const auto rep = signal_key_rate(Intensity{0.5}, {1e-3, 1e-6, 0.3}, 0.5e-3, Intensity{0.1},
                                     FConvention::Literal, -1.0, {1e-4, Intensity{0.5}});
    CHECK(rep.phase_error_out_of_range);
    CHECK(rep.rate_zero);
    CHECK(rep.r_signal == 0.0);
  }
  SUBCASE("negative bracket floors at zero") {
    const auto rep = signal_key_rate(Intensity{0.9}, {1e-3, 1e-6, 0.1}, 0.5e-3, Intensity{0.1},
                                     FConvention::Literal, -1.0, {1e-4, Intensity{0.5}});
    CHECK(rep.bracket < 0.0);
    CHECK(rep.rate_zero);
    CHECK(rep.r_signal == 0.0);
  }
  SUBCASE("observed S_mu_s overrides eta mu_s") {
    const auto rep = signal_key_rate(Intensity{0.55}, {1e-3, 1e-6, 0.03}, 0.958e-3, Intensity{0.1},
                                     FConvention::Literal, 6e-4);
    CHECK(rep.s_mu_s == 6e-4);
  }
}

TEST_CASE("signal rate decreases in the tagged fraction and in E") {
  const ChannelModel ch{1e-3, 1e-6, 0.03};
  for (double mu_s = 0.2; mu_s <= 0.8; mu_s += 0.1) {
    double prev = INFINITY;
    for (double s1e = 1.0; s1e >= 0.85; s1e -= 0.01) {
      const auto rep = signal_key_rate(Intensity{mu_s}, ch, s1e * 1e-3, Intensity{0.1});
      CHECK(rep.bracket < prev);
      prev = rep.bracket;
    }
    prev = INFINITY;
    for (double e = 0.0; e <= 0.08; e += 0.005) {
      const auto rep = signal_key_rate(Intensity{mu_s}, {1e-3, 1e-6, e}, 0.95e-3, Intensity{0.1});
      CHECK(rep.bracket < prev);
      prev = rep.bracket;
    }
  }
}

TEST_CASE("signal bracket is the tagged-key formula with its two error rates") {
  // 1 - D - H(t) - (1 - D) H(t / (1 - D)) with H(t) -> H(E) and t / (1 - D) -> fE.
  for (double mu_s = 0.2; mu_s <= 0.8; mu_s += 0.15) {
    for (double s1e : {0.85, 0.92, 0.97}) {
      for (double e : {0.01, 0.03, 0.05}) {
        const auto rep = signal_key_rate(Intensity{mu_s}, {1e-3, 1e-6, e}, s1e * 1e-3, Intensity{0.1});
        const double t = rep.e_phase * (1.0 - rep.delta_s);
        const double via_gllp = gllp_rate(rep.delta_s, t) + binary_entropy(t) - binary_entropy(e);
        CHECK(rep.bracket == doctest::Approx(via_gllp).epsilon(1e-12));
      }
    }
  }
}
