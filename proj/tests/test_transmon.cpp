#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "qns/transmon.hpp"
#include "test_support.hpp"

using namespace qns;

TEST_CASE("paper circuit parameters reproduce the measured transition frequencies") {
    const LevelStructure levels = solve_levels(test::paper_sensor());
    CHECK(levels.level_freqs_mhz[0] == 0.0);
    CHECK(std::abs(levels.transition_freq_mhz(1) - 3543.5) / 3543.5 < 0.005);
    CHECK(std::abs(levels.transition_freq_mhz(2) - 3336.2) / 3336.2 < 0.005);
    CHECK(std::abs(levels.anharmonicity_mhz() - (-207.3)) / 207.3 < 0.02);
    CHECK_FALSE(levels.regime_warning);
}

TEST_CASE("flux symmetry: spectrum at -phi equals spectrum at +phi") {
    TransmonSpec spec = test::paper_sensor();
    const LevelStructure plus = solve_levels(spec);
    spec.flux_bias = -spec.flux_bias;
    const LevelStructure minus = solve_levels(spec);
    for (int j = 0; j < spec.num_levels; ++j) {
        CHECK(plus.level_freqs_mhz[j] == doctest::Approx(minus.level_freqs_mhz[j]).epsilon(1e-12));
    }
}

TEST_CASE("flux periodicity: phi and phi + 1 give identical outputs") {
    TransmonSpec spec = test::paper_sensor();
    const LevelStructure a = solve_levels(spec);
    spec.flux_bias += 1.0;
    const LevelStructure b = solve_levels(spec);
    for (int j = 0; j < spec.num_levels; ++j) {
        CHECK(a.level_freqs_mhz[j] == doctest::Approx(b.level_freqs_mhz[j]).epsilon(1e-9));
    }
    for (int k = 0; k < spec.num_levels - 1; ++k) {
        CHECK(a.flux_sens_mhz_per_phi0[k] ==
              doctest::Approx(b.flux_sens_mhz_per_phi0[k]).epsilon(1e-6));
    }
}

TEST_CASE("cutoff-doubling oracle: frequencies and anharmonicity converged") {
    const LevelStructure base = solve_levels(test::paper_sensor(5, 30));
    const LevelStructure fine = solve_levels(test::paper_sensor(5, 60));
    for (int j = 1; j < 5; ++j) {
        const double rel = std::abs(base.level_freqs_mhz[j] - fine.level_freqs_mhz[j]) /
                           fine.level_freqs_mhz[j];
        CHECK(rel < 1e-6);
    }
    CHECK(base.anharmonicity_mhz() == doctest::Approx(fine.anharmonicity_mhz()).epsilon(1e-9));
    // Transmon anharmonicity is negative and close to (slightly beyond) -E_c.
    CHECK(base.anharmonicity_mhz() < 0.0);
    CHECK(base.anharmonicity_mhz() / (-181.5) > 1.0);
    CHECK(base.anharmonicity_mhz() / (-181.5) < 1.25);
}

TEST_CASE("spectrum ordering and lambda growth across flux biases") {
    // 0.42 Phi_0 pushes E_J/E_c to ~15 where the upper levels leave the
    // transmon regime; ordering still holds there but the lambda-growth
    // property is only claimed for a proper transmon.
    for (double phi : {0.0, 0.08, 0.17, 0.31, 0.42}) {
        TransmonSpec spec = test::paper_sensor();
        spec.flux_bias = phi;
        const LevelStructure levels = solve_levels(spec);
        for (int j = 1; j < spec.num_levels; ++j) {
            CHECK(levels.level_freqs_mhz[j] > levels.level_freqs_mhz[j - 1]);
        }
        CHECK(levels.drive_ratios[0] == 1.0);
        CHECK(levels.anharmonicity_mhz() < 0.0);
        if (phi > 0.35) continue;
        for (int j = 1; j < spec.num_levels - 1; ++j) {
            CHECK(levels.drive_ratios[j] > levels.drive_ratios[j - 1]);
        }
        // Weak-anharmonicity limit: lambda^(1,2) near sqrt(2).
        CHECK(levels.drive_ratios[1] > 1.30);
        CHECK(levels.drive_ratios[1] < 1.50);
    }
}

TEST_CASE("flux sensitivity vanishes at the sweet spot") {
    TransmonSpec spec = test::paper_sensor();
    spec.flux_bias = 0.0;
    for (int k = 1; k < spec.num_levels; ++k) {
        CHECK(std::abs(flux_sensitivity(spec, k)) < 1e-3);
    }
}

TEST_CASE("transition flux sensitivities agree across the first two transitions") {
    const TransmonSpec spec = test::paper_sensor();
    const double s1 = flux_sensitivity(spec, 1);
    const double s2 = flux_sensitivity(spec, 2);
    const double d01 = s1;
    const double d12 = s2 - s1;
    CHECK(std::abs(d12 - d01) / std::abs(d01) < 0.02);
}

TEST_CASE("Richardson self-consistency of the flux derivative") {
    const TransmonSpec spec = test::paper_sensor();
    for (int k : {1, 2, 4}) {
        const double h = flux_sensitivity(spec, k, 1e-6);
        const double h2 = flux_sensitivity(spec, k, 5e-7);
        CHECK(std::abs(h - h2) / std::abs(h) < 1e-4);
    }
}

TEST_CASE("half-flux singularity raises for a symmetric SQUID") {
    TransmonSpec spec = test::paper_sensor();
    spec.flux_bias = 0.5;
    CHECK_THROWS_AS(flux_sensitivity(spec, 1), std::domain_error);
    spec.asymmetry = 0.3;
    CHECK_NOTHROW(flux_sensitivity(spec, 1));
}

TEST_CASE("regime warning raised when E_J drops to E_c") {
    TransmonSpec spec = test::paper_sensor();
    spec.asymmetry = 0.01;
    spec.flux_bias = 0.4999;
    const LevelStructure levels = solve_levels(spec);
    CHECK(spec.ej_at(spec.flux_bias) <= spec.ec_mhz);
    CHECK(levels.regime_warning);
}

TEST_CASE("spec validation rejects malformed inputs") {
    TransmonSpec spec = test::paper_sensor();
    spec.num_levels = 2;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = test::paper_sensor();
    spec.charge_cutoff = 10;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = test::paper_sensor();
    spec.ej_sum_mhz = -1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = test::paper_sensor();
    spec.asymmetry = 0.0;
    spec.flux_bias = 0.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
