#include <filagauge/texture.hpp>

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

using filagauge::Errc;
using filagauge::Error;
using filagauge::ImageU8;
using filagauge::kBandSamples;
using filagauge::PseudoSurfacePatch;
using filagauge::SlicedStrip;
using filagauge::TextureBaseline;

namespace {

// Strip with a crisp band on rows [band_lo, band_hi] (inclusive) whose interior
// intensity is produced by `fill(row_in_band)`.
SlicedStrip make_strip(int rows, int cols, int band_lo, int band_hi,
                       const std::function<double(int)>& fill) {
    SlicedStrip strip;
    strip.rectified = ImageU8::Constant(rows, cols, 200);
    for (int c = 0; c < cols; ++c) {
        for (int r = band_lo; r <= band_hi; ++r) {
            strip.rectified(r, c) = static_cast<std::uint8_t>(std::lround(fill(r - band_lo)));
        }
        strip.rectified_mask.push_back(
            filagauge::EdgePair{band_lo - 0.5, band_hi + 0.5});
        strip.mask.push_back(strip.rectified_mask.back());
    }
    strip.target_row = rows / 2.0;
    return strip;
}

PseudoSurfacePatch constant_patch(int cols, double value) {
    PseudoSurfacePatch patch;
    patch.cells = Eigen::MatrixXd::Constant(3 * kBandSamples, cols, value);
    return patch;
}

} // namespace

TEST_CASE("slice_profile: constant band resamples exactly") {
    const SlicedStrip strip = make_strip(40, 4, 10, 20, [](int) { return 90.0; });
    const Eigen::VectorXd profile = filagauge::slice_profile(strip, 1);
    REQUIRE(profile.size() == kBandSamples);
    for (int k = 0; k < kBandSamples; ++k) {
        CHECK(profile[k] == doctest::Approx(90.0).epsilon(1e-12));
    }
}

TEST_CASE("slice_profile: linear ramp keeps its endpoints") {
    // 11 band rows ramping 50 -> 150
    const SlicedStrip strip =
        make_strip(40, 2, 10, 20, [](int i) { return 50.0 + 10.0 * i; });
    const Eigen::VectorXd profile = filagauge::slice_profile(strip, 0);
    CHECK(profile[0] == testutil::approx_abs(50.0, 1.0));
    CHECK(profile[kBandSamples - 1] == testutil::approx_abs(150.0, 1.0));
    // Analytic resampling oracle: value at sample k is 50 + 100 * k / (samples-1)
    for (int k = 0; k < kBandSamples; ++k) {
        const double expected = 50.0 + 100.0 * k / (kBandSamples - 1);
        CHECK(profile[k] == testutil::approx_abs(expected, 1.0));
    }
}

TEST_CASE("slice_profile on an absent column throws") {
    SlicedStrip strip = make_strip(40, 3, 10, 20, [](int) { return 90.0; });
    strip.rectified_mask[2].reset();
    try {
        static_cast<void>(filagauge::slice_profile(strip, 2));
        FAIL("expected AbsentColumn");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::AbsentColumn);
    }
}

TEST_CASE("assemble_patch stacks upper, main, lower") {
    const SlicedStrip upper = make_strip(40, 6, 10, 20, [](int) { return 60.0; });
    const SlicedStrip main = make_strip(40, 6, 12, 22, [](int) { return 90.0; });
    const SlicedStrip lower = make_strip(40, 6, 14, 24, [](int) { return 120.0; });

    const PseudoSurfacePatch patch = filagauge::assemble_patch(upper, main, lower);
    REQUIRE(patch.rows() == 3 * kBandSamples);
    REQUIRE(patch.columns() == 6);
    CHECK(patch.cells(0, 0) == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(patch.cells(kBandSamples, 0) == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(patch.cells(2 * kBandSamples, 0) == doctest::Approx(120.0).epsilon(1e-12));

    SUBCASE("mismatched widths are rejected") {
        const SlicedStrip narrow = make_strip(40, 4, 10, 20, [](int) { return 60.0; });
        try {
            static_cast<void>(filagauge::assemble_patch(narrow, main, lower));
            FAIL("expected MismatchedWidths");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::MismatchedWidths);
        }
    }

    SUBCASE("absent columns are interpolated from neighbors") {
        SlicedStrip gappy = main;
        gappy.rectified_mask[3].reset();
        const PseudoSurfacePatch p = filagauge::assemble_patch(upper, gappy, lower);
        CHECK(p.cells(kBandSamples, 3) == doctest::Approx(90.0).epsilon(1e-9));
    }
}

TEST_CASE("assemble_patch is permutation-covariant in columns") {
    // Distinct per-column values so permutations are visible.
    auto per_column = [](int rows, int cols, int lo, int hi, double base) {
        SlicedStrip s;
        s.rectified = ImageU8::Constant(rows, cols, 200);
        for (int c = 0; c < cols; ++c) {
            for (int r = lo; r <= hi; ++r) {
                s.rectified(r, c) = static_cast<std::uint8_t>(base + 7 * c);
            }
            s.rectified_mask.push_back(filagauge::EdgePair{lo - 0.5, hi + 0.5});
        }
        return s;
    };
    const auto upper = per_column(40, 5, 10, 20, 40.0);
    const auto main = per_column(40, 5, 12, 22, 80.0);
    const auto lower = per_column(40, 5, 14, 24, 120.0);
    const auto patch = filagauge::assemble_patch(upper, main, lower);

    const std::vector<int> perm{4, 2, 0, 3, 1};
    auto permute = [&](const SlicedStrip& s) {
        SlicedStrip p = s;
        for (int c = 0; c < 5; ++c) {
            p.rectified.col(c) = s.rectified.col(perm[c]);
            p.rectified_mask[c] = s.rectified_mask[perm[c]];
        }
        return p;
    };
    const auto permuted = filagauge::assemble_patch(permute(upper), permute(main), permute(lower));
    for (int c = 0; c < 5; ++c) {
        CHECK((permuted.cells.col(c) - patch.cells.col(perm[c])).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("anomaly scoring against a noisy baseline") {
    std::mt19937 rng(41);
    std::normal_distribution<double> noise(0.0, 4.0);
    const int cols = 64;

    TextureBaseline baseline;
    Eigen::VectorXd row_base(3 * kBandSamples);
    for (int r = 0; r < row_base.size(); ++r) {
        row_base[r] = 80.0 + 0.3 * r;
    }
    auto noisy_patch = [&]() {
        PseudoSurfacePatch p;
        p.cells.resize(3 * kBandSamples, cols);
        for (int r = 0; r < p.cells.rows(); ++r) {
            for (int c = 0; c < cols; ++c) {
                p.cells(r, c) = row_base[r] + noise(rng);
            }
        }
        return p;
    };

    for (int i = 0; i < 30; ++i) {
        baseline.observe(noisy_patch());
    }
    REQUIRE(baseline.ready());

    SUBCASE("patch equal to the baseline mean scores zero") {
        PseudoSurfacePatch p;
        p.cells = baseline.row_mean().replicate(1, cols);
        TextureBaseline copy = baseline;
        CHECK(filagauge::anomaly_score(p, copy) == 0.0);
    }

    SUBCASE("5% of cells at +10 sigma scores 0.05, counting oracle agrees") {
        PseudoSurfacePatch p;
        p.cells = baseline.row_mean().replicate(1, cols);
        const Eigen::VectorXd sigma = baseline.row_std();

        const long total = p.cells.size();
        const long inject = total / 20;  // exactly 5%
        std::vector<long> cells(total);
        std::iota(cells.begin(), cells.end(), 0);
        std::shuffle(cells.begin(), cells.end(), rng);
        for (long k = 0; k < inject; ++k) {
            const long r = cells[k] % p.cells.rows();
            const long c = cells[k] / p.cells.rows();
            p.cells(r, c) += 10.0 * sigma[r];
        }

        // Direct counting oracle on the same statistics.
        long expected = 0;
        for (long r = 0; r < p.cells.rows(); ++r) {
            for (long c = 0; c < p.cells.cols(); ++c) {
                if (std::abs(p.cells(r, c) - baseline.row_mean()[r]) > 3.0 * sigma[r]) {
                    ++expected;
                }
            }
        }
        CHECK(expected == inject);

        TextureBaseline copy = baseline;
        const double score = filagauge::anomaly_score(p, copy);
        CHECK(score == testutil::approx_abs(0.05, 0.01));
        CHECK(score == doctest::Approx(static_cast<double>(expected) / total).epsilon(1e-12));
    }

    SUBCASE("score grows with the number of deviant cells") {
        const Eigen::VectorXd sigma = baseline.row_std();
        double last = -1.0;
        for (int frac = 1; frac <= 4; ++frac) {
            PseudoSurfacePatch p;
            p.cells = baseline.row_mean().replicate(1, cols);
            const long inject = p.cells.size() * frac / 20;
            for (long k = 0; k < inject; ++k) {
                const long r = k % p.cells.rows();
                const long c = k / p.cells.rows();
                p.cells(r, c) += 12.0 * sigma[r];
            }
            TextureBaseline copy = baseline;
            const double score = filagauge::anomaly_score(p, copy);
            CHECK(score >= last);
            last = score;
        }
    }

    SUBCASE("shifting patch and baseline by a constant leaves the score unchanged") {
        std::mt19937 rng_a(77), rng_b(77);
        std::normal_distribution<double> n(0.0, 4.0);
        TextureBaseline plain, shifted;
        const double offset = 15.0;
        for (int i = 0; i < 15; ++i) {
            PseudoSurfacePatch a, b;
            a.cells.resize(3 * kBandSamples, cols);
            for (int r = 0; r < a.cells.rows(); ++r) {
                for (int c = 0; c < cols; ++c) {
                    a.cells(r, c) = 90.0 + n(rng_a);
                }
            }
            b.cells = a.cells.array() + offset;
            plain.observe(a);
            shifted.observe(b);
        }
        PseudoSurfacePatch probe = constant_patch(cols, 97.0);
        PseudoSurfacePatch probe_shifted = constant_patch(cols, 97.0 + offset);
        const double s1 = filagauge::anomaly_score(probe, plain);
        const double s2 = filagauge::anomaly_score(probe_shifted, shifted);
        CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
    }
}

TEST_CASE("anomaly scoring needs a minimum baseline") {
    TextureBaseline baseline;  // default window 10
    for (int i = 0; i < 3; ++i) {
        baseline.observe(constant_patch(16, 90.0));
    }
    try {
        static_cast<void>(filagauge::anomaly_score(constant_patch(16, 90.0), baseline));
        FAIL("expected InsufficientBaseline");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InsufficientBaseline);
    }
}

TEST_CASE("identical constant history gives zero score for the same patch") {
    TextureBaseline baseline;
    for (int i = 0; i < 12; ++i) {
        baseline.observe(constant_patch(16, 90.0));
    }
    CHECK(filagauge::anomaly_score(constant_patch(16, 90.0), baseline) == 0.0);
}
