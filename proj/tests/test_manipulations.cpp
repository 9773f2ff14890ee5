#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "psf/dataset.hpp"
#include "psf/error.hpp"
#include "psf/manipulations.hpp"
#include "testutil.hpp"

using namespace psf;
using imaging::ImageBuffer;

TEST_CASE("awgn with sigma zero is the identity") {
    const ImageBuffer img = test::random_image(20, 20, 3, 1);
    CHECK(manip::apply_awgn(img, 0.0, 42).same_pixels(img));
}

TEST_CASE("awgn statistics on mid-gray") {
    const ImageBuffer img(400, 300, 1, 128);  // 120k samples, clamping never binds
    const ImageBuffer noisy = manip::apply_awgn(img, 2.0, 7);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double d = static_cast<double>(noisy.data[i]) - 128.0;
        sum += d;
        sum_sq += d * d;
    }
    const double n = static_cast<double>(img.data.size());
    const double mean = sum / n;
    const double std_dev = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.1);
    CHECK(std_dev > 1.8);
    CHECK(std_dev < 2.2);
}

TEST_CASE("awgn is deterministic per seed") {
    const ImageBuffer img = test::random_image(16, 16, 3, 2);
    CHECK(manip::apply_awgn(img, 2.0, 9).same_pixels(manip::apply_awgn(img, 2.0, 9)));
    CHECK_FALSE(manip::apply_awgn(img, 2.0, 9).same_pixels(manip::apply_awgn(img, 2.0, 10)));
    CHECK_THROWS_AS(manip::apply_awgn(img, -1.0, 0), UsageError);
}

TEST_CASE("gaussian kernel matches the closed form") {
    for (const auto& [size, sigma] : std::vector<std::pair<int, double>>{
             {3, 0.8}, {5, 1.1}, {7, 2.0}, {9, 0.5}}) {
        const auto k = manip::gaussian_kernel(size, sigma);
        double sum = 0.0;
        for (double v : k)
            sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-12);

        // independent evaluation of the center weight
        double z = 0.0;
        const int radius = size / 2;
        for (int r = -radius; r <= radius; ++r)
            for (int c = -radius; c <= radius; ++c)
                z += std::exp(-(r * r + c * c) / (2.0 * sigma * sigma));
        CHECK(k[static_cast<std::size_t>(size * radius + radius)] ==
              doctest::Approx(1.0 / z).epsilon(1e-12));

        // symmetry under both axis flips
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) {
                CHECK(k[static_cast<std::size_t>(r * size + c)] ==
                      k[static_cast<std::size_t>((size - 1 - r) * size + c)]);
                CHECK(k[static_cast<std::size_t>(r * size + c)] ==
                      k[static_cast<std::size_t>(r * size + (size - 1 - c))]);
            }
    }
    CHECK_THROWS_AS(manip::gaussian_kernel(4, 1.0), UsageError);
    CHECK_THROWS_AS(manip::gaussian_kernel(5, 0.0), UsageError);
}

TEST_CASE("blur of a constant image is the constant") {
    const ImageBuffer img(10, 12, 3, 77);
    CHECK(manip::apply_gaussian_blur(img, 5, 1.1).same_pixels(img));
}

TEST_CASE("blur impulse response equals the kernel") {
    ImageBuffer img(11, 11, 1, 0);
    img.at(5, 5, 0) = 255;
    const ImageBuffer out = manip::apply_gaussian_blur(img, 5, 1.1);
    const auto k = manip::gaussian_kernel(5, 1.1);
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c) {
            double expected = 0.0;
            if (std::abs(r - 5) <= 2 && std::abs(c - 5) <= 2)
                expected = 255.0 * k[static_cast<std::size_t>((r - 3) * 5 + (c - 3))];
            CHECK(static_cast<int>(out.at(r, c, 0)) ==
                  static_cast<int>(std::floor(expected + 0.5)));
        }
    CHECK_THROWS_AS(manip::apply_gaussian_blur(ImageBuffer(3, 3, 1, 0), 5, 1.1), DataError);
}

TEST_CASE("median filter on the 3x3 ramp") {
    ImageBuffer img(3, 3, 1);
    for (int i = 0; i < 9; ++i)
        img.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i + 1);
    CHECK(manip::apply_median_filter(img, 3).at(1, 1, 0) == 5);

    const ImageBuffer flat(6, 6, 3, 9);
    CHECK(manip::apply_median_filter(flat, 5).same_pixels(flat));
    CHECK_THROWS_AS(manip::apply_median_filter(flat, 4), UsageError);
}

namespace {

// Brute force: replicate-pad, copy the window, full sort, pick the middle.
ImageBuffer median_oracle(const ImageBuffer& img, int size) {
    const int radius = size / 2;
    ImageBuffer out(img.height, img.width, img.channels);
    for (int ch = 0; ch < img.channels; ++ch)
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c) {
                std::vector<std::uint8_t> window;
                for (int kr = -radius; kr <= radius; ++kr)
                    for (int kc = -radius; kc <= radius; ++kc) {
                        const int rr = std::clamp(r + kr, 0, img.height - 1);
                        const int cc = std::clamp(c + kc, 0, img.width - 1);
                        window.push_back(img.at(rr, cc, ch));
                    }
                std::sort(window.begin(), window.end());
                out.at(r, c, ch) = window[window.size() / 2];
            }
    return out;
}

} // namespace

TEST_CASE("median filter equals the brute-force oracle") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const ImageBuffer img = test::random_image(16, 16, 1, seed);
        const int size = seed % 2 == 0 ? 3 : 5;
        CHECK(manip::apply_median_filter(img, size).same_pixels(median_oracle(img, size)));
    }
}

TEST_CASE("resample ratio one is the identity") {
    const ImageBuffer img = test::random_image(12, 18, 3, 3);
    CHECK(manip::apply_resample(img, 1.0).same_pixels(img));
    CHECK_THROWS_AS(manip::apply_resample(img, 0.0), UsageError);
    CHECK_THROWS_AS(manip::apply_resample(img, 0.01), DataError);  // < 1 pixel
}

TEST_CASE("resample matches a hand-evaluated bilinear oracle") {
    // 2x2 -> 3x3 at ratio 1.5; independent interpolation below, then the
    // center crop back to 2x2.
    ImageBuffer img(2, 2, 1);
    img.at(0, 0, 0) = 10;
    img.at(0, 1, 0) = 50;
    img.at(1, 0, 0) = 90;
    img.at(1, 1, 0) = 130;

    auto sample = [&img](double r, double c) {
        const int r0 = std::clamp(static_cast<int>(std::floor(r)), 0, 1);
        const int r1 = std::clamp(r0 + 1, 0, 1);
        const int c0 = std::clamp(static_cast<int>(std::floor(c)), 0, 1);
        const int c1 = std::clamp(c0 + 1, 0, 1);
        const double fr = std::clamp(r - r0, 0.0, 1.0);
        const double fc = std::clamp(c - c0, 0.0, 1.0);
        const double top = img.at(r0, c0, 0) * (1 - fc) + img.at(r0, c1, 0) * fc;
        const double bot = img.at(r1, c0, 0) * (1 - fc) + img.at(r1, c1, 0) * fc;
        return top * (1 - fr) + bot * fr;
    };
    // 3x3 source coordinates: (i + 0.5) / 1.5 - 0.5
    double expected3[3][3];
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            expected3[r][c] = sample((r + 0.5) / 1.5 - 0.5, (c + 0.5) / 1.5 - 0.5);

    const ImageBuffer out = manip::apply_resample(img, 1.5);
    REQUIRE(out.height == 2);
    REQUIRE(out.width == 2);
    // crop offset floor((3-2)/2) = 0
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            CHECK(static_cast<int>(out.at(r, c, 0)) ==
                  static_cast<int>(std::floor(expected3[r][c] + 0.5)));
}

TEST_CASE("resample preserves dimensions for ratio >= 1") {
    const ImageBuffer img = test::random_image(30, 44, 3, 5);
    for (double ratio : {1.1, 1.5, 2.0}) {
        const ImageBuffer out = manip::apply_resample(img, ratio);
        CHECK(out.height == img.height);
        CHECK(out.width == img.width);
    }
}

TEST_CASE("jpeg roundtrip error bound at quality 100") {
    ImageBuffer img(64, 64, 3);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
            for (int ch = 0; ch < 3; ++ch)
                img.at(r, c, ch) = static_cast<std::uint8_t>(
                    std::min(255, 40 + r + c + 20 * ch));
    const ImageBuffer out = manip::jpeg_roundtrip(img, 100);
    REQUIRE(out.height == 64);
    int max_err = 0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        max_err = std::max(max_err, std::abs(int(img.data[i]) - int(out.data[i])));
    CHECK(max_err <= 4);
}

TEST_CASE("jpeg distortion shrinks as quality rises") {
    Rng rng(11);
    const ImageBuffer img = harness::synth_image(96, 120, rng);
    double prev_mse = 1e30;
    for (int q : {10, 30, 50, 70, 90}) {
        const ImageBuffer out = manip::jpeg_roundtrip(img, q);
        double mse = 0.0;
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            const double d = double(img.data[i]) - double(out.data[i]);
            mse += d * d;
        }
        mse /= static_cast<double>(img.data.size());
        CHECK(mse <= prev_mse);
        prev_mse = mse;
    }
}

TEST_CASE("jpeg handles odd dimensions and grayscale") {
    const ImageBuffer rgb = test::random_image(33, 31, 3, 6);
    const ImageBuffer out = manip::jpeg_roundtrip(rgb, 70);
    CHECK(out.height == 33);
    CHECK(out.width == 31);
    CHECK(out.channels == 3);

    const ImageBuffer gray = test::random_image(17, 9, 1, 7);
    const ImageBuffer gout = manip::jpeg_roundtrip(gray, 70);
    CHECK(gout.channels == 1);
    CHECK(gout.height == 17);

    CHECK_THROWS_AS(manip::jpeg_roundtrip(rgb, 0), UsageError);
    CHECK_THROWS_AS(manip::jpeg_roundtrip(rgb, 101), UsageError);
}

TEST_CASE("dispatch covers all six classes") {
    Rng rng(13);
    const ImageBuffer img = harness::synth_image(80, 96, rng);
    const manip::Params params;

    CHECK(manip::apply_manipulation(img, manip::Kind::Pristine, params, 0).same_pixels(img));
    CHECK(manip::apply_manipulation(img, manip::Kind::MedianFilter, params, 0)
              .same_pixels(manip::apply_median_filter(img, 5)));
    CHECK(manip::apply_manipulation(img, manip::Kind::Awgn, params, 3)
              .same_pixels(manip::apply_manipulation(img, manip::Kind::Awgn, params, 3)));

    for (manip::Kind kind : manip::class_set(true)) {
        const ImageBuffer out = manip::apply_manipulation(img, kind, params, 1);
        CHECK(out.height == img.height);
        CHECK(out.width == img.width);
        CHECK(out.channels == img.channels);
    }
    CHECK(manip::class_set(false).size() == 4);
    CHECK(manip::class_set(true).size() == 6);
}

TEST_CASE("tags round trip") {
    for (manip::Kind kind : manip::class_set(true))
        CHECK(manip::kind_from_tag(manip::tag(kind)) == kind);
    CHECK_THROWS_AS(manip::kind_from_tag("bogus"), UsageError);
}
