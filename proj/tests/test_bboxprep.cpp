#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flowmotion/bbox.hpp"
#include "flowmotion/errors.hpp"
#include "flowmotion/rng.hpp"

using namespace flowmotion;

namespace {

FlowField random_field(Rng& rng, int w, int h) {
    FlowField f(w, h);
    for (float& c : f.data) {
        c = static_cast<float>(rng.uniform(-5.0, 5.0));
    }
    return f;
}

}  // namespace

TEST_CASE("box_from_corners extracts the min/max hull") {
    std::vector<Point2D> corners = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const Box2D box = box_from_corners(corners);
    CHECK(box == Box2D{0, 1, 0, 1});

    std::vector<Point2D> degenerate(8, Point2D{5, 7});
    const Box2D d = box_from_corners(degenerate);
    CHECK(d == Box2D{5, 5, 7, 7});
}

TEST_CASE("box_from_corners equals a brute-force min/max oracle on random points") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Point2D> corners;
        for (int i = 0; i < 8; ++i) {
            corners.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50)});
        }
        double xmin = corners[0].x, xmax = corners[0].x;
        double ymin = corners[0].y, ymax = corners[0].y;
        for (const Point2D& p : corners) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        CHECK(box_from_corners(corners) == Box2D{xmin, xmax, ymin, ymax});
    }
}

TEST_CASE("box_from_corners rejects bad input") {
    CHECK_THROWS_AS(box_from_corners({{0, 0}, {1, 1}}), ArgumentError);
    std::vector<Point2D> corners(8, Point2D{0, 0});
    corners[3].x = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(box_from_corners(corners), ArgumentError);
}

TEST_CASE("squarify keeps the center and takes the max side") {
    // width 10, height 20 -> side 20 around center (5, 10).
    CHECK(squarify({0, 10, 0, 20}) == Box2D{-5, 15, 0, 20});

    const Box2D square{2, 6, 3, 7};
    CHECK(squarify(square) == square);

    const Box2D zero{0, 0, 0, 0};
    CHECK(squarify(zero) == zero);
}

TEST_CASE("expand scales each side about the center") {
    CHECK(expand({-5, 15, 0, 20}, 3.0) == Box2D{-25, 35, -20, 40});
    const Box2D b{1, 4, 2, 8};
    CHECK(expand(b, 1.0) == b);
    const Box2D point{3, 3, 5, 5};
    CHECK(expand(point, 7.0) == point);
    CHECK_THROWS_AS(expand(b, 0.0), ArgumentError);
    CHECK_THROWS_AS(expand(b, -2.0), ArgumentError);
}

TEST_CASE("squarify then expand preserves the center and triples the max side") {
    Rng rng(37);
    for (int trial = 0; trial < 1000; ++trial) {
        Box2D b;
        b.xmin = rng.uniform(-100, 100);
        b.xmax = b.xmin + rng.uniform(0.0, 80.0);
        b.ymin = rng.uniform(-100, 100);
        b.ymax = b.ymin + rng.uniform(0.0, 80.0);

        const Box2D out = expand(squarify(b), 3.0);
        const double side = 3.0 * std::max(b.width(), b.height());
        REQUIRE(out.width() == doctest::Approx(side).epsilon(1e-9));
        REQUIRE(out.height() == doctest::Approx(side).epsilon(1e-9));

        const double scale = std::max({std::fabs(b.center_x()), std::fabs(b.center_y()), 1.0});
        REQUIRE(std::fabs(out.center_x() - b.center_x()) <= 1e-9 * scale);
        REQUIRE(std::fabs(out.center_y() - b.center_y()) <= 1e-9 * scale);
    }
}

TEST_CASE("crop_edge_padded with a box covering the field is the identity") {
    Rng rng(41);
    const FlowField f = random_field(rng, 6, 4);
    const FlowField crop = crop_edge_padded(f, {0, 6, 0, 4});
    CHECK(crop == f);
}

TEST_CASE("crop_edge_padded of a constant field is constant anywhere") {
    FlowField f(4, 4);
    for (size_t i = 0; i < f.data.size(); i += 2) {
        f.data[i] = 2.0f;
        f.data[i + 1] = -1.0f;
    }
    const FlowField crop = crop_edge_padded(f, {-30, -20, 1, 3});
    CHECK(crop.width == 10);
    CHECK(crop.height == 2);
    for (size_t i = 0; i < crop.data.size(); i += 2) {
        CHECK(crop.data[i] == 2.0f);
        CHECK(crop.data[i + 1] == -1.0f);
    }
}

TEST_CASE("crop_edge_padded replicates edges around a 2x2 field") {
    FlowField f(2, 2);
    f.u(0, 0) = 1.0f;
    f.u(1, 0) = 2.0f;
    f.u(0, 1) = 3.0f;
    f.u(1, 1) = 4.0f;
    const FlowField crop = crop_edge_padded(f, {-1, 3, -1, 3});
    REQUIRE(crop.width == 4);
    REQUIRE(crop.height == 4);
    // Hand-constructed clamp of source coordinates {-1,0,1,2} -> {0,0,1,1}.
    const float expected[4][4] = {
        {1, 1, 2, 2},
        {1, 1, 2, 2},
        {3, 3, 4, 4},
        {3, 3, 4, 4},
    };
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            REQUIRE(crop.u(x, y) == expected[y][x]);
        }
    }
}

TEST_CASE("crop_edge_padded introduces no values outside the source set") {
    Rng rng(43);
    const FlowField f = random_field(rng, 5, 5);
    const FlowField crop = crop_edge_padded(f, {-3.2, 8.9, -2.1, 7.4});
    for (size_t i = 0; i < crop.data.size(); i += 2) {
        bool found = false;
        for (size_t j = 0; j < f.data.size(); j += 2) {
            if (f.data[j] == crop.data[i] && f.data[j + 1] == crop.data[i + 1]) {
                found = true;
                break;
            }
        }
        REQUIRE(found);
    }
}

TEST_CASE("crop_edge_padded rounds edges half away from zero") {
    Rng rng(47);
    const FlowField f = random_field(rng, 8, 8);
    // (0.5, 3.5) rounds to (1, 4): width 3; (-0.5, 2.4) rounds to (-1, 2): height 3.
    const FlowField crop = crop_edge_padded(f, {0.5, 3.5, -0.5, 2.4});
    CHECK(crop.width == 3);
    CHECK(crop.height == 3);
    CHECK(crop.u(0, 1) == f.u(1, 0));
}

TEST_CASE("crop_edge_padded rejects boxes that round to zero area") {
    const FlowField f(4, 4);
    CHECK_THROWS_AS(crop_edge_padded(f, {1.1, 1.2, 0, 4}), DegenerateBoxError);
    CHECK_THROWS_AS(crop_edge_padded(f, {0, 0, 0, 0}), DegenerateBoxError);
}

TEST_CASE("preprocess_roi composes the four stages and outputs 224x224") {
    Rng rng(53);
    const FlowField f = random_field(rng, 100, 100);
    const Box2D raw{45, 55, 40, 60};  // 10x20 centered at (50, 50)

    const FlowField roi = preprocess_roi(f, raw);
    REQUIRE(roi.width == 224);
    REQUIRE(roi.height == 224);

    // Stage-by-stage composition gives the identical result.
    const Box2D window = expand(squarify(raw), 3.0);
    CHECK(window.width() == doctest::Approx(60.0));
    CHECK(window.height() == doctest::Approx(60.0));
    CHECK(window.center_x() == doctest::Approx(50.0));
    CHECK(window.center_y() == doctest::Approx(50.0));
    const FlowField staged = resize_bilinear(crop_edge_padded(f, window), 224, 224);
    CHECK(roi == staged);
}

TEST_CASE("preprocess_roi of a constant field is a constant tensor") {
    FlowField f(32, 32);
    for (size_t i = 0; i < f.data.size(); i += 2) {
        f.data[i] = 0.5f;
        f.data[i + 1] = -0.25f;
    }
    const FlowField roi = preprocess_roi(f, {10, 20, 12, 22});
    for (size_t i = 0; i < roi.data.size(); i += 2) {
        REQUIRE(roi.data[i] == 0.5f);
        REQUIRE(roi.data[i + 1] == -0.25f);
    }
}

TEST_CASE("preprocess_roi rejects degenerate boxes") {
    Rng rng(59);
    const FlowField f = random_field(rng, 16, 16);
    CHECK_THROWS_AS(preprocess_roi(f, {8, 8, 8, 8}), DegenerateBoxError);
}

TEST_CASE("preprocessing commutes with horizontal flip") {
    Rng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const int w = 20 + static_cast<int>(rng.next_below(20));
        const int h = 20 + static_cast<int>(rng.next_below(20));
        const FlowField f = random_field(rng, w, h);
        Box2D box;
        box.xmin = rng.uniform(2.0, w / 2.0);
        box.xmax = box.xmin + rng.uniform(1.0, w / 3.0);
        box.ymin = rng.uniform(2.0, h / 2.0);
        box.ymax = box.ymin + rng.uniform(1.0, h / 3.0);

        const FlowField lhs = preprocess_roi(hflip(f), mirror_box(box, w));
        const FlowField rhs = hflip(preprocess_roi(f, box));
        REQUIRE(lhs.width == rhs.width);
        REQUIRE(lhs.height == rhs.height);
        for (size_t i = 0; i < lhs.data.size(); ++i) {
            REQUIRE(lhs.data[i] == doctest::Approx(rhs.data[i]).epsilon(1e-5));
        }
    }
}
