#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fbgskin/simulator.hpp"

using namespace fbgskin;

namespace {

const SkinLayout& layout() {
    static const SkinLayout l = build_default_layout();
    return l;
}

}  // namespace

TEST_CASE("noiseless response shape and examples") {
    const FieldParams params;
    const FbgSensor& s5 = layout().sensors[4];

    SUBCASE("zero force gives zero shifts") {
        const Eigen::VectorXd r = sensor_response(layout(), params, {{10.0, 40.0}, 0.0});
        REQUIRE(r.size() == 16);
        CHECK(r.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("contact at a sensor center peaks that channel") {
        const double f = 1.3;
        const Eigen::VectorXd r = sensor_response(layout(), params, {s5.center, f});
        const double gain = params.peak_sensitivity;  // 8 mm default thickness
        CHECK(r[4] == doctest::Approx(gain * f).epsilon(1e-12));
        for (int i = 0; i < 16; ++i) {
            if (i != 4) CHECK(r[i] < r[4]);
        }
    }
    SUBCASE("response decays with distance from the sensor") {
        const double f = 1.0;
        SurfacePoint far = s5.center;
        far.y += 5.0;
        const double r0 = sensor_response(layout(), params, {s5.center, f})[4];
        const double r5 = sensor_response(layout(), params, {far, f})[4];
        CHECK(r0 > r5);
        double prev = r0;
        for (double d = 1.0; d <= 25.0; d += 1.0) {
            SurfacePoint p = s5.center;
            p.y += d;
            const double v = sensor_response(layout(), params, {p, f})[4];
            CHECK(v < prev);
            prev = v;
        }
    }
    SUBCASE("linearity in force") {
        const SurfacePoint p{-12.0, 71.0};
        const Eigen::VectorXd r1 = sensor_response(layout(), params, {p, 0.7});
        const Eigen::VectorXd r2 = sensor_response(layout(), params, {p, 1.4});
        CHECK((r2 - 2.0 * r1).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("domain errors") {
        CHECK_THROWS_AS(sensor_response(layout(), params, {{50.0, 10.0}, 1.0}),
                        std::domain_error);
        CHECK_THROWS_AS(sensor_response(layout(), params, {{0.0, 10.0}, -1.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("interrogator noise") {
    SensorFrame frame;
    frame.shifts = Eigen::VectorXd::Zero(16);

    SUBCASE("zero sigma is the identity") {
        RngStream rng(1);
        const SensorFrame out = add_noise(frame, rng, 0.0);
        CHECK((out.shifts - frame.shifts).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("empirical sigma matches 0.3 pm within 3%") {
        RngStream rng(42);
        double ss = 0.0;
        long n = 0;
        for (int rep = 0; rep < 7000; ++rep) {
            const SensorFrame out = add_noise(frame, rng, 0.0003);
            ss += out.shifts.squaredNorm();
            n += out.shifts.size();
        }
        const double sd = std::sqrt(ss / n);
        CHECK(sd == doctest::Approx(0.0003).epsilon(0.03));
    }
    SUBCASE("same seed gives a bit-identical sequence") {
        RngStream a(9), b(9);
        for (int rep = 0; rep < 10; ++rep) {
            const SensorFrame fa = add_noise(frame, a, 0.0003);
            const SensorFrame fb = add_noise(frame, b, 0.0003);
            CHECK((fa.shifts - fb.shifts).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("contact detection threshold is inclusive") {
    SensorFrame frame;
    frame.shifts = Eigen::VectorXd::Zero(16);
    CHECK_FALSE(detect_contact(frame));
    frame.shifts[3] = 0.0025;
    CHECK(detect_contact(frame));
    frame.shifts[3] = 0.002;
    CHECK(detect_contact(frame));
    frame.shifts[3] = 0.0019999;
    CHECK_FALSE(detect_contact(frame));
    frame.shifts[3] = -0.0021;  // magnitude counts
    CHECK(detect_contact(frame));
}

TEST_CASE("indentation ramp protocol") {
    const FieldParams params;
    RngStream rng(3);
    const Indentation ind = generate_indentation(layout(), params, 0, {5.0, 60.0}, rng);
    REQUIRE(ind.frames.size() == 1000);
    CHECK(ind.ramp_end == 400);
    CHECK(ind.frames[ind.ramp_end - 1].force_z == 2.5);
    for (const auto& fr : ind.frames) CHECK(fr.force_z <= 2.5);
    for (int k = 1; k < ind.ramp_end; ++k)
        CHECK(ind.frames[k].force_z >= ind.frames[k - 1].force_z);
    for (size_t k = 1; k < ind.frames.size(); ++k)
        CHECK(ind.frames[k].t > ind.frames[k - 1].t);
    CHECK(ind.frames[1].t - ind.frames[0].t == doctest::Approx(0.01));
}

TEST_CASE("dataset generation") {
    const FieldParams params;
    IndentProtocol light;
    light.frames = 5;
    light.ramp_fraction = 0.6;

    SUBCASE("deterministic from (n, seed)") {
        const Dataset a = generate_dataset(layout(), params, 12, 77, light);
        const Dataset b = generate_dataset(layout(), params, 12, 77, light);
        REQUIRE(a.indentations.size() == 12);
        for (int i = 0; i < 12; ++i) {
            CHECK(a.indentations[i].location.x == b.indentations[i].location.x);
            CHECK(a.indentations[i].location.y == b.indentations[i].location.y);
            for (size_t k = 0; k < a.indentations[i].frames.size(); ++k) {
                CHECK((a.indentations[i].frames[k].shifts -
                       b.indentations[i].frames[k].shifts)
                          .cwiseAbs()
                          .maxCoeff() == 0.0);
            }
        }
    }
    SUBCASE("ids unique and locations uniform") {
        const Dataset ds = generate_dataset(layout(), params, 2700, 5, light);
        double mx = 0.0, my = 0.0;
        std::vector<char> seen(2700, 0);
        for (const auto& ind : ds.indentations) {
            REQUIRE(!seen[ind.id]);
            seen[ind.id] = 1;
            mx += ind.location.x;
            my += ind.location.y;
        }
        mx /= 2700.0;
        my /= 2700.0;
        CHECK(std::abs(mx - 0.0) < 2.0);
        CHECK(std::abs(my - 60.0) < 2.0);
    }
}

TEST_CASE("hot-spot calibration") {
    SUBCASE("default parameters land on the published median area") {
        const HotspotReport rep = calibrate_hotspots(layout(), FieldParams{});
        REQUIRE(rep.areas_mm2.size() == 16);
        CHECK(rep.median_mm2 > 15.9 * 0.7);
        CHECK(rep.median_mm2 < 15.9 * 1.3);
    }
    SUBCASE("isotropic field matches the closed-form disc area") {
        FieldParams p;
        p.sigma_par = 10.0;
        p.sigma_perp = 10.0;
        p.peak_sensitivity = 0.06;
        const double level = kHotspotShift / kHotspotMaxForce;
        const double r = 10.0 * std::sqrt(2.0 * std::log(p.peak_sensitivity / level));
        const double closed_form = EIGEN_PI * r * r;
        const HotspotReport rep = calibrate_hotspots(layout(), p);
        for (double area : rep.areas_mm2)
            CHECK(area == doctest::Approx(closed_form).epsilon(0.05));
    }
    SUBCASE("area grows with sensitivity") {
        FieldParams p;
        double prev = 0.0;
        for (double ps : {0.050, 0.055, 0.060, 0.070}) {
            p.peak_sensitivity = ps;
            const double a = calibrate_hotspots(layout(), p).median_mm2;
            CHECK(a > prev);
            prev = a;
        }
    }
    SUBCASE("zero sensitivity is a calibration failure") {
        FieldParams p;
        p.peak_sensitivity = 0.0;
        CHECK_THROWS_AS(calibrate_hotspots(layout(), p), std::runtime_error);
    }
}

TEST_CASE("thickness surrogate trends") {
    const FieldParams params;
    double prev_gain = 1e9, prev_area = 0.0;
    for (double t : {4.0, 6.0, 8.0, 10.0, 12.0}) {
        SkinLayout l = build_default_layout();
        l.thickness = t;
        const double gain = per_newton_response(l, params, l.sensors[0], l.sensors[0].center);
        CHECK(gain < prev_gain);
        prev_gain = gain;
        const double area = calibrate_hotspots(l, params).median_mm2;
        CHECK(area > prev_area);
        prev_area = area;
    }
}

TEST_CASE("distinct contacts produce distinct noiseless signatures") {
    const FieldParams params;
    std::vector<std::pair<std::vector<double>, int>> signatures;
    int idx = 0;
    for (int yi = 0; yi <= 120; yi += 2) {
        for (int xi = -44; xi <= 44; xi += 2) {
            const Eigen::VectorXd r = sensor_response(
                layout(), params, {{static_cast<double>(xi), static_cast<double>(yi)}, 1.0});
            signatures.push_back({std::vector<double>(r.data(), r.data() + r.size()), idx++});
        }
    }
    std::sort(signatures.begin(), signatures.end());
    for (size_t i = 1; i < signatures.size(); ++i)
        CHECK(signatures[i].first != signatures[i - 1].first);
}

TEST_CASE("dual-lobe preset keeps twin centers inside the sensed area") {
    const FieldParams params = with_dual_lobe_preset(FieldParams{}, layout());
    REQUIRE(params.dual_lobes.size() == 3);
    for (const auto& [idx, lobe] : params.dual_lobes) {
        const FbgSensor& s = layout().sensors.at(idx - 1);
        SurfacePoint twin{s.center.x + lobe.offset.x(), s.center.y + lobe.offset.y()};
        CHECK(in_sensed_area(twin, layout()));
        CHECK(lobe.gain > 0.0);
        CHECK(lobe.gain <= 1.0);
    }
    params.validate();
}
