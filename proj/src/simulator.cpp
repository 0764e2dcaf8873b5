#include "fbgskin/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "fbgskin/percentile.hpp"

namespace fbgskin {

void FieldParams::validate() const {
    if (!(sigma_par > 0.0) || !(sigma_perp > 0.0))
        throw std::invalid_argument("field scales must be > 0");
    if (sigma_perp > sigma_par)
        throw std::invalid_argument("sigma_perp must not exceed sigma_par");
    if (peak_sensitivity < 0.0) throw std::invalid_argument("peak_sensitivity must be >= 0");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    if (!std::isfinite(thickness_exp_s) || !std::isfinite(thickness_exp_w))
        throw std::invalid_argument("thickness exponents must be finite");
    for (const auto& [idx, lobe] : dual_lobes) {
        if (!(lobe.gain > 0.0) || lobe.gain > 1.0)
            throw std::invalid_argument("second-lobe gain must be in (0,1]");
        (void)idx;
    }
}

FieldParams with_dual_lobe_preset(FieldParams params, const SkinLayout& layout) {
    const double along = 36.0, across = 24.0;
    for (int idx : {2, 12, 13}) {
        const FbgSensor& s = layout.sensors.at(idx - 1);
        const Vec2 dir = s.fiber_direction.normalized();
        const Vec2 perp(-dir.y(), dir.x());
        // push the twin lobe toward the middle of the sensed area
        const Vec2 to_center = Vec2(0.0, 0.5 * layout.y_extent) - s.center.vec();
        const double sa = (to_center.dot(dir) >= 0.0) ? 1.0 : -1.0;
        const double sp = (to_center.dot(perp) >= 0.0) ? 1.0 : -1.0;
        SecondLobe lobe;
        lobe.offset = sa * along * dir + sp * across * perp;
        lobe.gain = 0.98;
        params.dual_lobes[idx] = lobe;
    }
    return params;
}

namespace {

double thickness_gain(const SkinLayout& layout, const FieldParams& p) {
    return p.peak_sensitivity * std::pow(8.0 / layout.thickness, p.thickness_exp_s);
}

double thickness_widening(const SkinLayout& layout, const FieldParams& p) {
    return std::pow(layout.thickness / 8.0, p.thickness_exp_w);
}

double lobe_shape(const Vec2& rel, const Vec2& dir, double sp, double sq) {
    const Vec2 perp(-dir.y(), dir.x());
    const double u = rel.dot(dir);
    const double v = rel.dot(perp);
    return std::exp(-(u * u / (2.0 * sp * sp) + v * v / (2.0 * sq * sq)));
}

}  // namespace

double per_newton_response(const SkinLayout& layout, const FieldParams& params,
                           const FbgSensor& sensor, const SurfacePoint& p) {
    const double widen = thickness_widening(layout, params);
    const double sp = params.sigma_par * widen;
    const double sq = params.sigma_perp * widen;
    const Vec2 dir = sensor.fiber_direction.normalized();
    const Vec2 rel = p.vec() - sensor.center.vec();
    double g = lobe_shape(rel, dir, sp, sq);
    const auto it = params.dual_lobes.find(sensor.index);
    if (it != params.dual_lobes.end()) {
        g += it->second.gain * lobe_shape(rel - it->second.offset, dir, sp, sq);
    }
    return thickness_gain(layout, params) * g;
}

Eigen::VectorXd sensor_response(const SkinLayout& layout, const FieldParams& params,
                                const Contact& contact) {
    if (contact.force < 0.0) throw std::invalid_argument("contact force must be >= 0");
    if (!in_sensed_area(contact.point, layout))
        throw std::domain_error("contact outside the sensed area");
    Eigen::VectorXd shifts(layout.sensors.size());
    for (size_t i = 0; i < layout.sensors.size(); ++i) {
        shifts[static_cast<long>(i)] =
            per_newton_response(layout, params, layout.sensors[i], contact.point) *
            contact.force;
    }
    return shifts;
}

SensorFrame add_noise(const SensorFrame& frame, RngStream& rng, double sigma_nm) {
    SensorFrame out = frame;
    if (sigma_nm == 0.0) return out;
    for (long i = 0; i < out.shifts.size(); ++i) out.shifts[i] += sigma_nm * rng.gaussian();
    return out;
}

bool detect_contact(const SensorFrame& frame, double threshold_nm) {
    return frame.shifts.size() > 0 &&
           frame.shifts.cwiseAbs().maxCoeff() >= threshold_nm;
}

Indentation generate_indentation(const SkinLayout& layout, const FieldParams& params,
                                 int id, const SurfacePoint& location, RngStream& rng,
                                 const IndentProtocol& protocol) {
    if (!in_sensed_area(location, layout))
        throw std::domain_error("indentation location outside the sensed area");
    Indentation ind;
    ind.id = id;
    ind.location = location;
    const int n = protocol.frames;
    const int ramp = std::max(1, static_cast<int>(std::lround(n * protocol.ramp_fraction)));
    ind.ramp_end = ramp;
    ind.frames.reserve(n);

    // per-newton profile is constant over the trial; scale per frame
    Eigen::VectorXd per_n(layout.sensors.size());
    for (size_t i = 0; i < layout.sensors.size(); ++i)
        per_n[static_cast<long>(i)] =
            per_newton_response(layout, params, layout.sensors[i], location);

    for (int k = 0; k < n; ++k) {
        double f;
        if (k < ramp) {
            f = protocol.peak_force * static_cast<double>(k) / (ramp - 1);
        } else if (k < 2 * ramp) {
            f = protocol.peak_force * (1.0 - static_cast<double>(k - ramp + 1) / ramp);
        } else {
            f = 0.0;
        }
        SensorFrame fr;
        fr.t = static_cast<double>(k) / protocol.rate_hz;
        fr.force_z = f;
        fr.shifts = per_n * f;
        ind.frames.push_back(add_noise(fr, rng, params.noise_sigma));
    }
    return ind;
}

Dataset generate_dataset(const SkinLayout& layout, const FieldParams& params, int n,
                         std::uint64_t seed, const IndentProtocol& protocol) {
    if (n < 1) throw std::invalid_argument("dataset needs n >= 1");
    params.validate();
    Dataset ds;
    ds.layout = layout;
    ds.params = params;
    ds.seed = seed;
    ds.indentations.reserve(n);
    const double hw = layout.sensed_half_width();
    for (int id = 0; id < n; ++id) {
        RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(id)));
        SurfacePoint loc{rng.uniform(-hw, hw), rng.uniform(0.0, layout.y_extent)};
        ds.indentations.push_back(
            generate_indentation(layout, params, id, loc, rng, protocol));
    }
    return ds;
}

Eigen::MatrixXd per_newton_response_raster(const SkinLayout& layout,
                                           const FieldParams& params, int sensor_idx,
                                           double pitch) {
    const double hw = layout.sensed_half_width();
    const int nx = static_cast<int>(std::lround(2.0 * hw / pitch));
    const int ny = static_cast<int>(std::lround(layout.y_extent / pitch));
    Eigen::MatrixXd r(ny, nx);
    const FbgSensor& s = layout.sensors.at(sensor_idx);
    for (int j = 0; j < ny; ++j) {
        const double y = (j + 0.5) * pitch;
        for (int i = 0; i < nx; ++i) {
            const double x = -hw + (i + 0.5) * pitch;
            r(j, i) = per_newton_response(layout, params, s, SurfacePoint{x, y});
        }
    }
    return r;
}

HotspotReport calibrate_hotspots(const SkinLayout& layout, const FieldParams& params,
                                 double pitch) {
    params.validate();
    HotspotReport report;
    const double level = kHotspotShift / kHotspotMaxForce;  // nm per N
    bool any = false;
    for (size_t i = 0; i < layout.sensors.size(); ++i) {
        const Eigen::MatrixXd r =
            per_newton_response_raster(layout, params, static_cast<int>(i), pitch);
        const auto count = (r.array() >= level).count();
        if (count > 0) any = true;
        report.areas_mm2.push_back(static_cast<double>(count) * pitch * pitch);
    }
    if (!any) {
        throw std::runtime_error(
            "hot-spot calibration failure: no sensor reaches 20 pm within the "
            "force limit");
    }
    report.median_mm2 = median_of(report.areas_mm2);
    return report;
}

}  // namespace fbgskin
