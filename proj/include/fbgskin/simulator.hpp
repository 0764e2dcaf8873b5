#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "fbgskin/geometry.hpp"
#include "fbgskin/random.hpp"

namespace fbgskin {

// Hot spots are the raster points where a 20 pm shift is reached within
// the first sixth of the 2.5 N indentation force.
constexpr double kHotspotShift = 0.020;          // nm
constexpr double kHotspotMaxForce = 2.5 / 6.0;   // N
constexpr double kDetectThreshold = 0.002;       // nm (2 pm)

struct SecondLobe {
    Vec2 offset{0.0, 0.0};  // mm, developed plane, relative to the sensor center
    double gain = 0.0;      // relative peak, in (0, 1]
};

// Elliptical-Gaussian receptive-field model. Shifts are linear in force;
// sensitivity and field width follow power-law surrogates in the cover
// thickness (referenced to 8 mm).
struct FieldParams {
    double peak_sensitivity = 0.0485;  // nm/N at 8 mm thickness
    double sigma_par = 18.0;           // mm, decay along the fiber direction
    double sigma_perp = 13.0;          // mm, decay across the fiber
    double thickness_exp_s = 0.008;    // sensitivity ~ (8/t)^s
    double thickness_exp_w = 1.0;      // field width ~ (t/8)^w
    double noise_sigma = 0.0003;       // nm, interrogator 1-sigma (0.3 pm)
    std::map<int, SecondLobe> dual_lobes;  // keyed by 1-based sensor index

    void validate() const;
    static FieldParams defaults() { return {}; }
};

// Enables a second responsive area on sensors 2, 12 and 13, offset toward
// the middle of the sensed area.
FieldParams with_dual_lobe_preset(FieldParams params, const SkinLayout& layout);

struct Contact {
    SurfacePoint point;
    double force = 0.0;  // N, >= 0
};

struct SensorFrame {
    double t = 0.0;        // s
    double force_z = 0.0;  // N
    Eigen::VectorXd shifts;  // nm, one per sensor
};

struct Indentation {
    int id = 0;
    SurfacePoint location;
    std::vector<SensorFrame> frames;  // 100 Hz, time-ordered
    int ramp_end = 0;                 // first frame index after the increasing phase
};

struct Dataset {
    SkinLayout layout;
    FieldParams params;
    std::vector<Indentation> indentations;
    std::uint64_t seed = 0;
};

struct IndentProtocol {
    int frames = 1000;
    double rate_hz = 100.0;
    double peak_force = 2.5;      // N
    double ramp_fraction = 0.4;   // share of frames in the increasing phase
};

// Noiseless per-newton response of one sensor at a surface point.
double per_newton_response(const SkinLayout& layout, const FieldParams& params,
                           const FbgSensor& sensor, const SurfacePoint& p);

// Noiseless 16-channel wavelength shift for a single contact.
Eigen::VectorXd sensor_response(const SkinLayout& layout, const FieldParams& params,
                                const Contact& contact);

SensorFrame add_noise(const SensorFrame& frame, RngStream& rng, double sigma_nm);

bool detect_contact(const SensorFrame& frame, double threshold_nm = kDetectThreshold);

Indentation generate_indentation(const SkinLayout& layout, const FieldParams& params,
                                 int id, const SurfacePoint& location, RngStream& rng,
                                 const IndentProtocol& protocol = {});

Dataset generate_dataset(const SkinLayout& layout, const FieldParams& params, int n,
                         std::uint64_t seed, const IndentProtocol& protocol = {});

struct HotspotReport {
    std::vector<double> areas_mm2;  // per sensor
    double median_mm2 = 0.0;
};

// Rasterizes the sensed area at `pitch` and measures each sensor's hot
// spot; throws if no sensor has one (degenerate sensitivity).
HotspotReport calibrate_hotspots(const SkinLayout& layout, const FieldParams& params,
                                 double pitch = 0.5);

// Per-newton response of one sensor over the sensed-area raster
// (row = y index, col = x index, cell centers).
Eigen::MatrixXd per_newton_response_raster(const SkinLayout& layout,
                                           const FieldParams& params, int sensor_idx,
                                           double pitch);

}  // namespace fbgskin
