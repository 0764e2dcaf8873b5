#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace fbgskin {

using Vec2 = Eigen::Vector2d;

// Point on the developed (unrolled) skin surface, in mm.
// x: arc coordinate, centered (x = 0 at mid-span), sensed range [-45, 45].
// y: elbow -> wrist axis, sensed range [0, 120].
struct SurfacePoint {
    double x = 0.0;
    double y = 0.0;

    Vec2 vec() const { return Vec2(x, y); }
};

struct FbgSensor {
    int index = 0;  // 1-based, in fiber order
    SurfacePoint center;
    Vec2 fiber_direction{0.0, 1.0};  // unit vector in the developed plane
    double grating_length = 8.0;     // mm
    double nominal_wavelength = 0.0; // nm
};

// One piece of the fiber polyline: a straight run or a circular arc.
struct FiberSegment {
    bool is_arc = false;
    Vec2 p0{0, 0}, p1{0, 0};
    Vec2 center{0, 0};   // arc only
    double radius = 0.0; // arc only, mm
    double sweep = 0.0;  // arc only, signed radians

    double length() const;
};

struct SkinLayout {
    double y_extent = 120.0;         // mm, sensed length along elbow-wrist axis
    double r_extent = 90.0;          // degrees, sensed rotation span
    double effective_radius = 180.0 / EIGEN_PI; // mm; 90 deg <-> 90 mm of arc
    double thickness = 8.0;          // mm
    double fiber_length = 430.0;     // mm
    double min_bend_radius = 4.0;    // mm
    std::vector<FbgSensor> sensors;
    std::vector<FiberSegment> fiber_path;

    double sensed_half_width() const; // mm of arc, = r_extent mapped to arc / 2
};

// Arc-length <-> angle conversions on the effective cylinder.
double arc_from_degrees(double degrees, double radius);
double degrees_from_arc(double arc, double radius);

// Euclidean distance in the developed plane.
double surface_distance(const SurfacePoint& p, const SurfacePoint& q);

// Reflected center wavelength of a grating: 2 * eta_eff * pitch.
double bragg_wavelength(double eta_eff, double pitch_nm);

bool in_sensed_area(const SurfacePoint& p, const SkinLayout& layout);

// Deterministic 16-sensor layout: serpentine fiber with 4 longitudinal
// passes; consecutive-sensor spacings graded from 12.9 mm at the wrist
// side to 24.5 mm at the elbow side.
SkinLayout build_default_layout();

double path_length(const SkinLayout& layout);
double min_path_radius(const SkinLayout& layout); // +inf for all-straight paths

// Plain-text sensor table: index, x_mm, y_mm, dir_x, dir_y, lambda_nm
// (6 significant digits).
void save_layout_table(const SkinLayout& layout, std::ostream& os);
void save_layout_table(const SkinLayout& layout, const std::string& path);
SkinLayout load_layout_table(std::istream& is);
SkinLayout load_layout_table(const std::string& path);

}  // namespace fbgskin
