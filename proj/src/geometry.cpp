#include "fbgskin/geometry.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fbgskin {

namespace {

constexpr double kDeg2Rad = EIGEN_PI / 180.0;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + " must be finite");
    }
}

}  // namespace

double FiberSegment::length() const {
    if (is_arc) return radius * std::abs(sweep);
    return (p1 - p0).norm();
}

double SkinLayout::sensed_half_width() const {
    return 0.5 * arc_from_degrees(r_extent, effective_radius);
}

double arc_from_degrees(double degrees, double radius) {
    require_finite(degrees, "degrees");
    require_finite(radius, "radius");
    if (radius <= 0.0) throw std::invalid_argument("radius must be > 0");
    return radius * degrees * kDeg2Rad;
}

double degrees_from_arc(double arc, double radius) {
    require_finite(arc, "arc");
    require_finite(radius, "radius");
    if (radius <= 0.0) throw std::invalid_argument("radius must be > 0");
    return arc / (radius * kDeg2Rad);
}

double surface_distance(const SurfacePoint& p, const SurfacePoint& q) {
    require_finite(p.x, "p.x");
    require_finite(p.y, "p.y");
    require_finite(q.x, "q.x");
    require_finite(q.y, "q.y");
    return std::hypot(p.x - q.x, p.y - q.y);
}

double bragg_wavelength(double eta_eff, double pitch_nm) {
    require_finite(eta_eff, "eta_eff");
    require_finite(pitch_nm, "pitch");
    if (eta_eff <= 0.0 || pitch_nm <= 0.0) {
        throw std::invalid_argument("bragg_wavelength: inputs must be > 0");
    }
    return 2.0 * eta_eff * pitch_nm;
}

bool in_sensed_area(const SurfacePoint& p, const SkinLayout& layout) {
    const double hw = layout.sensed_half_width();
    return std::isfinite(p.x) && std::isfinite(p.y) &&
           p.x >= -hw && p.x <= hw && p.y >= 0.0 && p.y <= layout.y_extent;
}

namespace {

// In-pass spacings solving the linear grade: each consecutive-sensor
// spacing equals 12.9 + 11.6 * (y_top - midpoint_y) / span, with the
// wrist-turn pair at exactly 12.9 mm and the elbow-turn pairs at 24.5 mm.
constexpr double kSpacingWrist = 14.437640420140083;
constexpr double kSpacingMid = 17.879485300985923;
constexpr double kSpacingElbow = 22.141844880845838;
constexpr double kInnerHalfGap = 6.45;   // wrist turn spans 12.9 mm
constexpr double kOuterGap = 24.5;       // elbow turns span 24.5 mm
constexpr double kTurnMargin = 5.0;      // straight run beyond outermost station

FiberSegment straight(Vec2 p0, Vec2 p1) {
    FiberSegment s;
    s.p0 = p0;
    s.p1 = p1;
    return s;
}

FiberSegment half_turn(Vec2 p0, Vec2 p1, bool bulge_up) {
    FiberSegment s;
    s.is_arc = true;
    s.p0 = p0;
    s.p1 = p1;
    s.center = 0.5 * (p0 + p1);
    s.radius = 0.5 * (p1 - p0).norm();
    s.sweep = bulge_up ? EIGEN_PI : -EIGEN_PI;
    return s;
}

}  // namespace

SkinLayout build_default_layout() {
    SkinLayout layout;

    const double span = kSpacingWrist + kSpacingMid + kSpacingElbow;
    const double ya = 60.0 + 0.5 * span;  // wrist-most station
    const double yb = ya - kSpacingWrist;
    const double yc = yb - kSpacingMid;
    const double yd = ya - span;          // elbow-most station

    const double xi = kInnerHalfGap;
    const double xo = kInnerHalfGap + kOuterGap;
    const double xs[4] = {-xo, -xi, xi, xo};
    const double stations_down[4] = {ya, yb, yc, yd};

    layout.sensors.reserve(16);
    int index = 1;
    for (int pass = 0; pass < 4; ++pass) {
        const bool descending = (pass % 2 == 0);
        for (int k = 0; k < 4; ++k) {
            FbgSensor s;
            s.index = index;
            s.center.x = xs[pass];
            s.center.y = descending ? stations_down[k] : stations_down[3 - k];
            s.fiber_direction = Vec2(0.0, descending ? -1.0 : 1.0);
            s.nominal_wavelength = 1530.0 + 2.3 * (index - 1);
            layout.sensors.push_back(s);
            ++index;
        }
    }

    const double y_top = ya + kTurnMargin;
    const double y_bot = yd - kTurnMargin;
    layout.fiber_path = {
        straight({xs[0], y_top}, {xs[0], y_bot}),
        half_turn({xs[0], y_bot}, {xs[1], y_bot}, false),
        straight({xs[1], y_bot}, {xs[1], y_top}),
        half_turn({xs[1], y_top}, {xs[2], y_top}, true),
        straight({xs[2], y_top}, {xs[2], y_bot}),
        half_turn({xs[2], y_bot}, {xs[3], y_bot}, false),
        straight({xs[3], y_bot}, {xs[3], y_top}),
    };

    return layout;
}

double path_length(const SkinLayout& layout) {
    double total = 0.0;
    for (const auto& seg : layout.fiber_path) total += seg.length();
    return total;
}

double min_path_radius(const SkinLayout& layout) {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& seg : layout.fiber_path) {
        if (seg.is_arc) r = std::min(r, seg.radius);
    }
    return r;
}

void save_layout_table(const SkinLayout& layout, std::ostream& os) {
    os << "index x_mm y_mm dir_x dir_y lambda_nm\n";
    char buf[160];
    for (const auto& s : layout.sensors) {
        std::snprintf(buf, sizeof(buf), "%d %.6g %.6g %.6g %.6g %.6g\n",
                      s.index, s.center.x, s.center.y, s.fiber_direction.x(),
                      s.fiber_direction.y(), s.nominal_wavelength);
        os << buf;
    }
}

void save_layout_table(const SkinLayout& layout, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save_layout_table(layout, os);
}

SkinLayout load_layout_table(std::istream& is) {
    SkinLayout layout;
    layout.sensors.clear();
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("layout table: missing header");
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        FbgSensor s;
        double dx, dy;
        if (!(ss >> s.index >> s.center.x >> s.center.y >> dx >> dy >>
              s.nominal_wavelength)) {
            throw std::runtime_error("layout table: malformed row: " + line);
        }
        s.fiber_direction = Vec2(dx, dy);
        layout.sensors.push_back(s);
    }
    return layout;
}

SkinLayout load_layout_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return load_layout_table(is);
}

}  // namespace fbgskin
