#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "fbgskin/simulator.hpp"

namespace fbgskin {

// Calibrated microfilament set, heaviest first (grams).
constexpr std::array<double, 8> kVonFreyGrams = {60, 26, 10, 4, 2, 1, 0.6, 0.4};

double grams_to_millinewtons(double grams);

struct VonFreyTrial {
    int subject = 0;        // 1-based
    double filament_g = 0.0;
    double force_mN = 0.0;
    SurfacePoint location;
    bool detected = false;
};

struct VonFreyResult {
    std::vector<VonFreyTrial> trials;      // subjects x sites x filaments
    Eigen::VectorXd forces_mN;             // one per filament
    Eigen::VectorXd rates;                 // detection rate per filament
};

// Applies each filament's nominal force at random skin locations, one
// noisy frame per stimulation, detection at the 2 pm threshold.
VonFreyResult run_vonfrey_protocol(const SkinLayout& layout, const FieldParams& params,
                                   std::uint64_t seed, int subjects = 12, int sites = 20);

// Detection-probability sigmoid 1 / (1 + exp(-a (x - b))).
struct SigmoidFit {
    double a = 0.0;         // steepness, 1/mN
    double b = 0.0;         // 50% point, mN
    double residual = 0.0;  // sum of squared errors
    bool converged = false;
    bool identifiable = false;  // false when the fitted curve is flat
};

// Damped Gauss-Newton least squares with multi-start over a log-spaced
// (a, b) grid; throws on all-0 / all-1 rates.
SigmoidFit fit_sigmoid(const Eigen::VectorXd& forces_mN, const Eigen::VectorXd& rates);

// Stimulus level with detection probability p on the fitted sigmoid.
double threshold_at(const SigmoidFit& fit, double p);

}  // namespace fbgskin
