#include "fbgskin/psychometrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fbgskin {

double grams_to_millinewtons(double grams) {
    if (!(grams >= 0.0)) throw std::invalid_argument("filament mass must be >= 0");
    return grams * 9.80665;
}

VonFreyResult run_vonfrey_protocol(const SkinLayout& layout, const FieldParams& params,
                                   std::uint64_t seed, int subjects, int sites) {
    params.validate();
    VonFreyResult result;
    const int nf = static_cast<int>(kVonFreyGrams.size());
    result.forces_mN.resize(nf);
    for (int f = 0; f < nf; ++f) result.forces_mN[f] = grams_to_millinewtons(kVonFreyGrams[f]);
    result.rates = Eigen::VectorXd::Zero(nf);

    RngStream rng(derive_seed(seed, 0x0f11));
    const double hw = layout.sensed_half_width();
    for (int s = 1; s <= subjects; ++s) {
        for (int site = 0; site < sites; ++site) {
            for (int f = 0; f < nf; ++f) {
                VonFreyTrial trial;
                trial.subject = s;
                trial.filament_g = kVonFreyGrams[f];
                trial.force_mN = result.forces_mN[f];
                trial.location = {rng.uniform(-hw, hw), rng.uniform(0.0, layout.y_extent)};
                SensorFrame frame;
                frame.t = 0.0;
                frame.force_z = trial.force_mN / 1000.0;
                frame.shifts =
                    sensor_response(layout, params, {trial.location, frame.force_z});
                frame = add_noise(frame, rng, params.noise_sigma);
                trial.detected = detect_contact(frame);
                if (trial.detected) result.rates[f] += 1.0;
                result.trials.push_back(trial);
            }
        }
    }
    result.rates /= static_cast<double>(subjects * sites);
    return result;
}

namespace {

double sigmoid(double a, double b, double x) { return 1.0 / (1.0 + std::exp(-a * (x - b))); }

double sse(double a, double b, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double s = 0.0;
    for (long i = 0; i < x.size(); ++i) {
        const double r = sigmoid(a, b, x[i]) - y[i];
        s += r * r;
    }
    return s;
}

struct GnOutcome {
    double a, b, sse;
    bool converged;
};

GnOutcome gauss_newton(double a, double b, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
    double lambda = 1e-3;
    double cur = sse(a, b, x, y);
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
        Eigen::Matrix2d JtJ = Eigen::Matrix2d::Zero();
        Eigen::Vector2d Jtr = Eigen::Vector2d::Zero();
        for (long i = 0; i < x.size(); ++i) {
            const double F = sigmoid(a, b, x[i]);
            const double r = F - y[i];
            const double s = F * (1.0 - F);
            const Eigen::Vector2d J(s * (x[i] - b), -a * s);
            JtJ += J * J.transpose();
            Jtr += J * r;
        }
        Eigen::Matrix2d damped = JtJ;
        damped(0, 0) += lambda * std::max(JtJ(0, 0), 1e-12);
        damped(1, 1) += lambda * std::max(JtJ(1, 1), 1e-12);
        const Eigen::Vector2d step = damped.ldlt().solve(-Jtr);
        if (!step.allFinite()) break;
        const double na = a + step[0], nb = b + step[1];
        const double ns = sse(na, nb, x, y);
        if (ns <= cur) {
            const double rel = std::abs(cur - ns) / std::max(cur, 1e-30);
            a = na;
            b = nb;
            cur = ns;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (rel < 1e-14 || step.norm() < 1e-13 * (1.0 + std::abs(b))) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                converged = true;  // stuck at a (possibly flat) minimum
                break;
            }
        }
    }
    return {a, b, cur, converged};
}

}  // namespace

SigmoidFit fit_sigmoid(const Eigen::VectorXd& forces_mN, const Eigen::VectorXd& rates) {
    if (forces_mN.size() != rates.size())
        throw std::invalid_argument("forces and rates must have equal length");
    std::vector<double> distinct;
    for (long i = 0; i < forces_mN.size(); ++i) {
        if (!(rates[i] >= 0.0 && rates[i] <= 1.0))
            throw std::invalid_argument("rates must lie in [0,1]");
        bool seen = false;
        for (double d : distinct) seen = seen || d == forces_mN[i];
        if (!seen) distinct.push_back(forces_mN[i]);
    }
    if (distinct.size() < 3)
        throw std::invalid_argument("need at least 3 distinct force levels");
    const double rmin = rates.minCoeff(), rmax = rates.maxCoeff();
    if (rmin >= 1.0 || rmax <= 0.0)
        throw std::runtime_error("non-identifiable: all rates saturated");

    const double xmin = forces_mN.minCoeff(), xmax = forces_mN.maxCoeff();
    const double span = std::max(xmax - xmin, 1e-12);

    SigmoidFit best;
    best.residual = std::numeric_limits<double>::infinity();
    // 8 starts: steepness log-spaced around 1/span, midpoint across the range
    const double a0s[2] = {2.0 / span, 20.0 / span};
    const double b0s[4] = {xmin + 0.2 * span, xmin + 0.4 * span, xmin + 0.6 * span,
                           xmin + 0.8 * span};
    for (double a0 : a0s) {
        for (double b0 : b0s) {
            const GnOutcome out = gauss_newton(a0, b0, forces_mN, rates);
            if (out.sse < best.residual) {
                best.a = out.a;
                best.b = out.b;
                best.residual = out.sse;
                best.converged = out.converged;
            }
        }
    }
    best.identifiable = best.a > 0.0 && best.a * span > 1e-3;
    return best;
}

double threshold_at(const SigmoidFit& fit, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must be in (0,1)");
    if (!(fit.a > 0.0)) throw std::invalid_argument("threshold needs a fit with a > 0");
    return fit.b + std::log(p / (1.0 - p)) / fit.a;
}

}  // namespace fbgskin
