#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace atomdiode {

// Gaussian laser profile exp(-(x-x0)^2 / (2 dx^2)), dimensionless.
inline double gaussian_profile(double x, double x0, double delta_x) {
    if (!(delta_x > 0.0))
        throw std::invalid_argument("gaussian_profile: width must be positive");
    const double z = (x - x0) / delta_x;
    return std::exp(-0.5 * z * z);
}

// Number of widths beyond which a profile is treated as exactly zero
// (value < e^-32 ~ 1e-14 of peak).
inline constexpr double profile_support_widths = 8.0;

struct GaussianProfile {
    double center = 0.0;     // um
    double width = 1.0;      // um
    double amplitude = 0.0;  // 1/us (or sqrt(1/us) for the f profiles)

    GaussianProfile() = default;
    GaussianProfile(double center_, double width_, double amplitude_)
        : center(center_), width(width_), amplitude(amplitude_) {
        if (!(width > 0.0))
            throw std::invalid_argument("GaussianProfile: width must be positive");
        if (amplitude < 0.0)
            throw std::invalid_argument("GaussianProfile: amplitude must be non-negative");
    }

    double support_left() const { return center - profile_support_widths * width; }
    double support_right() const { return center + profile_support_widths * width; }

    double operator()(double x) const {
        if (x < support_left() || x > support_right()) return 0.0;
        return amplitude * gaussian_profile(x, center, width);
    }

    // Value without the support cutoff; used where asymptotic ratios matter.
    double raw(double x) const { return amplitude * gaussian_profile(x, center, width); }
};

// Hook for user-tabulated profiles; must vanish outside [support_left, support_right].
struct TabulatedProfile {
    std::function<double(double)> value;
    double support_left = 0.0;
    double support_right = 0.0;
};

}  // namespace atomdiode
