#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "rise/types.hpp"

namespace rise {

/// One Ornstein-Uhlenbeck channel: stationary standard deviation, bandwidth
/// (inverse correlation time, rad/s) and symmetric hard clamp.
struct OuChannel {
    double std = 0.0;
    double bandwidth = 20.0;
    double clamp = 0.0;  // 0 disables the clamp

    bool operator==(const OuChannel&) const = default;
};

/// Per-axis OU processes for force and torque, driven by one seeded generator.
/// Samples are drawn in the fixed order fx, fy, fz, tx, ty, tz.
class DisturbanceGenerator {
public:
    DisturbanceGenerator(const OuChannel& force, const OuChannel& torque, std::uint64_t seed)
        : channels_{force, force, force, torque, torque, torque}, rng_(seed) {
        for (std::size_t i = 0; i < channels_.size(); ++i) {
            state_[i] = channels_[i].std > 0.0 ? channels_[i].std * normal_(rng_) : 0.0;
        }
    }

    /// Current realization (clamped).
    Disturbance current() const {
        Disturbance d;
        for (int i = 0; i < 3; ++i) {
            d.force[i] = clamped(i);
            d.torque[i] = clamped(i + 3);
        }
        return d;
    }

    /// Exact OU transition over dt: x <- x e^{-w dt} + std sqrt(1 - e^{-2 w dt}) n.
    Disturbance step(double dt) {
        for (std::size_t i = 0; i < channels_.size(); ++i) {
            const OuChannel& c = channels_[i];
            if (c.std <= 0.0) {
                state_[i] = 0.0;
                continue;
            }
            const double decay = std::exp(-c.bandwidth * dt);
            const double diffusion = c.std * std::sqrt(-std::expm1(-2.0 * c.bandwidth * dt));
            state_[i] = state_[i] * decay + diffusion * normal_(rng_);
        }
        return current();
    }

private:
    double clamped(std::size_t i) const {
        const double limit = channels_[i].clamp;
        return limit > 0.0 ? std::clamp(state_[i], -limit, limit) : state_[i];
    }

    std::array<OuChannel, 6> channels_;
    std::array<double, 6> state_{};
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rise
