#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rise/types.hpp"

namespace rise {

/**
 * How the offset rho enters P.
 *
 * Constant: P = integral(...) + rho, so P >= rho for all t and
 *           H = -P theta_tilde + rho theta under zero disturbance.
 * Decaying: P(0) = rho decays with the forgetting rate, P = integral(...) + rho e^{-l t}.
 */
enum class OffsetMode { Constant, Decaying };

template <int N>
struct LoopTypes {
    using Regressor = Eigen::Matrix<double, 3, N>;
    using Gram = Eigen::Matrix<double, N, N>;
    using Param = Eigen::Matrix<double, N, 1>;
};

/// Saturation to [-1, 1].
inline double sat(double x) noexcept {
    return std::clamp(x, -1.0, 1.0);
}

/// Weight of a zero-order-hold input over one step of x' = -l x + u: (1 - e^{-l dt}) / l.
inline double hold_weight(double rate, double dt) {
    return rate > 0.0 ? -std::expm1(-rate * dt) / rate : dt;
}

/**
 * First-order low-pass alpha x_f' + x_f = x applied to a regressor and its
 * matching input, both zero-initialized, with the exact exponential-hold update
 * x_f <- x_f e^{-dt/alpha} + x (1 - e^{-dt/alpha}).
 */
template <int N>
class FilterBank {
public:
    using Regressor = typename LoopTypes<N>::Regressor;

    explicit FilterBank(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("FilterBank: alpha must be positive");
    }

    void step(const Regressor& psi, const Vec3& u, double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("FilterBank::step: dt must be positive");
        const double decay = std::exp(-dt / alpha_);
        const double gain = -std::expm1(-dt / alpha_);
        psi_f_ = psi_f_ * decay + psi * gain;
        u_f_ = u_f_ * decay + u * gain;
    }

    double alpha() const { return alpha_; }
    const Regressor& psi_f() const { return psi_f_; }
    const Vec3& u_f() const { return u_f_; }

private:
    double alpha_;
    Regressor psi_f_ = Regressor::Zero();
    Vec3 u_f_ = Vec3::Zero();
};

/**
 * Exponentially forgetting accumulators
 *   P' = -l P' + psi_f^T psi_f,   Q' = -l Q + psi_f^T u_f,   P'(0) = Q(0) = 0,
 * discretized with exponential hold. P() adds the offset rho (see OffsetMode).
 */
template <int N>
class GramState {
public:
    using Regressor = typename LoopTypes<N>::Regressor;
    using Gram = typename LoopTypes<N>::Gram;
    using Param = typename LoopTypes<N>::Param;

    GramState(double forgetting, double rho, OffsetMode mode = OffsetMode::Constant)
        : forgetting_(forgetting), rho_(rho), offset_(rho), mode_(mode) {
        if (!(forgetting >= 0.0)) throw std::invalid_argument("GramState: forgetting rate must be >= 0");
        if (!(rho > 0.0)) throw std::invalid_argument("GramState: rho must be positive");
    }

    void step(const Regressor& psi_f, const Vec3& u_f, double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("GramState::step: dt must be positive");
        const double decay = std::exp(-forgetting_ * dt);
        const double weight = hold_weight(forgetting_, dt);
        last_gram_input_ = psi_f.transpose() * psi_f;
        last_cross_input_ = psi_f.transpose() * u_f;
        accumulated_ = accumulated_ * decay + last_gram_input_ * weight;
        q_ = q_ * decay + last_cross_input_ * weight;
        if (mode_ == OffsetMode::Decaying) offset_ *= decay;
        elapsed_ += dt;
    }

    /// Total P including offset.
    Gram P() const { return accumulated_ + offset_ * Gram::Identity(); }
    /// Excitation part of P (without offset).
    const Gram& accumulated() const { return accumulated_; }
    const Param& Q() const { return q_; }
    /// Current offset: rho, or rho e^{-l t} in decaying mode.
    double offset() const { return offset_; }
    double rho() const { return rho_; }
    double forgetting() const { return forgetting_; }
    OffsetMode mode() const { return mode_; }
    double elapsed() const { return elapsed_; }

    /// Continuous-time dP/dt and dQ/dt at the last sample.
    Gram p_rate() const {
        Gram rate = -forgetting_ * accumulated_ + last_gram_input_;
        if (mode_ == OffsetMode::Decaying) rate -= forgetting_ * offset_ * Gram::Identity();
        return rate;
    }
    Param q_rate() const { return -forgetting_ * q_ + last_cross_input_; }

private:
    double forgetting_;
    double rho_;
    double offset_;
    OffsetMode mode_;
    double elapsed_ = 0.0;
    Gram accumulated_ = Gram::Zero();
    Param q_ = Param::Zero();
    Gram last_gram_input_ = Gram::Zero();
    Param last_cross_input_ = Param::Zero();
};

/// H = P theta_hat - Q.
template <int N>
typename LoopTypes<N>::Param extract_H(const GramState<N>& gram, const typename LoopTypes<N>::Param& theta_hat) {
    return gram.P() * theta_hat - gram.Q();
}

struct OuterLearningGains {
    double gamma = 0.3;
    double gamma1 = 0.17;

    bool operator==(const OuterLearningGains&) const = default;
};

struct InnerLearningGains {
    std::array<double, 3> gamma_diag{1e-4, 1e-4, 4.5e-3};
    double sigma1 = 8.0;
    double sigma2 = 200.0;
    double h_epsilon = 1e-9;

    bool operator==(const InnerLearningGains&) const = default;

    Vec3 gamma() const { return {gamma_diag[0], gamma_diag[1], gamma_diag[2]}; }
};

/// theta1 <- theta1 - gamma (gamma1 H1 + sat(H1)) dt
inline double update_outer(double theta1_hat, double h1, const OuterLearningGains& gains, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("update_outer: dt must be positive");
    return theta1_hat - gains.gamma * (gains.gamma1 * h1 + sat(h1)) * dt;
}

/**
 * theta2 <- theta2 - Gamma (s1 H + s1 P^T H / |P| + s2 P^T H / (|P| |H|)) dt
 * with the Frobenius norm for |P|. The normalized term is dropped when
 * |H| < h_epsilon.
 */
inline Vec3 update_inner(const Vec3& theta2_hat, const Vec3& h2, const Mat3& p2, const InnerLearningGains& gains,
                         double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("update_inner: dt must be positive");
    const double p_norm = p2.norm();
    const double h_norm = h2.norm();
    const Vec3 pth = p2.transpose() * h2;
    Vec3 drive = gains.sigma1 * h2 + gains.sigma1 * pth / p_norm;
    if (h_norm >= gains.h_epsilon) drive += gains.sigma2 * pth / (p_norm * h_norm);
    return theta2_hat - gains.gamma().cwiseProduct(drive) * dt;
}

struct LoopFilterConfig {
    double alpha = 1.0;       // filter time constant, s
    double rho = 0.5;         // offset
    double forgetting = 1.0;  // l, 1/s

    bool operator==(const LoopFilterConfig&) const = default;
};

template <int N>
struct EstimatorSnapshot {
    using Param = typename LoopTypes<N>::Param;
    using Gram = typename LoopTypes<N>::Gram;

    Param theta_hat;  // estimate used for H (before the update)
    Param h;
    Gram p;
    Param q;
};

/// Outer-loop (mass) estimator session.
class OuterEstimator {
public:
    OuterEstimator(const LoopFilterConfig& filter, const OuterLearningGains& gains, double theta_initial,
                   OffsetMode mode = OffsetMode::Constant)
        : bank_(filter.alpha), gram_(filter.forgetting, filter.rho, mode), gains_(gains), theta_(theta_initial) {}

    /// Advances filters and accumulators with the regressor psi1 and applied force, then updates the estimate.
    EstimatorSnapshot<1> step(const Vec3& psi1, const Vec3& force, double dt) {
        bank_.step(psi1, force, dt);
        gram_.step(bank_.psi_f(), bank_.u_f(), dt);
        EstimatorSnapshot<1> snap;
        snap.theta_hat(0) = theta_;
        snap.p = gram_.P();
        snap.q = gram_.Q();
        snap.h = extract_H(gram_, snap.theta_hat);
        theta_ = update_outer(theta_, snap.h(0), gains_, dt);
        return snap;
    }

    double estimate() const { return theta_; }
    const FilterBank<1>& bank() const { return bank_; }
    const GramState<1>& gram() const { return gram_; }

private:
    FilterBank<1> bank_;
    GramState<1> gram_;
    OuterLearningGains gains_;
    double theta_;
};

/// Inner-loop (inertia) estimator session.
class InnerEstimator {
public:
    InnerEstimator(const LoopFilterConfig& filter, const InnerLearningGains& gains, const Vec3& theta_initial,
                   OffsetMode mode = OffsetMode::Constant)
        : bank_(filter.alpha), gram_(filter.forgetting, filter.rho, mode), gains_(gains), theta_(theta_initial) {}

    EstimatorSnapshot<3> step(const Mat3& psi2, const Vec3& torque, double dt) {
        bank_.step(psi2, torque, dt);
        gram_.step(bank_.psi_f(), bank_.u_f(), dt);
        EstimatorSnapshot<3> snap;
        snap.theta_hat = theta_;
        snap.p = gram_.P();
        snap.q = gram_.Q();
        snap.h = extract_H(gram_, theta_);
        theta_ = update_inner(theta_, snap.h, snap.p, gains_, dt);
        return snap;
    }

    const Vec3& estimate() const { return theta_; }
    const FilterBank<3>& bank() const { return bank_; }
    const GramState<3>& gram() const { return gram_; }
    const InnerLearningGains& gains() const { return gains_; }

private:
    FilterBank<3> bank_;
    GramState<3> gram_;
    InnerLearningGains gains_;
    Vec3 theta_;
};

// ---------------------------------------------------------------------------
// Finite-time and excitation diagnostics

/// Constants of the comparison system V' <= -c1 sqrt(V) - c2 V and the initial level a.
struct FtConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double a = 0.0;
};

/// a = (sqrt(2)/2) (|theta_tilde(0)| + xi_delta / rho)
inline double ft_initial_level(double theta_tilde0_norm, double xi_delta, double rho) {
    return std::numbers::sqrt2 / 2.0 * (theta_tilde0_norm + xi_delta / rho);
}

/// Upper bound on the settling time, (2/c2) ln(1 + c2 a / c1). Empty when c1 <= 0.
inline std::optional<double> ft_bound_time(const FtConstants& k) {
    if (!(k.c1 > 0.0) || !(k.a >= 0.0) || k.c2 < 0.0) return std::nullopt;
    if (k.c2 == 0.0) return 2.0 * k.a / k.c1;
    return 2.0 / k.c2 * std::log1p(k.c2 * k.a / k.c1);
}

/**
 * c1 = sqrt(2) lam (Gamma_min s2 / xi_p - |Phi| / lam),  c2 = 4 lam^2 Gamma_min s1 / xi_p
 * where lam is a lower bound of lambda_min(P), xi_p an upper bound of |P| and
 * |Phi| an upper bound of the perturbation term.
 */
inline FtConstants ft_constants(double lambda_min, double p_norm_max, double phi_max, double gamma_min,
                                const InnerLearningGains& gains, double a) {
    FtConstants k;
    k.c1 = std::numbers::sqrt2 * lambda_min * (gamma_min * gains.sigma2 / p_norm_max - phi_max / lambda_min);
    k.c2 = 4.0 * lambda_min * lambda_min * gamma_min * gains.sigma1 / p_norm_max;
    k.a = a;
    return k;
}

struct FtReport {
    double initial_norm = 0.0;
    double threshold = 0.0;
    std::optional<double> crossing_time;  // first time |P^-1 H| < threshold
    std::optional<double> bound_time;     // analytic settling bound
    double terminal_radius = 0.0;         // xi_delta / rho
    double min_norm = 0.0;

    bool within_bound() const { return crossing_time && bound_time && *crossing_time <= *bound_time; }
};

/**
 * Compares the realized trajectory of |P^-1 H| against the analytic bound.
 * `times` and `pinv_h_norm` are sampled together; the threshold is
 * `threshold_ratio` times the initial value.
 */
inline FtReport ft_diagnostic(std::span<const double> times, std::span<const double> pinv_h_norm,
                              const FtConstants& constants, double xi_delta, double rho, double threshold_ratio = 1e-3) {
    if (times.size() != pinv_h_norm.size()) throw std::invalid_argument("ft_diagnostic: series length mismatch");
    FtReport r;
    r.bound_time = ft_bound_time(constants);
    r.terminal_radius = xi_delta / rho;
    if (times.empty()) return r;
    r.initial_norm = pinv_h_norm.front();
    r.threshold = threshold_ratio * r.initial_norm;
    r.min_norm = *std::min_element(pinv_h_norm.begin(), pinv_h_norm.end());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (pinv_h_norm[i] < r.threshold) {
            r.crossing_time = times[i] - times.front();
            break;
        }
    }
    return r;
}

/// Bias of the H = 0 fixed point under zero disturbance: rho |theta| / lambda_min(P).
inline double zero_disturbance_bias(double rho, double theta_norm, double lambda_min_p) {
    return rho * theta_norm / lambda_min_p;
}

struct GramSample {
    double t = 0.0;
    double outer_excitation = 0.0;          // P1 - offset
    Mat3 inner_excitation = Mat3::Zero();   // P2 - offset I
};

struct PeReport {
    double outer_min = 0.0;
    double inner_lambda_min = 0.0;
    Vec3 inner_axis_min = Vec3::Zero();
    bool outer_warning = false;
    bool inner_warning = false;
};

/**
 * Minimum realized excitation over the run, ignoring the first `warmup`
 * seconds during which the accumulators start from zero. Requires at least
 * `warmup` seconds of history.
 */
inline PeReport pe_diagnostic(std::span<const GramSample> history, double warmup = 1.0, double floor = 1e-9) {
    if (history.empty() || history.back().t - history.front().t < warmup) {
        throw std::invalid_argument("pe_diagnostic: need at least the warm-up duration of history");
    }
    PeReport r;
    r.outer_min = std::numeric_limits<double>::infinity();
    r.inner_lambda_min = std::numeric_limits<double>::infinity();
    r.inner_axis_min.setConstant(std::numeric_limits<double>::infinity());
    const double t0 = history.front().t;
    for (const auto& s : history) {
        if (s.t - t0 < warmup) continue;
        r.outer_min = std::min(r.outer_min, s.outer_excitation);
        Eigen::SelfAdjointEigenSolver<Mat3> eig(s.inner_excitation, Eigen::EigenvaluesOnly);
        r.inner_lambda_min = std::min(r.inner_lambda_min, eig.eigenvalues()(0));
        r.inner_axis_min = r.inner_axis_min.cwiseMin(s.inner_excitation.diagonal());
    }
    r.outer_warning = !(r.outer_min > floor);
    r.inner_warning = !(r.inner_lambda_min > floor);
    return r;
}

}  // namespace rise
