#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "smla/types.hpp"

namespace smla {

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.25;
    double max_time = 1e7;
    /// Euclidean norm of the phase-space part beyond which the orbit is declared escaped.
    double escape_radius = 1e3;
    double min_step = 1e-14;
    /// Wall-clock budget; integration aborts with Timeout once passed.
    std::optional<std::chrono::steady_clock::time_point> deadline;

    void validate() const;
};

enum class IntegrationStatus { Completed, Escaped, StepUnderflow, Timeout };

const char* to_string(IntegrationStatus s);

/// Raised by the stepper; carries the last accepted state.
class IntegrationError : public NumericFailure {
public:
    IntegrationError(IntegrationStatus status, double t, const State& last, const std::string& what)
        : NumericFailure(what), status_(status), t_(t), last_(last) {}

    IntegrationStatus status() const { return status_; }
    double time() const { return t_; }
    const State& last_state() const { return last_; }

private:
    IntegrationStatus status_;
    double t_;
    State last_;
};

/// One accepted step with the 4th-order continuous extension of the
/// Dormand-Prince pair.
template <int N>
struct DenseStep {
    using Vec = Eigen::Matrix<double, N, 1>;

    double t0 = 0.0;
    double h = 0.0;
    Vec y0 = Vec::Zero();
    Vec y1 = Vec::Zero();
    std::array<Vec, 5> rcont{};

    double t1() const { return t0 + h; }

    Vec operator()(double t) const
    {
        const double theta = (t - t0) / h;
        const double theta1 = 1.0 - theta;
        return rcont[0] + theta * (rcont[1] + theta1 * (rcont[2] + theta * (rcont[3] + theta1 * rcont[4])));
    }
};

/// Adaptive embedded Runge-Kutta 5(4) stepper (Dormand & Prince) with FSAL
/// and dense output. `Rhs` is callable as `Vec rhs(const Vec&)` (autonomous).
///
/// Steps are clipped to a caller-given limit without disturbing the step-size
/// controller, so a run split into intervals follows the same controller
/// sequence as one reconstructed from (t, y, proposed_step()).
template <int N, class Rhs>
class Dopri5 {
public:
    using Vec = Eigen::Matrix<double, N, 1>;

    Dopri5(Rhs rhs, const IntegratorConfig& cfg, double t0, const Vec& y0, double initial_step = 0.0)
        : rhs_(std::move(rhs)), cfg_(cfg), t_(t0), y_(y0)
    {
        k1_ = rhs_(y_);
        h_ = initial_step > 0.0 ? initial_step : initial_guess();
    }

    double t() const { return t_; }
    const Vec& y() const { return y_; }
    double proposed_step() const { return h_; }
    long steps() const { return steps_; }
    long rejected() const { return rejected_; }

    /// Replace the current state (e.g. after renormalizing tangent vectors).
    void reset_state(const Vec& y)
    {
        y_ = y;
        k1_ = rhs_(y_);
    }

    /// Advance by one accepted step that does not pass `t_limit`.
    DenseStep<N> step(double t_limit)
    {
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                         a76 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;
        constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                         d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                         d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

        if (cfg_.deadline && std::chrono::steady_clock::now() > *cfg_.deadline) {
            fail(IntegrationStatus::Timeout, "integration time budget exhausted");
        }

        if (!(t_limit > t_)) {
            throw std::logic_error("Dopri5::step: t_limit must exceed the current time");
        }
        for (;;) {
            const double remaining = t_limit - t_;
            double h = std::min(h_, cfg_.max_step);
            bool clipped = false;
            if (h >= remaining) {
                h = remaining;
                clipped = true;
            }
            if (h < cfg_.min_step) {
                if (remaining <= cfg_.min_step && remaining > 0.0) {
                    h = remaining;
                } else {
                    fail(IntegrationStatus::StepUnderflow, "step size underflow");
                }
            }

            const Vec k2 = rhs_(y_ + h * (a21 * k1_));
            const Vec k3 = rhs_(y_ + h * (a31 * k1_ + a32 * k2));
            const Vec k4 = rhs_(y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3));
            const Vec k5 = rhs_(y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
            const Vec k6 = rhs_(y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const Vec y_new = y_ + h * (a71 * k1_ + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            const Vec k7 = rhs_(y_new);
            const Vec err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double sum = 0.0;
            for (int i = 0; i < N; ++i) {
                const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(y_new[i]));
                const double q = err[i] / sc;
                sum += q * q;
            }
            const double en = std::sqrt(sum / N);

            if (!std::isfinite(en)) {
                h_ = h * 0.1;
                ++rejected_;
                continue;
            }

            const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-300), -0.2), 0.2, 10.0);
            if (en <= 1.0) {
                DenseStep<N> ds;
                ds.t0 = t_;
                ds.h = h;
                ds.y0 = y_;
                ds.y1 = y_new;
                ds.rcont[0] = y_;
                ds.rcont[1] = y_new - y_;
                ds.rcont[2] = h * k1_ - ds.rcont[1];
                ds.rcont[3] = ds.rcont[1] - h * k7 - ds.rcont[2];
                ds.rcont[4] = h * (d1 * k1_ + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

                // A clipped step keeps the controller's own proposal unless it shrank.
                const double next = h * fac;
                h_ = clipped ? std::min(h_, next) : next;
                t_ = clipped ? t_limit : t_ + h;
                y_ = y_new;
                k1_ = k7;
                ++steps_;

                const double radius = y_.template head<3>().norm();
                if (!std::isfinite(radius) || radius > cfg_.escape_radius) {
                    fail(IntegrationStatus::Escaped, "orbit escaped");
                }
                return ds;
            }
            h_ = h * std::max(fac, 0.2);
            ++rejected_;
        }
    }

private:
    [[noreturn]] void fail(IntegrationStatus st, const char* msg) const
    {
        throw IntegrationError(st, t_, State(y_.template head<3>()), msg);
    }

    double initial_guess() const
    {
        // Hairer's starting-step heuristic, order 5.
        Vec sc;
        for (int i = 0; i < N; ++i) {
            sc[i] = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
        }
        const double d0 = std::sqrt((y_.array() / sc.array()).square().sum() / N);
        const double d1 = std::sqrt((k1_.array() / sc.array()).square().sum() / N);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, cfg_.max_step);
        const Vec y1 = y_ + h0 * k1_;
        const Vec f1 = rhs_(y1);
        const double d2 = std::sqrt((((f1 - k1_).array()) / sc.array()).square().sum() / N) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100.0 * h0, h1, cfg_.max_step});
    }

    Rhs rhs_;
    IntegratorConfig cfg_;
    double t_;
    Vec y_;
    Vec k1_;
    double h_ = 0.0;
    long steps_ = 0;
    long rejected_ = 0;
};

template <int N, class Rhs>
Dopri5<N, Rhs> make_dopri5(Rhs rhs, const IntegratorConfig& cfg, double t0,
                           const Eigen::Matrix<double, N, 1>& y0, double initial_step = 0.0)
{
    return Dopri5<N, Rhs>(std::move(rhs), cfg, t0, y0, initial_step);
}

} // namespace smla
