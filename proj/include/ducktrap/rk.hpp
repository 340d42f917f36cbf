// Embedded Dormand-Prince 5(4) stepper with dense output (the classic
// dopri5 pair and its quartic interpolant), templated on dimension.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "ducktrap/errors.hpp"

namespace ducktrap {

template <int N>
using Vec = std::array<double, N>;

template <int N>
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::array<Vec<N>, 5> rcont{};

    double t1() const { return t0 + h; }

    Vec<N> eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        Vec<N> out;
        for (int i = 0; i < N; ++i)
            out[i] = rcont[0][i] +
                     th * (rcont[1][i] +
                           th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
        return out;
    }
};

struct RKOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    double max_step = 5.0;
    double initial_step = 0.0;  // 0: choose automatically
};

/// One-directional (t increasing) adaptive integrator. Rhs is any callable
/// void(double t, const Vec<N>&, Vec<N>&).
template <int N, class Rhs>
class Dopri5 {
  public:
    Dopri5(Rhs rhs, const RKOptions& opt) : rhs_(std::move(rhs)), opt_(opt) {}

    void init(double t0, const Vec<N>& y0) {
        t_ = t0;
        y_ = y0;
        rhs_(t_, y_, k1_);
        nfev_ = 1;
        h_ = opt_.initial_step > 0.0 ? opt_.initial_step : guess_h0();
    }

    double t() const { return t_; }
    const Vec<N>& y() const { return y_; }
    Vec<N> f() const { return k1_; }
    long nfev() const { return nfev_; }

    /// Advances one accepted step, never beyond t_end; returns the dense
    /// interpolant for the step taken.
    DenseStep<N> step(double t_end) {
        const double uround = std::numeric_limits<double>::epsilon();
        for (int attempt = 0; attempt < 400; ++attempt) {
            double h = std::min(h_, opt_.max_step);
            if (t_ + h > t_end) h = t_end - t_;
            const double hmin = 16.0 * uround * std::max(1.0, std::abs(t_));
            if (!(h > 0.0) || h < hmin) {
                if (t_end - t_ <= hmin) {
                    // sub-resolution tail before t_end: snap with a constant step
                    DenseStep<N> ds;
                    ds.t0 = t_;
                    ds.h = std::max(h, std::numeric_limits<double>::min());
                    ds.rcont[0] = y_;
                    t_ = t_end;
                    return ds;
                }
                throw StepSizeUnderflow("dopri5: step size underflow at t=" + std::to_string(t_));
            }

            Vec<N> k2, k3, k4, k5, k6, k7, ytmp, ynew;
            auto stage = [&](const std::array<double, 6>& a, int m, Vec<N>& out, double c) {
                for (int i = 0; i < N; ++i) {
                    double acc = a[0] * k1_[i];
                    if (m > 1) acc += a[1] * k2[i];
                    if (m > 2) acc += a[2] * k3[i];
                    if (m > 3) acc += a[3] * k4[i];
                    if (m > 4) acc += a[4] * k5[i];
                    if (m > 5) acc += a[5] * k6[i];
                    ytmp[i] = y_[i] + h * acc;
                }
                rhs_(t_ + c * h, ytmp, out);
                ++nfev_;
            };
            stage({1.0 / 5}, 1, k2, 1.0 / 5);
            stage({3.0 / 40, 9.0 / 40}, 2, k3, 3.0 / 10);
            stage({44.0 / 45, -56.0 / 15, 32.0 / 9}, 3, k4, 4.0 / 5);
            stage({19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729}, 4, k5, 8.0 / 9);
            stage({9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656}, 5,
                  k6, 1.0);
            for (int i = 0; i < N; ++i)
                ynew[i] = y_[i] + h * (35.0 / 384 * k1_[i] + 500.0 / 1113 * k3[i] +
                                       125.0 / 192 * k4[i] - 2187.0 / 6784 * k5[i] +
                                       11.0 / 84 * k6[i]);
            rhs_(t_ + h, ynew, k7);
            ++nfev_;

            double err = 0.0;
            for (int i = 0; i < N; ++i) {
                const double e = h * (71.0 / 57600 * k1_[i] - 71.0 / 16695 * k3[i] +
                                      71.0 / 1920 * k4[i] - 17253.0 / 339200 * k5[i] +
                                      22.0 / 525 * k6[i] - 1.0 / 40 * k7[i]);
                const double sc =
                    opt_.atol + opt_.rtol * std::max(std::abs(y_[i]), std::abs(ynew[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / N);
            if (!std::isfinite(err)) {
                h_ = 0.1 * h;
                continue;
            }
            if (err <= 1.0) {
                DenseStep<N> ds;
                ds.t0 = t_;
                ds.h = h;
                for (int i = 0; i < N; ++i) {
                    const double dy = ynew[i] - y_[i];
                    const double bspl = h * k1_[i] - dy;
                    ds.rcont[0][i] = y_[i];
                    ds.rcont[1][i] = dy;
                    ds.rcont[2][i] = bspl;
                    ds.rcont[3][i] = dy - h * k7[i] - bspl;
                    ds.rcont[4][i] =
                        h * (d1 * k1_[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                             d7 * k7[i]);
                }
                t_ += h;
                y_ = ynew;
                k1_ = k7;  // FSAL
                const double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
                h_ = h * fac;
                return ds;
            }
            h_ = h * std::max(0.1, 0.9 * std::pow(err, -0.2));
        }
        throw StepSizeUnderflow("dopri5: no accepted step after 400 attempts");
    }

    /// Re-seed the integrator state mid-run (after an event cut).
    void reset(double t0, const Vec<N>& y0) { init(t0, y0); }

  private:
    double guess_h0() const {
        double dy = 0.0, df = 0.0;
        for (int i = 0; i < N; ++i) {
            const double sc = opt_.atol + opt_.rtol * std::abs(y_[i]);
            dy += (y_[i] / sc) * (y_[i] / sc);
            df += (k1_[i] / sc) * (k1_[i] / sc);
        }
        dy = std::sqrt(dy / N);
        df = std::sqrt(df / N);
        double h0 = (dy < 1e-5 || df < 1e-5) ? 1e-6 : 0.01 * dy / df;
        return std::min(h0, opt_.max_step);
    }

    static constexpr double d1 = -12715105075.0 / 11282082432.0;
    static constexpr double d3 = 87487479700.0 / 32700410799.0;
    static constexpr double d4 = -10690763975.0 / 1880347072.0;
    static constexpr double d5 = 701980252875.0 / 199316789632.0;
    static constexpr double d6 = -1453857185.0 / 822651844.0;
    static constexpr double d7 = 69997945.0 / 29380423.0;

    Rhs rhs_;
    RKOptions opt_;
    double t_ = 0.0;
    double h_ = 1e-6;
    Vec<N> y_{};
    Vec<N> k1_{};
    long nfev_ = 0;
};

} // namespace ducktrap
