#pragma once

// Log-domain accumulation of sums of positive terms. Keeps weighted integrals
// with exponents like rho^(-2*tau) finite for large tau: every term enters as
// its logarithm, the running sum is held relative to the largest term seen,
// and the mantissa sum is compensated (Kahan).

#include <cmath>
#include <limits>

namespace plateuc {

class LogAccumulator {
  public:
    // add a term exp(L)
    void add_log(double L) {
        if (std::isnan(L)) {
            nan_ = true;
            return;
        }
        if (L == -std::numeric_limits<double>::infinity()) return;  // zero term
        if (empty_) {
            shift_ = L;
            sum_ = 1.0;
            comp_ = 0.0;
            empty_ = false;
            return;
        }
        if (L > shift_) {
            // rescale the running sum to the new maximum term
            double factor = std::exp(shift_ - L);
            sum_ *= factor;
            comp_ *= factor;
            shift_ = L;
            add_term(1.0);
        } else {
            add_term(std::exp(L - shift_));
        }
    }

    bool empty() const { return empty_; }
    bool failed() const { return nan_; }

    // log of the accumulated sum (-inf when empty)
    double log() const {
        if (nan_) return std::numeric_limits<double>::quiet_NaN();
        if (empty_) return -std::numeric_limits<double>::infinity();
        return shift_ + std::log(sum_ - comp_);
    }

    // the sum itself; may overflow to +inf, which callers should expect
    double value() const { return std::exp(log()); }

  private:
    void add_term(double t) {
        double y = t - comp_;
        double s = sum_ + y;
        comp_ = (s - sum_) - y;
        sum_ = s;
    }

    double shift_ = 0.0;
    double sum_ = 0.0;
    double comp_ = 0.0;
    bool empty_ = true;
    bool nan_ = false;
};

// log(exp(a) + exp(b)) without overflow
inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace plateuc
