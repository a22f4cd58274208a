#pragma once

#include <cmath>
#include <functional>

#include "trilead/common.hpp"

namespace trilead {

struct GradCheckResult {
    double max_rel_err = 0.0;
    Eigen::Index worst_coord = -1;
};

// Central finite-difference check of an analytic gradient, float64 only.
// f must be pure. Relative error per coordinate uses max(|fd|, |an|, scale)
// as denominator; the worst coordinate is reported.
inline GradCheckResult grad_check(const std::function<double(const ArrayX<double>&)>& f,
                                  const ArrayX<double>& analytic_grad, const ArrayX<double>& point,
                                  double h = 1e-5, double scale = 1e-6) {
    GradCheckResult r;
    ArrayX<double> x = point;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = analytic_grad[i];
        const double denom = std::max({std::abs(fd), std::abs(an), scale});
        const double rel = std::abs(fd - an) / denom;
        if (rel > r.max_rel_err) {
            r.max_rel_err = rel;
            r.worst_coord = i;
        }
    }
    return r;
}

// Same check over a random subset of coordinates (for large parameter vectors).
inline GradCheckResult grad_check_sampled(const std::function<double(const ArrayX<double>&)>& f,
                                          const ArrayX<double>& analytic_grad,
                                          const ArrayX<double>& point,
                                          const std::vector<Eigen::Index>& coords,
                                          double h = 1e-5, double scale = 1e-6) {
    GradCheckResult r;
    ArrayX<double> x = point;
    for (Eigen::Index i : coords) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = analytic_grad[i];
        const double denom = std::max({std::abs(fd), std::abs(an), scale});
        const double rel = std::abs(fd - an) / denom;
        if (rel > r.max_rel_err) {
            r.max_rel_err = rel;
            r.worst_coord = i;
        }
    }
    return r;
}

}  // namespace trilead
