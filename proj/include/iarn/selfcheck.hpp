#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "iarn/backbone.hpp"
#include "iarn/resampler.hpp"

namespace iarn {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct GradStats {
    double max_rel = 0.0;
    double ok_fraction = 1.0;
    int64_t count = 0;

    bool pass(double rel_tol, double min_ok_fraction, double max_tol) const {
        return ok_fraction >= min_ok_fraction && max_rel <= max_tol && count > 0;
    }
};

// Central finite differences against recorded gradients for every
// coordinate of every leaf. `loss_graph` rebuilds the scalar loss from the
// leaves' current values for the gradient recording; `loss_value` evaluates
// the same function with a double-accumulated reduction so the difference
// quotient is not drowned by the working precision's final rounding.
// Relative error uses max(|ad|, |fd|, 1) as the denominator.
template <class S>
GradStats grad_check(const std::function<BasicTensor<S>()>& loss_graph,
                     const std::function<double()>& loss_value,
                     std::span<BasicTensor<S>> leaves, double eps, double rel_tol);

// Independent minimization of the encoding distance: scans all candidate
// resampled-pixel indices instead of using the closed form.
double brute_force_encode_distance(int index, double resampled_pixel_size, int extent);

// Invariant suites at fixed seeds; `wide` switches the invertibility and
// gradient checks to 64-bit tolerances.
std::vector<CheckResult> run_selfcheck(bool wide);

// One line per check; returns true when everything passed.
bool print_selfcheck(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace iarn
