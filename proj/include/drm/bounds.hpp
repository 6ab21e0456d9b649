/**
 * @file bounds.hpp
 * @brief Closed-form complexity and generalization bounds for ReLU^2 networks.
 *
 * Hidden O(.) constants are explicit multipliers (default 1); logarithms are natural.
 */
#pragma once

namespace drm {

struct BoundInputs {
    int depth = 1;           // D
    long long width = 1;     // W
    int d = 1;
    double n = 1.0;          // sample count
    double B = 1.0;          // sup bound of |u| and |grad u|^2
    double c3 = 1.0;         // sup bound of |f|, |w|, |g|
    double nu = 0.0;
    double pdim_constant = 1.0;

    /// Throws std::invalid_argument unless all inputs are positive and nu >= 0.
    void validate() const;
};

/// pdim_constant * D^2 W^2 (D + ln W).
double pdim_bound(int depth, long long width, double pdim_constant = 1.0);

/// Log of the covering bound (e n B / (eps Pdim))^Pdim; requires n >= pdim >= 1.
double log_covering_bound(double eps, double n, double B, double pdim);

/// 28 sqrt(3/2) B sqrt(Pdim / n) sqrt(ln(e n / Pdim)); requires n > pdim >= 1.
double dudley_rademacher_bound(double n, double B, double pdim);

/// C [d (D+3)(D+2) W sqrt((D + 3 + ln(d (D+2) W)) / n)]^{1 - nu}.
double statistical_error_bound(const BoundInputs& in, double c_bc3 = 1.0);

struct PredictedRates {
    double h1_sq_exponent = 0.0;  // E|u - u*|^2_{H1} ~ n^{h1_sq_exponent}
    double h1_exponent = 0.0;
};

/// (-1/(d+2+nu), -1/(2(d+2+nu))).
PredictedRates predicted_rates(int d, double nu);

}  // namespace drm
