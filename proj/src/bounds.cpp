#include "drm/bounds.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace drm {

void BoundInputs::validate() const
{
    if (depth < 1 || width < 1 || d < 1) throw std::invalid_argument("bounds: D, W, d must be >= 1");
    if (!(n > 0.0 && B > 0.0 && c3 > 0.0 && pdim_constant > 0.0)) {
        throw std::invalid_argument("bounds: n, B, c3 and the pdim constant must be positive");
    }
    if (!(nu >= 0.0)) throw std::invalid_argument("bounds: nu must be >= 0");
}

double pdim_bound(int depth, long long width, double pdim_constant)
{
    if (depth < 1 || width < 1) throw std::invalid_argument("pdim_bound: D and W must be >= 1");
    const double D = depth;
    const double W = static_cast<double>(width);
    return pdim_constant * D * D * W * W * (D + std::log(W));
}

double log_covering_bound(double eps, double n, double B, double pdim)
{
    if (!(eps > 0.0) || !(B > 0.0)) throw std::invalid_argument("log_covering_bound: eps and B must be positive");
    if (!(pdim >= 1.0) || n < pdim) throw std::domain_error("log_covering_bound: requires n >= Pdim >= 1");
    return pdim * std::log(std::numbers::e * n * B / (eps * pdim));
}

double dudley_rademacher_bound(double n, double B, double pdim)
{
    if (!(pdim >= 1.0) || !(n > pdim)) throw std::domain_error("dudley_rademacher_bound: requires n > Pdim >= 1");
    if (!(B > 0.0)) throw std::invalid_argument("dudley_rademacher_bound: B must be positive");
    return 28.0 * std::sqrt(1.5) * B * std::sqrt(pdim / n) * std::sqrt(std::log(std::numbers::e * n / pdim));
}

double statistical_error_bound(const BoundInputs& in, double c_bc3)
{
    in.validate();
    const double D = in.depth;
    const double W = static_cast<double>(in.width);
    const double dd = in.d;
    const double inner = dd * (D + 3.0) * (D + 2.0) * W * std::sqrt((D + 3.0 + std::log(dd * (D + 2.0) * W)) / in.n);
    return c_bc3 * std::pow(inner, 1.0 - in.nu);
}

PredictedRates predicted_rates(int d, double nu)
{
    if (d < 1 || !(nu >= 0.0)) throw std::invalid_argument("predicted_rates: need d >= 1, nu >= 0");
    const double denom = d + 2.0 + nu;
    return {-1.0 / denom, -1.0 / (2.0 * denom)};
}

}  // namespace drm
