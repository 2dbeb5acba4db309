#pragma once

namespace scs {

double normal_pdf(double x);

/// Standard normal cdf via the complementary error function.
double normal_cdf(double x);

/// Inverse of normal_cdf for p in (0, 1). Throws std::domain_error otherwise.
double normal_quantile(double p);

}  // namespace scs
