#pragma once

#include <cstddef>

namespace scs::kernels {

/// Centered cross sums for a candidate series d_t = scale * x_t - center against
/// pre-centered reference deviations e_t.
struct PairSums {
    double dd = 0.0;    // sum d^2
    double ddd = 0.0;   // sum d^3
    double dddd = 0.0;  // sum d^4
    double de = 0.0;    // sum d e
    double dee = 0.0;   // sum d e^2
    double dde = 0.0;   // sum d^2 e
    double ddee = 0.0;  // sum d^2 e^2
};

/// Inner loops over the time axis. Every variant evaluates d_t with the same
/// per-element operations; only the summation order differs between variants.
struct KernelTable {
    const char* name;
    /// acc[t] += sign * col[t]
    void (*accumulate)(double* acc, const double* col, double sign, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    /// sum (scale * x[t] - center)^2
    double (*sum_sq_dev)(const double* x, double scale, double center, std::size_t n);
    PairSums (*pair_sums)(const double* x, double scale, double center, const double* ref_dev, std::size_t n);
};

const KernelTable& scalar();

/// AVX2 variant, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2();

/// Best available table. Setting SCS_KERNELS=scalar in the environment forces
/// the scalar reference path.
const KernelTable& active();

}  // namespace scs::kernels
