#include "scs/kernels.hpp"

namespace scs::kernels {

namespace {

void accumulate_scalar(double* acc, const double* col, double sign, std::size_t n) {
    for (std::size_t t = 0; t < n; ++t) acc[t] += sign * col[t];
}

double sum_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += x[t];
    return s;
}

double sum_sq_dev_scalar(const double* x, double scale, double center, std::size_t n) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = scale * x[t] - center;
        s += d * d;
    }
    return s;
}

PairSums pair_sums_scalar(const double* x, double scale, double center, const double* ref_dev, std::size_t n) {
    PairSums s;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = scale * x[t] - center;
        const double e = ref_dev[t];
        const double d2 = d * d;
        const double e2 = e * e;
        s.dd += d2;
        s.ddd += d2 * d;
        s.dddd += d2 * d2;
        s.de += d * e;
        s.dee += d * e2;
        s.dde += d2 * e;
        s.ddee += d2 * e2;
    }
    return s;
}

}  // namespace

const KernelTable& scalar() {
    static const KernelTable table{"scalar", accumulate_scalar, sum_scalar, sum_sq_dev_scalar, pair_sums_scalar};
    return table;
}

}  // namespace scs::kernels
