#include <immintrin.h>

#include "scs/kernels.hpp"

namespace scs::kernels {

namespace {

inline double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void accumulate_avx2(double* acc, const double* col, double sign, std::size_t n) {
    const __m256d s = _mm256_set1_pd(sign);
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        const __m256d a = _mm256_loadu_pd(acc + t);
        const __m256d c = _mm256_loadu_pd(col + t);
        _mm256_storeu_pd(acc + t, _mm256_add_pd(a, _mm256_mul_pd(s, c)));
    }
    for (; t < n; ++t) acc[t] += sign * col[t];
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + t));
    double s = hsum(acc);
    for (; t < n; ++t) s += x[t];
    return s;
}

double sum_sq_dev_avx2(const double* x, double scale, double center, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale);
    const __m256d vc = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(x + t)), vc);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = hsum(acc);
    for (; t < n; ++t) {
        const double d = scale * x[t] - center;
        s += d * d;
    }
    return s;
}

PairSums pair_sums_avx2(const double* x, double scale, double center, const double* ref_dev, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale);
    const __m256d vc = _mm256_set1_pd(center);
    __m256d dd = _mm256_setzero_pd();
    __m256d ddd = _mm256_setzero_pd();
    __m256d dddd = _mm256_setzero_pd();
    __m256d de = _mm256_setzero_pd();
    __m256d dee = _mm256_setzero_pd();
    __m256d dde = _mm256_setzero_pd();
    __m256d ddee = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(x + t)), vc);
        const __m256d e = _mm256_loadu_pd(ref_dev + t);
        const __m256d d2 = _mm256_mul_pd(d, d);
        const __m256d e2 = _mm256_mul_pd(e, e);
        dd = _mm256_add_pd(dd, d2);
        ddd = _mm256_add_pd(ddd, _mm256_mul_pd(d2, d));
        dddd = _mm256_add_pd(dddd, _mm256_mul_pd(d2, d2));
        de = _mm256_add_pd(de, _mm256_mul_pd(d, e));
        dee = _mm256_add_pd(dee, _mm256_mul_pd(d, e2));
        dde = _mm256_add_pd(dde, _mm256_mul_pd(d2, e));
        ddee = _mm256_add_pd(ddee, _mm256_mul_pd(d2, e2));
    }
    PairSums s{hsum(dd), hsum(ddd), hsum(dddd), hsum(de), hsum(dee), hsum(dde), hsum(ddee)};
    for (; t < n; ++t) {
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

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2", accumulate_avx2, sum_avx2, sum_sq_dev_avx2, pair_sums_avx2};
    return table;
}

}  // namespace scs::kernels
