#include "csmarate/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace csmarate::kernels {

namespace {

double scalar_max_value(const double* v, std::size_t n) {
    double m = v[0];
    for (std::size_t i = 1; i < n; ++i)
        if (v[i] > m) m = v[i];
    return m;
}

double scalar_exp_shift_sum(const double* v, std::size_t n, double shift, double* e) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(v[i] - shift);
        sum += e[i];
    }
    return sum;
}

void scalar_scale(double* v, std::size_t n, double s) {
    for (std::size_t i = 0; i < n; ++i) v[i] *= s;
}

void scalar_masked_marginals(const double* m_rows, const double* tau, std::size_t m,
                             std::size_t nrows, double* y) {
    for (std::size_t l = 0; l < nrows; ++l) {
        const double* row = m_rows + l * m;
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += row[k] * tau[k];
        y[l] = acc;
    }
}

constexpr Backend kScalar{"scalar", scalar_max_value, scalar_exp_shift_sum, scalar_scale,
                          scalar_masked_marginals};

const Backend& pick_backend() {
    const char* want = std::getenv("CSMARATE_BACKEND");
    if (want != nullptr && *want != '\0') {
        const std::string name(want);
        if (name == "scalar") return kScalar;
        if (name == "avx2") {
            const Backend* b = avx2_backend();
            if (b == nullptr)
                throw std::runtime_error("CSMARATE_BACKEND=avx2 requested but AVX2 is unavailable");
            return *b;
        }
        throw std::runtime_error("unknown CSMARATE_BACKEND value: " + name);
    }
    if (const Backend* b = avx2_backend()) return *b;
    return kScalar;
}

} // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active_backend() {
    static const Backend& chosen = pick_backend();
    return chosen;
}

#if !defined(CSMARATE_HAVE_AVX2_TU)
const Backend* avx2_backend() { return nullptr; }
#endif

} // namespace csmarate::kernels
