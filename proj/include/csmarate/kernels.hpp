#pragma once

#include <cstddef>

namespace csmarate::kernels {

// Dense numerical primitives behind the product-form computations.  Scalar
// reference implementations always exist; an AVX2+FMA variant is compiled on
// x86-64 and selected at runtime.  Both variants agree to ~1 ulp per element
// (the vector exp is a Cephes-style rational approximation), which the test
// suite checks explicitly.
struct Backend {
    const char* name;

    // Maximum element of v (n >= 1).
    double (*max_value)(const double* v, std::size_t n);

    // e[i] = exp(v[i] - shift); returns sum_i e[i].
    double (*exp_shift_sum)(const double* v, std::size_t n, double shift, double* e);

    // v[i] *= s.
    void (*scale)(double* v, std::size_t n, double s);

    // y[l] = dot(m_rows + l*m, tau) for l in [0, nrows): row-major 0/1
    // indicator rows against a weight vector.
    void (*masked_marginals)(const double* m_rows, const double* tau, std::size_t m,
                             std::size_t nrows, double* y);
};

const Backend& scalar_backend();

// nullptr when the AVX2 translation unit is not compiled in or the CPU lacks
// AVX2/FMA.
const Backend* avx2_backend();

// Backend used by the library.  Chosen once: environment variable
// CSMARATE_BACKEND ("scalar" or "avx2") overrides; otherwise the widest
// available variant wins.  Requesting an unavailable backend throws.
const Backend& active_backend();

} // namespace csmarate::kernels
