#pragma once

// With CVBF_USE_LIBMVEC, exp and log1p are redeclared with the simd attribute
// so GCC can call glibc's libmvec variants inside `omp simd` loops. glibc's
// own headers only do this under -ffast-math, which we avoid because it would
// also license reassociation of the compensated sums. Needs -fno-math-errno,
// -fopenmp-simd and linking with -lmvec (the CMake target sets all three).

#include <cmath>

#if defined(CVBF_USE_LIBMVEC) && defined(__GNUC__) && !defined(__clang__) && \
    defined(__x86_64__)
extern "C" {
__attribute__((__simd__("notinbranch"))) double exp(double) noexcept;
__attribute__((__simd__("notinbranch"))) double log1p(double) noexcept;
}
#endif

#define CVBF_PRAGMA(x) _Pragma(#x)
#if defined(_OPENMP) || defined(__GNUC__)
#define CVBF_SIMD_REDUCE(...) CVBF_PRAGMA(omp simd reduction(+ : __VA_ARGS__))
#else
#define CVBF_SIMD_REDUCE(...)
#endif
