#pragma once

#include "qmem/errors.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cstdint>

namespace qmem::detail {

/// Root of f on [lo, hi]; f(lo) and f(hi) must bracket zero.
template <class F>
double find_root(F&& f, double lo, double hi, double f_lo, double f_hi, int bits = 50) {
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) throw NoRootError("root is not bracketed");
    std::uintmax_t iterations = 200;
    const auto tol = boost::math::tools::eps_tolerance<double>(bits);
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iterations);
    return 0.5 * (a + b);
}

template <class F>
double find_root(F&& f, double lo, double hi, int bits = 50) {
    return find_root(f, lo, hi, f(lo), f(hi), bits);
}

}  // namespace qmem::detail
