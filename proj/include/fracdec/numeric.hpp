#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <cstdint>
#include <string>

namespace fracdec {

/// Exact arbitrary-precision rational, kept canonical (gcd 1, positive
/// denominator) by the backend. This is the default scalar for every
/// weighting; all operation contracts are stated for it.
using Rational = boost::multiprecision::mpq_rational;

/// Uniform access to the two numeric backends: exact rationals (default)
/// and binary doubles (opt-in, for large-n runs). The pipeline's control
/// decisions (zero tests, sign tests, equality of class sums) go through
/// these so the float backend can absorb roundoff.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;

    static Rational ratio(std::int64_t num, std::int64_t den) { return Rational(num, den); }
    static bool is_zero(const Rational& x) { return x.is_zero(); }
    static bool equal(const Rational& a, const Rational& b) { return a == b; }
    static int sign(const Rational& x) { return x.sign(); }
    static Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
    static bool within_unit(const Rational& x) { return abs(x) <= 1; }
    static double to_double(const Rational& x) { return x.convert_to<double>(); }
    static std::string str(const Rational& x) {
        return numerator(x).str() + "/" + denominator(x).str();
    }
};

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    /// Zero/equality threshold for pipeline control flow; well below the
    /// backend's advertised 1e-6 verification tolerance.
    static constexpr double eps = 1e-12;

    static double ratio(std::int64_t num, std::int64_t den) {
        return static_cast<double>(num) / static_cast<double>(den);
    }
    static bool is_zero(double x) { return std::fabs(x) < eps; }
    static bool equal(double a, double b) {
        double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
        return std::fabs(a - b) < eps * scale;
    }
    static int sign(double x) { return is_zero(x) ? 0 : (x > 0 ? 1 : -1); }
    static double abs(double x) { return std::fabs(x); }
    static bool within_unit(double x) { return std::fabs(x) <= 1.0 + 1e-9; }
    static double to_double(double x) { return x; }
    static std::string str(double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }
};

} // namespace fracdec
