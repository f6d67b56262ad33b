#pragma once
#include <cstdint>
#include <numeric>
#include <string>

#include "mpukit/errors.hpp"

namespace mpukit {

/*!
 * Exact nonnegative rational, used for rank ratios.  Ranks are integers and
 * the index is their quotient; storing the quotient exactly keeps table
 * reproduction and multiplicativity checks free of float comparisons.
 * Canonical form: den > 0, gcd(num, den) = 1.
 */
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d) : num(n), den(d) {
        if (den == 0) throw err::assertion_error("Rational: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    friend bool operator==(const Rational &a, const Rational &b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational &a, const Rational &b) { return !(a == b); }
    friend Rational operator*(const Rational &a, const Rational &b) {
        // Cross-reduce before multiplying to keep intermediates small.
        const Rational x(a.num, b.den);
        const Rational y(b.num, a.den);
        return Rational(x.num * y.num, x.den * y.den);
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    /*! "4" for integers, "1/4" otherwise — the form used in CSV output. */
    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

} // namespace mpukit
