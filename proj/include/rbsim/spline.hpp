#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "rbsim/error.hpp"
#include "rbsim/rng.hpp"

namespace rbsim {

using BigInt = mpz_class;
using BigRational = mpq_class;

// Uniform integer in [0, bound), fed from the deterministic Rng stream.
inline BigInt random_below(Rng& rng, const BigInt& bound) {
    if (bound <= 0) throw Error("random_below: bound must be positive");
    const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
    const std::size_t words = (bits + 63) / 64;
    std::vector<std::uint64_t> buf(words);
    while (true) {
        for (auto& w : buf) w = rng.next();
        BigInt value;
        mpz_import(value.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0,
                   buf.data());
        value >>= (words * 64 - bits);
        if (value < bound) return value;
    }
}

inline BigInt random_bits(Rng& rng, int bits) {
    BigInt bound = 1;
    bound <<= bits;
    return random_below(rng, bound);
}

// Natural cubic spline through strictly increasing integer knots, fitted and
// evaluated in exact rational arithmetic. Each interval stores its cubic with
// cleared denominators,
//     S(x) = (n0 + n1 t + n2 t^2 + n3 t^3) / den,  t = x - x_i,
// so that evaluation and equality tests stay in integer arithmetic. Equality
// tests are additionally screened by residues mod a fixed 61-bit prime: a
// nonzero residue difference proves inequality, a zero one falls back to the
// exact comparison, so the result is always exact.
class RationalSpline {
  public:
    struct Interval {
        BigInt n0, n1, n2, n3, den;  // den > 0
        std::uint64_t rn0, rn1, rn2, rn3, rden;  // residues mod kScreen
    };

    static constexpr std::uint64_t kScreen = (std::uint64_t{1} << 61) - 1;

    RationalSpline(std::vector<BigInt> xs, std::vector<BigInt> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        if (n < 2) throw Error("spline: need at least two knots");
        if (ys_.size() != n) throw Error("spline: knot/ordinate size mismatch");
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (xs_[i] >= xs_[i + 1]) {
                throw Error("spline: knots must be strictly increasing");
            }
        }

        std::vector<BigInt> h(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) h[i] = xs_[i + 1] - xs_[i];

        // second derivatives at knots; natural boundary pins both ends to 0
        std::vector<BigRational> m(n, BigRational(0));
        if (n > 2) {
            const std::size_t k = n - 2;
            std::vector<BigRational> diag(k), rhs(k);
            for (std::size_t i = 0; i < k; ++i) {
                diag[i] = BigRational(2 * (h[i] + h[i + 1]));
                BigRational right(ys_[i + 2] - ys_[i + 1]);
                right /= BigRational(h[i + 1]);
                BigRational left(ys_[i + 1] - ys_[i]);
                left /= BigRational(h[i]);
                rhs[i] = 6 * (right - left);
            }
            for (std::size_t i = 1; i < k; ++i) {
                const BigRational w = BigRational(h[i]) / diag[i - 1];
                diag[i] -= w * BigRational(h[i]);
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for (std::size_t i = k - 1; i >= 1; --i) {
                m[i] = (rhs[i - 1] - BigRational(h[i]) * m[i + 1]) / diag[i - 1];
            }
        }

        intervals_.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const BigRational hi(h[i]);
            BigRational a1 = BigRational(ys_[i + 1] - ys_[i]) / hi -
                             hi * (2 * m[i] + m[i + 1]) / 6;
            BigRational a2 = m[i] / 2;
            BigRational a3 = (m[i + 1] - m[i]) / (6 * hi);

            BigInt den;
            mpz_lcm(den.get_mpz_t(), a1.get_den().get_mpz_t(),
                    a2.get_den().get_mpz_t());
            mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), a3.get_den().get_mpz_t());

            Interval& iv = intervals_[i];
            iv.den = den;
            iv.n0 = ys_[i] * den;
            iv.n1 = a1.get_num() * (den / a1.get_den());
            iv.n2 = a2.get_num() * (den / a2.get_den());
            iv.n3 = a3.get_num() * (den / a3.get_den());
            iv.rn0 = residue(iv.n0);
            iv.rn1 = residue(iv.n1);
            iv.rn2 = residue(iv.n2);
            iv.rn3 = residue(iv.n3);
            iv.rden = residue(iv.den);
        }
    }

    const std::vector<BigInt>& knots() const { return xs_; }
    const std::vector<BigInt>& ordinates() const { return ys_; }
    std::size_t intervalCount() const { return intervals_.size(); }
    const Interval& interval(std::size_t i) const { return intervals_.at(i); }

    bool inSpan(const BigInt& x) const {
        return x >= xs_.front() && x <= xs_.back();
    }

    // Exact value; throws when x lies outside the knot span.
    BigRational evaluate(const BigInt& x) const {
        const std::size_t i = locate(x);
        const BigInt t = x - xs_[i];
        const Interval& iv = intervals_[i];
        BigRational r(((iv.n3 * t + iv.n2) * t + iv.n1) * t + iv.n0, iv.den);
        r.canonicalize();
        return r;
    }

    // Exact test S(x) == v without materializing a huge rational on the
    // (overwhelmingly common) unequal path.
    bool valueEquals(const BigInt& x, const BigInt& v) const {
        const std::size_t i = locate(x);
        const BigInt t = x - xs_[i];
        const Interval& iv = intervals_[i];
        const std::uint64_t rt = residue(t);
        std::uint64_t lhs = mulmod(iv.rn3, rt);
        lhs = addmod(lhs, iv.rn2);
        lhs = mulmod(lhs, rt);
        lhs = addmod(lhs, iv.rn1);
        lhs = mulmod(lhs, rt);
        lhs = addmod(lhs, iv.rn0);
        const std::uint64_t rhs = mulmod(residue(v), iv.rden);
        if (lhs != rhs) return false;
        return ((iv.n3 * t + iv.n2) * t + iv.n1) * t + iv.n0 == v * iv.den;
    }

    // d/dx and d2/dx2 on interval i at offset t from its left knot.
    BigRational firstDerivative(std::size_t i, const BigInt& t) const {
        const Interval& iv = intervals_.at(i);
        BigRational r(3 * iv.n3 * t * t + 2 * iv.n2 * t + iv.n1, iv.den);
        r.canonicalize();
        return r;
    }
    BigRational secondDerivative(std::size_t i, const BigInt& t) const {
        const Interval& iv = intervals_.at(i);
        BigRational r(6 * iv.n3 * t + 2 * iv.n2, iv.den);
        r.canonicalize();
        return r;
    }

    // Coefficient k of interval i as a reduced rational (cubic in t).
    BigRational coefficient(std::size_t i, int k) const {
        const Interval& iv = intervals_.at(i);
        const BigInt* n[4] = {&iv.n0, &iv.n1, &iv.n2, &iv.n3};
        BigRational r(*n[k], iv.den);
        r.canonicalize();
        return r;
    }

  private:
    std::size_t locate(const BigInt& x) const {
        if (!inSpan(x)) throw Error("spline: abscissa outside the knot span");
        std::size_t lo = 0, hi = intervals_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (xs_[mid] <= x) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        return lo;
    }

    static std::uint64_t residue(const BigInt& v) {
        const unsigned long r =
            mpz_fdiv_ui(v.get_mpz_t(), static_cast<unsigned long>(kScreen));
        return static_cast<std::uint64_t>(r);
    }
    static std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(a) * b) % kScreen);
    }
    static std::uint64_t addmod(std::uint64_t a, std::uint64_t b) {
        const std::uint64_t s = a + b;  // < 2^62, no overflow
        return s >= kScreen ? s - kScreen : s;
    }

    std::vector<BigInt> xs_;
    std::vector<BigInt> ys_;
    std::vector<Interval> intervals_;
};

}  // namespace rbsim
