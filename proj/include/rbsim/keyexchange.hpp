#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "rbsim/error.hpp"
#include "rbsim/rng.hpp"
#include "rbsim/spline.hpp"

namespace rbsim {

// Square-and-multiply modular exponentiation.
inline BigInt mod_pow(const BigInt& base, const BigInt& exp, const BigInt& mod) {
    if (mod <= 0) throw Error("mod_pow: modulus must be positive");
    BigInt result = 1;
    BigInt b = base % mod;
    if (b < 0) b += mod;
    const std::size_t bits = mpz_sizeinbase(exp.get_mpz_t(), 2);
    for (std::size_t i = bits; i-- > 0;) {
        result = (result * result) % mod;
        if (mpz_tstbit(exp.get_mpz_t(), i)) result = (result * b) % mod;
    }
    return result;
}

inline bool is_probable_prime(const BigInt& n) {
    return mpz_probab_prime_p(n.get_mpz_t(), 32) > 0;
}

// 256-bit safe prime (smallest p = 2q+1 above 2^255) with primitive root 5,
// the demo group for key exchange runs.
inline const char* const kDemoPrime256 =
    "5789604461865809771178549250434395392663499233282028201972879200395656501"
    "6447";
inline BigInt demo_prime_256() { return BigInt(kDemoPrime256); }
constexpr int kDemoGenerator = 5;

struct NegotiatorState {
    BigInt p;  // prime modulus
    BigInt g;  // generator
    BigInt a;  // secret exponent
    BigInt A;  // g^a mod p
    std::map<int, BigInt> memberKeys;  // member id -> pairwise key K_i
    BigInt y;  // current group key
};

struct MemberState {
    BigInt x;  // secret exponent x_i
    BigInt B;  // g^x mod p
    BigInt K;  // pairwise key A^x mod p
};

inline bool degenerate_public_value(const BigInt& v, const BigInt& p) {
    return v <= 1 || v == p - 1;
}

inline NegotiatorState dh_setup(const BigInt& p, const BigInt& g, Rng& rng) {
    if (p < 5 || !is_probable_prime(p)) {
        throw Error("dh_setup: p must be a prime >= 5");
    }
    if (degenerate_public_value(g, p) || g >= p) {
        throw Error("dh_setup: generator must satisfy 1 < g < p-1");
    }
    NegotiatorState st;
    st.p = p;
    st.g = g;
    do {
        st.a = 1 + random_below(rng, p - 2);  // a in [1, p-2]
        st.A = mod_pow(g, st.a, p);
    } while (degenerate_public_value(st.A, p));
    return st;
}

inline MemberState member_keygen(const BigInt& p, const BigInt& g,
                                 const BigInt& A, Rng& rng) {
    if (degenerate_public_value(A, p)) {
        throw Error("member_keygen: degenerate negotiator public value");
    }
    MemberState st;
    do {
        st.x = 1 + random_below(rng, p - 2);
        st.B = mod_pow(g, st.x, p);
    } while (degenerate_public_value(st.B, p));
    st.K = mod_pow(A, st.x, p);
    return st;
}

// Negotiator side of the pairwise key: K_i = B_i^a mod p.
inline BigInt derive_pairwise(const NegotiatorState& negotiator, const BigInt& B) {
    if (degenerate_public_value(B, negotiator.p)) {
        throw Error("derive_pairwise: degenerate member public value");
    }
    return mod_pow(B, negotiator.a, negotiator.p);
}

inline BigInt register_member(NegotiatorState& negotiator, int memberId,
                              const BigInt& B) {
    const BigInt k = derive_pairwise(negotiator, B);
    if (!negotiator.memberKeys.emplace(memberId, k).second) {
        throw Error("register_member: duplicate member id " +
                    std::to_string(memberId));
    }
    return k;
}

// The key function S: a natural cubic spline through (K_i, y) for every
// member plus random decoy knots, one strictly inside each inter-member gap
// and one beyond each end. The decoys keep S non-constant, so holding the
// function alone does not reveal which abscissae are member keys.
using KeyFunction = RationalSpline;

inline KeyFunction build_key_function(const std::vector<BigInt>& memberKeys,
                                      const BigInt& y, Rng& rng,
                                      const BigInt& decoyRange,
                                      int retryCap = 64) {
    if (memberKeys.empty()) {
        throw Error("build_key_function: need at least one member key");
    }
    if (decoyRange < 2) {
        throw Error("build_key_function: decoy range must be >= 2");
    }
    std::vector<BigInt> keys(memberKeys);
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        if (keys[i] == keys[i + 1]) {
            throw Error("build_key_function: duplicate pairwise key");
        }
    }

    auto decoyOrdinate = [&]() {
        for (int attempt = 0; attempt < retryCap; ++attempt) {
            const BigInt v = random_below(rng, decoyRange);
            if (v != y) return v;
        }
        throw Error("build_key_function: decoy ordinate collision after retry cap");
    };

    const BigInt span = keys.back() - keys.front();
    BigInt endSpan = span / static_cast<unsigned long>(keys.size() + 1);
    if (endSpan < 16) endSpan = 16;

    std::vector<BigInt> xs, ys;
    xs.push_back(keys.front() - 1 - random_below(rng, endSpan));
    ys.push_back(decoyOrdinate());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        xs.push_back(keys[i]);
        ys.push_back(y);
        if (i + 1 < keys.size()) {
            const BigInt gap = keys[i + 1] - keys[i];
            if (gap < 2) {
                throw Error(
                    "build_key_function: adjacent member keys leave no room "
                    "for a decoy");
            }
            xs.push_back(keys[i] + 1 + random_below(rng, gap - 1));
            ys.push_back(decoyOrdinate());
        }
    }
    xs.push_back(keys.back() + 1 + random_below(rng, endSpan));
    ys.push_back(decoyOrdinate());

    return KeyFunction(std::move(xs), std::move(ys));
}

// Evaluates S at a member's pairwise key. Exact; a key outside the knot span
// cannot belong to the group.
inline BigRational recover_group_key(const KeyFunction& s, const BigInt& k) {
    if (!s.inSpan(k)) {
        throw Error("recover_group_key: pairwise key outside the key function "
                    "span (not a group member)");
    }
    return s.evaluate(k);
}

// Drops departed members, draws a fresh group key and rebuilds S with fresh
// decoys. The returned function recovers the new key for every remaining
// member only.
inline KeyFunction rekey(NegotiatorState& negotiator,
                         const std::vector<int>& departedMembers, Rng& rng,
                         const BigInt& keyRange) {
    for (int id : departedMembers) {
        if (negotiator.memberKeys.erase(id) == 0) {
            throw Error("rekey: unknown member id " + std::to_string(id));
        }
    }
    if (negotiator.memberKeys.empty()) {
        throw Error("rekey: no members left in the group");
    }
    negotiator.y = random_below(rng, keyRange);
    std::vector<BigInt> keys;
    keys.reserve(negotiator.memberKeys.size());
    for (const auto& [id, k] : negotiator.memberKeys) keys.push_back(k);
    return build_key_function(keys, negotiator.y, rng, keyRange);
}

// {"knots":[decimal strings], "coeffs":[[a0,a1,a2,a3] rational strings]},
// coefficients being the interval cubic in t = x - knot_i.
inline std::string key_function_to_json(const KeyFunction& s) {
    nlohmann::json doc;
    auto& knots = doc["knots"] = nlohmann::json::array();
    for (const BigInt& x : s.knots()) knots.push_back(x.get_str());
    auto& coeffs = doc["coeffs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < s.intervalCount(); ++i) {
        nlohmann::json c = nlohmann::json::array();
        for (int k = 0; k < 4; ++k) c.push_back(s.coefficient(i, k).get_str());
        coeffs.push_back(std::move(c));
    }
    return doc.dump();
}

}  // namespace rbsim
