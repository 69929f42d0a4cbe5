#include <doctest.h>

#include <set>

#include "rbsim/keyexchange.hpp"

using namespace rbsim;

TEST_SUITE("keyexchange") {

TEST_CASE("modular exponentiation fixtures") {
    CHECK(mod_pow(5, 6, 23) == 8);    // A = g^a
    CHECK(mod_pow(5, 15, 23) == 19);  // B = g^x
    CHECK(mod_pow(8, 15, 23) == 2);   // K from the member side
    CHECK(mod_pow(19, 6, 23) == 2);   // K from the negotiator side
    CHECK(mod_pow(5, 1, 23) == 5);    // identity exponent: A = g
    CHECK(mod_pow(7, 0, 23) == 1);
}

TEST_CASE("toy protocol run over p=23") {
    Rng rng(4);
    NegotiatorState negotiator = dh_setup(23, 5, rng);
    CHECK(negotiator.A == mod_pow(5, negotiator.a, 23));
    for (int i = 0; i < 3; ++i) {
        const MemberState member = member_keygen(23, 5, negotiator.A, rng);
        CHECK(register_member(negotiator, i, member.B) == member.K);
    }
    CHECK(negotiator.memberKeys.size() == 3);
    CHECK_THROWS_AS(register_member(negotiator, 0, 9), Error);  // duplicate id
}

TEST_CASE("DH consistency over the 256-bit demo prime, 100 draws") {
    const BigInt p = demo_prime_256();
    CHECK(mpz_sizeinbase(p.get_mpz_t(), 2) == 256);
    CHECK(is_probable_prime(p));
    CHECK(is_probable_prime((p - 1) / 2));  // safe prime
    Rng rng(11);
    const NegotiatorState negotiator = dh_setup(p, kDemoGenerator, rng);
    for (int i = 0; i < 100; ++i) {
        const MemberState member = member_keygen(p, negotiator.g, negotiator.A, rng);
        REQUIRE(derive_pairwise(negotiator, member.B) == member.K);
    }
}

TEST_CASE("degenerate and invalid parameters are rejected") {
    Rng rng(1);
    const NegotiatorState negotiator = dh_setup(23, 5, rng);
    CHECK_THROWS_AS(derive_pairwise(negotiator, 0), Error);
    CHECK_THROWS_AS(derive_pairwise(negotiator, 1), Error);
    CHECK_THROWS_AS(derive_pairwise(negotiator, 22), Error);  // p-1
    CHECK_THROWS_AS(dh_setup(21, 5, rng), Error);             // composite
    CHECK_THROWS_AS(dh_setup(23, 1, rng), Error);
    CHECK_THROWS_AS(dh_setup(23, 22, rng), Error);
    CHECK_THROWS_AS(member_keygen(23, 5, 1, rng), Error);
}

TEST_CASE("key function: two members with the forced decoy slot") {
    Rng rng(3);
    const KeyFunction s = build_key_function({1, 3}, 5, rng, 1000);
    // the only abscissa strictly between 1 and 3 is 2
    CHECK(s.knots().size() == 5);  // 2 members + gap decoy + 2 flanks
    CHECK(s.evaluate(1) == BigRational(5));
    CHECK(s.evaluate(3) == BigRational(5));
    CHECK(s.evaluate(2) != BigRational(5));
}

TEST_CASE("key function interpolates a fixed decoy layout exactly") {
    // independently computed: spline through (-1,20) (1,5) (2,9) (3,5) (5,30)
    const RationalSpline s({-1, 1, 2, 3, 5}, {20, 5, 9, 5, 30});
    CHECK(s.evaluate(1) == BigRational(5));
    CHECK(s.evaluate(2) == BigRational(9));
    CHECK(s.evaluate(3) == BigRational(5));
}

TEST_CASE("single member gets flanking decoys and a non-constant function") {
    Rng rng(8);
    const BigInt y = 7;
    const KeyFunction s = build_key_function({BigInt(1000)}, y, rng, 1 << 20);
    CHECK(s.knots().size() == 3);
    CHECK(s.evaluate(1000) == BigRational(y));
    bool nonConstant = false;
    for (const BigInt& ord : s.ordinates()) nonConstant |= (ord != y);
    CHECK(nonConstant);
}

TEST_CASE("64 members recover the group key exactly") {
    Rng rng(21);
    const BigInt range = BigInt(1) << 64;
    const BigInt y = random_below(rng, range);
    std::set<BigInt> keySet;
    while (keySet.size() < 64) keySet.insert(random_below(rng, range));
    const std::vector<BigInt> keys(keySet.begin(), keySet.end());
    const KeyFunction s = build_key_function(keys, y, rng, range);
    CHECK(s.knots().size() == 64 + 63 + 2);
    for (const BigInt& k : keys) {
        REQUIRE(recover_group_key(s, k) == BigRational(y));
        REQUIRE(s.valueEquals(k, y));
    }
    // decoy ordinates never equal y
    std::size_t memberKnots = 0;
    for (std::size_t i = 0; i < s.knots().size(); ++i) {
        if (s.ordinates()[i] == y) {
            ++memberKnots;
            REQUIRE(keySet.count(s.knots()[i]) == 1);
        }
    }
    CHECK(memberKnots == 64);
}

TEST_CASE("key function construction errors") {
    Rng rng(2);
    CHECK_THROWS_AS(build_key_function({}, 1, rng, 100), Error);
    CHECK_THROWS_AS(build_key_function({5, 5}, 1, rng, 100), Error);
    CHECK_THROWS_AS(build_key_function({5, 6}, 1, rng, 100), Error);  // no gap
    CHECK_THROWS_AS(build_key_function({5}, 1, rng, 1), Error);  // range too small

    const KeyFunction s = build_key_function({10, 20}, 3, rng, 100);
    CHECK_THROWS_AS(recover_group_key(s, s.knots().front() - 1), Error);
    CHECK_THROWS_AS(recover_group_key(s, s.knots().back() + 1), Error);
}

TEST_CASE("rekey excludes departed members, 20 small trials") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Rng rng(1000 + trial);
        const BigInt p = demo_prime_256();
        NegotiatorState negotiator = dh_setup(p, kDemoGenerator, rng);
        std::vector<MemberState> members;
        for (int i = 0; i < 6; ++i) {
            members.push_back(member_keygen(p, negotiator.g, negotiator.A, rng));
            register_member(negotiator, i, members.back().B);
        }
        const BigInt range = BigInt(1) << 128;
        negotiator.y = random_below(rng, range);

        const int departedId = static_cast<int>(rng.below(6));
        const KeyFunction next = rekey(negotiator, {departedId}, rng, range);
        const BigRational newKey(negotiator.y);
        for (int i = 0; i < 6; ++i) {
            const BigInt& k = members[static_cast<size_t>(i)].K;
            if (i == departedId) {
                const bool recovers =
                    next.inSpan(k) && next.valueEquals(k, negotiator.y);
                REQUIRE_FALSE(recovers);
            } else {
                REQUIRE(recover_group_key(next, k) == newKey);
            }
        }
        CHECK_THROWS_AS(rekey(negotiator, {departedId}, rng, range), Error);
    }
}

TEST_CASE("rekey on an emptied group fails") {
    Rng rng(5);
    NegotiatorState negotiator = dh_setup(23, 5, rng);
    register_member(negotiator, 0, member_keygen(23, 5, negotiator.A, rng).B);
    CHECK_THROWS_AS(rekey(negotiator, {0}, rng, BigInt(100)), Error);
}

TEST_CASE("deterministic construction and JSON export") {
    Rng a(6), b(6);
    const KeyFunction s1 = build_key_function({100, 300, 700}, 42, a, 1 << 16);
    const KeyFunction s2 = build_key_function({100, 300, 700}, 42, b, 1 << 16);
    CHECK(s1.knots() == s2.knots());
    CHECK(s1.ordinates() == s2.ordinates());

    const auto doc = nlohmann::json::parse(key_function_to_json(s1));
    CHECK(doc["knots"].size() == s1.knots().size());
    CHECK(doc["coeffs"].size() == s1.knots().size() - 1);
    CHECK(doc["coeffs"][0].size() == 4);
    CHECK(doc["knots"][0].is_string());
}

}  // TEST_SUITE
