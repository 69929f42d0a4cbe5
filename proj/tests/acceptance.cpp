// Acceptance suite: each criterion prints one PASS/FAIL line with the
// measured numbers; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "rbsim/harness.hpp"
#include "rbsim/keyexchange.hpp"
#include "rbsim/mcast_tree.hpp"
#include "rbsim/partitioner.hpp"
#include "rbsim/rbs_codec.hpp"
#include "rbsim/savi.hpp"
#include "rbsim/topology.hpp"

using namespace rbsim;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> bfs_oracle(const Topology& topo, NodeId src) {
    std::vector<int> dist(static_cast<size_t>(topo.nodeCount()), -1);
    std::queue<NodeId> queue;
    dist[static_cast<size_t>(src)] = 0;
    queue.push(src);
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop();
        for (const auto& e : topo.incident(v)) {
            if (dist[static_cast<size_t>(e.neighbor)] < 0) {
                dist[static_cast<size_t>(e.neighbor)] = dist[static_cast<size_t>(v)] + 1;
                queue.push(e.neighbor);
            }
        }
    }
    return dist;
}

TopologyConfig small_config(std::uint64_t seed) {
    TopologyConfig config;
    config.numCore = 6;
    config.numCoreEdge = 10;
    config.numSecondaryEdge = 4;
    config.numUserAccess = 12;
    config.numUserDevice = 30;
    config.seed = seed;
    return config;
}

struct Outcome {
    bool pass;
    std::string detail;
};

// 1. mean reduction in j (dynamic vs fixed) on the desk-scale network,
//    budget 256, densities 0.1..0.5, course-sampled member counts,
//    30 trials per cell: within [5%, 40%] for >= 3 of 5 cells, >= 0%
//    everywhere, in under 5 minutes.
Outcome criterion1() {
    const auto start = Clock::now();
    ExperimentConfig config;  // topology defaults to 60/128/12/128/512
    config.densityLevels = {0.1, 0.2, 0.3, 0.4, 0.5};
    config.budgets = {256};
    config.courseSampling = true;
    config.trials = 30;
    config.seed = 20250808;
    const auto rows = run_experiment(config);
    const auto cells = aggregate_cells(rows);

    int inBand = 0;
    bool allNonNegative = true;
    std::string detail;
    for (const auto& [key, stats] : cells) {
        const double r = stats.reductionPercent();
        if (r >= 5.0 && r <= 40.0) ++inBand;
        if (r < 0.0) allNonNegative = false;
        detail += key.first + ":" + std::to_string(r).substr(0, 5) + "% ";
    }
    const double elapsed = seconds_since(start);
    detail += "("; detail += std::to_string(elapsed).substr(0, 5) + "s)";
    return {inBand >= 3 && allNonNegative && elapsed < 300.0,
            "reduction per density cell: " + detail};
}

// 2. density 1.0, budget 1024, group = one full access region per trial:
//    mean |j_dynamic - j_fixed| / j_fixed <= 0.10 over 30 trials.
Outcome criterion2() {
    double ratioSum = 0.0;
    const int trials = 30;
    for (int trial = 0; trial < trials; ++trial) {
        const std::uint64_t seed = 500 + static_cast<std::uint64_t>(trial);
        TopologyConfig tc;
        tc.seed = seed;
        const Topology topo = generate_topology(tc);
        const DistanceMatrix dist = all_pairs_hops(topo);

        Rng rng(derive_seed(seed, 9));
        const auto devices = topo.nodesWithRole(NodeRole::UserDevice);
        const NodeId source = devices[rng.below(devices.size())];

        std::map<NodeId, std::vector<NodeId>> regions;
        for (NodeId d : devices) {
            if (d == source) continue;
            regions[region_of_member(topo, d, FixedRegionKey::SecondaryEdge)]
                .push_back(d);
        }
        std::vector<NodeId> order;
        for (const auto& [r, devs] : regions) order.push_back(r);
        rng.shuffle(order);
        const std::vector<NodeId>& members = regions.at(order.front());

        const MulticastTree tree = build_multicast_tree(topo, dist, source, members);
        const PartitionConfig pc{1024, kDefaultHeaderBits};
        const int jd = dynamic_partition(tree, dist, pc).j;
        const int jf = fixed_partition(tree, pc).j;
        ratioSum += std::abs(jd - jf) / static_cast<double>(jf);
    }
    const double mean = ratioSum / trials;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean |j_dyn - j_fix| / j_fix = %.4f", mean);
    return {mean <= 0.10, buf};
}

// 3. dynamic vs brute-force optimum on 200 instances with <= 8 members and
//    budgets giving optimal j in [2,4]: equal >= 80%, within +1 >= 95%,
//    never below; under 2 minutes.
Outcome criterion3() {
    const auto start = Clock::now();
    int instances = 0, equal = 0, withinOne = 0, below = 0;
    std::uint64_t seed = 0;
    while (instances < 200) {
        ++seed;
        const TopologyConfig tc = small_config(seed);
        const Topology topo = generate_topology(tc);
        const DistanceMatrix dist = all_pairs_hops(topo);
        Rng rng(derive_seed(seed, 3));
        std::vector<NodeId> devices = topo.nodesWithRole(NodeRole::UserDevice);
        rng.shuffle(devices);
        const NodeId source = devices.back();
        devices.pop_back();
        devices.resize(5 + rng.below(4));  // 5..8 members
        const MulticastTree tree = build_multicast_tree(topo, dist, source, devices);

        const PortMap ports(topo);
        const std::size_t full = rbs_length(
            extract_subtree(tree, tree.members()), ports, kDefaultHeaderBits);
        for (const double f : {0.35, 0.45, 0.55, 0.65, 0.75}) {
            const PartitionConfig pc{static_cast<std::size_t>(full * f),
                                     kDefaultHeaderBits};
            const BruteForceResult opt = brute_force_partition(tree, pc);
            if (opt.j < 2 || opt.j > 4) continue;
            const int jd = dynamic_partition(tree, dist, pc).j;
            ++instances;
            if (jd == opt.j) ++equal;
            if (jd <= opt.j + 1) ++withinOne;
            if (jd < opt.j) ++below;
            break;
        }
    }
    const double elapsed = seconds_since(start);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "equal %d/200, within+1 %d/200, below %d (%.1fs)", equal,
                  withinOne, below, elapsed);
    return {equal >= 160 && withinOne >= 190 && below == 0 && elapsed < 120.0,
            buf};
}

// 4. forwarding round trip over every domain of 200 random partitions:
//    exact delivery, zero duplicates (duplicates throw inside the decoder).
Outcome criterion4() {
    int domainsChecked = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Topology topo = generate_topology(small_config(seed + 40));
        const DistanceMatrix dist = all_pairs_hops(topo);
        const PortMap ports(topo);
        Rng rng(derive_seed(seed, 4));
        std::vector<NodeId> devices = topo.nodesWithRole(NodeRole::UserDevice);
        rng.shuffle(devices);
        const NodeId source = devices.back();
        devices.pop_back();
        devices.resize(4 + rng.below(12));
        const MulticastTree tree = build_multicast_tree(topo, dist, source, devices);

        const PartitionConfig pc{128 + rng.below(512), kDefaultHeaderBits};
        const PartitionResult result = (seed % 2 == 0)
                                           ? dynamic_partition(tree, dist, pc)
                                           : fixed_partition(tree, pc);
        for (const VirtualDomain& d : result.domains) {
            const RbsEncoding enc =
                rbs_encode(d.subtree, ports, kDefaultHeaderBits);
            const auto delivered =
                simulate_forwarding(ports, d.subtree.domainRoot, enc);
            if (delivered != d.members) {
                return {false, "delivery mismatch at seed " + std::to_string(seed)};
            }
            ++domainsChecked;
        }
    }
    return {true, std::to_string(domainsChecked) + " domains delivered exactly"};
}

// 5. Floyd-Warshall equals per-node BFS on 50 topologies; the 840-node
//    matrix completes in under 10 seconds.
Outcome criterion5() {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Topology topo = generate_topology(small_config(seed + 600));
        const DistanceMatrix d = all_pairs_hops(topo);
        for (NodeId src = 0; src < topo.nodeCount(); ++src) {
            const auto oracle = bfs_oracle(topo, src);
            for (NodeId v = 0; v < topo.nodeCount(); ++v) {
                if (d.at(src, v) != oracle[static_cast<size_t>(v)]) {
                    return {false, "mismatch vs BFS at seed " + std::to_string(seed)};
                }
            }
        }
    }
    TopologyConfig tc;
    tc.seed = 1;
    const Topology big = generate_topology(tc);
    const auto start = Clock::now();
    const DistanceMatrix d = all_pairs_hops(big);
    const double elapsed = seconds_since(start);
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "50 topologies match BFS; 840-node matrix in %.2fs", elapsed);
    return {elapsed < 10.0 && d.at(0, big.nodeCount() - 1) >= 1, buf};
}

// 6. log-normal sampler: over 1e5 draws, mean(ln X) = 2.0 +- 0.05 and
//    std(ln X) = 1.5 +- 0.05.
Outcome criterion6() {
    Rng rng(60);
    const int n = 100000;
    double sum = 0.0, sumSq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ln = std::log(sample_lognormal(2.0, 1.5, rng));
        sum += ln;
        sumSq += ln * ln;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sumSq / n - mean * mean);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean(ln)=%.4f std(ln)=%.4f", mean, stddev);
    return {std::abs(mean - 2.0) < 0.05 && std::abs(stddev - 1.5) < 0.05, buf};
}

// 7. key exchange: 64 members over the 256-bit prime recover y exactly;
//    DH consistency on 100 draws; 1e6 random non-knot abscissae never map to
//    y; departed members never recover the fresh key after rekey
//    (1000 rekey trials plus one full-scale rekey).
Outcome criterion7() {
    const BigInt p = demo_prime_256();
    Rng rng(70);

    NegotiatorState negotiator = dh_setup(p, kDemoGenerator, rng);
    std::vector<MemberState> members;
    for (int i = 0; i < 64; ++i) {
        members.push_back(member_keygen(p, kDemoGenerator, negotiator.A, rng));
        if (register_member(negotiator, i, members.back().B) != members.back().K) {
            return {false, "pairwise keys disagree"};
        }
    }
    for (int i = 0; i < 100; ++i) {  // DH consistency draws
        const MemberState m = member_keygen(p, kDemoGenerator, negotiator.A, rng);
        if (derive_pairwise(negotiator, m.B) != m.K) {
            return {false, "DH consistency failed"};
        }
    }

    BigInt range = 1;
    range <<= 256;
    negotiator.y = random_below(rng, range);
    std::vector<BigInt> keys;
    for (const auto& [id, k] : negotiator.memberKeys) keys.push_back(k);
    const KeyFunction s = build_key_function(keys, negotiator.y, rng, range);
    for (const auto& m : members) {
        if (recover_group_key(s, m.K) != BigRational(negotiator.y)) {
            return {false, "member failed to recover y exactly"};
        }
    }

    const BigInt lo = s.knots().front();
    const BigInt span = s.knots().back() - lo + 1;
    const std::set<BigInt> knotSet(s.knots().begin(), s.knots().end());
    long long hits = 0;
    for (long long i = 0; i < 1000000; ++i) {
        const BigInt x = lo + random_below(rng, span);
        if (knotSet.count(x)) continue;
        if (s.valueEquals(x, negotiator.y)) ++hits;
    }
    if (hits != 0) {
        return {false, std::to_string(hits) + " non-knot abscissae mapped to y"};
    }

    // full-scale rekey over the 64-member group
    {
        NegotiatorState big = negotiator;
        const BigInt departedKey = big.memberKeys.at(7);
        const KeyFunction next = rekey(big, {7}, rng, range);
        if (next.inSpan(departedKey) && next.valueEquals(departedKey, big.y)) {
            return {false, "departed member recovered the fresh key"};
        }
        for (const auto& [id, k] : big.memberKeys) {
            if (recover_group_key(next, k) != BigRational(big.y)) {
                return {false, "remaining member lost the fresh key"};
            }
        }
    }

    // 1000 independent rekey trials on desk-size groups
    BigInt smallP;
    mpz_nextprime(smallP.get_mpz_t(), BigInt((BigInt(1) << 62) + 1).get_mpz_t());
    const BigInt smallRange = BigInt(1) << 62;
    for (int trial = 0; trial < 1000; ++trial) {
        Rng trialRng(derive_seed(9000, static_cast<std::uint64_t>(trial)));
        NegotiatorState neg = dh_setup(smallP, 2, trialRng);
        std::vector<BigInt> trialKeys;
        for (int i = 0; i < 6; ++i) {
            const MemberState m = member_keygen(smallP, 2, neg.A, trialRng);
            register_member(neg, i, m.B);
        }
        neg.y = random_below(trialRng, smallRange);
        const int departed = static_cast<int>(trialRng.below(6));
        const BigInt departedKey = neg.memberKeys.at(departed);
        const KeyFunction next = rekey(neg, {departed}, trialRng, smallRange);
        if (next.inSpan(departedKey) && next.valueEquals(departedKey, neg.y)) {
            return {false, "departed member recovered the fresh key in trial " +
                               std::to_string(trial)};
        }
        for (const auto& [id, k] : neg.memberKeys) {
            if (recover_group_key(next, k) != BigRational(neg.y)) {
                return {false, "remaining member lost the fresh key in trial " +
                                   std::to_string(trial)};
            }
        }
    }
    return {true,
            "64/64 exact recoveries, 100 DH draws, 1e6 exclusion draws, "
            "1000+1 rekey trials"};
}

// 8. identical seeds reproduce byte-identical topology JSON and results CSV.
Outcome criterion8() {
    TopologyConfig tc;
    tc.seed = 8080;
    const std::string topoA = topology_to_json(generate_topology(tc));
    const std::string topoB = topology_to_json(generate_topology(tc));

    ExperimentConfig config;
    config.topology = small_config(0);
    config.trials = 3;
    config.densityLevels = {0.2, 0.6, 1.0};
    config.budgets = {256, 1024};
    config.courseSampling = true;
    config.seed = 8080;
    const std::string csvA = emit_csv(run_experiment(config));
    const std::string csvB = emit_csv(run_experiment(config));

    const bool pass = topoA == topoB && csvA == csvB;
    return {pass, pass ? "topology JSON and results CSV byte-identical"
                       : "reruns diverged"};
}

// 9. SAVI: default deny, exact-match allow, idempotent install; exhaustive
//    over a 4-rule fixture plus 100 random non-matching quadruples.
Outcome criterion9() {
    SaviTable table;
    std::vector<SaviRule> rules;
    for (int i = 0; i < 4; ++i) {
        rules.push_back({"2001:db8:0:1::" + std::to_string(i + 1),
                         "ff3e::100:" + std::to_string(i + 1), 4000 + i,
                         5000 + i});
    }
    for (const auto& r : rules) {
        if (table.validate(r)) return {false, "allowed before install"};
    }
    for (const auto& r : rules) {
        table.install(r);
        table.install(r);  // idempotent
    }
    if (table.size() != 4) return {false, "duplicate install grew the table"};
    for (const auto& r : rules) {
        if (!table.validate(r)) return {false, "installed rule denied"};
    }

    Rng rng(90);
    int checked = 0;
    while (checked < 100) {
        SaviRule probe{"2001:db8:0:1::" + std::to_string(rng.below(6) + 1),
                       "ff3e::100:" + std::to_string(rng.below(6) + 1),
                       static_cast<int>(4000 + rng.below(8)),
                       static_cast<int>(5000 + rng.below(8))};
        bool installed = false;
        for (const auto& r : rules) {
            installed |= r.srcAddr == probe.srcAddr &&
                         r.dstMcastAddr == probe.dstMcastAddr &&
                         r.srcPort == probe.srcPort && r.dstPort == probe.dstPort;
        }
        if (installed) continue;
        if (table.validate(probe)) return {false, "non-matching quadruple allowed"};
        ++checked;
    }
    return {true, "4-rule fixture exhaustive + 100 random denials"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"redundancy-reduction band (budget 256, densities 0.1-0.5)", criterion1},
        {"dense convergence (density 1.0, budget 1024)", criterion2},
        {"oracle gap on small instances", criterion3},
        {"forwarding exactness", criterion4},
        {"distance oracle and 840-node runtime", criterion5},
        {"log-normal fidelity", criterion6},
        {"key exchange correctness", criterion7},
        {"seeded determinism", criterion8},
        {"SAVI quadruple filter", criterion9},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome{false, ""};
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s criterion %zu: %s — %s\n",
                    outcome.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
