#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rbsim/error.hpp"
#include "rbsim/mcast_tree.hpp"
#include "rbsim/rbs_codec.hpp"
#include "rbsim/topology.hpp"

namespace rbsim {

struct PartitionConfig {
    std::size_t maxRBSLength = 256;  // bits; 256/512/1024 are the usual budgets
    int headerBitsPerNode = kDefaultHeaderBits;
};

// One virtual domain: a member group whose induced subtree encoding fits the
// bit budget.
struct VirtualDomain {
    std::vector<NodeId> members;  // groupEdgeTV_i, sorted
    DomainSubtree subtree;
    std::size_t encodedLength = 0;  // RL_i
};

struct PartitionResult {
    std::string algorithm;
    std::vector<VirtualDomain> domains;
    int j = 0;  // domain count = packets the source emits
    std::size_t totalEncodedBits = 0;
    int flowEntryCount = 0;
};

namespace detail {

// Incrementally tracks the encoded length of the subtree induced by a growing
// member set. Equivalent to rbs_length(extract_subtree(...)) at every step:
// the length is the weight sum of all union nodes below the current LCA, plus
// one extra bit for the LCA block (its arrival port is not excluded). Keeps
// candidate growth O(path length) per added member instead of re-extracting
// the subtree.
class SubtreeGrowth {
  public:
    SubtreeGrowth(const MulticastTree& tree, const PortMap& portMap,
                  int headerBits)
        : tree_(&tree) {
        const int m = tree.topology().nodeCount();
        weight_.assign(static_cast<size_t>(m), 0);
        prefixWeight_.assign(static_cast<size_t>(m), 0);
        inUnion_.assign(static_cast<size_t>(m), 0);
        std::vector<NodeId> byDepth(tree.nodes());
        std::sort(byDepth.begin(), byDepth.end(), [&](NodeId a, NodeId b) {
            return tree.depth(a) < tree.depth(b);
        });
        for (NodeId v : byDepth) {
            weight_[static_cast<size_t>(v)] =
                headerBits + portMap.portCount(v) - 1;
            if (v != tree.root()) {
                const NodeId p = tree.parentOf(v);
                prefixWeight_[static_cast<size_t>(v)] =
                    prefixWeight_[static_cast<size_t>(p)] +
                    weight_[static_cast<size_t>(p)];
            }
        }
    }

    struct Probe {
        std::size_t length = 0;
        NodeId newLca = -1;
        long long newSum = 0;
        std::vector<NodeId> newNodes;
    };

    void reset() {
        for (NodeId v : touched_) inUnion_[static_cast<size_t>(v)] = 0;
        touched_.clear();
        sum_ = 0;
        lca_ = -1;
        count_ = 0;
    }

    // Length the subtree would have after adding member m; no mutation.
    Probe probe(NodeId m) const {
        Probe p;
        p.newSum = sum_;
        NodeId v = m;
        while (v >= 0 && !inUnion_[static_cast<size_t>(v)]) {
            p.newNodes.push_back(v);
            if (v != m) p.newSum += weight_[static_cast<size_t>(v)];
            v = (v == tree_->root()) ? -1 : tree_->parentOf(v);
        }
        p.newLca = (count_ == 0) ? m : tree_->lowestCommonAncestor(lca_, m);
        p.length = static_cast<std::size_t>(
            p.newSum - prefixWeight_[static_cast<size_t>(p.newLca)] +
            (count_ + 1 >= 2 ? 1 : 0));
        return p;
    }

    void commit(const Probe& p) {
        for (NodeId v : p.newNodes) {
            inUnion_[static_cast<size_t>(v)] = 1;
            touched_.push_back(v);
        }
        sum_ = p.newSum;
        lca_ = p.newLca;
        ++count_;
    }

    bool tryAdd(NodeId m, std::size_t budget) {
        const Probe p = probe(m);
        if (p.length > budget) return false;
        commit(p);
        return true;
    }

    std::size_t currentLength() const {
        if (count_ == 0) return 0;
        return static_cast<std::size_t>(
            sum_ - prefixWeight_[static_cast<size_t>(lca_)] + (count_ >= 2 ? 1 : 0));
    }

  private:
    const MulticastTree* tree_;
    std::vector<long long> weight_;        // header + degree - 1
    std::vector<long long> prefixWeight_;  // weight sum over strict ancestors
    std::vector<char> inUnion_;
    std::vector<NodeId> touched_;
    long long sum_ = 0;  // weight sum over non-member union nodes
    NodeId lca_ = -1;
    int count_ = 0;
};

inline VirtualDomain make_domain(const MulticastTree& tree, const PortMap& portMap,
                                 const PartitionConfig& config,
                                 std::vector<NodeId> members) {
    VirtualDomain d;
    std::sort(members.begin(), members.end());
    d.subtree = extract_subtree(tree, members);
    d.encodedLength = rbs_length(d.subtree, portMap, config.headerBitsPerNode);
    d.members = std::move(members);
    if (d.encodedLength > config.maxRBSLength) {
        throw Error("partition: domain exceeds maxRBSLength (" +
                    std::to_string(d.encodedLength) + " > " +
                    std::to_string(config.maxRBSLength) + " bits)");
    }
    return d;
}

}  // namespace detail

// Routers that need inter-domain flow rules: every non-device node on some
// root-to-domain-root path, plus the domain roots themselves.
inline int flow_entries(const PartitionResult& result, const MulticastTree& tree) {
    std::unordered_set<NodeId> managed;
    for (const VirtualDomain& d : result.domains) {
        for (NodeId v : tree.pathToRoot(d.subtree.domainRoot)) {
            if (!tree.topology().isDevice(v)) managed.insert(v);
        }
        managed.insert(d.subtree.domainRoot);
    }
    return static_cast<int>(managed.size());
}

// Redundancy metric: total link traversals over all domain packets (delivery
// subtree plus the root-to-domain-root feed path) minus distinct links used.
inline long long duplicate_link_traversals(const PartitionResult& result,
                                           const MulticastTree& tree) {
    std::unordered_map<LinkId, int> uses;
    for (const VirtualDomain& d : result.domains) {
        std::unordered_set<LinkId> packetLinks(d.subtree.links.begin(),
                                               d.subtree.links.end());
        for (NodeId v = d.subtree.domainRoot; v != tree.root();
             v = tree.parentOf(v)) {
            packetLinks.insert(tree.parentLinkOf(v));
        }
        for (LinkId l : packetLinks) ++uses[l];
    }
    long long duplicates = 0;
    for (const auto& [link, n] : uses) duplicates += n - 1;
    return duplicates;
}

namespace detail {

inline void finalize(PartitionResult& result, const MulticastTree& tree) {
    result.j = static_cast<int>(result.domains.size());
    result.totalEncodedBits = 0;
    for (const VirtualDomain& d : result.domains) {
        result.totalEncodedBits += d.encodedLength;
    }
    result.flowEntryCount = flow_entries(result, tree);
}

}  // namespace detail

// Dynamic partitioning of the member set into virtual domains.
//
// Round structure: every still-unassigned member seeds a candidate domain that
// grows by repeatedly taking the nearest unassigned member (hop distance to
// the seed, ties by node id) while the induced subtree still encodes within
// maxRBSLength; growth stops at the first member that does not fit. The
// candidate with the most members wins the round (ties: smallest seed id) and
// its members leave the pool; rounds repeat until the pool is empty.
inline PartitionResult dynamic_partition(const MulticastTree& tree,
                                         const DistanceMatrix& distances,
                                         const PartitionConfig& config) {
    const PortMap portMap(tree.topology());
    detail::SubtreeGrowth growth(tree, portMap, config.headerBitsPerNode);

    PartitionResult result;
    result.algorithm = "dynamic";

    std::vector<NodeId> unassigned(tree.members());
    std::vector<NodeId> order;
    while (!unassigned.empty()) {
        std::vector<NodeId> best;
        for (NodeId seed : unassigned) {
            growth.reset();
            growth.commit(growth.probe(seed));  // a singleton encodes to 0 bits

            order.clear();
            for (NodeId m : unassigned) {
                if (m != seed) order.push_back(m);
            }
            std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
                const auto da = distances.at(seed, a);
                const auto db = distances.at(seed, b);
                return da != db ? da < db : a < b;
            });

            std::vector<NodeId> candidate{seed};
            for (NodeId m : order) {
                if (!growth.tryAdd(m, config.maxRBSLength)) break;
                candidate.push_back(m);
            }
            if (candidate.size() > best.size()) best = std::move(candidate);
        }

        result.domains.push_back(
            detail::make_domain(tree, portMap, config, best));
        std::vector<NodeId> rest;
        for (NodeId m : unassigned) {
            if (!std::binary_search(result.domains.back().members.begin(),
                                    result.domains.back().members.end(), m)) {
                rest.push_back(m);
            }
        }
        unassigned = std::move(rest);
    }

    detail::finalize(result, tree);
    return result;
}

enum class FixedRegionKey { SecondaryEdge, CoreEdgeUplink };

// Access region of a member device: the secondary-edge router behind its
// access router (or, under CoreEdgeUplink, that router's core-edge uplink).
inline NodeId region_of_member(const Topology& topo, NodeId device,
                               FixedRegionKey key) {
    if (topo.degree(device) != 1) {
        throw Error("fixed_partition: member device must have degree 1");
    }
    const NodeId access = topo.incident(device)[0].neighbor;
    NodeId secondary = -1;
    for (const auto& e : topo.incident(access)) {
        if (topo.role(e.neighbor) == NodeRole::SecondaryEdge) {
            if (secondary >= 0) {
                throw Error("fixed_partition: access router with two regions");
            }
            secondary = e.neighbor;
        }
    }
    if (secondary < 0) {
        throw Error("fixed_partition: access router without a region");
    }
    if (key == FixedRegionKey::SecondaryEdge) return secondary;
    NodeId coreEdge = -1;
    for (const auto& e : topo.incident(secondary)) {
        if (topo.role(e.neighbor) == NodeRole::CoreEdge) {
            if (coreEdge >= 0) {
                throw Error("fixed_partition: region with two core-edge uplinks");
            }
            coreEdge = e.neighbor;
        }
    }
    if (coreEdge < 0) {
        throw Error("fixed_partition: region without core-edge uplink");
    }
    return coreEdge;
}

// Fixed-partitioning baseline: one domain per access region regardless of how
// the group is distributed. A region whose subtree overflows the budget is
// split greedily in ascending member-id order into minimal consecutive chunks.
inline PartitionResult fixed_partition(
    const MulticastTree& tree, const PartitionConfig& config,
    FixedRegionKey regionKey = FixedRegionKey::SecondaryEdge) {
    const Topology& topo = tree.topology();
    const PortMap portMap(topo);
    detail::SubtreeGrowth growth(tree, portMap, config.headerBitsPerNode);

    std::map<NodeId, std::vector<NodeId>> regions;  // region id -> members
    for (NodeId m : tree.members()) {
        regions[region_of_member(topo, m, regionKey)].push_back(m);
    }

    PartitionResult result;
    result.algorithm = "fixed";
    for (auto& [region, members] : regions) {
        std::sort(members.begin(), members.end());
        growth.reset();
        std::vector<NodeId> chunk;
        for (NodeId m : members) {
            if (!growth.tryAdd(m, config.maxRBSLength)) {
                result.domains.push_back(
                    detail::make_domain(tree, portMap, config, chunk));
                chunk.clear();
                growth.reset();
                if (!growth.tryAdd(m, config.maxRBSLength)) {
                    throw Error("fixed_partition: member does not fit alone");
                }
            }
            chunk.push_back(m);
        }
        result.domains.push_back(
            detail::make_domain(tree, portMap, config, chunk));
    }

    detail::finalize(result, tree);
    return result;
}

struct BruteForceResult {
    int j = 0;
    std::vector<std::vector<NodeId>> partition;
};

// Exhaustive minimum over all set partitions of the member set, feasibility
// being the same length bound. Subset-sum DP over bitmasks; capped at 12
// members.
inline BruteForceResult brute_force_partition(const MulticastTree& tree,
                                              const PartitionConfig& config) {
    const auto& members = tree.members();
    const int n = static_cast<int>(members.size());
    if (n > 12) throw Error("brute_force_partition: more than 12 members");
    const PortMap portMap(tree.topology());

    const unsigned full = (1u << n) - 1u;
    std::vector<char> feasible(full + 1, 0);
    for (unsigned mask = 1; mask <= full; ++mask) {
        std::vector<NodeId> subset;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) subset.push_back(members[static_cast<size_t>(i)]);
        }
        feasible[mask] =
            rbs_length(extract_subtree(tree, subset), portMap,
                       config.headerBitsPerNode) <= config.maxRBSLength;
    }

    constexpr int kInf = 1 << 20;
    std::vector<int> dp(full + 1, kInf);
    std::vector<unsigned> choice(full + 1, 0);
    dp[0] = 0;
    for (unsigned mask = 1; mask <= full; ++mask) {
        const unsigned low = mask & (~mask + 1u);  // isolate lowest member
        for (unsigned sub = mask; sub; sub = (sub - 1) & mask) {
            if (!(sub & low) || !feasible[sub]) continue;
            if (dp[mask ^ sub] + 1 < dp[mask]) {
                dp[mask] = dp[mask ^ sub] + 1;
                choice[mask] = sub;
            }
        }
    }

    BruteForceResult result;
    result.j = dp[full];
    for (unsigned mask = full; mask;) {
        const unsigned sub = choice[mask];
        std::vector<NodeId> block;
        for (int i = 0; i < n; ++i) {
            if (sub & (1u << i)) block.push_back(members[static_cast<size_t>(i)]);
        }
        result.partition.push_back(std::move(block));
        mask ^= sub;
    }
    return result;
}

inline std::string partition_to_json(const PartitionResult& result) {
    nlohmann::json doc;
    doc["algorithm"] = result.algorithm;
    doc["j"] = result.j;
    doc["totalEncodedBits"] = result.totalEncodedBits;
    doc["flowEntries"] = result.flowEntryCount;
    auto& domains = doc["domains"] = nlohmann::json::array();
    for (const VirtualDomain& d : result.domains) {
        domains.push_back({{"root", d.subtree.domainRoot},
                           {"members", d.members},
                           {"bits", d.encodedLength}});
    }
    return doc.dump();
}

}  // namespace rbsim
