#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rbsim/error.hpp"
#include "rbsim/rng.hpp"

namespace rbsim {

using NodeId = int;
using LinkId = int;

enum class NodeRole { Core, CoreEdge, SecondaryEdge, UserAccess, UserDevice };

inline const char* role_name(NodeRole role) {
    switch (role) {
        case NodeRole::Core: return "Core";
        case NodeRole::CoreEdge: return "CoreEdge";
        case NodeRole::SecondaryEdge: return "SecondaryEdge";
        case NodeRole::UserAccess: return "UserAccess";
        case NodeRole::UserDevice: return "UserDevice";
    }
    throw Error("unknown node role");
}

inline NodeRole role_from_name(const std::string& name) {
    if (name == "Core") return NodeRole::Core;
    if (name == "CoreEdge") return NodeRole::CoreEdge;
    if (name == "SecondaryEdge") return NodeRole::SecondaryEdge;
    if (name == "UserAccess") return NodeRole::UserAccess;
    if (name == "UserDevice") return NodeRole::UserDevice;
    throw Error("unknown node role: " + name);
}

struct Link {
    LinkId linkId = 0;
    NodeId srcNode = 0;
    NodeId dstNode = 0;
    int bandWidth = 0;  // Mbps; carried but not consumed by any algorithm
};

struct TopologyConfig {
    int numCore = 60;
    int numCoreEdge = 128;
    int numSecondaryEdge = 12;
    int numUserAccess = 128;
    int numUserDevice = 512;
    double coreLinkProb = 0.10;
    double edgeLinkProb = 0.10;
    double logNormalMu = 2.0;
    double logNormalSigma = 1.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (numCore < 1 || numCoreEdge < 1 || numSecondaryEdge < 1 ||
            numUserAccess < 1 || numUserDevice < 1) {
            throw Error("topology config: all node counts must be >= 1");
        }
        if (coreLinkProb < 0.0 || coreLinkProb > 1.0 || edgeLinkProb < 0.0 ||
            edgeLinkProb > 1.0) {
            throw Error("topology config: link probabilities must be in [0,1]");
        }
        if (logNormalSigma <= 0.0) {
            throw Error("topology config: log-normal sigma must be > 0");
        }
    }
};

// Campus graph: dense node ids 0..m-1 grouped by role layer
// (cores first, then core edges, secondary edges, access routers, devices).
// Immutable once built; adjacency is kept sorted by linkId per node.
class Topology {
  public:
    struct AdjEntry {
        LinkId link;
        NodeId neighbor;
    };

    Topology(std::vector<NodeRole> roles, std::vector<Link> links,
             std::uint64_t seed)
        : roles_(std::move(roles)), links_(std::move(links)), seed_(seed) {
        buildAdjacency();
    }

    int nodeCount() const { return static_cast<int>(roles_.size()); }
    int linkCount() const { return static_cast<int>(links_.size()); }
    NodeRole role(NodeId v) const { return roles_.at(static_cast<size_t>(v)); }
    bool isDevice(NodeId v) const { return role(v) == NodeRole::UserDevice; }
    const std::vector<Link>& links() const { return links_; }
    const Link& link(LinkId id) const { return links_.at(static_cast<size_t>(id)); }
    std::uint64_t seed() const { return seed_; }

    int degree(NodeId v) const {
        return static_cast<int>(adjacency_.at(static_cast<size_t>(v)).size());
    }

    // Incident links of v, ascending linkId.
    const std::vector<AdjEntry>& incident(NodeId v) const {
        return adjacency_.at(static_cast<size_t>(v));
    }

    std::vector<NodeId> nodesWithRole(NodeRole r) const {
        std::vector<NodeId> out;
        for (NodeId v = 0; v < nodeCount(); ++v) {
            if (roles_[static_cast<size_t>(v)] == r) out.push_back(v);
        }
        return out;
    }

    bool isConnected() const {
        if (roles_.empty()) return true;
        std::vector<char> seen(roles_.size(), 0);
        std::vector<NodeId> stack{0};
        seen[0] = 1;
        int reached = 1;
        while (!stack.empty()) {
            const NodeId v = stack.back();
            stack.pop_back();
            for (const auto& e : incident(v)) {
                if (!seen[static_cast<size_t>(e.neighbor)]) {
                    seen[static_cast<size_t>(e.neighbor)] = 1;
                    ++reached;
                    stack.push_back(e.neighbor);
                }
            }
        }
        return reached == nodeCount();
    }

  private:
    void buildAdjacency() {
        adjacency_.assign(roles_.size(), {});
        for (const Link& l : links_) {
            if (l.srcNode == l.dstNode) {
                throw Error("topology: self-loop on node " +
                            std::to_string(l.srcNode));
            }
            if (l.srcNode < 0 || l.dstNode < 0 || l.srcNode >= nodeCount() ||
                l.dstNode >= nodeCount()) {
                throw Error("topology: link endpoint out of range");
            }
            adjacency_[static_cast<size_t>(l.srcNode)].push_back(
                {l.linkId, l.dstNode});
            adjacency_[static_cast<size_t>(l.dstNode)].push_back(
                {l.linkId, l.srcNode});
        }
        for (auto& entries : adjacency_) {
            std::sort(entries.begin(), entries.end(),
                      [](const AdjEntry& a, const AdjEntry& b) {
                          return a.link < b.link;
                      });
        }
        // reject duplicate undirected pairs
        for (NodeId v = 0; v < nodeCount(); ++v) {
            std::vector<NodeId> ns;
            for (const auto& e : incident(v)) ns.push_back(e.neighbor);
            std::sort(ns.begin(), ns.end());
            if (std::adjacent_find(ns.begin(), ns.end()) != ns.end()) {
                throw Error("topology: duplicate link between a node pair");
            }
        }
    }

    std::vector<NodeRole> roles_;
    std::vector<Link> links_;
    std::vector<std::vector<AdjEntry>> adjacency_;
    std::uint64_t seed_;
};

// One draw from the log-normal: exp(N) with N ~ Gaussian(mu, sigma^2).
inline double sample_lognormal(double mu, double sigma, Rng& rng) {
    if (sigma <= 0.0) throw Error("sample_lognormal: sigma must be > 0");
    return std::exp(mu + sigma * rng.normal());
}

namespace detail {

inline std::vector<NodeId> pick_distinct(std::vector<NodeId>& scratch, int count,
                                         Rng& rng) {
    // partial Fisher-Yates over scratch; takes the first `count` slots
    const int n = static_cast<int>(scratch.size());
    for (int t = 0; t < count; ++t) {
        const int j = t + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - t)));
        std::swap(scratch[static_cast<size_t>(t)], scratch[static_cast<size_t>(j)]);
    }
    return {scratch.begin(), scratch.begin() + count};
}

}  // namespace detail

// Seeded random campus topology.
//
// Layers and rules, drawn in a fixed order so a seed pins the graph:
//   - every unordered core pair is linked i.i.d. with coreLinkProb;
//   - each core-edge router draws its core-uplink count from the log-normal
//     (rounded half-up, clamped to [1, numCore]) and picks that many distinct
//     cores;
//   - every unordered secondary-edge pair is linked i.i.d. with edgeLinkProb;
//   - each secondary-edge router takes one uniform core-edge uplink;
//   - each access router attaches to one uniform secondary-edge router;
//   - each user device attaches to one uniform access router.
//
// Regenerates with derived sub-seeds until the graph is connected (cap 100).
inline Topology generate_topology(const TopologyConfig& config) {
    config.validate();
    constexpr int kMaxAttempts = 100;

    const NodeId coreBase = 0;
    const NodeId coreEdgeBase = coreBase + config.numCore;
    const NodeId secondaryBase = coreEdgeBase + config.numCoreEdge;
    const NodeId accessBase = secondaryBase + config.numSecondaryEdge;
    const NodeId deviceBase = accessBase + config.numUserAccess;
    const int m = deviceBase + config.numUserDevice;

    std::vector<NodeRole> roles(static_cast<size_t>(m));
    for (int i = 0; i < config.numCore; ++i) roles[static_cast<size_t>(coreBase + i)] = NodeRole::Core;
    for (int i = 0; i < config.numCoreEdge; ++i) roles[static_cast<size_t>(coreEdgeBase + i)] = NodeRole::CoreEdge;
    for (int i = 0; i < config.numSecondaryEdge; ++i) roles[static_cast<size_t>(secondaryBase + i)] = NodeRole::SecondaryEdge;
    for (int i = 0; i < config.numUserAccess; ++i) roles[static_cast<size_t>(accessBase + i)] = NodeRole::UserAccess;
    for (int i = 0; i < config.numUserDevice; ++i) roles[static_cast<size_t>(deviceBase + i)] = NodeRole::UserDevice;

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(attempt)));
        std::vector<Link> links;
        auto addLink = [&](NodeId a, NodeId b) {
            const bool coreLink = roles[static_cast<size_t>(a)] == NodeRole::Core &&
                                  roles[static_cast<size_t>(b)] == NodeRole::Core;
            links.push_back({static_cast<LinkId>(links.size()), a, b,
                             coreLink ? 10000 : 1000});
        };

        for (int i = 0; i < config.numCore; ++i) {
            for (int j = i + 1; j < config.numCore; ++j) {
                if (rng.bernoulli(config.coreLinkProb)) {
                    addLink(coreBase + i, coreBase + j);
                }
            }
        }

        std::vector<NodeId> coreIds(static_cast<size_t>(config.numCore));
        for (int i = 0; i < config.numCore; ++i) coreIds[static_cast<size_t>(i)] = coreBase + i;
        for (int i = 0; i < config.numCoreEdge; ++i) {
            const double draw =
                sample_lognormal(config.logNormalMu, config.logNormalSigma, rng);
            const int c = std::clamp(static_cast<int>(std::floor(draw + 0.5)), 1,
                                     config.numCore);
            for (NodeId core : detail::pick_distinct(coreIds, c, rng)) {
                addLink(coreEdgeBase + i, core);
            }
        }

        for (int i = 0; i < config.numSecondaryEdge; ++i) {
            for (int j = i + 1; j < config.numSecondaryEdge; ++j) {
                if (rng.bernoulli(config.edgeLinkProb)) {
                    addLink(secondaryBase + i, secondaryBase + j);
                }
            }
        }
        for (int i = 0; i < config.numSecondaryEdge; ++i) {
            const NodeId up = coreEdgeBase + static_cast<NodeId>(rng.below(
                                  static_cast<std::uint64_t>(config.numCoreEdge)));
            addLink(secondaryBase + i, up);
        }
        for (int i = 0; i < config.numUserAccess; ++i) {
            const NodeId sec = secondaryBase + static_cast<NodeId>(rng.below(
                                   static_cast<std::uint64_t>(config.numSecondaryEdge)));
            addLink(accessBase + i, sec);
        }
        for (int i = 0; i < config.numUserDevice; ++i) {
            const NodeId acc = accessBase + static_cast<NodeId>(rng.below(
                                   static_cast<std::uint64_t>(config.numUserAccess)));
            addLink(deviceBase + i, acc);
        }

        Topology topo(roles, std::move(links), config.seed);
        if (topo.isConnected()) return topo;
    }
    throw Error("generate_topology: no connected graph within retry cap");
}

// Dense all-pairs hop counts.
class DistanceMatrix {
  public:
    static constexpr std::int32_t kUnreachable = 1 << 29;

    explicit DistanceMatrix(int m)
        : m_(m), data_(static_cast<size_t>(m) * static_cast<size_t>(m),
                       kUnreachable) {}

    std::int32_t at(NodeId u, NodeId v) const {
        return data_[static_cast<size_t>(u) * static_cast<size_t>(m_) +
                     static_cast<size_t>(v)];
    }
    std::int32_t& at(NodeId u, NodeId v) {
        return data_[static_cast<size_t>(u) * static_cast<size_t>(m_) +
                     static_cast<size_t>(v)];
    }
    int size() const { return m_; }

  private:
    int m_;
    std::vector<std::int32_t> data_;
};

// Floyd-Warshall over unit link weights. Throws if any pair is unreachable.
inline DistanceMatrix all_pairs_hops(const Topology& topo) {
    const int m = topo.nodeCount();
    DistanceMatrix dist(m);
    for (NodeId v = 0; v < m; ++v) dist.at(v, v) = 0;
    for (const Link& l : topo.links()) {
        dist.at(l.srcNode, l.dstNode) = 1;
        dist.at(l.dstNode, l.srcNode) = 1;
    }
    for (int k = 0; k < m; ++k) {
        for (int i = 0; i < m; ++i) {
            const std::int32_t dik = dist.at(i, k);
            if (dik >= DistanceMatrix::kUnreachable) continue;
            for (int j = 0; j < m; ++j) {
                const std::int32_t cand = dik + dist.at(k, j);
                if (cand < dist.at(i, j)) dist.at(i, j) = cand;
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (dist.at(i, j) >= DistanceMatrix::kUnreachable) {
                throw Error("all_pairs_hops: graph is disconnected");
            }
        }
    }
    return dist;
}

// JSON schema: {"nodes":[{"id","role"}...], "links":[{"linkId","src","dst",
// "bandWidth"}...], "seed"}. Keys serialize in a stable (sorted) order and
// the document round-trips byte-exactly.
inline std::string topology_to_json(const Topology& topo) {
    nlohmann::json doc;
    auto& nodes = doc["nodes"] = nlohmann::json::array();
    for (NodeId v = 0; v < topo.nodeCount(); ++v) {
        nodes.push_back({{"id", v}, {"role", role_name(topo.role(v))}});
    }
    auto& links = doc["links"] = nlohmann::json::array();
    for (const Link& l : topo.links()) {
        links.push_back({{"linkId", l.linkId},
                         {"src", l.srcNode},
                         {"dst", l.dstNode},
                         {"bandWidth", l.bandWidth}});
    }
    doc["seed"] = topo.seed();
    return doc.dump();
}

inline Topology topology_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("topology JSON parse failed: ") + e.what());
    }
    if (!doc.contains("nodes") || !doc.contains("links")) {
        throw Error("topology JSON: missing nodes/links");
    }
    std::vector<NodeRole> roles(doc["nodes"].size());
    for (const auto& n : doc["nodes"]) {
        const int id = n.at("id").get<int>();
        if (id < 0 || id >= static_cast<int>(roles.size())) {
            throw Error("topology JSON: node ids must be dense 0..m-1");
        }
        roles[static_cast<size_t>(id)] = role_from_name(n.at("role").get<std::string>());
    }
    std::vector<Link> links;
    links.reserve(doc["links"].size());
    for (const auto& l : doc["links"]) {
        links.push_back({l.at("linkId").get<int>(), l.at("src").get<int>(),
                         l.at("dst").get<int>(), l.at("bandWidth").get<int>()});
    }
    const std::uint64_t seed =
        doc.contains("seed") ? doc["seed"].get<std::uint64_t>() : 0;
    return Topology(std::move(roles), std::move(links), seed);
}

}  // namespace rbsim
