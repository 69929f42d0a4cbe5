#pragma once

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "rbsim/error.hpp"
#include "rbsim/topology.hpp"

namespace rbsim {

// Shortest-path (hop count) distribution tree from a source to a member set.
// Each non-root node has exactly one parent; all leaves are members.
class MulticastTree {
  public:
    struct ParentEdge {
        NodeId parent;
        LinkId link;
    };

    MulticastTree(const Topology& topo, NodeId root, std::vector<NodeId> members,
                  std::vector<NodeId> parent, std::vector<LinkId> parentLink,
                  std::vector<int> depth)
        : topo_(&topo),
          root_(root),
          members_(std::move(members)),
          parent_(std::move(parent)),
          parentLink_(std::move(parentLink)),
          depth_(std::move(depth)) {
        for (NodeId v = 0; v < static_cast<NodeId>(parent_.size()); ++v) {
            if (v != root_ && parent_[static_cast<size_t>(v)] >= 0) {
                nodes_.push_back(v);
                links_.push_back(parentLink_[static_cast<size_t>(v)]);
            }
        }
        nodes_.push_back(root_);
        std::sort(nodes_.begin(), nodes_.end());
        std::sort(links_.begin(), links_.end());
    }

    const Topology& topology() const { return *topo_; }
    NodeId root() const { return root_; }
    const std::vector<NodeId>& nodes() const { return nodes_; }    // TV
    const std::vector<LinkId>& links() const { return links_; }    // TE
    const std::vector<NodeId>& members() const { return members_; }  // edgeTV

    bool contains(NodeId v) const {
        return v == root_ || parent_[static_cast<size_t>(v)] >= 0;
    }
    NodeId parentOf(NodeId v) const { return parent_[static_cast<size_t>(v)]; }
    LinkId parentLinkOf(NodeId v) const {
        return parentLink_[static_cast<size_t>(v)];
    }
    int depth(NodeId v) const { return depth_[static_cast<size_t>(v)]; }

    // v, parent(v), ..., root
    std::vector<NodeId> pathToRoot(NodeId v) const {
        std::vector<NodeId> path;
        for (NodeId cur = v; cur != root_; cur = parentOf(cur)) path.push_back(cur);
        path.push_back(root_);
        return path;
    }

    NodeId lowestCommonAncestor(NodeId a, NodeId b) const {
        while (depth(a) > depth(b)) a = parentOf(a);
        while (depth(b) > depth(a)) b = parentOf(b);
        while (a != b) {
            a = parentOf(a);
            b = parentOf(b);
        }
        return a;
    }

    // "parent child linkId" per line, sorted by child id.
    std::string debugEdgeList() const {
        std::string out;
        for (NodeId v : nodes_) {
            if (v == root_) continue;
            out += std::to_string(parentOf(v)) + " " + std::to_string(v) + " " +
                   std::to_string(parentLinkOf(v)) + "\n";
        }
        return out;
    }

  private:
    const Topology* topo_;
    NodeId root_;
    std::vector<NodeId> members_;
    std::vector<NodeId> parent_;      // -1 when not in tree
    std::vector<LinkId> parentLink_;  // -1 when not in tree
    std::vector<int> depth_;
    std::vector<NodeId> nodes_;
    std::vector<LinkId> links_;
};

// Restriction of the global tree spanning one member subset, re-rooted at the
// subset's lowest common ancestor. Leaves are exactly the subset.
struct DomainSubtree {
    NodeId domainRoot = -1;
    std::vector<NodeId> nodes;    // sorted
    std::vector<LinkId> links;    // sorted
    std::vector<NodeId> members;  // sorted
    std::unordered_map<NodeId, MulticastTree::ParentEdge> parent;
    std::unordered_map<LinkId, NodeId> linkChild;  // link -> its child endpoint

    bool singleton() const { return links.empty(); }
};

// Hop-count shortest-path tree. Parent choice: among neighbors one hop closer
// to the source, the smallest node id wins, so the tree is a deterministic
// function of (topology, distances, source). Branches without members are
// never added, which is what prunes the tree.
inline MulticastTree build_multicast_tree(const Topology& topo,
                                          const DistanceMatrix& distances,
                                          NodeId source,
                                          const std::vector<NodeId>& members) {
    const int m = topo.nodeCount();
    if (source < 0 || source >= m) throw Error("build_multicast_tree: bad source");
    if (members.empty()) throw Error("build_multicast_tree: empty member set");
    for (NodeId d : members) {
        if (d < 0 || d >= m) throw Error("build_multicast_tree: bad member id");
        if (!topo.isDevice(d)) {
            throw Error("build_multicast_tree: member " + std::to_string(d) +
                        " is not a UserDevice");
        }
        if (d == source) {
            throw Error("build_multicast_tree: source cannot be a member");
        }
        if (distances.at(source, d) >= DistanceMatrix::kUnreachable) {
            throw Error("build_multicast_tree: member " + std::to_string(d) +
                        " unreachable from source");
        }
    }

    std::vector<NodeId> parent(static_cast<size_t>(m), -1);
    std::vector<LinkId> parentLink(static_cast<size_t>(m), -1);
    std::vector<int> depth(static_cast<size_t>(m), -1);
    depth[static_cast<size_t>(source)] = 0;

    for (NodeId member : members) {
        NodeId v = member;
        while (v != source && parent[static_cast<size_t>(v)] < 0) {
            const std::int32_t dv = distances.at(source, v);
            NodeId best = -1;
            LinkId bestLink = -1;
            for (const auto& e : topo.incident(v)) {
                if (distances.at(source, e.neighbor) == dv - 1 &&
                    (best < 0 || e.neighbor < best)) {
                    best = e.neighbor;
                    bestLink = e.link;
                }
            }
            if (best < 0) {
                throw Error("build_multicast_tree: inconsistent distance matrix");
            }
            parent[static_cast<size_t>(v)] = best;
            parentLink[static_cast<size_t>(v)] = bestLink;
            depth[static_cast<size_t>(v)] = dv;
            v = best;
        }
    }

    std::vector<NodeId> sortedMembers(members);
    std::sort(sortedMembers.begin(), sortedMembers.end());
    sortedMembers.erase(std::unique(sortedMembers.begin(), sortedMembers.end()),
                        sortedMembers.end());
    return MulticastTree(topo, source, std::move(sortedMembers), std::move(parent),
                         std::move(parentLink), std::move(depth));
}

// Union of the global-tree paths among the subset, rooted at their LCA.
inline DomainSubtree extract_subtree(const MulticastTree& tree,
                                     const std::vector<NodeId>& memberSubset) {
    if (memberSubset.empty()) throw Error("extract_subtree: empty subset");
    const auto& edgeTV = tree.members();
    for (NodeId d : memberSubset) {
        if (!std::binary_search(edgeTV.begin(), edgeTV.end(), d)) {
            throw Error("extract_subtree: node " + std::to_string(d) +
                        " is not a tree member");
        }
    }

    NodeId lca = memberSubset.front();
    for (size_t i = 1; i < memberSubset.size(); ++i) {
        lca = tree.lowestCommonAncestor(lca, memberSubset[i]);
    }

    DomainSubtree sub;
    sub.domainRoot = lca;
    std::unordered_map<NodeId, char> seen;
    seen.emplace(lca, 1);
    sub.nodes.push_back(lca);
    for (NodeId member : memberSubset) {
        NodeId v = member;
        while (!seen.count(v)) {
            seen.emplace(v, 1);
            sub.nodes.push_back(v);
            const MulticastTree::ParentEdge edge{tree.parentOf(v),
                                                 tree.parentLinkOf(v)};
            sub.parent.emplace(v, edge);
            sub.linkChild.emplace(edge.link, v);
            sub.links.push_back(edge.link);
            v = edge.parent;
        }
    }
    sub.members.assign(memberSubset.begin(), memberSubset.end());
    std::sort(sub.members.begin(), sub.members.end());
    sub.members.erase(std::unique(sub.members.begin(), sub.members.end()),
                      sub.members.end());
    std::sort(sub.nodes.begin(), sub.nodes.end());
    std::sort(sub.links.begin(), sub.links.end());
    return sub;
}

}  // namespace rbsim
