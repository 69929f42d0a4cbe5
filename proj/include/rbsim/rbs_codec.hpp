#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "rbsim/error.hpp"
#include "rbsim/mcast_tree.hpp"
#include "rbsim/topology.hpp"

namespace rbsim {

constexpr int kDefaultHeaderBits = 8;

// Canonical port numbering: a node's incident links in ascending linkId order.
// Stable for a fixed topology; the codec and the forwarding walk share it.
class PortMap {
  public:
    struct Port {
        LinkId link;
        NodeId neighbor;
        bool neighborIsDevice;
    };

    explicit PortMap(const Topology& topo) {
        ports_.resize(static_cast<size_t>(topo.nodeCount()));
        for (NodeId v = 0; v < topo.nodeCount(); ++v) {
            for (const auto& e : topo.incident(v)) {
                ports_[static_cast<size_t>(v)].push_back(
                    {e.link, e.neighbor, topo.isDevice(e.neighbor)});
            }
        }
    }

    const std::vector<Port>& ports(NodeId v) const {
        return ports_.at(static_cast<size_t>(v));
    }
    int portCount(NodeId v) const {
        return static_cast<int>(ports_.at(static_cast<size_t>(v)).size());
    }

    // Local port index of a link at v (position in the ascending-linkId order).
    int portIndex(NodeId v, LinkId link) const {
        const auto& ps = ports(v);
        const auto it = std::lower_bound(
            ps.begin(), ps.end(), link,
            [](const Port& p, LinkId l) { return p.link < l; });
        if (it == ps.end() || it->link != link) {
            throw Error("portIndex: link not incident to node");
        }
        return static_cast<int>(it - ps.begin());
    }

  private:
    std::vector<std::vector<Port>> ports_;
};

// Serialized recursive port bitmaps, depth-first pre-order. A block is
// [port count, headerBitsPerNode bits][one bit per forwarding port]; the
// forwarding ports of a node are its incident links minus the one the packet
// arrived on, in ascending linkId order. Set bits toward user devices are
// deliveries and emit no child block.
struct RbsEncoding {
    std::vector<std::uint8_t> bits;  // MSB-first within each byte
    std::size_t bitLength = 0;
    int headerBitsPerNode = kDefaultHeaderBits;

    bool bit(std::size_t i) const {
        return (bits[i >> 3] >> (7 - (i & 7))) & 1;
    }

    std::string toHex() const {
        static const char* digits = "0123456789abcdef";
        std::string out;
        out.reserve(bits.size() * 2);
        for (std::uint8_t b : bits) {
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0xf]);
        }
        return out;
    }

    static RbsEncoding fromHex(const std::string& hex, std::size_t bitLength,
                               int headerBits = kDefaultHeaderBits) {
        if (hex.size() % 2 != 0 || bitLength > hex.size() * 4) {
            throw Error("RbsEncoding::fromHex: length mismatch");
        }
        RbsEncoding enc;
        enc.bitLength = bitLength;
        enc.headerBitsPerNode = headerBits;
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            throw Error("RbsEncoding::fromHex: bad hex digit");
        };
        for (std::size_t i = 0; i < hex.size(); i += 2) {
            enc.bits.push_back(static_cast<std::uint8_t>(
                (nibble(hex[i]) << 4) | nibble(hex[i + 1])));
        }
        return enc;
    }
};

namespace detail {

class BitWriter {
  public:
    void append(std::uint64_t value, int count) {
        for (int i = count - 1; i >= 0; --i) {
            if (pos_ % 8 == 0) bytes_.push_back(0);
            if ((value >> i) & 1) {
                bytes_.back() |= static_cast<std::uint8_t>(1u << (7 - pos_ % 8));
            }
            ++pos_;
        }
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }
    std::size_t size() const { return pos_; }

  private:
    std::vector<std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

class BitReader {
  public:
    explicit BitReader(const RbsEncoding& enc) : enc_(&enc) {}

    std::uint64_t read(int count) {
        std::uint64_t value = 0;
        for (int i = 0; i < count; ++i) {
            if (pos_ >= enc_->bitLength) {
                throw Error("rbs decode: truncated encoding");
            }
            value = (value << 1) | static_cast<std::uint64_t>(enc_->bit(pos_++));
        }
        return value;
    }
    std::size_t position() const { return pos_; }

  private:
    const RbsEncoding* enc_;
    std::size_t pos_ = 0;
};

inline bool is_member(const DomainSubtree& sub, NodeId v) {
    return std::binary_search(sub.members.begin(), sub.members.end(), v);
}

}  // namespace detail

// Bits of one node block: header plus one bit per forwarding port.
inline int rbs_node_block_bits(const PortMap& portMap, NodeId v, bool hasParent,
                               int headerBits) {
    const int forwardingPorts = portMap.portCount(v) - (hasParent ? 1 : 0);
    if (forwardingPorts >= (1 << headerBits)) {
        throw Error("rbs: node " + std::to_string(v) + " has " +
                    std::to_string(forwardingPorts) +
                    " ports, exceeding the header width");
    }
    return headerBits + forwardingPorts;
}

// Encoded bit length without materializing the bit string. Internal nodes are
// every subtree node that is not a member leaf; a singleton domain is 0 bits.
inline std::size_t rbs_length(const DomainSubtree& subtree, const PortMap& portMap,
                              int headerBits = kDefaultHeaderBits) {
    std::size_t total = 0;
    for (NodeId v : subtree.nodes) {
        if (detail::is_member(subtree, v)) continue;
        total += static_cast<std::size_t>(rbs_node_block_bits(
            portMap, v, v != subtree.domainRoot, headerBits));
    }
    return total;
}

inline RbsEncoding rbs_encode(const DomainSubtree& subtree, const PortMap& portMap,
                              int headerBits = kDefaultHeaderBits) {
    RbsEncoding enc;
    enc.headerBitsPerNode = headerBits;
    if (subtree.singleton()) return enc;  // delivery is the domain root itself

    detail::BitWriter writer;
    // pre-order: parent block first, then child blocks in ascending port order
    auto emit = [&](auto&& self, NodeId v, LinkId arrivalLink) -> void {
        std::vector<const PortMap::Port*> forwarding;
        for (const auto& port : portMap.ports(v)) {
            if (port.link != arrivalLink) forwarding.push_back(&port);
        }
        if (static_cast<int>(forwarding.size()) >= (1 << headerBits)) {
            throw Error("rbs_encode: port count exceeds header width at node " +
                        std::to_string(v));
        }
        writer.append(forwarding.size(), headerBits);
        std::vector<NodeId> internalChildren;
        for (const auto* port : forwarding) {
            const auto it = subtree.linkChild.find(port->link);
            const bool isChild = it != subtree.linkChild.end() &&
                                 it->second == port->neighbor;
            writer.append(isChild ? 1 : 0, 1);
            if (isChild && !port->neighborIsDevice) {
                internalChildren.push_back(port->neighbor);
            }
        }
        for (NodeId child : internalChildren) {
            self(self, child, subtree.parent.at(child).link);
        }
    };
    emit(emit, subtree.domainRoot, -1);

    enc.bitLength = writer.size();
    enc.bits = writer.take();
    return enc;
}

// Replays the hop-by-hop pipeline: each node reads its own header and bitmap,
// delivers on set ports toward devices, and recurses into the next child block
// for set ports toward routers. Throws on any malformed encoding (truncation,
// header/port-count mismatch, duplicate delivery, trailing bits).
inline std::vector<NodeId> simulate_forwarding(const PortMap& portMap,
                                               NodeId domainRoot,
                                               const RbsEncoding& encoding) {
    if (encoding.bitLength == 0) return {domainRoot};

    detail::BitReader reader(encoding);
    std::vector<NodeId> delivered;
    std::unordered_set<NodeId> seen;
    const int headerBits = encoding.headerBitsPerNode;

    auto walk = [&](auto&& self, NodeId v, LinkId arrivalLink) -> void {
        std::vector<const PortMap::Port*> forwarding;
        for (const auto& port : portMap.ports(v)) {
            if (port.link != arrivalLink) forwarding.push_back(&port);
        }
        const auto header = reader.read(headerBits);
        if (header != forwarding.size()) {
            throw Error("rbs decode: header does not match port count at node " +
                        std::to_string(v));
        }
        std::vector<const PortMap::Port*> set;
        for (const auto* port : forwarding) {
            if (reader.read(1)) set.push_back(port);
        }
        for (const auto* port : set) {
            if (port->neighborIsDevice) {
                if (!seen.insert(port->neighbor).second) {
                    throw Error("rbs decode: duplicate delivery to node " +
                                std::to_string(port->neighbor));
                }
                delivered.push_back(port->neighbor);
            } else {
                self(self, port->neighbor, port->link);
            }
        }
    };
    walk(walk, domainRoot, -1);

    if (reader.position() != encoding.bitLength) {
        throw Error("rbs decode: trailing bits after root block");
    }
    std::sort(delivered.begin(), delivered.end());
    return delivered;
}

}  // namespace rbsim
