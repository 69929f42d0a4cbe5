#pragma once

#include <arpa/inet.h>

#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rbsim/error.hpp"

namespace rbsim {

// Parses an IPv6 textual address to its 16-byte form; throws on bad syntax.
inline std::array<std::uint8_t, 16> parse_ipv6(const std::string& text) {
    std::array<std::uint8_t, 16> bytes{};
    if (inet_pton(AF_INET6, text.c_str(), bytes.data()) != 1) {
        throw Error("invalid IPv6 address: " + text);
    }
    return bytes;
}

struct SaviRule {
    std::string srcAddr;
    std::string dstMcastAddr;
    int srcPort = 0;
    int dstPort = 0;
};

// Exact-match quadruple filter: default deny, allow only on a full
// (src, dst, sport, dport) match. Addresses compare by their parsed 16-byte
// form, so equivalent spellings of one address match the same rule.
class SaviTable {
  public:
    void install(const SaviRule& rule) { rules_.insert(key(rule)); }  // idempotent
    void remove(const SaviRule& rule) { rules_.erase(key(rule)); }

    bool validate(const SaviRule& packet) const {
        return rules_.count(key(packet)) > 0;
    }

    std::size_t size() const { return rules_.size(); }

  private:
    static std::string key(const SaviRule& rule) {
        if (rule.srcPort < 0 || rule.srcPort > 65535 || rule.dstPort < 0 ||
            rule.dstPort > 65535) {
            throw Error("savi: port out of range");
        }
        const auto src = parse_ipv6(rule.srcAddr);
        const auto dst = parse_ipv6(rule.dstMcastAddr);
        std::string k(src.begin(), src.end());
        k.append(dst.begin(), dst.end());
        k.push_back(static_cast<char>(rule.srcPort >> 8));
        k.push_back(static_cast<char>(rule.srcPort & 0xff));
        k.push_back(static_cast<char>(rule.dstPort >> 8));
        k.push_back(static_cast<char>(rule.dstPort & 0xff));
        return k;
    }

    std::unordered_set<std::string> rules_;
};

// Rules file: one JSON object per line, {"src","dst","sport","dport"}.
inline std::vector<SaviRule> parse_rules_jsonl(const std::string& text) {
    std::vector<SaviRule> rules;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("savi rules: bad JSON line: ") + e.what());
        }
        rules.push_back({obj.at("src").get<std::string>(),
                         obj.at("dst").get<std::string>(),
                         obj.at("sport").get<int>(), obj.at("dport").get<int>()});
    }
    return rules;
}

}  // namespace rbsim
