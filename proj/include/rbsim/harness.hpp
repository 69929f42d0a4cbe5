#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbsim/error.hpp"
#include "rbsim/mcast_tree.hpp"
#include "rbsim/partitioner.hpp"
#include "rbsim/rbs_codec.hpp"
#include "rbsim/rng.hpp"
#include "rbsim/topology.hpp"

namespace rbsim {

struct CourseSizeCategory {
    int lo;
    int hi;  // lo == hi for fixed-size courses
    double probability;
};

struct CourseSizeDistribution {
    std::vector<CourseSizeCategory> categories;

    // Campus course mix: half the courses are 30-seat classes, the tail runs
    // up to ten-thousand-listener lectures.
    static CourseSizeDistribution campusCourses() {
        return {{{30, 30, 0.50},
                 {30, 90, 0.20},
                 {60, 150, 0.20},
                 {200, 200, 0.05},
                 {1000, 1000, 0.04},
                 {10000, 10000, 0.01}}};
    }

    void validate() const {
        double sum = 0.0;
        for (const auto& c : categories) {
            if (c.lo < 1 || c.hi < c.lo || c.probability < 0.0) {
                throw Error("course distribution: bad category");
            }
            sum += c.probability;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw Error("course distribution: probabilities must sum to 1");
        }
    }
};

// Draws a category by probability, then uniformly within a range category;
// capped at the available device count.
inline int sample_course_size(const CourseSizeDistribution& dist, Rng& rng,
                              int deviceCap) {
    dist.validate();
    const double u = rng.uniform01();
    double cum = 0.0;
    const CourseSizeCategory* picked = &dist.categories.back();
    for (const auto& c : dist.categories) {
        cum += c.probability;
        if (u < cum) {
            picked = &c;
            break;
        }
    }
    const int size = picked->lo == picked->hi
                         ? picked->lo
                         : static_cast<int>(rng.range(picked->lo, picked->hi));
    return std::min(size, deviceCap);
}

// Spatially controlled member choice. Regions (secondary-edge areas) are
// shuffled, the smallest prefix whose device total reaches
// memberCount/density becomes the candidate pool, and members are sampled
// uniformly without replacement from it. density 1.0 concentrates the group
// in as few regions as possible; low densities spread it across many.
inline std::vector<NodeId> select_members(const Topology& topo, int memberCount,
                                          double density, Rng& rng,
                                          NodeId exclude = -1) {
    if (density <= 0.0 || density > 1.0) {
        throw Error("select_members: density must be in (0,1]");
    }
    if (memberCount < 1) throw Error("select_members: member count must be >= 1");

    std::map<NodeId, std::vector<NodeId>> regions;
    int available = 0;
    for (NodeId d : topo.nodesWithRole(NodeRole::UserDevice)) {
        if (d == exclude) continue;
        regions[region_of_member(topo, d, FixedRegionKey::SecondaryEdge)]
            .push_back(d);
        ++available;
    }
    if (memberCount > available) {
        throw Error("select_members: member count exceeds available devices");
    }

    std::vector<NodeId> order;
    for (const auto& [region, devs] : regions) order.push_back(region);
    rng.shuffle(order);

    const double needed = static_cast<double>(memberCount) / density;
    std::vector<NodeId> pool;
    for (NodeId region : order) {
        const auto& devs = regions[region];
        pool.insert(pool.end(), devs.begin(), devs.end());
        if (static_cast<double>(pool.size()) >= needed - 1e-9) break;
    }

    for (int t = 0; t < memberCount; ++t) {
        const auto j = static_cast<std::size_t>(t) +
                       static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(t)));
        std::swap(pool[static_cast<std::size_t>(t)], pool[j]);
    }
    std::vector<NodeId> members(pool.begin(), pool.begin() + memberCount);
    std::sort(members.begin(), members.end());
    return members;
}

struct ExperimentConfig {
    TopologyConfig topology;  // counts/probabilities; per-trial seeds derived
    std::vector<double> densityLevels = {0.1, 0.2, 0.3, 0.4, 0.5,
                                         0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::size_t> budgets = {256, 512, 1024};
    bool courseSampling = true;  // otherwise memberCount is used as-is
    int memberCount = 0;
    CourseSizeDistribution courses = CourseSizeDistribution::campusCourses();
    int trials = 30;
    std::uint64_t seed = 1;
    int headerBitsPerNode = kDefaultHeaderBits;

    void validate() const {
        if (trials < 1) throw Error("experiment: trials must be >= 1");
        if (densityLevels.empty() || budgets.empty()) {
            throw Error("experiment: empty density or budget sweep");
        }
        for (double d : densityLevels) {
            if (d <= 0.0 || d > 1.0) {
                throw Error("experiment: densities must be in (0,1]");
            }
        }
        if (!courseSampling && memberCount < 1) {
            throw Error("experiment: fixed member count must be >= 1");
        }
        courses.validate();
    }
};

struct MetricsRow {
    std::uint64_t seed = 0;
    double density = 0.0;
    std::size_t budget = 0;
    std::string algorithm;
    int memberCount = 0;
    int j = 0;
    std::size_t totalEncodedBits = 0;
    double encodingUtilization = 0.0;
    int flowEntries = 0;
    long long duplicateLinkTraversals = 0;
};

namespace detail {

inline std::string format_density(double d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", d);
    return buf;
}

inline void verify_domain_delivery(const PartitionResult& result,
                                   const PortMap& portMap, int headerBits,
                                   const std::string& context) {
    for (const VirtualDomain& d : result.domains) {
        const RbsEncoding enc = rbs_encode(d.subtree, portMap, headerBits);
        const std::vector<NodeId> delivered =
            simulate_forwarding(portMap, d.subtree.domainRoot, enc);
        if (delivered != d.members) {
            throw Error("forwarding round-trip mismatch (" + context + ")");
        }
        if (enc.bitLength != d.encodedLength) {
            throw Error("encoded length mismatch (" + context + ")");
        }
    }
}

}  // namespace detail

// One full sweep: per trial generate (or reuse) a topology, pick a source and
// a course-sized member set per density, then run both partitioners per
// budget. Every domain of every row is checked by the forwarding round trip
// before the row is recorded. Rows come out ordered by
// (trial, density, budget, algorithm).
inline std::vector<MetricsRow> run_experiment(const ExperimentConfig& config,
                                              const Topology* fixedTopology = nullptr) {
    config.validate();
    std::vector<MetricsRow> rows;

    for (int trial = 0; trial < config.trials; ++trial) {
        const std::uint64_t trialSeed = config.seed + static_cast<std::uint64_t>(trial);
        std::optional<Topology> generated;
        if (fixedTopology == nullptr) {
            TopologyConfig tc = config.topology;
            tc.seed = trialSeed;
            generated.emplace(generate_topology(tc));
        }
        const Topology& topo = fixedTopology ? *fixedTopology : *generated;
        const DistanceMatrix distances = all_pairs_hops(topo);
        const PortMap portMap(topo);
        const std::vector<NodeId> devices = topo.nodesWithRole(NodeRole::UserDevice);
        if (devices.size() < 2) {
            throw Error("experiment: need at least two user devices");
        }

        Rng sizeRng(derive_seed(trialSeed, 0x5e1c));
        Rng sourceRng(derive_seed(trialSeed, 0x50cc));
        const int deviceCount = static_cast<int>(devices.size());
        int size = config.courseSampling
                       ? sample_course_size(config.courses, sizeRng, deviceCount)
                       : config.memberCount;
        size = std::min(size, deviceCount - 1);  // the source is never a member
        const NodeId source =
            devices[sourceRng.below(static_cast<std::uint64_t>(deviceCount))];

        for (std::size_t di = 0; di < config.densityLevels.size(); ++di) {
            const double density = config.densityLevels[di];
            Rng memberRng(derive_seed(trialSeed, 0xd000 + di));
            const std::vector<NodeId> members =
                select_members(topo, size, density, memberRng, source);
            const MulticastTree tree =
                build_multicast_tree(topo, distances, source, members);

            for (std::size_t budget : config.budgets) {
                const PartitionConfig pc{budget, config.headerBitsPerNode};
                for (const bool dynamicAlg : {true, false}) {
                    const PartitionResult result =
                        dynamicAlg ? dynamic_partition(tree, distances, pc)
                                   : fixed_partition(tree, pc);
                    const std::string context =
                        "trial " + std::to_string(trial) + " density " +
                        detail::format_density(density) + " budget " +
                        std::to_string(budget) + " " + result.algorithm;
                    detail::verify_domain_delivery(result, portMap,
                                                   config.headerBitsPerNode,
                                                   context);

                    MetricsRow row;
                    row.seed = trialSeed;
                    row.density = density;
                    row.budget = budget;
                    row.algorithm = result.algorithm;
                    row.memberCount = static_cast<int>(members.size());
                    row.j = result.j;
                    row.totalEncodedBits = result.totalEncodedBits;
                    row.encodingUtilization =
                        (result.j > 0 && budget > 0)
                            ? static_cast<double>(result.totalEncodedBits) /
                                  (static_cast<double>(result.j) *
                                   static_cast<double>(budget))
                            : 0.0;
                    row.flowEntries = result.flowEntryCount;
                    row.duplicateLinkTraversals =
                        duplicate_link_traversals(result, tree);
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

inline const char* kCsvHeader =
    "seed,density,budget,algorithm,members,j,total_bits,utilization,"
    "flow_entries,dup_link_traversals";

inline std::string emit_csv(const std::vector<MetricsRow>& rows) {
    std::string out(kCsvHeader);
    out.push_back('\n');
    char buf[64];
    for (const MetricsRow& r : rows) {
        out += std::to_string(r.seed) + ",";
        out += detail::format_density(r.density) + ",";
        out += std::to_string(r.budget) + ",";
        out += r.algorithm + ",";
        out += std::to_string(r.memberCount) + ",";
        out += std::to_string(r.j) + ",";
        out += std::to_string(r.totalEncodedBits) + ",";
        std::snprintf(buf, sizeof(buf), "%.6f", r.encodingUtilization);
        out += buf;
        out += ",";
        out += std::to_string(r.flowEntries) + ",";
        out += std::to_string(r.duplicateLinkTraversals);
        out.push_back('\n');
    }
    return out;
}

inline void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("emit_csv: cannot open " + path);
    file << emit_csv(rows);
}

inline std::string emit_json(const std::vector<MetricsRow>& rows) {
    nlohmann::json doc = nlohmann::json::array();
    for (const MetricsRow& r : rows) {
        doc.push_back({{"seed", r.seed},
                       {"density", r.density},
                       {"budget", r.budget},
                       {"algorithm", r.algorithm},
                       {"members", r.memberCount},
                       {"j", r.j},
                       {"total_bits", r.totalEncodedBits},
                       {"utilization", r.encodingUtilization},
                       {"flow_entries", r.flowEntries},
                       {"dup_link_traversals", r.duplicateLinkTraversals}});
    }
    return doc.dump();
}

inline void emit_json(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("emit_json: cannot open " + path);
    file << emit_json(rows);
}

// Per (density, budget) cell means of j for each algorithm.
struct CellStats {
    double meanJDynamic = 0.0;
    double meanJFixed = 0.0;
    int trials = 0;

    // positive when the dynamic algorithm needs fewer domains
    double reductionPercent() const {
        if (meanJFixed <= 0.0) return 0.0;
        return (1.0 - meanJDynamic / meanJFixed) * 100.0;
    }
};

inline std::map<std::pair<std::string, std::size_t>, CellStats> aggregate_cells(
    const std::vector<MetricsRow>& rows) {
    std::map<std::pair<std::string, std::size_t>, CellStats> cells;
    std::map<std::pair<std::string, std::size_t>, std::pair<long long, long long>>
        sums;
    std::map<std::pair<std::string, std::size_t>, std::pair<int, int>> counts;
    for (const MetricsRow& r : rows) {
        const auto key = std::make_pair(detail::format_density(r.density), r.budget);
        if (r.algorithm == "dynamic") {
            sums[key].first += r.j;
            counts[key].first += 1;
        } else {
            sums[key].second += r.j;
            counts[key].second += 1;
        }
    }
    for (const auto& [key, s] : sums) {
        CellStats st;
        const auto& c = counts[key];
        if (c.first > 0) st.meanJDynamic = static_cast<double>(s.first) / c.first;
        if (c.second > 0) st.meanJFixed = static_cast<double>(s.second) / c.second;
        st.trials = std::max(c.first, c.second);
        cells[key] = st;
    }
    return cells;
}

// Parses a CSV produced by emit_csv (used by the compare subcommand).
inline std::vector<MetricsRow> parse_csv(const std::string& text) {
    std::vector<MetricsRow> rows;
    std::size_t start = 0;
    bool header = true;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != kCsvHeader) throw Error("parse_csv: unexpected header");
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::size_t f = 0;
        while (true) {
            const std::size_t comma = line.find(',', f);
            fields.push_back(line.substr(f, comma - f));
            if (comma == std::string::npos) break;
            f = comma + 1;
        }
        if (fields.size() != 10) throw Error("parse_csv: bad row");
        MetricsRow r;
        r.seed = std::stoull(fields[0]);
        r.density = std::stod(fields[1]);
        r.budget = static_cast<std::size_t>(std::stoull(fields[2]));
        r.algorithm = fields[3];
        r.memberCount = std::stoi(fields[4]);
        r.j = std::stoi(fields[5]);
        r.totalEncodedBits = static_cast<std::size_t>(std::stoull(fields[6]));
        r.encodingUtilization = std::stod(fields[7]);
        r.flowEntries = std::stoi(fields[8]);
        r.duplicateLinkTraversals = std::stoll(fields[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace rbsim
