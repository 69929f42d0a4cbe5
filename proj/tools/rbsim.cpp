#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbsim/harness.hpp"
#include "rbsim/keyexchange.hpp"
#include "rbsim/mcast_tree.hpp"
#include "rbsim/partitioner.hpp"
#include "rbsim/rbs_codec.hpp"
#include "rbsim/savi.hpp"
#include "rbsim/topology.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw rbsim::Error("cannot open " + path);
    std::ostringstream out;
    out << file.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw rbsim::Error("cannot open " + path + " for writing");
    file << content;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

void add_topology_options(CLI::App* cmd, rbsim::TopologyConfig& config) {
    cmd->add_option("--cores", config.numCore, "core router count");
    cmd->add_option("--core-edges", config.numCoreEdge, "core edge router count");
    cmd->add_option("--secondary-edges", config.numSecondaryEdge,
                    "secondary edge router count");
    cmd->add_option("--access", config.numUserAccess, "user access router count");
    cmd->add_option("--devices", config.numUserDevice, "user device count");
    cmd->add_option("--core-link-prob", config.coreLinkProb,
                    "core-to-core link probability");
    cmd->add_option("--edge-link-prob", config.edgeLinkProb,
                    "secondary-edge pair link probability");
    cmd->add_option("--mu", config.logNormalMu, "log-normal mu");
    cmd->add_option("--sigma", config.logNormalSigma, "log-normal sigma");
}

int run_main(int argc, char** argv) {
    CLI::App app{"campus multicast domain-partitioning simulator"};
    app.require_subcommand(1);

    // ---- gen-topo ----
    auto* genTopo = app.add_subcommand("gen-topo", "generate a topology JSON");
    rbsim::TopologyConfig topoConfig;
    std::string topoOut;
    genTopo->add_option("--seed", topoConfig.seed, "topology seed");
    genTopo->add_option("--out", topoOut, "output path")->required();
    add_topology_options(genTopo, topoConfig);
    genTopo->callback([&] {
        const rbsim::Topology topo = rbsim::generate_topology(topoConfig);
        write_file(topoOut, rbsim::topology_to_json(topo));
        std::cout << "wrote " << topoOut << " (" << topo.nodeCount() << " nodes, "
                  << topo.linkCount() << " links)\n";
    });

    // ---- run ----
    auto* run = app.add_subcommand("run", "run the dynamic-vs-fixed experiment");
    rbsim::ExperimentConfig expConfig;
    std::string runTopoPath, densitiesArg, budgetsArg, csvOut, jsonOut;
    int fixedMembers = 0;
    bool genFlag = false, courseFlag = false;
    auto* topoOpt = run->add_option("--topo", runTopoPath,
                                    "reuse one topology JSON for every trial");
    auto* genOpt = run->add_flag("--gen", genFlag,
                                 "generate a topology per trial (default)");
    topoOpt->excludes(genOpt);
    run->add_option("--trials", expConfig.trials, "trials per cell");
    run->add_option("--densities", densitiesArg, "comma list, e.g. 0.1,0.5,1.0");
    run->add_option("--budgets", budgetsArg, "comma list of bit budgets");
    auto* membersOpt =
        run->add_option("--members", fixedMembers, "fixed member count");
    auto* courseOpt = run->add_flag("--course-sample", courseFlag,
                                    "sample member counts from the course mix");
    membersOpt->excludes(courseOpt);
    run->add_option("--seed", expConfig.seed, "master seed");
    run->add_option("--out", csvOut, "CSV output path")->required();
    run->add_option("--json", jsonOut, "also write rows as JSON");
    add_topology_options(run, expConfig.topology);
    run->callback([&] {
        if (!densitiesArg.empty()) {
            expConfig.densityLevels.clear();
            for (const auto& part : split(densitiesArg, ',')) {
                expConfig.densityLevels.push_back(std::stod(part));
            }
        }
        if (!budgetsArg.empty()) {
            expConfig.budgets.clear();
            for (const auto& part : split(budgetsArg, ',')) {
                expConfig.budgets.push_back(std::stoull(part));
            }
        }
        if (membersOpt->count() > 0) {
            expConfig.courseSampling = false;
            expConfig.memberCount = fixedMembers;
        }
        std::optional<rbsim::Topology> fixedTopo;
        if (topoOpt->count() > 0) {
            fixedTopo.emplace(rbsim::topology_from_json(read_file(runTopoPath)));
        }
        const auto rows = rbsim::run_experiment(
            expConfig, fixedTopo ? &*fixedTopo : nullptr);
        rbsim::emit_csv(rows, csvOut);
        if (!jsonOut.empty()) rbsim::emit_json(rows, jsonOut);
        std::cout << "wrote " << rows.size() << " rows to " << csvOut << "\n";
    });

    // ---- compare ----
    auto* compare = app.add_subcommand(
        "compare", "per-cell mean j reduction from a results CSV");
    std::string compareIn;
    compare->add_option("--in", compareIn, "results CSV")->required();
    compare->callback([&] {
        const auto rows = rbsim::parse_csv(read_file(compareIn));
        const auto cells = rbsim::aggregate_cells(rows);
        for (const auto& [key, stats] : cells) {
            std::printf(
                "density=%s budget=%zu mean_j_dynamic=%.3f mean_j_fixed=%.3f "
                "reduction=%.1f%%\n",
                key.first.c_str(), key.second, stats.meanJDynamic,
                stats.meanJFixed, stats.reductionPercent());
        }
    });

    // ---- keydemo ----
    auto* keydemo =
        app.add_subcommand("keydemo", "group key exchange demonstration");
    int demoMembers = 8;
    int pBits = 256;
    std::uint64_t demoSeed = 1;
    std::string keyOut;
    keydemo->add_option("--members", demoMembers, "group size");
    keydemo->add_option("--p-bits", pBits, "prime size in bits");
    keydemo->add_option("--seed", demoSeed, "rng seed");
    keydemo->add_option("--out", keyOut, "write the key function JSON");
    keydemo->callback([&] {
        if (demoMembers < 1) throw rbsim::Error("keydemo: need >= 1 member");
        if (pBits < 8) throw rbsim::Error("keydemo: p-bits must be >= 8");
        rbsim::Rng rng(demoSeed);
        rbsim::BigInt p;
        rbsim::BigInt g;
        if (pBits == 256) {
            p = rbsim::demo_prime_256();
            g = rbsim::kDemoGenerator;
        } else {
            const rbsim::BigInt start = rbsim::random_bits(rng, pBits - 1) +
                                        (rbsim::BigInt(1) << (pBits - 1));
            mpz_nextprime(p.get_mpz_t(), start.get_mpz_t());
            g = 2;
        }
        rbsim::NegotiatorState negotiator = rbsim::dh_setup(p, g, rng);
        std::vector<rbsim::MemberState> members;
        for (int i = 0; i < demoMembers; ++i) {
            members.push_back(rbsim::member_keygen(p, g, negotiator.A, rng));
            const rbsim::BigInt k =
                rbsim::register_member(negotiator, i, members.back().B);
            if (k != members.back().K) {
                throw rbsim::Error("keydemo: pairwise key mismatch");
            }
        }
        rbsim::BigInt keyRange = 1;
        keyRange <<= pBits;
        negotiator.y = rbsim::random_below(rng, keyRange);
        std::vector<rbsim::BigInt> keys;
        for (const auto& [id, k] : negotiator.memberKeys) keys.push_back(k);
        const rbsim::KeyFunction s =
            rbsim::build_key_function(keys, negotiator.y, rng, keyRange);
        int recovered = 0;
        for (const auto& member : members) {
            if (rbsim::recover_group_key(s, member.K) ==
                rbsim::BigRational(negotiator.y)) {
                ++recovered;
            }
        }
        std::cout << "p (" << pBits << " bits) = " << p.get_str() << "\n";
        std::cout << "members = " << demoMembers << ", knots = "
                  << s.knots().size() << "\n";
        std::cout << "group key y = " << negotiator.y.get_str() << "\n";
        std::cout << "recovered exactly: " << recovered << "/" << demoMembers
                  << "\n";
        if (!keyOut.empty()) write_file(keyOut, rbsim::key_function_to_json(s));
        if (recovered != demoMembers) {
            throw rbsim::Error("keydemo: some member failed to recover the key");
        }
    });

    // ---- savi ----
    auto* savi = app.add_subcommand("savi", "validate a quadruple against rules");
    std::string rulesPath, checkArg;
    savi->add_option("--rules", rulesPath, "rules file (one JSON object per line)")
        ->required();
    savi->add_option("--check", checkArg, "src,dst,sport,dport");
    savi->callback([&] {
        rbsim::SaviTable table;
        const auto rules = rbsim::parse_rules_jsonl(read_file(rulesPath));
        for (const auto& rule : rules) table.install(rule);
        std::cout << "loaded " << rules.size() << " rules ("
                  << table.size() << " distinct)\n";
        if (!checkArg.empty()) {
            const auto parts = split(checkArg, ',');
            if (parts.size() != 4) {
                throw rbsim::Error("savi --check expects src,dst,sport,dport");
            }
            const rbsim::SaviRule packet{parts[0], parts[1], std::stoi(parts[2]),
                                         std::stoi(parts[3])};
            std::cout << (table.validate(packet) ? "allow" : "deny") << "\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_main(argc, argv);
    } catch (const rbsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
