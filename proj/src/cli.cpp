#include "wsn/cli.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wsn/analysis.hpp"
#include "wsn/loop_enum.hpp"
#include "wsn/sim.hpp"
#include "wsn/topo_gen.hpp"

namespace wsn {

namespace {

void print_loop_report(std::ostream& out, const LoopReport& report) {
    out << "source " << report.source << "\n";
    for (const Block& b : report.blocks) {
        out << "block " << b.second_node << " " << b.loops.size() << "\n";
        for (const Loop& l : b.loops) out << format_loop(l) << "\n";
    }
    out << "nblock " << report.nblock << "\n";
}

/// Rewrite a canonical cycle key as a closed walk anchored at `source`,
/// taking the lexicographically smaller of the two directions.
std::vector<NodeId> anchor_at(const CycleKey& key, NodeId source) {
    const auto at = std::find(key.begin(), key.end(), source);
    const std::size_t pos = static_cast<std::size_t>(at - key.begin());
    std::vector<NodeId> forward, backward;
    forward.reserve(key.size());
    backward.reserve(key.size());
    for (std::size_t i = 0; i < key.size(); ++i)
        forward.push_back(key[(pos + i) % key.size()]);
    backward.push_back(source);
    for (std::size_t i = key.size(); i-- > 1;)
        backward.push_back(key[(pos + i) % key.size()]);
    return std::min(forward, backward);
}

std::string format_closed(const std::vector<NodeId>& open_cycle) {
    std::string out;
    for (NodeId n : open_cycle) {
        out += std::to_string(n);
        out += "->";
    }
    out += std::to_string(open_cycle.front());
    return out;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"wireless sensor network route simulator and loop toolkit", "wsnsim"};
    app.require_subcommand(1);

    // --- sim run ---
    auto* sim = app.add_subcommand("sim", "run scenarios");
    sim->require_subcommand(1);
    auto* sim_run = sim->add_subcommand("run", "simulate a scenario and emit its trace");
    std::string scenario_path, trace_out;
    std::uint64_t seed_override = 0;
    sim_run->add_option("--scenario", scenario_path, "scenario file")->required();
    auto* seed_opt = sim_run->add_option("--seed", seed_override, "override the scenario seed");
    sim_run->add_option("--trace", trace_out, "write the trace here instead of stdout");
    sim_run->callback([&] {
        Scenario sc = load_scenario(scenario_path);
        if (seed_opt->count() > 0) sc.seed = seed_override;
        const Trace trace = run_scenario(sc);
        if (trace_out.empty()) {
            write_trace(out, trace);
        } else {
            std::ofstream f(trace_out);
            if (!f) throw ParseError(trace_out, 0, "cannot open file for writing");
            write_trace(f, trace);
        }
    });

    // --- loops enum / oracle ---
    auto* loops = app.add_subcommand("loops", "simple-cycle enumeration");
    loops->require_subcommand(1);
    auto* loops_enum = loops->add_subcommand("enum", "block-wise cycle enumeration");
    std::string graph_path;
    NodeId source = 0;
    bool all_sources = false;
    loops_enum->add_option("--graph", graph_path, "topology file")->required();
    auto* src_opt = loops_enum->add_option("--source", source, "enumerate through this node");
    loops_enum->add_flag("--all", all_sources, "every cycle of the graph, source by source");
    loops_enum->callback([&] {
        if (all_sources == (src_opt->count() > 0))
            throw CLI::ValidationError("pass exactly one of --source and --all");
        const Topology topo = load_topology(graph_path);
        if (all_sources) {
            std::size_t total = 0;
            for (const LoopReport& r : enumerate_all_loops(topo)) {
                print_loop_report(out, r);
                total += r.total_loops();
            }
            out << "total " << total << "\n";
        } else {
            const LoopReport r = enumerate_loops_from_source(topo, source);
            print_loop_report(out, r);
            out << "total " << r.total_loops() << "\n";
        }
    });

    auto* loops_oracle =
        loops->add_subcommand("oracle", "exhaustive reference cycle enumeration");
    std::string oracle_graph;
    NodeId oracle_source = 0;
    loops_oracle->add_option("--graph", oracle_graph, "topology file")->required();
    loops_oracle->add_option("--source", oracle_source, "enumerate through this node")
        ->required();
    loops_oracle->callback([&] {
        const Topology topo = load_topology(oracle_graph);
        const std::set<CycleKey> keys = oracle_cycles_through(topo, oracle_source);
        std::vector<std::vector<NodeId>> cycles;
        cycles.reserve(keys.size());
        for (const CycleKey& key : keys) cycles.push_back(anchor_at(key, oracle_source));
        std::sort(cycles.begin(), cycles.end());
        out << "source " << oracle_source << "\n";
        out << "count " << cycles.size() << "\n";
        for (const auto& c : cycles) out << format_closed(c) << "\n";
    });

    // --- trace analyze ---
    auto* trace_cmd = app.add_subcommand("trace", "trace inspection");
    trace_cmd->require_subcommand(1);
    auto* analyze = trace_cmd->add_subcommand("analyze", "delivery, convergence and loops");
    std::string trace_path, analyze_scenario;
    double settle_seconds = 5.0;
    analyze->add_option("--trace", trace_path, "trace file")->required();
    analyze->add_option("--scenario", analyze_scenario, "scenario the trace came from")
        ->required();
    analyze->add_option("--settle", settle_seconds,
                        "quiet window that counts as converged, seconds");
    analyze->callback([&] {
        const Trace trace = load_trace(trace_path);
        const Scenario sc = load_scenario(analyze_scenario);
        const RunReport report = summarize(trace, sc, seconds_to_us(settle_seconds));
        print_report(out, report);
    });

    // --- topo gen ---
    auto* topo_cmd = app.add_subcommand("topo", "topology helpers");
    topo_cmd->require_subcommand(1);
    auto* gen = topo_cmd->add_subcommand("gen", "random connected sensor field");
    std::size_t gen_n = 0;
    double gen_width = 0, gen_height = 0, gen_range = 0;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--n", gen_n, "node count (node 0 is the base station)")->required();
    gen->add_option("--width", gen_width, "field width")->required();
    gen->add_option("--height", gen_height, "field height")->required();
    gen->add_option("--range", gen_range, "radio range, same for every node")->required();
    gen->add_option("--seed", gen_seed, "placement seed");
    gen->add_option("--out", gen_out, "write the topology here instead of stdout");
    gen->callback([&] {
        const Topology topo = generate_topology(gen_n, gen_width, gen_height, gen_range,
                                                gen_seed);
        if (gen_out.empty()) {
            write_topology(out, topo);
        } else {
            std::ofstream f(gen_out);
            if (!f) throw ParseError(gen_out, 0, "cannot open file for writing");
            write_topology(f, topo);
        }
    });

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("wsnsim");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const TopologyError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}

}  // namespace wsn
