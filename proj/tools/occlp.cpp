// occlp: solve, rollout, verify and run (all three) for the built-in problems.
//
//   occlp run --problem shift --out out/shift
//   occlp solve --config configs/example1.cfg
//   occlp rollout --config configs/example1.cfg --policy heuristic

#include "occlp/occlp.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

namespace fs = std::filesystem;
using namespace occlp;

namespace {

struct Flags {
    std::string config;
    std::map<std::string, std::string> values; // config key -> flag text
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
    const std::pair<const char*, const char*> opts[] = {
        {"problem", "built-in problem (example1, shift)"},
        {"alpha", "discount factor in (0,1)"},
        {"y0", "initial state, comma separated"},
        {"degree", "per-coordinate monomial degree"},
        {"state-grid", "base state grid points per axis"},
        {"control-grid", "base control grid points per axis"},
        {"candidate-grid", "refinement candidates, state:control"},
        {"tol", "dual feasibility tolerance"},
        {"epsilon", "rollout truncation target (clears steps)"},
        {"steps", "fixed rollout horizon T"},
        {"policy", "minimizer or heuristic"},
        {"discard", "atom weight threshold for the heuristic measure"},
        {"out", "output directory"},
    };
    for (const auto& [name, help] : opts) {
        std::string key = name;
        for (auto& c : key) c = c == '-' ? '_' : c;
        cmd->add_option_function<std::string>(std::string("--") + name,
                                              [&f, key](const std::string& v) { f.values[key] = v; }, help);
    }
}

RunConfig load(const Flags& f) {
    ConfigEntries entries = f.config.empty() ? ConfigEntries{} : read_config_file(f.config);
    for (const auto& [k, v] : f.values) {
        if (k == "epsilon") entries.erase("steps");
        if (k == "steps") entries.erase("epsilon");
        entries[k] = v;
    }
    return make_config(entries);
}

std::string path_in(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.out) / name).string(); }

int do_solve(const RunConfig& cfg) {
    fs::create_directories(cfg.out);
    const StoredSolution s = run_solve(cfg);
    write_solution(path_in(cfg, "solution.json"), s);
    const std::string summary = solve_summary(s, cfg.discard);
    write_text(path_in(cfg, "summary.txt"), summary);
    std::cout << summary;
    return 0;
}

int do_rollout(const RunConfig& cfg, const std::string& which) {
    fs::create_directories(cfg.out);
    const StoredSolution s = read_solution(path_in(cfg, "solution.json"));
    const DiscreteControlProblem problem = problem_of(s);
    const std::string csv = path_in(cfg, "trajectory_" + which + ".csv");
    const std::string svg = path_in(cfg, "trajectory_" + which + ".svg");
    try {
        const Rollout r = run_rollout(problem, s, cfg, which);
        write_text(csv, trajectory_csv(r, problem.state_dim, problem.control_dim) + rollout_footer(r, s, which));
        write_text(svg, trajectory_svg(r, policy_measure(s, cfg), problem.state_region));
        std::cout << which << ": V=" << format_g6(r.truncated_value) << " gap=" << format_g6(gap_certificate(r, s.certificate))
                  << " T=" << r.horizon() << "\n";
    } catch (const RolloutAborted& e) {
        write_text(csv, trajectory_csv(e.partial, problem.state_dim, problem.control_dim) + "# aborted\n");
        throw;
    }
    return 0;
}

int do_verify(const RunConfig& cfg) {
    fs::create_directories(cfg.out);
    const StoredSolution s = read_solution(path_in(cfg, "solution.json"));
    const VerificationReport rep = run_verify(s, cfg);
    const std::string text = rep.text();
    write_text(path_in(cfg, "report.txt"), text);
    std::cout << text;
    return rep.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Occupational-measure LP toolkit for discounted optimal control"};
    app.require_subcommand(1);
    Flags f;
    auto* solve = app.add_subcommand("solve", "refined LP solve; writes solution.json and summary.txt");
    auto* roll = app.add_subcommand("rollout", "closed-loop rollout; writes trajectory CSV and SVG");
    auto* verify = app.add_subcommand("verify", "oracle and optimality checks; writes report.txt");
    auto* run = app.add_subcommand("run", "solve, both rollouts, verify");
    for (auto* cmd : {solve, roll, verify, run}) add_common(cmd, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) std::cerr << app.help();
        return app.exit(e);
    }

    try {
        const RunConfig cfg = load(f);
        if (*solve) return do_solve(cfg);
        if (*roll) return do_rollout(cfg, cfg.policy);
        if (*verify) return do_verify(cfg);
        do_solve(cfg);
        do_rollout(cfg, "minimizer");
        do_rollout(cfg, "heuristic");
        return do_verify(cfg);
    } catch (const std::exception& e) {
        std::cerr << "occlp: " << e.what() << "\n";
        return 1;
    }
}
