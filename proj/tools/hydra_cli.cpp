// hydra: scenario runner for the hybrid domain-aware fusion pipeline.
//
// Subcommands: run, sweep, ablate, scores, validate. All outputs are
// deterministic given the manifest; timing.csv (--timing) is the one
// deliberately non-reproducible file.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hydra/report.hpp"
#include "hydra/runner.hpp"

namespace fs = std::filesystem;
using hydra::config::ConfigError;
using hydra::config::Tree;

namespace {

struct CommonArgs {
    std::string scenario;
    std::string method;
    std::string out;
    std::string seed;  // string so the manifest echoes it verbatim
    std::vector<std::string> sets;
    int jobs = 0;
    bool timing = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool method_flag = true) {
    cmd->add_option("--scenario", args.scenario, "scenario config file")->required();
    if (method_flag) cmd->add_option("--method", args.method, "fusion method");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_option("--set", args.sets, "config override KEY=VALUE (repeatable)");
    cmd->add_option("--jobs", args.jobs, "worker threads for frame execution");
    cmd->add_flag("--timing", args.timing, "also write (non-deterministic) timing.csv");
}

Tree resolve_tree(const CommonArgs& args) {
    Tree tree = hydra::runner::default_tree();
    tree.merge(Tree::parse_file(args.scenario));
    for (const std::string& kv : args.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
        }
        tree.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.method.empty()) tree.set("run.method", args.method);
    if (!args.seed.empty()) tree.set("sim.seed", args.seed);
    if (args.jobs > 0) tree.set("run.jobs", std::to_string(args.jobs));
    return tree;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
    return out;
}

fs::path output_dir(const CommonArgs& args, const std::string& command, const Tree& tree) {
    if (!args.out.empty()) return fs::path(args.out);
    const char* root_env = std::getenv("HYDRA_OUT_ROOT");
    const fs::path root = root_env != nullptr ? fs::path(root_env) : fs::path("hydra_out");
    const std::string stem = fs::path(args.scenario).stem().string();
    return root / (command + "-" + sanitize(stem) + "-" +
                   sanitize(tree.get_string("run.method", "hydra")));
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void print_summary(const hydra::runner::RunConfig& cfg, const hydra::runner::RunResult& res) {
    std::printf("%-24s frames=%-4d total AP@0.3=%.4f AP@0.5=%.4f AP@0.7=%.4f\n",
                hydra::runner::method_name(cfg.method), res.frames, res.report.total[0],
                res.report.total[1], res.report.total[2]);
}

int cmd_run(const CommonArgs& args) {
    const Tree tree = resolve_tree(args);
    const hydra::runner::RunConfig cfg = hydra::runner::build_run_config(tree);

    Timer timer;
    const hydra::runner::RunResult res = hydra::runner::run_method(cfg);
    const double elapsed = timer.seconds();

    const fs::path dir = output_dir(args, "run", tree);
    fs::create_directories(dir);
    hydra::report::write_file((dir / "report.json").string(), hydra::report::to_json(cfg, res));
    hydra::report::write_file((dir / "report.csv").string(), hydra::report::to_csv(cfg, res));
    hydra::report::write_file((dir / "manifest.echo").string(), tree.echo());
    if (args.timing) {
        hydra::report::write_file((dir / "timing.csv").string(),
                                  "method,frames,seconds\n" +
                                      std::string(hydra::runner::method_name(cfg.method)) + "," +
                                      std::to_string(res.frames) + "," + std::to_string(elapsed) +
                                      "\n");
    }
    print_summary(cfg, res);
    std::printf("reports written to %s\n", dir.string().c_str());
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& key,
              const std::vector<std::string>& values) {
    if (key.empty()) throw ConfigError("sweep: --key is required");
    if (values.empty()) throw ConfigError("sweep: --values must list at least one value");

    const Tree base = resolve_tree(args);

    // Validate every point before writing anything. The master seed is
    // left untouched so a single-value sweep is exactly cmd_run; frames
    // already draw from (seed, frame)-keyed streams and the swept key
    // itself differentiates the points.
    std::vector<Tree> trees;
    for (const std::string& v : values) {
        Tree t = base;
        t.set(key, v);
        hydra::runner::build_run_config(t);
        trees.push_back(std::move(t));
    }

    const fs::path dir = output_dir(args, "sweep", base);
    fs::create_directories(dir);
    std::string combined = hydra::report::kSweepHeader;
    std::string timing = "method,sweep_value,frames,seconds\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const hydra::runner::RunConfig cfg = hydra::runner::build_run_config(trees[i]);
        Timer timer;
        const hydra::runner::RunResult res = hydra::runner::run_method(cfg);
        timing += std::string(hydra::runner::method_name(cfg.method)) + "," + values[i] + "," +
                  std::to_string(res.frames) + "," + std::to_string(timer.seconds()) + "\n";
        combined += hydra::report::sweep_rows(cfg, res, key, values[i]);

        const fs::path sub = dir / (sanitize(key) + "_" + sanitize(values[i]));
        fs::create_directories(sub);
        hydra::report::write_file((sub / "report.json").string(),
                                  hydra::report::to_json(cfg, res));
        hydra::report::write_file((sub / "report.csv").string(), hydra::report::to_csv(cfg, res));
        hydra::report::write_file((sub / "manifest.echo").string(), trees[i].echo());
        print_summary(cfg, res);
    }
    hydra::report::write_file((dir / "combined.csv").string(), combined);
    hydra::report::write_file((dir / "manifest.echo").string(),
                              "# sweep key: " + key + "\n" + base.echo());
    if (args.timing) hydra::report::write_file((dir / "timing.csv").string(), timing);
    std::printf("sweep reports written to %s\n", dir.string().c_str());
    return 0;
}

int cmd_ablate(const CommonArgs& args) {
    Tree base = resolve_tree(args);
    base.set("sim.pose_noise_sigma", "0.4");  // the grid is defined at this noise level
    if (!base.has("sim.heading_noise_sigma") ||
        base.get_string("sim.heading_noise_sigma", "0") == "0" ||
        base.get_string("sim.heading_noise_sigma", "0.0") == "0.0") {
        base.set("sim.heading_noise_sigma", "0.4");
    }

    struct Cell {
        bool classifier;
        bool pgo;
        const char* method;
        const char* tag;
    };
    const Cell cells[4] = {
        {false, false, "hydra_no_classifier", "cls_off_pgo_off"},
        {false, true, "hydra_no_classifier", "cls_off_pgo_on"},
        {true, false, "hydra_no_pgo", "cls_on_pgo_off"},
        {true, true, "hydra", "cls_on_pgo_on"},
    };

    std::vector<Tree> trees;
    for (const Cell& cell : cells) {
        Tree t = base;
        t.set("run.method", cell.method);
        if (!cell.pgo) t.set("pgo.max_iters", "0");
        hydra::runner::build_run_config(t);
        trees.push_back(std::move(t));
    }

    const fs::path dir = output_dir(args, "ablate", base);
    fs::create_directories(dir);
    std::string csv = "classifier,agpgo,ap30,ap50,ap70\n";
    for (int i = 0; i < 4; ++i) {
        const hydra::runner::RunConfig cfg = hydra::runner::build_run_config(trees[i]);
        const hydra::runner::RunResult res = hydra::runner::run_method(cfg);
        char row[128];
        std::snprintf(row, sizeof(row), "%s,%s,%.6f,%.6f,%.6f\n",
                      cells[i].classifier ? "on" : "off", cells[i].pgo ? "on" : "off",
                      res.report.total[0], res.report.total[1], res.report.total[2]);
        csv += row;
        const fs::path sub = dir / cells[i].tag;
        fs::create_directories(sub);
        hydra::report::write_file((sub / "report.json").string(),
                                  hydra::report::to_json(cfg, res));
        hydra::report::write_file((sub / "report.csv").string(), hydra::report::to_csv(cfg, res));
        hydra::report::write_file((sub / "manifest.echo").string(), trees[i].echo());
        print_summary(cfg, res);
    }
    hydra::report::write_file((dir / "ablate.csv").string(), csv);
    hydra::report::write_file((dir / "manifest.echo").string(), base.echo());
    std::printf("ablation grid written to %s\n", dir.string().c_str());
    return 0;
}

int cmd_scores(const CommonArgs& args) {
    Tree with_noise = resolve_tree(args);
    with_noise.set("run.method", "no_fusion");  // classification is method-independent
    Tree without_noise = with_noise;
    without_noise.set("sim.pose_noise_sigma", "0.0");
    without_noise.set("sim.heading_noise_sigma", "0.0");

    const hydra::runner::RunConfig cfg_noise = hydra::runner::build_run_config(with_noise);
    const hydra::runner::RunConfig cfg_clean = hydra::runner::build_run_config(without_noise);
    const hydra::runner::RunResult res_clean = hydra::runner::run_method(cfg_clean);
    const hydra::runner::RunResult res_noise = hydra::runner::run_method(cfg_noise);

    std::string csv = "kind,noise_setup,count,mean,max,min\n";
    for (const auto& [kind, clean] : res_clean.scores_by_kind) {
        char row[160];
        std::snprintf(row, sizeof(row), "%s,wo_noise,%d,%.6f,%.6f,%.6f\n", kind.c_str(),
                      clean.count, clean.mean, clean.max, clean.min);
        csv += row;
        const hydra::runner::ScoreStats& noisy = res_noise.scores_by_kind.at(kind);
        std::snprintf(row, sizeof(row), "%s,w_noise,%d,%.6f,%.6f,%.6f\n", kind.c_str(),
                      noisy.count, noisy.mean, noisy.max, noisy.min);
        csv += row;
    }

    const fs::path dir = output_dir(args, "scores", with_noise);
    fs::create_directories(dir);
    hydra::report::write_file((dir / "scores.csv").string(), csv);
    hydra::report::write_file((dir / "manifest.echo").string(), with_noise.echo());
    std::fputs(csv.c_str(), stdout);
    std::printf("score table written to %s\n", dir.string().c_str());
    return 0;
}

int cmd_validate(const CommonArgs& args) {
    const Tree tree = resolve_tree(args);
    const hydra::runner::RunConfig cfg = hydra::runner::build_run_config(tree);
    std::printf("OK: %s (%zu agents, %d frames, method %s)\n", args.scenario.c_str(),
                cfg.scenario.agents.size(), cfg.scenario.n_frames,
                hydra::runner::method_name(cfg.method));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid domain-aware collaborative-perception simulator"};
    app.require_subcommand(1);

    CommonArgs run_args;
    CLI::App* run = app.add_subcommand("run", "execute a scenario with one method");
    add_common(run, run_args);

    CommonArgs sweep_args;
    std::string sweep_key;
    std::vector<std::string> sweep_values;
    CLI::App* sweep = app.add_subcommand("sweep", "run a config-key sweep");
    add_common(sweep, sweep_args);
    sweep->add_option("--key", sweep_key, "dotted config key to sweep")->required();
    sweep->add_option("--values", sweep_values, "sweep values")->required()->delimiter(',');

    CommonArgs ablate_args;
    CLI::App* ablate =
        app.add_subcommand("ablate", "classifier x AG-PGO grid at sigma = 0.4");
    add_common(ablate, ablate_args, /*method_flag=*/false);

    CommonArgs scores_args;
    CLI::App* scores = app.add_subcommand("scores", "per-agent-kind domain score table");
    add_common(scores, scores_args, /*method_flag=*/false);

    CommonArgs validate_args;
    CLI::App* validate = app.add_subcommand("validate", "check a scenario config");
    add_common(validate, validate_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_key, sweep_values);
        if (ablate->parsed()) return cmd_ablate(ablate_args);
        if (scores->parsed()) return cmd_scores(scores_args);
        if (validate->parsed()) return cmd_validate(validate_args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
