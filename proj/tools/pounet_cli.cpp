// pounet_cli: dataset generation, training, sweeps and result tables.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 run failure.

#include "pounet/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace pounet;
using namespace pounet::cli;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRun = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::string out = "pounet_out";
    std::string profile = "paper";
};

void report_progress(const RunSpec& s, const RunOutcome& r) {
    const auto& train = r.report.contains("train") ? r.report["train"] : io::Json();
    const double rel = train.is_object() && train["final_rel_l2"].is_number() ? train["final_rel_l2"].get<double>() : NAN;
    std::fprintf(stderr, "%-28s seed %-6llu %-6s rel_l2 %.3e  %.1fs\n", s.id.c_str(),
                 static_cast<unsigned long long>(s.seed), r.ok ? "ok" : "FAILED", rel, r.wall_time);
    if (!r.ok) std::fprintf(stderr, "  %s\n", r.report.value("error", "").c_str());
}

int cmd_gen_data(const Options& o) {
    const auto c = load_config(o.config, o.profile);
    if (c.kind == ExperimentKind::theorem1) throw ConfigError(o.config, 0, "theorem1 experiments have no dataset");
    std::set<std::string> done;
    for (const auto& s : plan_runs(c, o.seed))
        if (done.insert(s.dataset_id).second) {
            const auto path = fs::path(o.out) / (s.dataset_id + ".csv");
            io::save_dataset(path, make_dataset(c, s.p, s.seed));
            std::printf("%s\n", path.string().c_str());
        }
    return 0;
}

int cmd_sweep(const Options& o, bool single) {
    auto c = load_config(o.config, o.profile);
    if (single) {
        if (c.kind == ExperimentKind::theorem1) throw ConfigError(o.config, 0, "use the theorem1 subcommand");
        if (c.p.size() > 1 || c.n_part.size() != 1 || c.m_max.size() != 1)
            throw ConfigError(o.config, 0, "train needs a single (p, n_part, m_max) cell; use sweep for grids");
        c.n_runs = 1;
    }
    const auto summary = run_sweep(c, o.out, o.jobs, o.seed, report_progress);
    if (c.kind == ExperimentKind::theorem1) {
        std::cout << io::read_text(fs::path(o.out) / "theorem1_slopes.csv");
        return 0;
    }
    std::cout << io::read_text(fs::path(o.out) / "aggregate.csv");
    if (summary.n_failed) {
        std::fprintf(stderr, "%zu of %zu runs failed\n", summary.n_failed, summary.n_runs);
        return kExitRun;
    }
    return 0;
}

int cmd_report(const std::string& dir) {
    std::cout << emit_convergence_table(dir);
    return 0;
}

int cmd_theorem1(const Options& o) {
    Theorem1Block t;
    if (!o.config.empty()) {
        const auto c = load_config(o.config, o.profile);
        if (c.kind != ExperimentKind::theorem1) throw ConfigError(o.config, 0, "expected kind = theorem1");
        t = c.theorem1;
    }
    write_scaling_table(o.out, t);
    std::cout << io::read_text(fs::path(o.out) / "theorem1_slopes.csv");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partition-of-unity network experiments"};
    app.require_subcommand(1);
    Options o;
    std::string report_dir;

    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* cfg = sub->add_option("--config", o.config, "experiment config (INI)")->check(CLI::ExistingFile);
        if (needs_config) cfg->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--profile", o.profile, "budget profile")->check(CLI::IsMember({"paper", "ci"}));
    };
    auto* gen = app.add_subcommand("gen-data", "write the datasets a config would use");
    add_common(gen, true);
    gen->add_option("--seed", o.seed, "base seed (overrides the config)");
    auto* train = app.add_subcommand("train", "train one configuration cell with one seed");
    add_common(train, true);
    train->add_option("--seed", o.seed, "seed (overrides the config)");
    auto* sweep = app.add_subcommand("sweep", "run every cell and seed of a config, then aggregate");
    add_common(sweep, true);
    sweep->add_option("--seed", o.seed, "base seed (overrides the config)");
    sweep->add_option("--jobs", o.jobs, "parallel runs")->check(CLI::PositiveNumber);
    auto* report = app.add_subcommand("report", "rebuild aggregate.csv from a finished run directory");
    report->add_option("run_dir", report_dir, "directory written by sweep")->required()->check(CLI::ExistingDirectory);
    auto* theorem1 = app.add_subcommand("theorem1", "frozen-partition convergence slopes");
    add_common(theorem1, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) return cmd_gen_data(o);
        if (*train) return cmd_sweep(o, true);
        if (*sweep) return cmd_sweep(o, false);
        if (*report) return cmd_report(report_dir);
        if (*theorem1) return cmd_theorem1(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRun;
    }
    return kExitConfig;
}
