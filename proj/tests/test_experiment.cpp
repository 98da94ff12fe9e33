#include "pounet/experiment.hpp"

#include <gtest/gtest.h>

using namespace pounet;
using namespace pounet::cli;

namespace {

ExperimentConfig parse(const std::string& text, const std::string& profile = "paper") {
    std::istringstream is(text);
    return parse_config(IniFile::parse(is, "test.ini"), profile);
}

std::size_t error_line(const std::string& text, const std::string& profile = "paper") {
    try {
        parse(text, profile);
    } catch (const ConfigError& e) {
        return e.line();
    }
    ADD_FAILURE() << "no ConfigError for:\n" << text;
    return 0;
}

fs::path fresh_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("pounet_test_" + name);
    fs::remove_all(p);
    return p;
}

io::Json record(const std::string& model, std::optional<unsigned> m, double rel, bool ok = true) {
    io::Json j = {{"experiment", "e"}, {"model", model},  {"p", nullptr}, {"n_part", model == "pounet" ? io::Json(4) : io::Json(nullptr)},
                  {"m_max", m ? io::Json(*m) : io::Json(nullptr)}, {"status", ok ? "ok" : "failed"}};
    if (ok) j["train"] = {{"final_rel_l2", rel}};
    return j;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() != "timing.json")
            out[fs::relative(e.path(), root).string()] = io::read_text(e.path());
    return out;
}

const char* kTiny = R"(
[experiment]
kind = tri_wave
seed = 7
n_runs = 2

[data]
p = 1
n_data = 64

[model]
architecture = resnet
n_part = 2^p
m_max = 1
width = 4*2^p
depth = 2

[optim]
n_epoch = 5
lr = 0.01

[baseline]
width = 8
depth = 2
epochs = 5
)";

}  // namespace

TEST(Ini, ParsesSectionsAndComments) {
    std::istringstream is("# top\n[a]\nx = 1 # trailing\ny=two;three\n\n[b]\nz = \n");
    const auto ini = IniFile::parse(is);
    EXPECT_EQ(ini.find("a", "x")->text, "1");
    EXPECT_EQ(ini.find("a", "x")->line, 3u);
    EXPECT_EQ(ini.find("a", "y")->text, "two;three");
    EXPECT_EQ(ini.find("b", "z")->text, "");
    EXPECT_EQ(ini.find("b", "w"), nullptr);
}

TEST(Ini, SyntaxErrorsCarryLineNumbers) {
    const auto line = [](const std::string& t) {
        std::istringstream is(t);
        try {
            IniFile::parse(is);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    EXPECT_EQ(line("x = 1\n"), 1u);
    EXPECT_EQ(line("[a]\nx = 1\nnonsense\n"), 3u);
    EXPECT_EQ(line("[a]\nx = 1\nx = 2\n"), 3u);
    EXPECT_EQ(line("[a]\n[a\n"), 2u);
}

TEST(Config, Defaults) {
    const auto c = parse("[experiment]\nkind = smooth_cross\n");
    EXPECT_EQ(c.name, "smooth_cross");
    EXPECT_EQ(c.n_per_axis, 501u);
    EXPECT_EQ(c.optim.cfg.lr, 1e-3);
    EXPECT_EQ(c.optim.cfg.n_epoch, 100u);
    EXPECT_FALSE(c.pretrain.present);
    EXPECT_FALSE(c.baseline.enabled);
}

TEST(Config, RulesAndLists) {
    const auto c = parse(kTiny);
    EXPECT_EQ(c.kind, ExperimentKind::tri_wave);
    EXPECT_EQ(c.n_part.size(), 1u);
    EXPECT_EQ(c.n_part[0].eval(3u), 8u);
    EXPECT_EQ(c.width.eval(3u), 32u);
    EXPECT_TRUE(c.baseline.enabled);
    EXPECT_EQ(c.baseline.width.eval(3u), 8u);
}

TEST(Config, ErrorsPointAtTheLine) {
    EXPECT_EQ(error_line("[experiment]\nkind = smooth_cross\nbogus = 1\n"), 3u);
    EXPECT_EQ(error_line("[experiment]\nkind = nope\n"), 2u);
    EXPECT_EQ(error_line("[experiment]\nkind = smooth_cross\n[optim]\nlr = fast\n"), 4u);
    EXPECT_EQ(error_line("[experiment]\nkind = smooth_cross\n[optim]\nn_epoch = -3\n"), 4u);
    EXPECT_EQ(error_line("[experiment]\nkind = smooth_cross\n[optim]\nrho = 2\n"), 3u);
    EXPECT_EQ(error_line("[experiment]\nkind = smooth_cross\n[model]\nn_part = 2^p\n"), 4u);
    EXPECT_EQ(error_line("[experiment]\nkind = tri_wave\n"), 2u);
    EXPECT_EQ(error_line("[experiment]\nkind = smooth_cross\n\n[extras]\n"), 4u);
    EXPECT_EQ(error_line("[experiment]\nkind = smooth_cross\n[model]\nm_max = 1,,2\n"), 4u);
    EXPECT_THROW(parse("[experiment]\nkind = smooth_cross\n", "fast"), ConfigError);
}

TEST(Config, ProfileOverrides) {
    const std::string text = "[experiment]\nkind = smooth_cross\n[optim]\nn_epoch = 100\n[profile.ci]\noptim.n_epoch = 3\n"
                              "experiment.n_runs = 2\n";
    EXPECT_EQ(parse(text).optim.cfg.n_epoch, 100u);
    const auto ci = parse(text, "ci");
    EXPECT_EQ(ci.optim.cfg.n_epoch, 3u);
    EXPECT_EQ(ci.n_runs, 2u);
    EXPECT_EQ(error_line(text + "optim.bogus = 1\n", "ci"), 8u);
    EXPECT_EQ(error_line(text + "nodot = 1\n", "ci"), 8u);
}

TEST(Plan, SmoothCrossGrid) {
    const auto c = parse(
        "[experiment]\nkind = smooth_cross\nn_runs = 10\nseed = 100\n[model]\nn_part = 1,2,4,8,16\nm_max = 0,1,2,3,4\n");
    const auto plan = plan_runs(c);
    EXPECT_EQ(plan.size(), 250u);
    for (const auto& s : plan) {
        EXPECT_EQ(s.seed, 100 + s.run);
        EXPECT_EQ(s.dataset_id, "cross");
    }
    EXPECT_EQ(plan_runs(c, 5).front().seed, 5u);
}

TEST(Plan, WavesWithBaseline) {
    const auto c = parse("[experiment]\nkind = tri_wave\nn_runs = 5\n[data]\np = 1,2,3,4,5\n[model]\narchitecture = resnet\n"
                         "n_part = 2^p\nm_max = 1\nwidth = 4*2^p\n[baseline]\nwidth = 4*2^p\n");
    const auto plan = plan_runs(c);
    std::size_t pou = 0, base = 0;
    for (const auto& s : plan) {
        (s.model == "pounet" ? pou : base)++;
        EXPECT_EQ(s.width, 4u << *s.p);
        if (s.model == "pounet") EXPECT_EQ(s.n_part, 1u << *s.p);
    }
    EXPECT_EQ(pou, 25u);
    EXPECT_EQ(base, 25u);
}

TEST(Plan, SharedDatasetsPerSeed) {
    const auto c = parse(kTiny);
    const auto plan = plan_runs(c);
    for (const auto& a : plan)
        for (const auto& b : plan)
            if (a.seed == b.seed && a.p == b.p) EXPECT_EQ(a.dataset_id, b.dataset_id);
    const auto d1 = make_dataset(c, 1u, 7);
    const auto d2 = make_dataset(c, 1u, 7);
    const auto d3 = make_dataset(c, 1u, 8);
    EXPECT_EQ(d1.xs(), d2.xs());
    EXPECT_NE(d1.xs(), d3.xs());
}

TEST(Aggregate, HandComputedStatistics) {
    const auto rows = aggregate_reports({record("pounet", 1, 1e-2), record("pounet", 1, 1e-4), record("pounet", 1, 1e-3)});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_DOUBLE_EQ(rows[0].median(), 1e-3);
    EXPECT_NEAR(rows[0].geomean(), 1e-3, 1e-15);
    EXPECT_NEAR(rows[0].lognorm_std(), 1.0, 1e-12);
}

TEST(Aggregate, SingleRunHasZeroStd) {
    const auto csv = aggregate_csv(aggregate_reports({record("baseline", std::nullopt, 0.5)}));
    EXPECT_EQ(csv, std::string(kAggregateHeader) + "\ne,baseline,,,,0.5,0.5,0,1,0\n");
}

TEST(Aggregate, FailedRunsAreMissing) {
    const auto rows = aggregate_reports({record("pounet", 2, 0.1), record("pounet", 2, 0.0, false)});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].rel_l2.size(), 1u);
    EXPECT_EQ(rows[0].n_missing, 1u);
    const auto all_failed = aggregate_csv(aggregate_reports({record("pounet", 2, 0.0, false)}));
    EXPECT_NE(all_failed.find("e,pounet,,4,2,,,,0,1"), std::string::npos);
}

TEST(Aggregate, EmptyDirectoryIsAnError) {
    const auto dir = fresh_dir("empty");
    fs::create_directories(dir / "runs");
    EXPECT_THROW(emit_convergence_table(dir), std::runtime_error);
}

TEST(Sweep, WritesArtifactsAndIsReproducible) {
    const auto c = parse(kTiny);
    const auto a = fresh_dir("sweep_a"), b = fresh_dir("sweep_b");
    const auto sa = run_sweep(c, a, 1);
    const auto sb = run_sweep(c, b, 2);
    EXPECT_EQ(sa.n_runs, 4u);
    EXPECT_EQ(sa.n_failed, 0u);
    EXPECT_EQ(sb.n_failed, 0u);
    EXPECT_TRUE(fs::exists(a / "runs" / "pounet_p1_n2_m1_r0" / "checkpoint.json"));
    EXPECT_TRUE(fs::exists(a / "runs" / "baseline_p1_r1" / "trace.csv"));
    EXPECT_TRUE(fs::exists(a / "data" / "p1_s7.csv"));
    EXPECT_TRUE(fs::exists(a / "aggregate.csv"));
    EXPECT_EQ(read_tree(a), read_tree(b));

    const auto ckpt = io::Json::parse(io::read_text(a / "runs" / "pounet_p1_n2_m1_r0" / "checkpoint.json"));
    const auto model = io::checkpoint_from_json<ResNetPou>(ckpt);
    const auto report = io::Json::parse(io::read_text(a / "runs" / "pounet_p1_n2_m1_r0" / "report.json"));
    const auto data = io::load_dataset(a / "data" / "p1_s7.csv");
    EXPECT_EQ(bench::relative_l2(predict(model, data.xs()), data.ys()), report["train"]["final_rel_l2"].get<double>());
}

TEST(Sweep, ScalingTable) {
    const auto tab = scaling_table(Theorem1Block{});
    EXPECT_EQ(tab.points_csv.rfind("m,n_part,rms\n", 0), 0u);
    std::istringstream is(tab.slopes_csv);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        const auto m = std::stoi(line.substr(0, line.find(',')));
        const double slope = std::stod(line.substr(line.find(',') + 1));
        EXPECT_NEAR(slope, -(m + 1.0), 0.5) << line;
    }
}
