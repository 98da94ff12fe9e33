/**
 * @file experiment.hpp
 * @brief Experiment configuration, sweeps over runs, and result tables.
 */
#pragma once

#include "pounet/bench.hpp"
#include "pounet/io.hpp"
#include "pounet/optim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace pounet::cli {

namespace fs = std::filesystem;

/// Invalid configuration. `line()` is 0 when the problem is not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// ---------------------------------------------------------------------------
// INI reader
// ---------------------------------------------------------------------------

struct IniValue {
    std::string text;
    std::size_t line = 0;
};

class IniFile {
public:
    using Section = std::map<std::string, IniValue>;

    static IniFile parse(std::istream& is, std::string source = "<config>") {
        IniFile ini;
        ini.source_ = std::move(source);
        std::string raw, current;
        bool in_section = false;
        std::size_t lineno = 0;
        while (std::getline(is, raw)) {
            ++lineno;
            std::string line = strip(strip_comment(raw));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError(ini.source_, lineno, "unterminated section header");
                current = strip(line.substr(1, line.size() - 2));
                if (current.empty()) throw ConfigError(ini.source_, lineno, "empty section name");
                if (ini.sections_.count(current)) throw ConfigError(ini.source_, lineno, "duplicate section [" + current + "]");
                ini.sections_[current];
                ini.section_lines_[current] = lineno;
                in_section = true;
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(ini.source_, lineno, "expected 'key = value'");
            if (!in_section) throw ConfigError(ini.source_, lineno, "key outside of any section");
            const std::string key = strip(line.substr(0, eq));
            const std::string value = strip(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(ini.source_, lineno, "empty key");
            auto& sec = ini.sections_[current];
            if (sec.count(key)) throw ConfigError(ini.source_, lineno, "duplicate key '" + key + "'");
            sec[key] = {value, lineno};
        }
        return ini;
    }

    static IniFile load(const fs::path& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError(path.string(), 0, "cannot open config file");
        return parse(is, path.string());
    }

    const std::string& source() const noexcept { return source_; }
    bool has_section(const std::string& s) const { return sections_.count(s) != 0; }
    const std::map<std::string, Section>& sections() const noexcept { return sections_; }
    std::size_t section_line(const std::string& s) const {
        auto it = section_lines_.find(s);
        return it == section_lines_.end() ? 0 : it->second;
    }

    const IniValue* find(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    /// Applies `[profile.<name>]` entries of the form `section.key = value`.
    void apply_profile(const std::string& name) {
        const std::string sec = "profile." + name;
        auto it = sections_.find(sec);
        if (it == sections_.end()) return;
        const Section overrides = it->second;
        for (const auto& [dotted, v] : overrides) {
            const auto dot = dotted.find('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size())
                throw ConfigError(source_, v.line, "profile override must be 'section.key = value'");
            const std::string target = dotted.substr(0, dot);
            if (target.rfind("profile.", 0) == 0) throw ConfigError(source_, v.line, "profiles cannot override profiles");
            if (!sections_.count(target)) section_lines_[target] = v.line;
            sections_[target][dotted.substr(dot + 1)] = v;
        }
    }

private:
    static std::string strip(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    }
    static std::string strip_comment(const std::string& s) {
        for (std::size_t i = 0; i < s.size(); ++i)
            if ((s[i] == '#' || s[i] == ';') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) return s.substr(0, i);
        return s;
    }

    std::string source_;
    std::map<std::string, Section> sections_;
    std::map<std::string, std::size_t> section_lines_;
};

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class ExperimentKind { smooth_cross, tri_wave, quad_wave, theorem1, custom };

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::smooth_cross: return "smooth_cross";
        case ExperimentKind::tri_wave: return "tri_wave";
        case ExperimentKind::quad_wave: return "quad_wave";
        case ExperimentKind::theorem1: return "theorem1";
        case ExperimentKind::custom: return "custom";
    }
    return "?";
}

/// A count that may scale with the wave frequency: `8`, `2^p` or `4*2^p`.
struct SizeRule {
    std::size_t factor = 1;
    bool pow2 = false;

    std::size_t eval(std::optional<unsigned> p) const {
        if (!pow2) return factor;
        return factor << *p;
    }
    std::string str() const { return pow2 ? (factor == 1 ? "2^p" : std::to_string(factor) + "*2^p") : std::to_string(factor); }
    bool operator==(const SizeRule&) const = default;
};

struct OptimBlock {
    LsgdConfig cfg;
    bool present = false;
};

struct BaselineBlock {
    bool enabled = false;
    SizeRule width{32, false};
    std::size_t depth = 8;
    std::size_t epochs = 1000;
    double lr = 1e-3;
};

struct Theorem1Block {
    std::vector<unsigned> m{1, 2};
    std::vector<std::size_t> n_part{4, 8, 16, 32};
    std::size_t n_points = bench::kOracleGridPoints;
};

struct ExperimentConfig {
    std::string name;
    ExperimentKind kind = ExperimentKind::smooth_cross;
    std::uint64_t seed = 0;
    std::size_t n_runs = 1;
    std::string profile = "paper";

    // data
    std::size_t n_per_axis = 501;
    bench::Sampling sampling = bench::Sampling::grid;
    std::vector<unsigned> p;
    std::size_t n_data = 2000;
    std::string data_file;

    // model
    std::string architecture = "rbf";
    std::vector<SizeRule> n_part{{1, false}};
    std::vector<unsigned> m_max{0};
    SizeRule width{8, false};
    std::size_t depth = 8;

    OptimBlock optim;
    OptimBlock pretrain;
    BaselineBlock baseline;
    Theorem1Block theorem1;

    bool is_wave() const { return kind == ExperimentKind::tri_wave || kind == ExperimentKind::quad_wave; }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"experiment", {"kind", "name", "seed", "n_runs"}},
        {"data", {"n_per_axis", "sampling", "p", "n_data", "file"}},
        {"model", {"architecture", "n_part", "m_max", "width", "depth"}},
        {"optim", {"n_epoch", "lambda", "rho", "n_stag", "lr", "rcond"}},
        {"pretrain", {"n_epoch", "lambda", "rho", "n_stag", "lr", "rcond"}},
        {"baseline", {"enabled", "width", "depth", "epochs", "lr"}},
        {"theorem1", {"m", "n_part", "n_points"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const IniFile& ini) : ini_(ini) {}

    [[noreturn]] void fail(const IniValue& v, const std::string& what) const {
        throw ConfigError(ini_.source(), v.line, what);
    }

    template <class T, class Parse>
    void get(const std::string& sec, const std::string& key, T& out, Parse parse) const {
        if (const auto* v = ini_.find(sec, key)) {
            try {
                out = parse(v->text);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                fail(*v, sec + "." + key + ": " + e.what());
            }
        }
    }

    void count(const std::string& sec, const std::string& key, std::size_t& out, std::size_t min = 0) const {
        get(sec, key, out, [&](const std::string& s) {
            const auto v = parse_uint(s);
            if (v < min) throw std::invalid_argument("must be >= " + std::to_string(min));
            return static_cast<std::size_t>(v);
        });
    }
    void real(const std::string& sec, const std::string& key, double& out) const {
        get(sec, key, out, parse_real);
    }

    static std::uint64_t parse_uint(const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
        return std::stoull(s);
    }
    static double parse_real(const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v))
            throw std::invalid_argument("expected a finite number, got '" + s + "'");
        return v;
    }
    static bool parse_bool(const std::string& s) {
        if (s == "true" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "no" || s == "0") return false;
        throw std::invalid_argument("expected true or false, got '" + s + "'");
    }
    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            if (b == std::string::npos) throw std::invalid_argument("empty list item");
            out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
        }
        if (out.empty()) throw std::invalid_argument("empty list");
        return out;
    }
    template <class T>
    static std::vector<T> parse_uint_list(const std::string& s) {
        std::vector<T> out;
        for (const auto& item : split_list(s)) out.push_back(static_cast<T>(parse_uint(item)));
        return out;
    }
    static SizeRule parse_rule(const std::string& s) {
        const auto at = s.find("2^p");
        if (at == std::string::npos) {
            const auto v = parse_uint(s);
            if (v == 0) throw std::invalid_argument("must be >= 1");
            return {static_cast<std::size_t>(v), false};
        }
        if (at + 3 != s.size()) throw std::invalid_argument("expected N, 2^p or K*2^p, got '" + s + "'");
        if (at == 0) return {1, true};
        if (s[at - 1] != '*') throw std::invalid_argument("expected N, 2^p or K*2^p, got '" + s + "'");
        const auto k = parse_uint(s.substr(0, at - 1));
        if (k == 0) throw std::invalid_argument("factor must be >= 1");
        return {static_cast<std::size_t>(k), true};
    }

    void optim_block(const std::string& sec, OptimBlock& out) const {
        out.present = ini_.has_section(sec);
        count(sec, "n_epoch", out.cfg.n_epoch);
        real(sec, "lambda", out.cfg.lambda);
        real(sec, "rho", out.cfg.rho);
        count(sec, "n_stag", out.cfg.n_stag);
        real(sec, "lr", out.cfg.lr);
        real(sec, "rcond", out.cfg.rcond);
        try {
            out.cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(ini_.source(), ini_.section_line(sec), "[" + sec + "] " + e.what());
        }
    }

private:
    const IniFile& ini_;
};

}  // namespace detail

/// Reads and validates a configuration; every problem is reported with the
/// offending line before any work starts.
inline ExperimentConfig parse_config(IniFile ini, const std::string& profile = "paper") {
    if (profile != "paper" && profile != "ci") throw ConfigError(ini.source(), 0, "unknown profile '" + profile + "'");
    for (const auto& [name, sec] : ini.sections()) {
        if (name.rfind("profile.", 0) != 0) continue;
        const auto pname = name.substr(8);
        if (pname != "paper" && pname != "ci")
            throw ConfigError(ini.source(), ini.section_line(name), "unknown profile section [" + name + "]");
    }
    ini.apply_profile(profile);
    for (const auto& [name, sec] : ini.sections()) {
        if (name.rfind("profile.", 0) == 0) continue;
        const auto allowed = detail::allowed_keys().find(name);
        if (allowed == detail::allowed_keys().end())
            throw ConfigError(ini.source(), ini.section_line(name), "unknown section [" + name + "]");
        for (const auto& [key, v] : sec)
            if (!allowed->second.count(key))
                throw ConfigError(ini.source(), v.line, "unknown key '" + key + "' in [" + name + "]");
    }

    const detail::Reader r(ini);
    ExperimentConfig c;
    c.profile = profile;
    const auto* kind = ini.find("experiment", "kind");
    if (!kind) throw ConfigError(ini.source(), ini.section_line("experiment"), "missing [experiment] kind");
    static const std::map<std::string, ExperimentKind> kinds = {{"smooth_cross", ExperimentKind::smooth_cross},
                                                                {"tri_wave", ExperimentKind::tri_wave},
                                                                {"quad_wave", ExperimentKind::quad_wave},
                                                                {"theorem1", ExperimentKind::theorem1},
                                                                {"custom", ExperimentKind::custom}};
    const auto k = kinds.find(kind->text);
    if (k == kinds.end()) r.fail(*kind, "unknown experiment kind '" + kind->text + "'");
    c.kind = k->second;
    c.name = std::string(to_string(c.kind));
    r.get("experiment", "name", c.name, [](const std::string& s) {
        if (s.empty() || s.find_first_of(",/\\\"") != std::string::npos)
            throw std::invalid_argument("name must be non-empty without , / \\ or quotes");
        return s;
    });
    r.get("experiment", "seed", c.seed, detail::Reader::parse_uint);
    r.count("experiment", "n_runs", c.n_runs, 1);

    r.count("data", "n_per_axis", c.n_per_axis, 2);
    r.get("data", "sampling", c.sampling, [](const std::string& s) {
        if (s == "grid") return bench::Sampling::grid;
        if (s == "uniform") return bench::Sampling::uniform;
        throw std::invalid_argument("expected grid or uniform");
    });
    r.get("data", "p", c.p, [](const std::string& s) {
        auto v = detail::Reader::parse_uint_list<unsigned>(s);
        for (auto q : v)
            if (q < 1 || q > 20) throw std::invalid_argument("frequencies must lie in 1..20");
        return v;
    });
    r.count("data", "n_data", c.n_data, 1);
    r.get("data", "file", c.data_file, [](const std::string& s) { return s; });

    r.get("model", "architecture", c.architecture, [](const std::string& s) {
        if (s != "rbf" && s != "resnet") throw std::invalid_argument("expected rbf or resnet");
        return s;
    });
    r.get("model", "n_part", c.n_part, [](const std::string& s) {
        std::vector<SizeRule> out;
        for (const auto& item : detail::Reader::split_list(s)) out.push_back(detail::Reader::parse_rule(item));
        return out;
    });
    r.get("model", "m_max", c.m_max, [](const std::string& s) {
        auto v = detail::Reader::parse_uint_list<unsigned>(s);
        for (auto m : v)
            if (m > 12) throw std::invalid_argument("degrees above 12 are not supported");
        return v;
    });
    r.get("model", "width", c.width, detail::Reader::parse_rule);
    r.count("model", "depth", c.depth);

    r.optim_block("optim", c.optim);
    r.optim_block("pretrain", c.pretrain);

    c.baseline.enabled = ini.has_section("baseline");
    r.get("baseline", "enabled", c.baseline.enabled, detail::Reader::parse_bool);
    r.get("baseline", "width", c.baseline.width, detail::Reader::parse_rule);
    r.count("baseline", "depth", c.baseline.depth);
    r.count("baseline", "epochs", c.baseline.epochs);
    r.real("baseline", "lr", c.baseline.lr);
    if (const auto* v = ini.find("baseline", "lr"); v && !(c.baseline.lr >= 0.0)) r.fail(*v, "baseline.lr must be >= 0");

    r.get("theorem1", "m", c.theorem1.m, detail::Reader::parse_uint_list<unsigned>);
    r.get("theorem1", "n_part", c.theorem1.n_part, [](const std::string& s) {
        auto v = detail::Reader::parse_uint_list<std::size_t>(s);
        for (auto n : v)
            if (n == 0) throw std::invalid_argument("partition counts must be >= 1");
        return v;
    });
    r.count("theorem1", "n_points", c.theorem1.n_points, 2);

    // Cross-field checks.
    const auto line_of = [&](const char* s, const char* key) {
        if (const auto* v = ini.find(s, key)) return v->line;
        return ini.section_line(s) ? ini.section_line(s) : kind->line;
    };
    if (c.is_wave() && c.p.empty()) throw ConfigError(ini.source(), line_of("data", "p"), "wave experiments need data.p");
    if (!c.is_wave() && !c.p.empty())
        throw ConfigError(ini.source(), line_of("data", "p"), "data.p only applies to wave experiments");
    if (!c.is_wave()) {
        for (const auto& rule : c.n_part)
            if (rule.pow2) throw ConfigError(ini.source(), line_of("model", "n_part"), "2^p rules need a wave experiment");
        if (c.width.pow2 || c.baseline.width.pow2)
            throw ConfigError(ini.source(), line_of("model", "width"), "2^p rules need a wave experiment");
    }
    if (c.kind == ExperimentKind::custom && c.data_file.empty())
        throw ConfigError(ini.source(), line_of("data", "file"), "custom experiments need data.file");
    if (c.kind == ExperimentKind::theorem1 && c.theorem1.n_part.size() < 2)
        throw ConfigError(ini.source(), line_of("theorem1", "n_part"), "need at least two partition counts for a slope");
    return c;
}

inline ExperimentConfig load_config(const fs::path& path, const std::string& profile = "paper") {
    return parse_config(IniFile::load(path), profile);
}

inline io::Json config_to_json(const ExperimentConfig& c) {
    auto optim = [](const OptimBlock& b) {
        return io::Json{{"n_epoch", b.cfg.n_epoch}, {"lambda", b.cfg.lambda}, {"rho", b.cfg.rho},
                        {"n_stag", b.cfg.n_stag},   {"lr", b.cfg.lr},         {"rcond", b.cfg.rcond}};
    };
    std::vector<std::string> np;
    for (const auto& r : c.n_part) np.push_back(r.str());
    io::Json j = {{"name", c.name},
                  {"kind", std::string(to_string(c.kind))},
                  {"seed", c.seed},
                  {"n_runs", c.n_runs},
                  {"profile", c.profile},
                  {"data",
                   {{"n_per_axis", c.n_per_axis},
                    {"sampling", c.sampling == bench::Sampling::grid ? "grid" : "uniform"},
                    {"p", c.p},
                    {"n_data", c.n_data},
                    {"file", c.data_file}}},
                  {"model",
                   {{"architecture", c.architecture},
                    {"n_part", np},
                    {"m_max", c.m_max},
                    {"width", c.width.str()},
                    {"depth", c.depth}}},
                  {"optim", optim(c.optim)}};
    j["pretrain"] = c.pretrain.present ? optim(c.pretrain) : io::Json(nullptr);
    j["baseline"] = c.baseline.enabled ? io::Json{{"width", c.baseline.width.str()},
                                                  {"depth", c.baseline.depth},
                                                  {"epochs", c.baseline.epochs},
                                                  {"lr", c.baseline.lr}}
                                       : io::Json(nullptr);
    j["theorem1"] = {{"m", c.theorem1.m}, {"n_part", c.theorem1.n_part}, {"n_points", c.theorem1.n_points}};
    return j;
}

// ---------------------------------------------------------------------------
// Run planning
// ---------------------------------------------------------------------------

struct RunSpec {
    std::string id;
    std::string model;  ///< "pounet" or "baseline"
    std::optional<unsigned> p;
    std::size_t n_part = 0;
    std::optional<unsigned> m_max;
    std::size_t width = 0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::string dataset_id;
};

/// Independent streams for data and model initialization from one seed.
inline Rng make_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return Rng(seq);
}

inline constexpr std::uint32_t kDataStream = 1;
inline constexpr std::uint32_t kModelStream = 2;

inline std::string dataset_id(const ExperimentConfig& c, std::optional<unsigned> p, std::uint64_t seed) {
    switch (c.kind) {
        case ExperimentKind::smooth_cross:
            return c.sampling == bench::Sampling::grid ? "cross" : "cross_s" + std::to_string(seed);
        case ExperimentKind::custom: return "custom";
        default: return "p" + std::to_string(*p) + "_s" + std::to_string(seed);
    }
}

inline std::vector<RunSpec> plan_runs(const ExperimentConfig& c, std::optional<std::uint64_t> seed_override = {}) {
    std::vector<RunSpec> out;
    if (c.kind == ExperimentKind::theorem1) return out;
    const std::uint64_t base = seed_override.value_or(c.seed);
    std::vector<std::optional<unsigned>> ps;
    if (c.is_wave())
        for (auto p : c.p) ps.push_back(p);
    else
        ps.push_back(std::nullopt);
    const auto suffix_p = [](std::optional<unsigned> p) { return p ? "_p" + std::to_string(*p) : std::string(); };
    for (const auto& p : ps) {
        for (const auto& rule : c.n_part)
            for (unsigned m : c.m_max)
                for (std::size_t r = 0; r < c.n_runs; ++r) {
                    RunSpec s;
                    s.model = "pounet";
                    s.p = p;
                    s.n_part = rule.eval(p);
                    s.m_max = m;
                    s.width = c.width.eval(p);
                    s.run = r;
                    s.seed = base + r;
                    s.dataset_id = dataset_id(c, p, s.seed);
                    s.id = "pounet" + suffix_p(p) + "_n" + std::to_string(s.n_part) + "_m" + std::to_string(m) + "_r" +
                           std::to_string(r);
                    out.push_back(std::move(s));
                }
        if (c.baseline.enabled)
            for (std::size_t r = 0; r < c.n_runs; ++r) {
                RunSpec s;
                s.model = "baseline";
                s.p = p;
                s.width = c.baseline.width.eval(p);
                s.run = r;
                s.seed = base + r;
                s.dataset_id = dataset_id(c, p, s.seed);
                s.id = "baseline" + suffix_p(p) + "_r" + std::to_string(r);
                out.push_back(std::move(s));
            }
    }
    std::set<std::string> ids;
    for (const auto& s : out)
        if (!ids.insert(s.id).second) throw ConfigError("<config>", 0, "duplicate run '" + s.id + "' (repeated list entries?)");
    return out;
}

inline Box experiment_domain(const ExperimentConfig& c, const Dataset& data) {
    switch (c.kind) {
        case ExperimentKind::smooth_cross: return Box::cube(2, -1.0, 1.0);
        case ExperimentKind::custom: {
            std::vector<double> lo(data.dim()), hi(data.dim());
            for (std::size_t j = 0; j < data.dim(); ++j) {
                lo[j] = hi[j] = data.xs()(0, j);
                for (std::size_t i = 1; i < data.size(); ++i) {
                    lo[j] = std::min(lo[j], data.xs()(i, j));
                    hi[j] = std::max(hi[j], data.xs()(i, j));
                }
                if (!(lo[j] < hi[j])) {
                    lo[j] -= 0.5;
                    hi[j] += 0.5;
                }
            }
            return {lo, hi};
        }
        default: return Box::cube(1, 0.0, 1.0);
    }
}

inline Dataset make_dataset(const ExperimentConfig& c, std::optional<unsigned> p, std::uint64_t seed) {
    switch (c.kind) {
        case ExperimentKind::smooth_cross: {
            if (c.sampling == bench::Sampling::grid) return bench::make_cross_dataset(c.n_per_axis);
            Rng rng = make_rng(seed, kDataStream);
            return bench::make_cross_dataset(c.n_per_axis, bench::Sampling::uniform, &rng);
        }
        case ExperimentKind::tri_wave:
        case ExperimentKind::quad_wave: {
            Rng rng = make_rng(seed, kDataStream);
            return bench::make_wave_dataset(
                *p, c.n_data, c.kind == ExperimentKind::tri_wave ? bench::TargetKind::tri_wave : bench::TargetKind::tri_wave_squared,
                rng);
        }
        case ExperimentKind::custom: return io::load_dataset(c.data_file);
        case ExperimentKind::theorem1: break;
    }
    throw std::logic_error("make_dataset: no dataset for this experiment kind");
}

// ---------------------------------------------------------------------------
// Single runs
// ---------------------------------------------------------------------------

struct RunOutcome {
    io::Json report;
    std::string trace_csv;
    io::Json checkpoint;
    double wall_time = 0.0;
    bool ok = false;
};

namespace detail {

inline io::Json run_header(const ExperimentConfig& c, const RunSpec& s) {
    return {{"experiment", c.name},
            {"kind", std::string(to_string(c.kind))},
            {"model", s.model},
            {"p", s.p ? io::Json(*s.p) : io::Json(nullptr)},
            {"n_part", s.model == "pounet" ? io::Json(s.n_part) : io::Json(nullptr)},
            {"m_max", s.m_max ? io::Json(*s.m_max) : io::Json(nullptr)},
            {"width", s.width},
            {"run", s.run},
            {"seed", s.seed},
            {"dataset", s.dataset_id}};
}

template <PartitionNetwork Net>
void train_pounet(const ExperimentConfig& c, PouModel<Net> model, const Dataset& data, const RunSpec& s,
                  RunOutcome& out) {
    const auto result = c.pretrain.present ? two_phase_lsgd(std::move(model), data, c.pretrain.cfg, c.optim.cfg)
                                           : lsgd(std::move(model), data, c.optim.cfg);
    const auto phi = eval_partitions(result.best.net(), data.xs());
    const auto diag = bench::partition_diagnostics(phi, data.xs());
    out.report["train"] = io::report_to_json(result.report);
    out.report["diagnostics"] = {
        {"tau", diag.tau},
        {"collapsed_count", diag.collapsed_count},
        {"max_diameter", diag.diameters.empty() ? 0.0 : *std::max_element(diag.diameters.begin(), diag.diameters.end())}};
    std::ostringstream trace;
    io::write_trace_csv(trace, result.report);
    out.trace_csv = trace.str();
    out.checkpoint = io::checkpoint_to_json(result.best, s.seed);
    out.wall_time = result.report.wall_time;
}

}  // namespace detail

inline RunOutcome execute_run(const ExperimentConfig& c, const RunSpec& s, const Dataset& data) {
    RunOutcome out;
    out.report = detail::run_header(c, s);
    out.report["n_data"] = data.size();
    const auto start = std::chrono::steady_clock::now();
    try {
        const Box domain = experiment_domain(c, data);
        Rng rng = make_rng(s.seed, kModelStream);
        if (s.model == "baseline") {
            out.report["architecture"] = std::string(bench::ScalarResNet::kArchitecture);
            auto r = bench::baseline_resnet_fit(data, s.width, c.baseline.depth, c.baseline.epochs, c.baseline.lr, rng);
            out.report["train"] = io::report_to_json(r.report);
            std::ostringstream trace;
            io::write_trace_csv(trace, r.report);
            out.trace_csv = trace.str();
            out.checkpoint = io::baseline_checkpoint_to_json(r.model, s.seed);
        } else {
            out.report["architecture"] = c.architecture;
            const auto basis = MonomialBasis::centered_on_box(domain.lower, domain.upper, *s.m_max);
            if (c.architecture == "rbf") {
                PouModel<RbfNet> model(init_rbf(s.n_part, domain, rng), basis);
                model.randomize_coeffs(rng);
                detail::train_pounet(c, std::move(model), data, s, out);
            } else {
                PouModel<ResNetPou> model(init_resnet_box(s.width, c.depth, s.n_part, domain, rng), basis);
                model.randomize_coeffs(rng);
                detail::train_pounet(c, std::move(model), data, s, out);
            }
        }
        out.report["status"] = "ok";
        out.ok = true;
    } catch (const TrainingError& e) {
        out.report["status"] = "failed";
        out.report["error"] = e.what();
        out.report["failed_epoch"] = e.epoch();
    } catch (const std::exception& e) {
        out.report["status"] = "failed";
        out.report["error"] = e.what();
    }
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline void write_run(const fs::path& dir, const RunOutcome& r) {
    fs::create_directories(dir);
    io::write_text(dir / "report.json", r.report.dump(2) + "\n");
    if (!r.trace_csv.empty()) io::write_text(dir / "trace.csv", r.trace_csv);
    if (!r.checkpoint.is_null()) io::write_text(dir / "checkpoint.json", r.checkpoint.dump() + "\n");
    io::write_text(dir / "timing.json", io::Json{{"wall_time", r.wall_time}}.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct AggregateRow {
    std::string experiment, model;
    std::optional<unsigned> p;
    std::optional<std::size_t> n_part;
    std::optional<unsigned> m_max;
    std::vector<double> rel_l2;
    std::size_t n_missing = 0;

    double median() const {
        auto v = rel_l2;
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    double geomean() const {
        double s = 0.0;
        for (double e : rel_l2) s += std::log(e);
        return std::exp(s / static_cast<double>(rel_l2.size()));
    }
    /// Sample standard deviation of log10(rel_l2); 0 for a single run.
    double lognorm_std() const {
        if (rel_l2.size() < 2) return 0.0;
        double mean = 0.0;
        for (double e : rel_l2) mean += std::log10(e);
        mean /= static_cast<double>(rel_l2.size());
        double ss = 0.0;
        for (double e : rel_l2) ss += (std::log10(e) - mean) * (std::log10(e) - mean);
        return std::sqrt(ss / static_cast<double>(rel_l2.size() - 1));
    }
};

inline constexpr std::string_view kAggregateHeader =
    "experiment,model,p,n_part,m_max,median_rel_l2,geomean_rel_l2,lognorm_std,n_runs,n_missing";

inline std::vector<AggregateRow> aggregate_reports(const std::vector<io::Json>& reports) {
    using Key = std::tuple<std::string, std::string, long, long, long>;
    std::map<Key, AggregateRow> groups;
    const auto opt = [](const io::Json& j, const char* k) -> long { return j.at(k).is_null() ? -1 : j.at(k).get<long>(); };
    for (const auto& r : reports) {
        const Key key{r.at("experiment").get<std::string>(), r.at("model").get<std::string>(), opt(r, "p"),
                      opt(r, "n_part"), opt(r, "m_max")};
        auto& row = groups[key];
        row.experiment = std::get<0>(key);
        row.model = std::get<1>(key);
        if (std::get<2>(key) >= 0) row.p = static_cast<unsigned>(std::get<2>(key));
        if (std::get<3>(key) >= 0) row.n_part = static_cast<std::size_t>(std::get<3>(key));
        if (std::get<4>(key) >= 0) row.m_max = static_cast<unsigned>(std::get<4>(key));
        const bool ok = r.value("status", "") == "ok" && r.contains("train") && r["train"]["final_rel_l2"].is_number();
        if (ok)
            row.rel_l2.push_back(std::max(r["train"]["final_rel_l2"].get<double>(), std::numeric_limits<double>::min()));
        else
            ++row.n_missing;
    }
    std::vector<AggregateRow> out;
    for (auto& [k, row] : groups) out.push_back(std::move(row));
    return out;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream os;
    os << kAggregateHeader << '\n';
    const auto o = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : rows) {
        os << r.experiment << ',' << r.model << ',' << o(r.p) << ',' << o(r.n_part) << ',' << o(r.m_max) << ',';
        if (r.rel_l2.empty())
            os << ",,";
        else
            os << io::format_double(r.median()) << ',' << io::format_double(r.geomean()) << ','
               << io::format_double(r.lognorm_std());
        os << ',' << r.rel_l2.size() << ',' << r.n_missing << '\n';
    }
    return os.str();
}

/// Collects `runs/*/report.json` under run_dir and writes `aggregate.csv`.
inline std::string emit_convergence_table(const fs::path& run_dir) {
    const fs::path runs = run_dir / "runs";
    std::vector<fs::path> files;
    if (fs::is_directory(runs))
        for (const auto& e : fs::directory_iterator(runs))
            if (fs::is_regular_file(e.path() / "report.json")) files.push_back(e.path() / "report.json");
    if (files.empty()) throw std::runtime_error("no run reports under " + runs.string());
    std::sort(files.begin(), files.end());
    std::vector<io::Json> reports;
    for (const auto& f : files) {
        try {
            reports.push_back(io::Json::parse(io::read_text(f)));
        } catch (const io::Json::exception& e) {
            throw io::FormatError(f.string() + ": " + e.what());
        }
    }
    const auto csv = aggregate_csv(aggregate_reports(reports));
    io::write_text(run_dir / "aggregate.csv", csv);
    return csv;
}

// ---------------------------------------------------------------------------
// Frozen-partition scaling table
// ---------------------------------------------------------------------------

inline double sin_2pi(double x) { return std::sin(2.0 * std::numbers::pi * x); }

struct ScalingTable {
    std::string points_csv;  ///< m,n_part,rms
    std::string slopes_csv;  ///< m,slope,expected
};

inline ScalingTable scaling_table(const Theorem1Block& t) {
    std::ostringstream pts, slopes;
    pts << "m,n_part,rms\n";
    slopes << "m,slope,expected\n";
    for (unsigned m : t.m) {
        const auto res = bench::theorem1_scaling_oracle(m, t.n_part, sin_2pi, t.n_points);
        for (const auto& p : res) pts << m << ',' << p.n_part << ',' << io::format_double(p.rms) << '\n';
        slopes << m << ',' << io::format_double(bench::loglog_slope(res)) << ',' << -static_cast<int>(m + 1) << '\n';
    }
    return {pts.str(), slopes.str()};
}

inline void write_scaling_table(const fs::path& out, const Theorem1Block& t) {
    const auto tab = scaling_table(t);
    io::write_text(out / "theorem1.csv", tab.points_csv);
    io::write_text(out / "theorem1_slopes.csv", tab.slopes_csv);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepSummary {
    std::size_t n_runs = 0;
    std::size_t n_failed = 0;
};

using ProgressFn = std::function<void(const RunSpec&, const RunOutcome&)>;

/// Generates every dataset up front, trains all runs on `jobs` threads, then
/// writes the aggregate table.
inline SweepSummary run_sweep(const ExperimentConfig& c, const fs::path& out, unsigned jobs = 1,
                              std::optional<std::uint64_t> seed_override = {}, const ProgressFn& progress = {}) {
    fs::create_directories(out);
    io::write_text(out / "config.json", config_to_json(c).dump(2) + "\n");
    if (c.kind == ExperimentKind::theorem1) {
        write_scaling_table(out, c.theorem1);
        return {};
    }
    const auto plan = plan_runs(c, seed_override);
    std::map<std::string, Dataset> datasets;
    for (const auto& s : plan)
        if (!datasets.count(s.dataset_id)) {
            auto d = make_dataset(c, s.p, s.seed);
            io::save_dataset(out / "data" / (s.dataset_id + ".csv"), d);
            datasets.emplace(s.dataset_id, std::move(d));
        }

    std::atomic<std::size_t> next{0}, failed{0};
    std::mutex progress_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) {
            const auto& s = plan[i];
            const auto r = execute_run(c, s, datasets.at(s.dataset_id));
            write_run(out / "runs" / s.id, r);
            if (!r.ok) ++failed;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(s, r);
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(plan.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    emit_convergence_table(out);
    return {plan.size(), failed.load()};
}

}  // namespace pounet::cli
