/**
 * @file io.hpp
 * @brief Dataset CSV files, model checkpoints and training reports.
 */
#pragma once

#include "pounet/bench.hpp"
#include "pounet/model.hpp"
#include "pounet/optim.hpp"
#include "pounet/pou.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pounet::io {

using Json = nlohmann::ordered_json;

/// Malformed file contents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Dataset CSV: header x1,...,xd,y then one row per sample.
// ---------------------------------------------------------------------------

inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
    for (std::size_t j = 0; j < data.dim(); ++j) os << 'x' << j + 1 << ',';
    os << "y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) os << format_double(data.xs()(i, j)) << ',';
        os << format_double(data.ys()[i]) << '\n';
    }
}

inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("dataset csv: empty input");
    std::size_t d = 0;
    {
        std::stringstream header(line);
        std::string cell;
        std::vector<std::string> names;
        while (std::getline(header, cell, ',')) names.push_back(cell);
        if (names.size() < 2 || names.back() != "y") throw FormatError("dataset csv: header must be x1,...,xd,y");
        d = names.size() - 1;
        for (std::size_t j = 0; j < d; ++j)
            if (names[j] != "x" + std::to_string(j + 1)) throw FormatError("dataset csv: bad column name " + names[j]);
    }
    std::vector<double> xs, ys;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(row, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size())
                throw FormatError("dataset csv line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
            (col < d ? xs : ys).push_back(v);
            ++col;
        }
        if (col != d + 1)
            throw FormatError("dataset csv line " + std::to_string(lineno) + ": expected " + std::to_string(d + 1) +
                              " columns");
    }
    return {DenseMatrix(ys.size(), d, std::move(xs)), std::move(ys)};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ostringstream os;
    write_dataset_csv(os, data);
    write_text(path, os.str());
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::istringstream is(read_text(path));
    return read_dataset_csv(is);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline Json basis_to_json(const MonomialBasis& b) {
    return {{"dim_input", b.dim_input()}, {"max_degree", b.max_degree()}, {"center", b.center()}, {"scale", b.scale()}};
}

inline MonomialBasis basis_from_json(const Json& j) {
    return {j.at("dim_input").get<std::size_t>(), j.at("max_degree").get<unsigned>(),
            j.at("center").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
}

inline Json params_to_json(const ParamVector& p) {
    Json blocks = Json::array();
    for (const auto& b : p.layout.blocks) blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    return {{"architecture", p.layout.architecture}, {"blocks", blocks}, {"values", p.values}};
}

inline ParamVector params_from_json(const Json& j) {
    ParamVector p;
    p.layout.architecture = j.at("architecture").get<std::string>();
    for (const auto& b : j.at("blocks"))
        p.layout.blocks.push_back({b.at("name").get<std::string>(), b.at("rows").get<std::size_t>(),
                                   b.at("cols").get<std::size_t>()});
    p.values = j.at("values").get<std::vector<double>>();
    return p;
}

namespace detail {

inline Json net_shape(const RbfNet& n) { return {{"n_part", n.n_part()}, {"dim_input", n.dim_input()}}; }
inline Json net_shape(const ResNetPou& n) {
    return {{"n_part", n.n_part()}, {"dim_input", n.dim_input()}, {"width", n.width()}, {"depth", n.depth()}};
}
inline Json net_shape(const IndicatorPartition& n) {
    return {{"n_part", n.n_part()}, {"dim_input", 1}, {"lo", n.lo()}, {"hi", n.hi()}};
}

template <class Net>
Net empty_net(const Json& s);

template <>
inline RbfNet empty_net<RbfNet>(const Json& s) {
    const auto n = s.at("n_part").get<std::size_t>();
    return {DenseMatrix(n, s.at("dim_input").get<std::size_t>()), std::vector<double>(n, 1.0)};
}
template <>
inline ResNetPou empty_net<ResNetPou>(const Json& s) {
    return {s.at("dim_input").get<std::size_t>(), s.at("width").get<std::size_t>(), s.at("depth").get<std::size_t>(),
            s.at("n_part").get<std::size_t>()};
}
template <>
inline IndicatorPartition empty_net<IndicatorPartition>(const Json& s) {
    return {s.at("n_part").get<std::size_t>(), s.at("lo").get<double>(), s.at("hi").get<double>()};
}

}  // namespace detail

template <PartitionNetwork Net>
Json checkpoint_to_json(const PouModel<Net>& model, std::uint64_t seed) {
    const auto& c = model.coeffs();
    return {{"architecture", std::string(Net::kArchitecture)},
            {"shape", detail::net_shape(model.net())},
            {"basis", basis_to_json(model.basis())},
            {"seed", seed},
            {"xi", params_to_json(model.net().params())},
            {"coeffs", {{"rows", c.rows()}, {"cols", c.cols()}, {"values", c.entries()}}}};
}

template <PartitionNetwork Net>
PouModel<Net> checkpoint_from_json(const Json& j) {
    try {
        if (j.at("architecture").get<std::string>() != Net::kArchitecture)
            throw FormatError("checkpoint: architecture is '" + j.at("architecture").get<std::string>() + "'");
        Net net = detail::empty_net<Net>(j.at("shape"));
        net.set_params(params_from_json(j.at("xi")));
        const auto& c = j.at("coeffs");
        return {std::move(net), basis_from_json(j.at("basis")),
                DenseMatrix(c.at("rows").get<std::size_t>(), c.at("cols").get<std::size_t>(),
                            c.at("values").get<std::vector<double>>())};
    } catch (const Json::exception& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
}

inline Json baseline_checkpoint_to_json(const bench::ScalarResNet& net, std::uint64_t seed) {
    return {{"architecture", std::string(bench::ScalarResNet::kArchitecture)},
            {"shape",
             {{"dim_input", net.trunk().dim_input()}, {"width", net.trunk().width()}, {"depth", net.trunk().depth()}}},
            {"seed", seed},
            {"xi", params_to_json(net.params())}};
}

// ---------------------------------------------------------------------------
// Reports and traces. Wall time is kept out of the report so that identical
// runs produce identical files.
// ---------------------------------------------------------------------------

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json report_to_json(const TrainReport& r) {
    Json j = {{"epochs", r.loss_trace.size()},
              {"best_epoch", r.best_epoch},
              {"best_loss", finite_or_null(r.best_loss)},
              {"final_rel_l2", finite_or_null(r.final_rel_l2)}};
    j["phase_boundary"] = r.phase_boundary ? Json(*r.phase_boundary) : Json(nullptr);
    return j;
}

inline void write_trace_csv(std::ostream& os, const TrainReport& r) {
    os << "epoch,loss,lambda,rel_l2\n";
    for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
        os << i << ',' << format_double(r.loss_trace[i]) << ',' << format_double(r.lambda_trace[i]) << ','
           << format_double(r.rel_l2_trace[i]) << '\n';
}

}  // namespace pounet::io
