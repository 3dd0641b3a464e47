#include "rareis/tables_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace rareis::soc {

namespace {

constexpr char kMagic[8] = {'S', 'O', 'C', 'T', 'A', 'B', '0', '1'};
constexpr int kFormatVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void put_doubles(std::string& out, const std::vector<double>& xs) {
    for (double x : xs) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ull;
    }
    return h;
}

nlohmann::json distribution_json(const dist::DistributionModel& d) {
    return {{"family", "log_normal"}, {"m", d.location()}, {"sigma", d.scale()}};
}

dist::DistributionModel distribution_from_json(const nlohmann::json& j) {
    if (j.at("family").get<std::string>() != "log_normal")
        throw TableIoError("load_tables: unknown distribution family");
    return dist::DistributionModel::log_normal(j.at("m").get<double>(),
                                               j.at("sigma").get<double>());
}

nlohmann::json functional_json(const fn::Functional& f) {
    switch (f.kind()) {
        case fn::Kind::left_tail:
            return {{"kind", "left_tail"}, {"gamma_th", f.gamma_th()}};
        case fn::Kind::right_tail:
            return {{"kind", "right_tail"}, {"gamma_th", f.gamma_th()}};
        case fn::Kind::interference_cdf:
            return {{"kind", "interference_cdf"},
                    {"gamma_th", f.gamma_th()},
                    {"eta", f.eta()},
                    {"x0", distribution_json(f.x0())}};
        case fn::Kind::custom:
            break;
    }
    throw TableIoError("save_tables: custom functionals cannot be archived");
}

fn::Functional functional_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "left_tail") return fn::Functional::left_tail(j.at("gamma_th").get<double>());
    if (kind == "right_tail") return fn::Functional::right_tail(j.at("gamma_th").get<double>());
    if (kind == "interference_cdf")
        return fn::Functional::interference_cdf(distribution_from_json(j.at("x0")),
                                                j.at("gamma_th").get<double>(),
                                                j.at("eta").get<double>());
    throw TableIoError("load_tables: unknown functional kind");
}

}  // namespace

void save_tables(const ValueTable& vt, const ControlTable& ct, const ProblemSpec& p,
                 const std::string& path) {
    const std::size_t n = ct.steps;
    const std::size_t points = ct.points;
    if (vt.stages != n + 1 || vt.points != points || p.n() != n ||
        p.grid.points.size() != points)
        throw TableIoError("save_tables: table/problem dimensions disagree");

    nlohmann::json meta;
    meta["format_version"] = kFormatVersion;
    meta["solver_version"] = kSolverVersion;
    meta["n"] = n;
    meta["k"] = points - 1;
    meta["mode"] = ct.aggregate ? "aggregate" : "standard";
    meta["partition"] = ct.partition;
    meta["stage_map"] = ct.stage_map;
    meta["s_bar"] = p.s_bar;
    meta["components"] = nlohmann::json::array();
    for (const auto& d : p.components) meta["components"].push_back(distribution_json(d));
    meta["functional"] = functional_json(p.functional);
    const std::string header = meta.dump();

    std::string payload;
    payload.reserve(header.size() + 8 * (points * (2 * n + 2)) + 32);
    payload.append(kMagic, sizeof(kMagic));
    put_u64(payload, header.size());
    payload += header;
    const std::size_t arrays_begin = payload.size();
    put_doubles(payload, p.grid.points);
    put_doubles(payload, vt.u);
    put_doubles(payload, ct.mu);
    put_u64(payload, fnv1a(payload.data() + arrays_begin, payload.size() - arrays_begin));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TableIoError(fmt::format("save_tables: cannot open '{}'", path));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw TableIoError(fmt::format("save_tables: write failed for '{}'", path));
}

LoadedTables load_tables(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TableIoError(fmt::format("load_tables: cannot open '{}'", path));
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
    if (raw.size() < sizeof(kMagic) + 8 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0)
        throw TableIoError("load_tables: corrupted archive (bad magic)");
    const std::uint64_t header_len = get_u64(bytes + sizeof(kMagic));
    std::size_t pos = sizeof(kMagic) + 8;
    if (raw.size() < pos + header_len) throw TableIoError("load_tables: corrupted archive (truncated header)");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(raw.substr(pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw TableIoError(fmt::format("load_tables: corrupted metadata: {}", e.what()));
    }
    pos += header_len;

    try {
        if (meta.at("format_version").get<int>() != kFormatVersion)
            throw TableIoError(fmt::format("load_tables: unsupported format version {}",
                                           meta.at("format_version").get<int>()));
        const std::size_t n = meta.at("n").get<std::size_t>();
        const std::size_t points = meta.at("k").get<std::size_t>() + 1;
        const std::size_t doubles = points + (n + 1) * points + n * points;
        const std::size_t need = doubles * 8 + 8;
        if (raw.size() != pos + need)
            throw TableIoError("load_tables: dimension mismatch between header and payload");
        const std::uint64_t want = get_u64(bytes + raw.size() - 8);
        if (fnv1a(raw.data() + pos, doubles * 8) != want)
            throw TableIoError("load_tables: corrupted archive (checksum mismatch)");

        auto take = [&](std::size_t count) {
            std::vector<double> xs(count);
            for (std::size_t i = 0; i < count; ++i, pos += 8)
                xs[i] = std::bit_cast<double>(get_u64(bytes + pos));
            return xs;
        };
        std::vector<double> grid_pts = take(points);

        LoadedTables out{
            ValueTable(n + 1, points), ControlTable(n, points),
            ProblemSpec{{}, functional_from_json(meta.at("functional")),
                        meta.at("s_bar").get<double>(), num::Grid1D(std::move(grid_pts))}};
        out.values.u = take((n + 1) * points);
        out.controls.mu = take(n * points);
        out.controls.partition = meta.at("partition").get<std::vector<int>>();
        out.controls.stage_map = meta.at("stage_map").get<std::vector<int>>();
        out.controls.aggregate = meta.at("mode").get<std::string>() == "aggregate";
        if (out.controls.partition.empty() || out.controls.stage_map.size() != n)
            throw TableIoError("load_tables: dimension mismatch in partition metadata");
        for (const auto& cj : meta.at("components"))
            out.problem.components.push_back(distribution_from_json(cj));
        if (out.problem.components.size() != n)
            throw TableIoError("load_tables: dimension mismatch in component list");
        out.problem.validate();
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw TableIoError(fmt::format("load_tables: invalid metadata: {}", e.what()));
    }
}

}  // namespace rareis::soc
