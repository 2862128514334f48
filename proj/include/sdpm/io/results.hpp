// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdpm/io/csv.hpp"
#include "sdpm/partition/partition.hpp"
#include "sdpm/sampler/state.hpp"

namespace sdpm {

/// Output of a fit. `draws` is kept so a later run can be primed from it.
struct ResultBundle {
    Partition partition;
    std::optional<SimilarityMatrix> similarity;
    std::vector<double> k_trace;
    std::vector<double> alpha_trace;
    std::vector<double> logdensity_trace;
    double acceptance_rate = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string mode = "st";
    nlohmann::json extra = nlohmann::json::object();
    std::optional<PosteriorDraws> draws;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

namespace detail {

inline void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64_le(const char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + p.string() + "'");
    out << s;
    if (!out) throw ArgumentError("write failed for '" + p.string() + "'");
}

}  // namespace detail

/// "ZETA", u64 C, C*C f64 row-major, u64 FNV-1a of everything before it.
/// All integers and floats little-endian.
inline std::string encode_similarity(const SimilarityMatrix& z) {
    std::string out = "ZETA";
    detail::put_u64_le(out, z.size());
    for (double v : z.values()) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, 8);
        detail::put_u64_le(out, bits);
    }
    detail::put_u64_le(out, fnv1a64(out.data(), out.size()));
    return out;
}

inline SimilarityMatrix decode_similarity(std::string_view bytes) {
    if (bytes.size() < 20 || bytes.substr(0, 4) != "ZETA") throw CorruptResultsError("similarity file: bad magic");
    const std::uint64_t n = detail::get_u64_le(bytes.data() + 4);
    if (n > (std::uint64_t{1} << 28) || bytes.size() != 20 + 8 * n * n) {
        throw CorruptResultsError("similarity file: size does not match header");
    }
    const std::size_t body = bytes.size() - 8;
    if (fnv1a64(bytes.data(), body) != detail::get_u64_le(bytes.data() + body)) {
        throw CorruptResultsError("similarity file: checksum mismatch");
    }
    std::vector<double> v(n * n);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::uint64_t bits = detail::get_u64_le(bytes.data() + 12 + 8 * i);
        std::memcpy(&v[i], &bits, 8);
    }
    return SimilarityMatrix(n, std::move(v));
}

namespace detail {

inline std::string traces_csv(const ResultBundle& b) {
    std::string s = "draw,k,alpha,logdensity\n";
    for (std::size_t i = 0; i < b.k_trace.size(); ++i) {
        s += std::to_string(i + 1) + ',' + format_double(b.k_trace[i]) + ',' + format_double(b.alpha_trace[i]) + ',' +
             format_double(b.logdensity_trace[i]) + '\n';
    }
    return s;
}

inline std::string draws_partitions_csv(const PosteriorDraws& d) {
    std::string s = "draw,labels\n";
    for (std::size_t i = 0; i < d.partitions.size(); ++i) {
        s += std::to_string(i + 1);
        for (int l : d.partitions[i]) s += ',' + std::to_string(l);
        s += '\n';
    }
    return s;
}

inline std::string draws_clusters_csv(const PosteriorDraws& d) {
    std::string s = "draw,cluster,nu,xi...,psi...,sigma(row-major)...\n";
    for (std::size_t i = 0; i < d.cluster_params.size(); ++i) {
        for (std::size_t k = 0; k < d.cluster_params[i].size(); ++k) {
            const auto& cp = d.cluster_params[i][k];
            s += std::to_string(i + 1) + ',' + std::to_string(k + 1) + ',' + format_double(cp.nu);
            for (Eigen::Index j = 0; j < cp.dim(); ++j) s += ',' + format_double(cp.xi(j));
            for (Eigen::Index j = 0; j < cp.dim(); ++j) s += ',' + format_double(cp.psi(j));
            for (Eigen::Index r = 0; r < cp.dim(); ++r)
                for (Eigen::Index c = 0; c < cp.dim(); ++c) s += ',' + format_double(cp.sigma(r, c));
            s += '\n';
        }
    }
    return s;
}

inline std::vector<std::vector<double>> numeric_rows(std::string_view text, const std::string& file, bool allow_inf) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw CorruptResultsError(file + ": empty");
    std::vector<std::vector<double>> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::vector<double> row;
        for (auto cell : split_commas(lines[li])) {
            double v = 0.0;
            if (!parse_double(cell, v, allow_inf)) {
                throw CorruptResultsError(file + ": line " + std::to_string(li + 1) + " is malformed");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

/// Writes partition.csv, traces.csv, metadata.json and, when present,
/// similarity.bin, draws_partitions.csv and draws_clusters.csv.
inline void write_results(const ResultBundle& b, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ArgumentError("cannot create directory '" + dir + "': " + ec.message());
    const fs::path root(dir);
    if (b.k_trace.size() != b.alpha_trace.size() || b.k_trace.size() != b.logdensity_trace.size()) {
        throw ArgumentError("write_results: trace lengths differ");
    }
    write_labels(b.partition.labels(), (root / "partition.csv").string());
    detail::write_text(root / "traces.csv", detail::traces_csv(b));
    if (b.similarity) detail::write_text(root / "similarity.bin", encode_similarity(*b.similarity));
    if (b.draws) {
        detail::write_text(root / "draws_partitions.csv", detail::draws_partitions_csv(*b.draws));
        detail::write_text(root / "draws_clusters.csv", detail::draws_clusters_csv(*b.draws));
    }
    nlohmann::json meta;
    meta["seed"] = b.seed;
    meta["config_hash"] = b.config_hash;
    meta["mode"] = b.mode;
    meta["acceptance_rate"] = format_double(b.acceptance_rate);
    meta["n_obs"] = b.partition.size();
    meta["n_draws"] = b.k_trace.size();
    meta["has_similarity"] = b.similarity.has_value();
    meta["has_draws"] = b.draws.has_value();
    meta["extra"] = b.extra;
    detail::write_text(root / "metadata.json", meta.dump(2) + "\n");
}

inline ResultBundle read_results(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw ArgumentError("results directory '" + dir + "' does not exist");
    ResultBundle b;
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(detail::read_file((root / "metadata.json").string()));
        b.seed = meta.at("seed").get<std::uint64_t>();
        b.config_hash = meta.at("config_hash").get<std::string>();
        b.mode = meta.at("mode").get<std::string>();
        if (!detail::parse_double(meta.at("acceptance_rate").get<std::string>(), b.acceptance_rate)) {
            throw CorruptResultsError("metadata.json: bad acceptance_rate");
        }
        b.extra = meta.at("extra");
    } catch (const nlohmann::json::exception& e) {
        throw CorruptResultsError(std::string("metadata.json: ") + e.what());
    }
    try {
        b.partition = Partition(read_labels((root / "partition.csv").string()));
    } catch (const ParseError& e) {
        throw CorruptResultsError(std::string("partition.csv: ") + e.what());
    }
    const auto traces = detail::numeric_rows(detail::read_file((root / "traces.csv").string()), "traces.csv", false);
    for (const auto& r : traces) {
        if (r.size() != 4) throw CorruptResultsError("traces.csv: wrong number of fields");
        b.k_trace.push_back(r[1]);
        b.alpha_trace.push_back(r[2]);
        b.logdensity_trace.push_back(r[3]);
    }
    if (meta.value("has_similarity", false)) {
        b.similarity = decode_similarity(detail::read_file((root / "similarity.bin").string()));
        if (b.similarity->size() != b.partition.size()) throw CorruptResultsError("similarity.bin: wrong dimension");
    }
    if (meta.value("has_draws", false)) {
        PosteriorDraws d;
        d.mode = b.mode == "sn" ? SamplerMode::skew_normal : SamplerMode::skew_t;
        d.alpha_trace = b.alpha_trace;
        d.k_trace = b.k_trace;
        d.logdensity_trace = b.logdensity_trace;
        d.nu_acceptance_rate = b.acceptance_rate;
        for (const auto& r : detail::numeric_rows(detail::read_file((root / "draws_partitions.csv").string()),
                                                  "draws_partitions.csv", false)) {
            if (r.size() < 2) throw CorruptResultsError("draws_partitions.csv: empty row");
            d.partitions.emplace_back();
            for (std::size_t j = 1; j < r.size(); ++j) d.partitions.back().push_back(static_cast<int>(r[j]));
        }
        d.cluster_params.resize(d.partitions.size());
        for (const auto& r : detail::numeric_rows(detail::read_file((root / "draws_clusters.csv").string()),
                                                  "draws_clusters.csv", true)) {
            // r = draw, cluster, nu, xi(d), psi(d), sigma(d*d) -> 3 + 2d + d^2 fields
            const std::size_t extra = r.size() - 3;
            std::size_t dd = 0;
            while ((dd + 1) * (dd + 1) + 2 * (dd + 1) <= extra) ++dd;
            if (dd == 0 || dd * dd + 2 * dd != extra) throw CorruptResultsError("draws_clusters.csv: bad row width");
            const auto draw = static_cast<std::size_t>(r[0]);
            if (draw < 1 || draw > d.partitions.size()) throw CorruptResultsError("draws_clusters.csv: draw out of range");
            const auto n = static_cast<Eigen::Index>(dd);
            Vec xi(n), psi(n);
            Mat sigma(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                xi(j) = r[3 + static_cast<std::size_t>(j)];
                psi(j) = r[3 + dd + static_cast<std::size_t>(j)];
            }
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index c = 0; c < n; ++c) sigma(a, c) = r[3 + 2 * dd + static_cast<std::size_t>(a * n + c)];
            try {
                d.cluster_params[draw - 1].emplace_back(std::move(xi), std::move(psi), SpdMatrix(sigma), r[2]);
            } catch (const Error& e) {
                throw CorruptResultsError(std::string("draws_clusters.csv: ") + e.what());
            }
        }
        if (d.partitions.size() != b.k_trace.size()) throw CorruptResultsError("draw count does not match traces");
        b.draws = std::move(d);
    }
    return b;
}

}  // namespace sdpm
