// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdpm/io/fcs.hpp"
#include "sdpm/io/results.hpp"
#include "sdpm/io/transform.hpp"
#include "sdpm/partition/partition.hpp"
#include "sdpm/sampler/gelman_rubin.hpp"
#include "sdpm/sampler/run_chain.hpp"
#include "sdpm/seq/informative_prior.hpp"
#include "sdpm/sim/simulate.hpp"

namespace sdpm::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kFormat = 3, kNumerical = 4 };

using nlohmann::json;

/// Everything a fit needs. Loaded from a JSON document, then overridden by
/// command-line flags.
struct RunConfig {
    std::string data;
    std::string out;
    std::string transform = "none";
    std::uint64_t seed = 1;
    std::size_t iters = 2000;
    std::size_t burnin = 1000;
    std::size_t thin = 5;
    std::string mode = "st";
    std::string kernel = "marginal";
    double c_nu = 1.0;
    bool parallel = false;
    unsigned threads = 0;
    double jitter = 0.0;
    std::size_t init_clusters = 30;
    std::string point_estimate = "binder";
    bool write_similarity = true;
    std::size_t subsample = 0;  ///< 0: all observations in similarity summaries
    std::string prior_from;
    std::size_t prior_k = 0;
    HyperOptions hyper;
    MapPriorConfig em;

    json to_json() const {
        return json{{"data", data},
                    {"out", out},
                    {"transform", transform},
                    {"seed", seed},
                    {"iters", iters},
                    {"burnin", burnin},
                    {"thin", thin},
                    {"mode", mode},
                    {"kernel", kernel},
                    {"c_nu", c_nu},
                    {"parallel", parallel},
                    {"threads", threads},
                    {"jitter", jitter},
                    {"init_clusters", init_clusters},
                    {"point_estimate", point_estimate},
                    {"write_similarity", write_similarity},
                    {"subsample", subsample},
                    {"prior_from", prior_from},
                    {"prior_k", prior_k},
                    {"hyper",
                     {{"d0_xi", hyper.d0_xi},
                      {"d0_psi", hyper.d0_psi},
                      {"lambda_scale_factor", hyper.lambda_scale_factor},
                      {"extra_dof", hyper.extra_dof},
                      {"nu_rate", hyper.nu_rate},
                      {"alpha_a", hyper.alpha_a},
                      {"alpha_b", hyper.alpha_b}}},
                    {"em",
                     {{"dirichlet_alpha", em.dirichlet_alpha},
                      {"kappa0", em.kappa0},
                      {"c_scale", em.c_scale},
                      {"seed", em.seed},
                      {"restarts", em.restarts}}}};
    }

    /// Hash of the configuration without output location.
    std::string hash() const {
        json j = to_json();
        j.erase("out");
        const std::string s = j.dump();
        return hex64(fnv1a64(s.data(), s.size()));
    }

    ChainConfig chain_config() const {
        ChainConfig c;
        c.n_iter = iters;
        c.burn_in = burnin;
        c.thin = thin;
        c.mode = parse_mode(mode);
        if (kernel == "marginal") {
            c.kernel = AllocationKernel::marginal;
        } else if (kernel == "scale_conditional") {
            c.kernel = AllocationKernel::scale_conditional;
        } else {
            throw ConfigError("unknown allocation kernel '" + kernel + "'");
        }
        c.c_nu = c_nu;
        c.seed = seed;
        c.parallel = parallel;
        c.threads = threads;
        c.jitter = jitter;
        c.init_clusters = init_clusters;
        c.validate();
        return c;
    }
};

namespace detail {

template <typename T>
void take(const json& j, const char* key, T& dst, const std::string& path) {
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + path + key + "' has the wrong type");
    }
}

inline void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config section '" + path + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown config key '" + path + key + "'");
        }
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
    using detail::take;
    detail::reject_unknown(j,
                           {"data", "out", "transform", "seed", "iters", "burnin", "thin", "mode", "kernel", "c_nu",
                            "parallel", "threads", "jitter", "init_clusters", "point_estimate", "write_similarity",
                            "subsample", "prior_from", "prior_k", "hyper", "em"},
                           "");
    RunConfig c;
    if (j.contains("data")) take(j, "data", c.data, "");
    if (j.contains("out")) take(j, "out", c.out, "");
    if (j.contains("transform")) take(j, "transform", c.transform, "");
    if (j.contains("seed")) take(j, "seed", c.seed, "");
    if (j.contains("iters")) take(j, "iters", c.iters, "");
    if (j.contains("burnin")) take(j, "burnin", c.burnin, "");
    if (j.contains("thin")) take(j, "thin", c.thin, "");
    if (j.contains("mode")) take(j, "mode", c.mode, "");
    if (j.contains("kernel")) take(j, "kernel", c.kernel, "");
    if (j.contains("c_nu")) take(j, "c_nu", c.c_nu, "");
    if (j.contains("parallel")) take(j, "parallel", c.parallel, "");
    if (j.contains("threads")) take(j, "threads", c.threads, "");
    if (j.contains("jitter")) take(j, "jitter", c.jitter, "");
    if (j.contains("init_clusters")) take(j, "init_clusters", c.init_clusters, "");
    if (j.contains("point_estimate")) take(j, "point_estimate", c.point_estimate, "");
    if (j.contains("write_similarity")) take(j, "write_similarity", c.write_similarity, "");
    if (j.contains("subsample")) take(j, "subsample", c.subsample, "");
    if (j.contains("prior_from")) take(j, "prior_from", c.prior_from, "");
    if (j.contains("prior_k")) take(j, "prior_k", c.prior_k, "");
    if (j.contains("hyper")) {
        const json& h = j.at("hyper");
        detail::reject_unknown(h, {"d0_xi", "d0_psi", "lambda_scale_factor", "extra_dof", "nu_rate", "alpha_a", "alpha_b"},
                               "hyper.");
        if (h.contains("d0_xi")) take(h, "d0_xi", c.hyper.d0_xi, "hyper.");
        if (h.contains("d0_psi")) take(h, "d0_psi", c.hyper.d0_psi, "hyper.");
        if (h.contains("lambda_scale_factor")) take(h, "lambda_scale_factor", c.hyper.lambda_scale_factor, "hyper.");
        if (h.contains("extra_dof")) take(h, "extra_dof", c.hyper.extra_dof, "hyper.");
        if (h.contains("nu_rate")) take(h, "nu_rate", c.hyper.nu_rate, "hyper.");
        if (h.contains("alpha_a")) take(h, "alpha_a", c.hyper.alpha_a, "hyper.");
        if (h.contains("alpha_b")) take(h, "alpha_b", c.hyper.alpha_b, "hyper.");
    }
    if (j.contains("em")) {
        const json& e = j.at("em");
        detail::reject_unknown(e, {"dirichlet_alpha", "kappa0", "c_scale", "seed", "restarts"}, "em.");
        if (e.contains("dirichlet_alpha")) take(e, "dirichlet_alpha", c.em.dirichlet_alpha, "em.");
        if (e.contains("kappa0")) take(e, "kappa0", c.em.kappa0, "em.");
        if (e.contains("c_scale")) take(e, "c_scale", c.em.c_scale, "em.");
        if (e.contains("seed")) take(e, "seed", c.em.seed, "em.");
        if (e.contains("restarts")) take(e, "restarts", c.em.restarts, "em.");
    }
    return c;
}

inline json load_json_file(const std::string& path) {
    std::string text;
    try {
        text = sdpm::detail::read_file(path);
    } catch (const ArgumentError&) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

inline DataMatrix load_data(const std::string& path, const std::string& transform_spec) {
    if (path.empty()) throw ConfigError("no input data given (--data)");
    if (!std::filesystem::exists(path)) throw ConfigError("data file '" + path + "' does not exist");
    const auto ext = std::filesystem::path(path).extension().string();
    DataMatrix raw = (ext == ".fcs" || ext == ".FCS") ? read_fcs(path) : read_csv(path);
    return transform(raw, TransformSpec::parse(transform_spec));
}

// ---------------------------------------------------------------------------

struct FitOutcome {
    ResultBundle bundle;
    double runtime_s = 0.0;
    std::size_t k_mode = 0;
};

inline Partition point_estimate_of(const PosteriorDraws& draws, const std::string& method,
                                   std::optional<SimilarityMatrix>* similarity, std::size_t subsample,
                                   std::uint64_t seed, const Executor& exec) {
    std::vector<Partition> parts;
    parts.reserve(draws.size());
    for (const auto& p : draws.partitions) parts.push_back(Partition::normalized(p));
    if (method == "fmeasure") {
        if (parts.size() == 1) return parts.front();
        return f_point_estimate(parts, exec).partition;
    }
    if (method != "binder") throw ConfigError("unknown point-estimate method '" + method + "'");
    const std::size_t n = parts.front().size();
    if (subsample > 0 && subsample < n) {
        // Binder loss evaluated on a random subset of observations.
        RngStream rng(seed, 0, 0x5ab5ab);
        const auto idx = subsample_indices(n, subsample, rng);
        std::vector<Partition> sub;
        for (const auto& p : parts) sub.push_back(restrict_partition(p, idx));
        const SimilarityMatrix z = similarity_matrix(sub, exec);
        return parts[binder_point_estimate(sub, z, exec).index];
    }
    SimilarityMatrix z = similarity_matrix(parts, exec);
    const auto best = binder_point_estimate(parts, z, exec);
    if (similarity) *similarity = std::move(z);
    return best.partition;
}

inline FitOutcome fit_with_prior(const RunConfig& cfg, const DataMatrix& data, const BaseMeasure& base,
                                 const ConcentrationPrior& conc, std::ostream& err) {
    ChainConfig cc = cfg.chain_config();
    const std::size_t every = std::max<std::size_t>(1, cc.n_iter / 10);
    cc.on_sweep = [&](std::size_t it, const ChainState& s) {
        if (it % every == 0 || it == cc.n_iter) {
            err << "iteration " << it << "/" << cc.n_iter << "  K=" << s.num_clusters() << "  alpha=" << s.alpha << "\n";
        }
    };
    const auto t0 = std::chrono::steady_clock::now();
    PosteriorDraws draws = run_chain(data, base, conc, cc);
    const Executor exec(cfg.parallel, cfg.threads);
    FitOutcome out;
    std::optional<SimilarityMatrix> sim;
    out.bundle.partition = point_estimate_of(draws, cfg.point_estimate, cfg.write_similarity ? &sim : nullptr,
                                             cfg.subsample, cfg.seed, exec);
    out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.bundle.similarity = std::move(sim);
    out.bundle.k_trace = draws.k_trace;
    out.bundle.alpha_trace = draws.alpha_trace;
    out.bundle.logdensity_trace = draws.logdensity_trace;
    out.bundle.acceptance_rate = draws.nu_acceptance_rate;
    out.bundle.seed = cfg.seed;
    out.bundle.config_hash = cfg.hash();
    out.bundle.mode = to_string(cc.mode);
    out.bundle.extra["dim"] = data.cols();
    out.bundle.extra["columns"] = data.names();
    out.bundle.extra["point_estimate"] = cfg.point_estimate;
    out.k_mode = modal_k(draws.k_trace);
    out.bundle.draws = std::move(draws);
    return out;
}

inline std::string fixed4(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(4);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------
// Commands. Each returns normally on success and throws sdpm errors otherwise.

inline void cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
    const DataMatrix data = load_data(cfg.data, cfg.transform);
    DefaultPrior prior = default_hyperparams(data, cfg.hyper);
    FitOutcome r = fit_with_prior(cfg, data, prior.base, prior.concentration, err);
    r.bundle.extra["transform"] = cfg.transform;
    write_results(r.bundle, cfg.out);
    out << json{{"command", "fit"},
                {"out", cfg.out},
                {"n_obs", data.rows()},
                {"k_mode", r.k_mode},
                {"point_estimate_k", r.bundle.partition.num_clusters()},
                {"acceptance_rate", r.bundle.acceptance_rate},
                {"runtime_s", r.runtime_s}}
               .dump()
        << "\n";
}

inline void cmd_seqfit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.out.empty()) throw ConfigError("no output directory given (--out)");
    if (cfg.prior_from.empty()) throw ConfigError("seqfit needs --prior-from");
    if (!std::filesystem::is_directory(cfg.prior_from)) {
        throw ConfigError("prior run directory '" + cfg.prior_from + "' does not exist");
    }
    const ResultBundle prev = read_results(cfg.prior_from);
    if (!prev.draws) throw ConfigError("prior run '" + cfg.prior_from + "' has no stored draws");
    const DataMatrix data = load_data(cfg.data, cfg.transform);
    const auto& first = prev.draws->cluster_params.front();
    if (first.empty() || first.front().dim() != data.cols()) {
        throw ConfigError("prior run dimension does not match the data dimension");
    }
    const NuPrior nu_prior = NuPrior::shifted_exponential(cfg.hyper.nu_rate);
    const InformativePrior ip = build_informative_prior(*prev.draws, cfg.prior_k, cfg.em, nu_prior);
    FitOutcome r = fit_with_prior(cfg, data, ip.base, ip.concentration, err);
    r.bundle.extra["transform"] = cfg.transform;
    r.bundle.extra["prior_from"] = cfg.prior_from;
    r.bundle.extra["prior_config_hash"] = prev.config_hash;
    r.bundle.extra["prior_components"] = ip.base.size();
    r.bundle.extra["prior_alpha_shape"] = ip.concentration.a;
    r.bundle.extra["prior_alpha_rate"] = ip.concentration.b;
    write_results(r.bundle, cfg.out);
    out << json{{"command", "seqfit"},
                {"out", cfg.out},
                {"prior_from", cfg.prior_from},
                {"prior_components", ip.base.size()},
                {"k_mode", r.k_mode},
                {"point_estimate_k", r.bundle.partition.num_clusters()},
                {"acceptance_rate", r.bundle.acceptance_rate},
                {"runtime_s", r.runtime_s}}
               .dump()
        << "\n";
}

inline SimSpec parse_sim_spec(const json& j) {
    detail::reject_unknown(j, {"components", "n_obs", "seed", "exact_proportions"}, "");
    SimSpec s;
    if (j.contains("n_obs")) detail::take(j, "n_obs", s.n_obs, "");
    if (j.contains("seed")) detail::take(j, "seed", s.seed, "");
    if (j.contains("exact_proportions")) detail::take(j, "exact_proportions", s.exact_proportions, "");
    if (!j.contains("components") || !j.at("components").is_array()) throw ConfigError("spec needs a 'components' array");
    for (const auto& c : j.at("components")) {
        detail::reject_unknown(c, {"weight", "xi", "psi", "sigma", "nu"}, "components[].");
        double w = 0.0, nu = std::numeric_limits<double>::infinity();
        std::vector<double> xi, psi;
        std::vector<std::vector<double>> sigma;
        detail::take(c, "weight", w, "components[].");
        detail::take(c, "xi", xi, "components[].");
        detail::take(c, "psi", psi, "components[].");
        detail::take(c, "sigma", sigma, "components[].");
        if (c.contains("nu") && !c.at("nu").is_null()) detail::take(c, "nu", nu, "components[].");
        const auto d = static_cast<Eigen::Index>(xi.size());
        if (d == 0 || static_cast<Eigen::Index>(psi.size()) != d || static_cast<Eigen::Index>(sigma.size()) != d) {
            throw ConfigError("component dimensions are inconsistent");
        }
        Mat sg(d, d);
        for (Eigen::Index r = 0; r < d; ++r) {
            if (static_cast<Eigen::Index>(sigma[static_cast<std::size_t>(r)].size()) != d) throw ConfigError("sigma must be d x d");
            for (Eigen::Index k = 0; k < d; ++k) sg(r, k) = sigma[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
        }
        try {
            s.components.push_back(SimComponent{
                w, SkewTParams(SkewNormalParams(Eigen::Map<Vec>(xi.data(), d), Eigen::Map<Vec>(psi.data(), d), SpdMatrix(sg)), nu)});
        } catch (const Error& e) {
            throw ConfigError(std::string("invalid component: ") + e.what());
        }
    }
    return s;
}

inline void cmd_simulate(const std::string& config, const std::string& out_dir, std::optional<std::uint64_t> seed,
                         std::optional<std::size_t> n_obs, std::ostream& out) {
    if (out_dir.empty()) throw ConfigError("no output directory given (--out)");
    SimSpec spec = config.empty() ? four_cluster_preset(2000, 1) : parse_sim_spec(load_json_file(config));
    if (seed) spec.seed = *seed;
    if (n_obs) spec.n_obs = *n_obs;
    const SimResult r = simulate(spec);
    std::filesystem::create_directories(out_dir);
    const auto data_path = (std::filesystem::path(out_dir) / "data.csv").string();
    const auto truth_path = (std::filesystem::path(out_dir) / "truth.csv").string();
    write_csv(r.data, data_path);
    write_labels(r.labels, truth_path);
    out << json{{"command", "simulate"}, {"data", data_path}, {"truth", truth_path}, {"n_obs", spec.n_obs},
                {"components", spec.components.size()}, {"seed", spec.seed}}
               .dump()
        << "\n";
}

inline void cmd_pointest(const std::string& in_dir, const std::string& method, const std::string& out_file,
                         std::ostream& out) {
    if (in_dir.empty()) throw ConfigError("pointest needs --in");
    const ResultBundle b = read_results(in_dir);
    if (!b.draws || b.draws->size() == 0) throw ConfigError("run '" + in_dir + "' has no stored draws");
    std::vector<Partition> parts;
    for (const auto& p : b.draws->partitions) parts.push_back(Partition::normalized(p));
    json summary{{"command", "pointest"}, {"method", method}, {"n_draws", parts.size()}};
    Partition best;
    if (method == "binder") {
        const SimilarityMatrix z = similarity_matrix(parts);
        const auto r = binder_point_estimate(parts, z);
        double min_loss = r.loss, max_loss = r.loss;
        for (const auto& p : parts) {
            const double l = binder_loss(p, z);
            min_loss = std::min(min_loss, l);
            max_loss = std::max(max_loss, l);
        }
        best = r.partition;
        summary["loss"] = r.loss;
        summary["min_sampled_loss"] = min_loss;
        summary["max_sampled_loss"] = max_loss;
        summary["draw_index"] = r.index + 1;
    } else if (method == "fmeasure") {
        if (parts.size() == 1) {
            best = parts.front();
            summary["draw_index"] = 1;
        } else {
            const auto r = f_point_estimate(parts);
            best = r.partition;
            summary["mean_f"] = r.mean_f;
            summary["draw_index"] = r.index + 1;
        }
    } else {
        throw ConfigError("unknown point-estimate method '" + method + "'");
    }
    summary["k"] = best.num_clusters();
    const std::string path = out_file.empty() ? (std::filesystem::path(in_dir) / ("pointest_" + method + ".csv")).string() : out_file;
    write_labels(best.labels(), path);
    summary["out"] = path;
    out << summary.dump() << "\n";
}

inline Partition load_partition(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("partition file '" + path + "' does not exist");
    return Partition::normalized(read_labels(path));
}

inline void cmd_eval(const std::string& pred_file, const std::string& ref_file, std::optional<std::size_t> limit_p,
                     std::ostream& out, std::ostream& err) {
    const Partition pred = load_partition(pred_file);
    const Partition ref = load_partition(ref_file);
    if (pred.size() != ref.size()) throw ConfigError("partitions have different lengths");
    const auto round4 = [](double v) { return std::round(v * 1e4) / 1e4; };
    json summary{{"command", "eval"},
                 {"n_obs", pred.size()},
                 {"pred_k", pred.num_clusters()},
                 {"ref_k", ref.num_clusters()},
                 {"f_total", round4(f_measure_total(pred, ref))}};
    if (limit_p) {
        try {
            summary["limited_f"] = round4(limited_f_measure(pred, ref, *limit_p));
            summary["limit_p"] = *limit_p;
        } catch (const UndefinedMetricError& e) {
            err << "warning: " << e.what() << "; limited F-measure omitted\n";
        }
    }
    out << summary.dump() << "\n";
    err << "F-measure: " << fixed4(f_measure_total(pred, ref)) << "\n";
}

inline void cmd_diagnose(const std::vector<std::string>& dirs, std::ostream& out) {
    if (dirs.size() < 2) throw ArgumentError("diagnose needs at least two run directories");
    std::vector<std::vector<double>> ld, k;
    for (const auto& d : dirs) {
        const ResultBundle b = read_results(d);
        ld.push_back(b.logdensity_trace);
        k.push_back(b.k_trace);
    }
    std::size_t len = ld.front().size();
    for (const auto& t : ld) len = std::min(len, t.size());
    for (auto& t : ld) t.resize(len);
    for (auto& t : k) t.resize(len);
    out << json{{"command", "diagnose"}, {"runs", dirs.size()}, {"length", len},
                {"rhat_logdensity", gelman_rubin(ld)}, {"rhat_k", gelman_rubin(k)}}
               .dump()
        << "\n";
}

inline void cmd_fcs2csv(const std::string& in, const std::string& out_file, const std::string& transform_spec,
                        std::ostream& out) {
    if (in.empty() || out_file.empty()) throw ConfigError("fcs2csv needs --in and --out");
    if (!std::filesystem::exists(in)) throw ConfigError("FCS file '" + in + "' does not exist");
    const DataMatrix data = transform(read_fcs(in), TransformSpec::parse(transform_spec));
    write_csv(data, out_file);
    out << json{{"command", "fcs2csv"}, {"rows", data.rows()}, {"columns", data.names()}, {"out", out_file}}.dump() << "\n";
}

// ---------------------------------------------------------------------------

/// Map an exception to the documented exit codes and report it on `err`.
inline int report(const std::exception& e, std::ostream& err) {
    int code = kFailure;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) {
        code = kConfig;
    } else if (dynamic_cast<const FormatError*>(&e)) {
        code = kFormat;
    } else if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const UndefinedMetricError*>(&e)) {
        code = kNumerical;
    }
    err << "error: " << e.what() << "\n";
    return code;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Skew-t Dirichlet process mixture clustering"};
    app.require_subcommand(1);

    // shared fit/seqfit options
    std::string config_path, out_dir, data_path, transform_spec, mode, prior_from;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iters, burnin, thin, prior_k, limit_p, n_obs;
    std::optional<bool> parallel;
    std::optional<unsigned> threads;
    std::string in_path, method = "binder", pred_path, ref_path;
    std::vector<std::string> run_dirs;

    auto add_fit_options = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON run configuration");
        c->add_option("--data", data_path, "input CSV or FCS file");
        c->add_option("--out", out_dir, "output directory");
        c->add_option("--seed", seed, "random seed");
        c->add_option("--iters", iters, "number of sweeps");
        c->add_option("--burnin", burnin, "burn-in sweeps");
        c->add_option("--thin", thin, "thinning interval");
        c->add_option("--mode", mode, "sn or st")->check(CLI::IsMember({"sn", "st"}));
        c->add_option("--parallel", parallel, "parallel allocation (true/false)");
        c->add_option("--threads", threads, "worker threads (0 = all cores)");
        c->add_option("--transform", transform_spec, "none | arcsinh[:cofactor] | boxcox:lambda");
        c->add_option("--method", method, "point estimate: binder or fmeasure")->check(CLI::IsMember({"binder", "fmeasure"}));
    };

    CLI::App* sim = app.add_subcommand("simulate", "simulate a skew-t mixture");
    sim->add_option("--config", config_path, "JSON mixture specification (default: built-in four-cluster mixture)");
    sim->add_option("--out", out_dir, "output directory")->required();
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--n", n_obs, "number of observations");

    CLI::App* fit = app.add_subcommand("fit", "fit the mixture with the default prior");
    add_fit_options(fit);

    CLI::App* seq = app.add_subcommand("seqfit", "fit with a prior built from an earlier run");
    add_fit_options(seq);
    seq->add_option("--prior-from", prior_from, "results directory of the earlier run");
    seq->add_option("--prior-k", prior_k, "components of the prior mixture (0 = modal K)");

    CLI::App* pe = app.add_subcommand("pointest", "partition point estimate from stored draws");
    pe->add_option("--in", in_path, "results directory")->required();
    pe->add_option("--method", method, "binder or fmeasure")->check(CLI::IsMember({"binder", "fmeasure"}));
    pe->add_option("--out", out_dir, "output partition CSV");

    CLI::App* ev = app.add_subcommand("eval", "F-measure of a partition against a reference");
    ev->add_option("--pred", pred_path, "predicted partition CSV")->required();
    ev->add_option("--ref", ref_path, "reference partition CSV")->required();
    ev->add_option("--limit-p", limit_p, "limited F-measure threshold");

    CLI::App* dg = app.add_subcommand("diagnose", "Gelman-Rubin statistics across runs");
    dg->add_option("runs", run_dirs, "results directories");
    dg->add_option("--in", run_dirs, "results directory (repeatable)");

    CLI::App* fc = app.add_subcommand("fcs2csv", "convert an FCS file to CSV");
    fc->add_option("--in", in_path, "FCS file")->required();
    fc->add_option("--out", out_dir, "CSV file")->required();
    fc->add_option("--transform", transform_spec, "none | arcsinh[:cofactor] | boxcox:lambda");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfig;
    }

    try {
        if (fit->parsed() || seq->parsed()) {
            RunConfig cfg = config_path.empty() ? RunConfig{} : parse_run_config(load_json_file(config_path));
            if (!data_path.empty()) cfg.data = data_path;
            if (!out_dir.empty()) cfg.out = out_dir;
            if (seed) cfg.seed = *seed;
            if (iters) cfg.iters = *iters;
            if (burnin) cfg.burnin = *burnin;
            if (thin) cfg.thin = *thin;
            if (!mode.empty()) cfg.mode = mode;
            if (parallel) cfg.parallel = *parallel;
            if (threads) cfg.threads = *threads;
            if (!transform_spec.empty()) cfg.transform = transform_spec;
            if (fit->parsed() ? fit->count("--method") : seq->count("--method")) cfg.point_estimate = method;
            if (!prior_from.empty()) cfg.prior_from = prior_from;
            if (prior_k) cfg.prior_k = *prior_k;
            cfg.chain_config();  // validate before touching data
            TransformSpec::parse(cfg.transform);
            if (fit->parsed()) {
                cmd_fit(cfg, out, err);
            } else {
                cmd_seqfit(cfg, out, err);
            }
        } else if (sim->parsed()) {
            cmd_simulate(config_path, out_dir, seed, n_obs, out);
        } else if (pe->parsed()) {
            cmd_pointest(in_path, method, out_dir, out);
        } else if (ev->parsed()) {
            cmd_eval(pred_path, ref_path, limit_p, out, err);
        } else if (dg->parsed()) {
            cmd_diagnose(run_dirs, out);
        } else if (fc->parsed()) {
            cmd_fcs2csv(in_path, out_dir, transform_spec.empty() ? "none" : transform_spec, out);
        }
    } catch (const std::exception& e) {
        return report(e, err);
    }
    return kOk;
}

}  // namespace sdpm::cli
