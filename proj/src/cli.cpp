#include "dirt/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "dirt/conditional_diagnostics.hpp"
#include "dirt/errors.hpp"
#include "dirt/parallel.hpp"

namespace dirt {

namespace {

using nlohmann::json;

std::string line_anchor(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') { ++line; col = 1; }
        else ++col;
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ":" + line_anchor(text, e.byte) + ": " + e.what());
    }
}

void apply_model_defaults(RunConfig& cfg) {
    if (cfg.model_name == "sir") {
        cfg.opts.grid_layer0 = {17};
        cfg.opts.ref_grid = 17;
        cfg.opts.cross.max_rank = 17;
        cfg.opts.cross.init_rank = 17;
        cfg.opts.cross.tolerance = 0.1;
        cfg.opts.cross.max_sweeps = 1;
        cfg.opts.cross.validation_size = 200;
        cfg.opts.cross.enrichment = 0;
        cfg.schedule.kind = TemperingSchedule::Kind::geometric;
        cfg.schedule.beta0 = 1e-4;
        cfg.schedule.ratio = std::sqrt(10.0);
    } else if (cfg.model_name == "lingauss") {
        cfg.opts.grid_layer0 = {49};
        cfg.opts.ref_grid = 49;
        cfg.opts.cross.max_rank = 8;
        cfg.opts.cross.init_rank = 8;
        cfg.opts.cross.tolerance = 0.02;
        cfg.opts.cross.max_sweeps = 2;
        cfg.opts.cross.enrichment = 0;
        cfg.schedule.kind = TemperingSchedule::Kind::uniform;
        cfg.schedule.levels = 2;
    } else if (cfg.model_name == "diffusion1d") {
        cfg.opts.grid_layer0 = {21};
        cfg.opts.ref_grid = 21;
        cfg.opts.cross.max_rank = 8;
        cfg.opts.cross.init_rank = 8;
        cfg.opts.cross.tolerance = 0.05;
        cfg.opts.cross.max_sweeps = 2;
        cfg.opts.cross.enrichment = 0;
        cfg.schedule.kind = TemperingSchedule::Kind::geometric;
        cfg.schedule.beta0 = 1e-3;
        cfg.schedule.ratio = std::sqrt(10.0);
    } else if (cfg.model_name == "banana") {
        cfg.opts.grid_layer0 = {81};
        cfg.opts.ref_grid = 65;
        cfg.opts.cross.max_rank = 12;
        cfg.opts.cross.init_rank = 12;
        cfg.opts.cross.tolerance = 0.02;
        cfg.opts.cross.max_sweeps = 2;
        cfg.opts.cross.enrichment = 0;
        cfg.schedule.kind = TemperingSchedule::Kind::uniform;
        cfg.schedule.levels = 4;
    } else {
        throw ConfigError("unknown model '" + cfg.model_name + "'");
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

RunConfig load_config(const std::string& path) {
    const json j = parse_json_file(path);
    RunConfig cfg;
    if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
    if (!j.contains("model") || !j.at("model").is_object() || !j.at("model").contains("name"))
        throw ConfigError(path + ": missing model.name");
    cfg.model_name = j.at("model").at("name").get<std::string>();
    apply_model_defaults(cfg);

    const json& jm = j.at("model");
    maybe(jm, "d_y", cfg.lg_d_y);
    maybe(jm, "d_theta", cfg.lg_d_theta);
    maybe(jm, "scale", cfg.lg_scale);
    maybe(jm, "g_seed", cfg.lg_gseed);
    maybe(jm, "n_theta", cfg.df_n_theta);
    maybe(jm, "n_obs", cfg.df_n_obs);
    maybe(jm, "gamma_laplace", cfg.df_gamma);
    maybe(jm, "sigma", cfg.banana_sigma);
    maybe(jm, "ode_rtol", cfg.sir_ode_rtol);

    if (j.contains("reference")) {
        const json& jr = j.at("reference");
        std::string kind = jr.value("kind", "truncated_gaussian");
        if (kind == "uniform01") cfg.ref_kind = ReferenceMeasure::Kind::uniform01;
        else if (kind == "truncated_gaussian") cfg.ref_kind = ReferenceMeasure::Kind::truncated_gaussian;
        else throw ConfigError(path + ": reference.kind must be uniform01 or truncated_gaussian");
        maybe(jr, "bound", cfg.ref_bound);
    }
    if (j.contains("schedule")) {
        const json& js = j.at("schedule");
        std::string kind = js.value("kind", "geometric");
        if (kind == "geometric") cfg.schedule.kind = TemperingSchedule::Kind::geometric;
        else if (kind == "uniform") cfg.schedule.kind = TemperingSchedule::Kind::uniform;
        else if (kind == "adaptive") cfg.schedule.kind = TemperingSchedule::Kind::adaptive;
        else throw ConfigError(path + ": schedule.kind must be geometric, uniform, or adaptive");
        maybe(js, "beta0", cfg.schedule.beta0);
        maybe(js, "ratio", cfg.schedule.ratio);
        maybe(js, "levels", cfg.schedule.levels);
        maybe(js, "eta", cfg.schedule.eta);
        maybe(js, "samples", cfg.schedule.n_adapt_samples);
    }
    if (j.contains("cross")) {
        const json& jc = j.at("cross");
        maybe(jc, "max_rank", cfg.opts.cross.max_rank);
        maybe(jc, "init_rank", cfg.opts.cross.init_rank);
        maybe(jc, "tolerance", cfg.opts.cross.tolerance);
        maybe(jc, "max_sweeps", cfg.opts.cross.max_sweeps);
        maybe(jc, "validation_size", cfg.opts.cross.validation_size);
        maybe(jc, "enrichment", cfg.opts.cross.enrichment);
        maybe(jc, "rounding_tol", cfg.opts.cross.rounding_tol);
    }
    if (j.contains("grid")) {
        const json& jg = j.at("grid");
        if (jg.contains("points_per_dim")) {
            if (jg.at("points_per_dim").is_array())
                cfg.opts.grid_layer0 = jg.at("points_per_dim").get<std::vector<int>>();
            else
                cfg.opts.grid_layer0 = {jg.at("points_per_dim").get<int>()};
        }
        maybe(jg, "reference_points_per_dim", cfg.opts.ref_grid);
    }
    if (j.contains("preconditioner")) {
        const json& jp = j.at("preconditioner");
        cfg.precond_mode = jp.value("mode", "none");
        if (cfg.precond_mode != "none" && cfg.precond_mode != "reorder" && cfg.precond_mode != "rotate")
            throw ConfigError(path + ": preconditioner.mode must be none, reorder, or rotate");
        maybe(jp, "n_y", cfg.precond_sel.n_y);
        maybe(jp, "n_theta", cfg.precond_sel.n_theta);
        maybe(jp, "energy_threshold", cfg.precond_sel.energy_threshold);
        maybe(jp, "samples", cfg.precond_samples);
        maybe(jp, "reduced_y_halfwidth", cfg.reduced_y_halfwidth);
        maybe(jp, "reduced_theta_halfwidth", cfg.reduced_theta_halfwidth);
    }
    maybe(j, "gamma_factor", cfg.opts.gamma_factor);
    maybe(j, "diag_samples", cfg.opts.diag_samples);
    maybe(j, "seed", cfg.seed);
    maybe(j, "threads", cfg.threads);
    maybe(j, "out_dir", cfg.out_dir);
    cfg.opts.seed = cfg.seed;
    cfg.schedule.validate();
    return cfg;
}

TargetDensity make_target(const RunConfig& cfg) {
    if (cfg.model_name == "sir") {
        SirModel m;
        m.ode_rtol = cfg.sir_ode_rtol;
        return sir_target(m);
    }
    if (cfg.model_name == "lingauss") {
        return linear_gaussian_target(
            LinearGaussianModel::random(cfg.lg_d_y, cfg.lg_d_theta, cfg.lg_scale, cfg.lg_gseed));
    }
    if (cfg.model_name == "diffusion1d") {
        Diffusion1DModel m;
        m.n_theta = cfg.df_n_theta;
        m.n_obs = cfg.df_n_obs;
        m.gamma_laplace = cfg.df_gamma;
        return diffusion1d_target(m);
    }
    if (cfg.model_name == "banana") return banana_target(cfg.banana_sigma);
    throw ConfigError("unknown model '" + cfg.model_name + "'");
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

json layer_log_json(const std::vector<LayerLog>& log) {
    json arr = json::array();
    for (const auto& l : log) {
        arr.push_back({{"beta", l.beta},
                       {"cross_evals", l.cross_evals},
                       {"diag_evals", l.diag_evals},
                       {"adapt_evals", l.adapt_evals},
                       {"achieved_error", l.achieved_error},
                       {"ranks", l.ranks},
                       {"sweeps", l.sweeps},
                       {"hellinger", l.hellinger.value},
                       {"hellinger_se", l.hellinger.std_error},
                       {"hellinger_ess", l.hellinger.ess},
                       {"wall_ms", l.wall_ms}});
    }
    return arr;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<Eigen::VectorXd> read_csv_rows(const std::string& path, int expect_cols) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open observation file '" + path + "'");
    std::vector<Eigen::VectorXd> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> vals;
        std::size_t pos = 0;
        bool numeric = true;
        while (pos <= line.size()) {
            std::size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            std::string tok = line.substr(pos, next - pos);
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                vals.push_back(v);
            } catch (...) {
                numeric = false;
                break;
            }
            pos = next + 1;
        }
        if (!numeric) continue; // header row
        if (static_cast<int>(vals.size()) != expect_cols)
            throw ConfigError("observation row has " + std::to_string(vals.size()) +
                              " columns, expected " + std::to_string(expect_cols));
        rows.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size()));
    }
    return rows;
}

std::optional<Preconditioner> maybe_precondition(const RunConfig& cfg, const TargetDensity& target,
                                                 BridgingTarget& bridging) {
    if (cfg.precond_mode == "none") return std::nullopt;
    HMatrices h = estimate_h_general(target.h_general_input(/*fd_fallback=*/true),
                                     cfg.precond_samples, cfg.seed + 0x9a);
    const auto strategy = cfg.precond_mode == "reorder" ? Preconditioner::Strategy::reorder
                                                        : Preconditioner::Strategy::rotate;
    Preconditioner p = build_preconditioner(h, strategy, cfg.precond_sel);
    std::vector<Interval1D> yb, tb;
    if (strategy == Preconditioner::Strategy::rotate) {
        yb.assign(p.n_y, {-cfg.reduced_y_halfwidth, cfg.reduced_y_halfwidth});
        tb.assign(p.n_theta, {-cfg.reduced_theta_halfwidth, cfg.reduced_theta_halfwidth});
    }
    bridging = reduce_target(bridging, p, yb, tb);
    return p;
}

} // namespace

void cmd_build(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    TargetDensity target = make_target(cfg);
    BridgingTarget bridging = target.bridging();
    auto precond = maybe_precondition(cfg, target, bridging);
    const ReferenceMeasure ref(cfg.ref_kind, bridging.dims.total(), cfg.ref_bound);
    DirtTransport transport =
        DirtTransport::build(bridging, ref, cfg.schedule, cfg.opts, std::move(precond));
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    const std::string dirt_path = cfg.out_dir + "/transport.dirt";
    transport.save(dirt_path);

    json report{{"model", cfg.model_name},
                {"seed", cfg.seed},
                {"levels", transport.betas().size()},
                {"betas", transport.betas()},
                {"total_evals", transport.total_evals()},
                {"wall_ms", wall},
                {"transport", dirt_path},
                {"layers", layer_log_json(transport.build_log())}};
    write_text(cfg.out_dir + "/build_report.json", report.dump(2) + "\n");
    std::printf("built %s: %zu levels, %ld evaluations, %.1f ms\n", dirt_path.c_str(),
                transport.betas().size(), transport.total_evals(), wall);
}

void cmd_condition(const std::string& dirt_path, const std::string& y_file, int n_samples,
                   std::uint64_t seed, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    DirtTransport transport = DirtTransport::load(dirt_path);
    const int d_y_in = transport.precond() ? transport.precond()->full_d_y()
                                           : transport.dims().d_y;
    const auto rows = read_csv_rows(y_file, d_y_in);
    const int dt = transport.dims().d_theta;
    const int dt_out = transport.precond() ? transport.precond()->full_d_theta() : dt;

    std::ofstream out(out_dir + "/samples.csv");
    if (!out) throw IoError("cannot open samples.csv for writing");
    out << "y_id,sample_id";
    for (int j = 0; j < dt_out; ++j) out << ",theta_" << (j + 1);
    out << ",log_cond_pdf\n";

    const auto& ref = transport.reference();
    for (std::size_t yi = 0; yi < rows.size(); ++yi) {
        const auto ctx = transport.condition(transport.observation_to_transport_space(rows[yi]));
        auto rng = make_rng(seed, 0xf00d + yi);
        Eigen::MatrixXd vs(dt, n_samples);
        for (int s = 0; s < n_samples; ++s)
            for (int k = 0; k < dt; ++k) vs(k, s) = ref.invcdf1(uniform01(rng));
        Eigen::MatrixXd thetas(dt, n_samples);
        Eigen::VectorXd logp(n_samples);
        parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t s) {
            const Eigen::Index c = static_cast<Eigen::Index>(s);
            thetas.col(c) = transport.sample_conditional(ctx, vs.col(c));
            logp[c] = transport.conditional_logpdf(ctx, thetas.col(c));
        });
        for (int s = 0; s < n_samples; ++s) {
            out << yi << "," << s;
            const Eigen::VectorXd lifted = transport.lift_theta(thetas.col(s));
            for (int j = 0; j < dt_out; ++j) out << "," << fmt17(lifted[j]);
            out << "," << fmt17(logp[s]) << "\n";
        }
    }
    if (!out) throw IoError("write failed: samples.csv");
    std::printf("wrote %s/samples.csv (%zu observations x %d samples)\n", out_dir.c_str(),
                rows.size(), n_samples);
}

void cmd_diagnose(const std::string& dirt_path, const RunConfig& cfg, int realizations,
                  int n_per_y, std::uint64_t seed) {
    std::filesystem::create_directories(cfg.out_dir);
    DirtTransport transport = DirtTransport::load(dirt_path);
    TargetDensity target = make_target(cfg);
    if (!target.sample_joint) throw ConfigError("diagnose: model has no joint sampler");

    std::vector<Eigen::VectorXd> ys;
    auto rng = make_rng(seed, 0xd1a9);
    for (int i = 0; i < realizations; ++i) {
        Eigen::VectorXd y, th;
        target.sample_joint(rng, y, th);
        ys.push_back(y);
    }
    const auto res = conditional_error_histogram(transport, target, ys, n_per_y, seed + 17);

    std::ofstream hist(cfg.out_dir + "/hellinger_hist.csv");
    hist << "y_id,hellinger,std_error,ess\n";
    for (std::size_t i = 0; i < res.per_y.size(); ++i)
        hist << i << "," << fmt17(res.per_y[i].value) << "," << fmt17(res.per_y[i].std_error) << ","
             << fmt17(res.per_y[i].ess) << "\n";
    if (!hist) throw IoError("write failed: hellinger_hist.csv");

    json summary{{"realizations", realizations},
                 {"n_per_y", n_per_y},
                 {"median", res.median},
                 {"q25", res.q25},
                 {"q75", res.q75},
                 {"mean", res.mean},
                 {"pooled_se", res.pooled_se}};
    write_text(cfg.out_dir + "/summary.json", summary.dump(2) + "\n");
    std::printf("diagnose: median Hellinger %.4f (q25 %.4f, q75 %.4f) over %d observations\n",
                res.median, res.q25, res.q75, realizations);
}

void cmd_reproduce_sir(std::uint64_t seed, const std::string& out_dir, int realizations,
                       int n_per_y) {
    std::filesystem::create_directories(out_dir);
    RunConfig cfg;
    cfg.model_name = "sir";
    apply_model_defaults(cfg);
    cfg.seed = seed;
    cfg.opts.seed = seed;
    cfg.out_dir = out_dir;

    const auto t0 = std::chrono::steady_clock::now();
    TargetDensity target = make_target(cfg);
    BridgingTarget bridging = target.bridging();
    const ReferenceMeasure ref(cfg.ref_kind, bridging.dims.total(), cfg.ref_bound);
    DirtTransport transport = DirtTransport::build(bridging, ref, cfg.schedule, cfg.opts);
    const double build_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    // synthetic data: theta ~ prior, y = I(t; theta) + standard normal noise
    SirModel model;
    model.ode_rtol = cfg.sir_ode_rtol;
    auto rng = make_rng(seed, 0x51e);
    std::vector<Eigen::VectorXd> ys;
    for (int i = 0; i < realizations; ++i) {
        Eigen::VectorXd y, th;
        target.sample_joint(rng, y, th);
        ys.push_back(y);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const auto hist = conditional_error_histogram(transport, target, ys, n_per_y, seed + 29);

    // multimodal benchmark case: data generated at theta = (0.1, 1)
    Eigen::VectorXd mm_y = model.infected_at_times(0.1, 1.0);
    {
        std::normal_distribution<double> noise(0.0, model.noise_std);
        auto mm_rng = make_rng(seed, 0x317);
        for (Eigen::Index i = 0; i < mm_y.size(); ++i) mm_y[i] += noise(mm_rng);
    }
    const auto mm = conditional_hellinger(transport, target, mm_y, 5 * n_per_y, seed + 31);
    const double online_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1).count();
    const double us_per_sample =
        online_ms * 1000.0 / (static_cast<double>(realizations) * n_per_y + 5.0 * n_per_y);

    std::ofstream histcsv(out_dir + "/hellinger_hist.csv");
    histcsv << "y_id,hellinger,std_error,ess\n";
    for (std::size_t i = 0; i < hist.per_y.size(); ++i)
        histcsv << i << "," << fmt17(hist.per_y[i].value) << "," << fmt17(hist.per_y[i].std_error)
                << "," << fmt17(hist.per_y[i].ess) << "\n";

    json report{{"seed", seed},
                {"realizations", realizations},
                {"n_per_y", n_per_y},
                {"levels", transport.betas().size()},
                {"betas", transport.betas()},
                {"total_evals", transport.total_evals()},
                {"build_ms", build_ms},
                {"median_hellinger", hist.median},
                {"q25", hist.q25},
                {"q75", hist.q75},
                {"multimodal_hellinger", mm.value},
                {"multimodal_se", mm.std_error},
                {"online_us_per_sample", us_per_sample},
                {"layers", layer_log_json(transport.build_log())}};
    write_text(out_dir + "/report.json", report.dump(2) + "\n");
    std::printf("reproduce-sir: %zu levels, %ld evals, median D_H %.4f, multimodal D_H %.4f "
                "(%.1f us/sample online)\n",
                transport.betas().size(), transport.total_evals(), hist.median, mm.value,
                us_per_sample);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"offline-online conditional sampling with tensor-train transports"};
    app.require_subcommand(1);

    std::string config_path, dirt_path, y_file, out_override;
    int n_samples = 1000, realizations = 16, n_per_y = 2000;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    int threads_flag = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out_override, "output directory override");
        sub->add_option("--threads", threads_flag, "worker thread count (0 = all cores)");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { seed_flag = v; seed_given = true; },
            "seed override");
    };

    auto* build = app.add_subcommand("build", "offline: construct and save a transport");
    build->add_option("--config", config_path, "JSON run configuration")->required();
    add_common(build);

    auto* condition = app.add_subcommand("condition", "online: draw conditional samples");
    condition->add_option("--dirt", dirt_path, "transport file")->required();
    condition->add_option("--y", y_file, "CSV of observation rows")->required();
    condition->add_option("--n", n_samples, "samples per observation");
    add_common(condition);

    auto* diagnose = app.add_subcommand("diagnose", "conditional accuracy histogram");
    diagnose->add_option("--dirt", dirt_path, "transport file")->required();
    diagnose->add_option("--config", config_path, "JSON run configuration")->required();
    diagnose->add_option("--realizations", realizations, "synthetic observation count");
    diagnose->add_option("--n", n_per_y, "samples per observation");
    add_common(diagnose);

    auto* reproduce = app.add_subcommand("reproduce-sir", "scaled SIR accuracy study");
    reproduce->add_option("--realizations", realizations, "synthetic observation count");
    reproduce->add_option("--n", n_per_y, "samples per observation");
    add_common(reproduce);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (const char* env = std::getenv("DIRT_THREADS"); env && threads_flag < 0)
            threads_flag = std::atoi(env);
        if (const char* env = std::getenv("DIRT_OUT_DIR"); env && out_override.empty())
            out_override = env;

        if (build->parsed()) {
            RunConfig cfg = load_config(config_path);
            if (seed_given) { cfg.seed = seed_flag; cfg.opts.seed = seed_flag; }
            if (threads_flag >= 0) cfg.threads = threads_flag;
            if (!out_override.empty()) cfg.out_dir = out_override;
            set_thread_count(cfg.threads);
            cmd_build(cfg);
        } else if (condition->parsed()) {
            set_thread_count(std::max(0, threads_flag));
            cmd_condition(dirt_path, y_file, n_samples, seed_given ? seed_flag : 1,
                          out_override.empty() ? "out" : out_override);
        } else if (diagnose->parsed()) {
            RunConfig cfg = load_config(config_path);
            if (!out_override.empty()) cfg.out_dir = out_override;
            if (threads_flag >= 0) cfg.threads = threads_flag;
            set_thread_count(cfg.threads);
            cmd_diagnose(dirt_path, cfg, realizations, n_per_y, seed_given ? seed_flag : 1);
        } else if (reproduce->parsed()) {
            set_thread_count(std::max(0, threads_flag));
            cmd_reproduce_sir(seed_given ? seed_flag : 1,
                              out_override.empty() ? "out" : out_override,
                              realizations == 16 ? 32 : realizations,
                              n_per_y == 2000 ? 10000 : n_per_y);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const BuildError& e) {
        std::fprintf(stderr, "build error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    }
    return 0;
}

} // namespace dirt
