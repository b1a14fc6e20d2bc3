// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Command-line front end. `run` is the whole program so tests can drive it
// in-process.
//
// Exit codes: 0 ok, 2 configuration or input error, 3 numeric failure,
// 4 external denoiser failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "baselines.hpp"
#include "config.hpp"
#include "io.hpp"
#include "op_grammar.hpp"
#include "sampler.hpp"
#include "synth.hpp"

namespace vidsolve::cli {

enum ExitCode : int { kOk = 0, kConfigFailure = 2, kNumericFailure = 3, kExternalFailure = 4 };

namespace fs = std::filesystem;
using nlohmann::json;

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

// Flags shared by the solver-driven subcommands.
inline const std::vector<Flag>& solver_flags() {
    static const std::vector<Flag> flags = {
        {"--nfe", "solver.nfe", "Number of reverse diffusion steps"},
        {"--eta", "solver.eta", "Stochasticity of renoising"},
        {"--l", "solver.l", "CG iterations per step"},
        {"--update", "solver.update", "Data-consistency rule: cg or gd"},
        {"--gamma", "solver.gamma", "Gradient step size for --update gd"},
        {"--noise-sync", "solver.noise_sync", "Share noise across frames (true/false)"},
        {"--seed", "solver.seed", "Sampler seed"},
        {"--tol", "solver.tol", "Early-stop tolerance for CG (0 = fixed depth)"},
        {"--t-base", "solver.t_base", "Base schedule length T"},
        {"--beta-start", "solver.beta_start", "First beta of the linear schedule"},
        {"--beta-end", "solver.beta_end", "Last beta of the linear schedule"},
        {"--denoiser", "denoiser.kind", "zero, oracle_gaussian, smoother or external"},
        {"--scale", "denoiser.scale", "Smoother width scale"},
        {"--mu", "denoiser.mu", "Oracle prior mean"},
        {"--sigma0", "denoiser.sigma0", "Oracle prior standard deviation"},
        {"--bridge-cmd", "denoiser.bridge_cmd", "Command line of the external denoiser bridge"},
        {"--timeout-ms", "denoiser.timeout_ms", "Per-request timeout for the bridge"},
    };
    return flags;
}

class Command {
public:
    Command(CLI::App& app, const std::string& name, const std::string& help) : sub_(app.add_subcommand(name, help)) {
        sub_->add_option("--config", config_path_, "Run configuration file");
        add({"--threads", "solver.threads", "Worker threads (0 = all cores)"});
    }

    void add(const Flag& f) {
        auto& slot = storage_[f.key];
        options_.emplace_back(sub_->add_option(f.name, slot, f.help), f.key);
    }

    void add(const std::vector<Flag>& flags) {
        for (const auto& f : flags) add(f);
    }

    CLI::App* app() const { return sub_; }
    bool parsed() const { return sub_->parsed(); }

    /// Defaults, then the config file, then explicit flags.
    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path_.empty()) cfg.merge_file(config_path_);
        for (const auto& [opt, key] : options_)
            if (opt->count() > 0) cfg.set(key, storage_.at(key));
        return cfg;
    }

private:
    CLI::App* sub_;
    std::string config_path_;
    std::map<std::string, std::string> storage_;
    std::vector<std::pair<CLI::Option*, std::string>> options_;
};

inline std::string required(const RunConfig& cfg, const std::string& key) {
    const auto& v = cfg.get(key);
    if (v.empty()) fail(ErrorCode::ConfigError, "missing required setting '" + key + "'");
    return v;
}

inline SolverConfig solver_config(const RunConfig& cfg) {
    SolverConfig s;
    s.nfe = cfg.get_size("solver.nfe");
    s.eta = cfg.get_double("solver.eta");
    s.l = cfg.get_size("solver.l");
    const auto& upd = cfg.get("solver.update");
    if (upd == "cg") s.update = UpdateRule::CG;
    else if (upd == "gd") s.update = UpdateRule::GD;
    else fail(ErrorCode::ConfigError, "solver.update must be cg or gd, got '" + upd + "'");
    s.gamma = cfg.get_double("solver.gamma");
    s.noise_sync = cfg.get_bool("solver.noise_sync");
    s.seed = cfg.get_size("solver.seed");
    s.cg_tol = cfg.get_double("solver.tol");
    s.validate();
    return s;
}

inline NoiseSchedule schedule(const RunConfig& cfg) {
    return make_linear_schedule(cfg.get_size("solver.t_base"), cfg.get_double("solver.beta_start"),
                                cfg.get_double("solver.beta_end"));
}

inline EpsModel denoiser(const RunConfig& cfg) {
    const auto& kind = cfg.get("denoiser.kind");
    if (kind == "zero") return EpsModel::zero();
    if (kind == "oracle_gaussian")
        return EpsModel::oracle_gaussian(cfg.get_double("denoiser.mu"), cfg.get_double("denoiser.sigma0"));
    if (kind == "smoother") return EpsModel::smoother(cfg.get_double("denoiser.scale"));
    if (kind == "external") {
        const auto cmd = required(cfg, "denoiser.bridge_cmd");
        const auto timeout = std::chrono::milliseconds(cfg.get_size("denoiser.timeout_ms"));
        return EpsModel::external(std::make_shared<BridgeClient>(cmd, timeout));
    }
    fail(ErrorCode::ConfigError, "unknown denoiser kind '" + kind + "'");
}

inline std::string sidecar_path(const std::string& measurement) { return measurement + ".op"; }

/// Operator text from op.op, falling back to the sidecar written by degrade.
inline std::string operator_text(RunConfig& cfg) {
    if (!cfg.get("op.op").empty()) return cfg.get("op.op");
    const auto& input = cfg.get("data.input");
    if (!input.empty() && fs::exists(sidecar_path(input))) {
        RunConfig side;
        side.merge_file(sidecar_path(input));
        cfg.set("op.op", side.get("op.op"));
        return cfg.get("op.op");
    }
    fail(ErrorCode::ConfigError, "missing required setting 'op.op' (and no sidecar next to the measurement)");
}

inline json to_json(const MetricReport& r) {
    json j;
    if (std::isinf(r.psnr_db)) j["psnr_db"] = "inf";
    else j["psnr_db"] = r.psnr_db;
    j["ssim"] = r.ssim;
    j["residual"] = r.residual ? json(*r.residual) : json(nullptr);
    j["inter_batch_diff"] = r.inter_batch_diff ? json(*r.inter_batch_diff) : json(nullptr);
    return j;
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

inline void emit_metrics(const RunConfig& cfg, const std::string& default_path, const MetricReport& r) {
    const std::string text = to_json(r).dump() + "\n";
    std::cout << text;
    const std::string& path = cfg.get("output.metrics").empty() ? default_path : cfg.get("output.metrics");
    if (!path.empty()) write_text(path, text);
}

inline void write_trace(const std::string& path, const SolveTrace<float>& trace) {
    std::ostringstream out;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        json j{{"step", i}, {"t", s.t}, {"residual", s.residual}, {"residual_before", s.residual_before},
               {"inter_batch_diff", s.inter_batch_diff}};
        out << j.dump() << "\n";
    }
    write_text(path, out.str());
}

inline void dump_tweedie(const std::string& dir, const SolveTrace<float>& trace) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        if (!trace.steps[i].tweedie_batch) continue;
        char name[48];
        std::snprintf(name, sizeof(name), "tweedie_%03zu_t%04zu.svtf", i, trace.steps[i].t);
        save_svtf(*trace.steps[i].tweedie_batch, fs::path(dir) / name);
    }
}

// ---------------------------------------------------------------------------

inline int cmd_generate(RunConfig& cfg) {
    const Shape shape{cfg.get_size("data.n"), cfg.get_size("data.c"), cfg.get_size("data.h"), cfg.get_size("data.w")};
    const auto video = synth_video<float>(parse_synth_kind(cfg.get("data.kind")), shape, cfg.get_size("data.seed"));
    const auto out = required(cfg, "output.out");
    save_svtf(video, out);
    if (!cfg.get("output.ppm_dir").empty()) save_ppm_frames(video, cfg.get("output.ppm_dir"));
    cfg.write(out + ".resolved.cfg");
    return kOk;
}

inline int cmd_degrade(RunConfig& cfg) {
    const Video x = load_svtf(required(cfg, "data.input"));
    const auto text = required(cfg, "op.op");
    const auto op = parse_operator<float>(text, x.shape());
    const Video y = degrade(x, op, cfg.get_double("op.noise_std"), cfg.get_size("op.seed"));
    const auto out = required(cfg, "output.out");
    save_svtf(y, out);
    std::ostringstream side;
    const Shape in = x.shape();
    side << "# input shape " << in.n << " " << in.c << " " << in.h << " " << in.w << "\n"
         << "[op]\nop = \"" << text << "\"\nnoise_std = " << cfg.get("op.noise_std") << "\nseed = " << cfg.get("op.seed")
         << "\n";
    write_text(sidecar_path(out), side.str());
    cfg.write(out + ".resolved.cfg");
    return kOk;
}

inline int cmd_solve(RunConfig& cfg) {
    const Video y = load_svtf(required(cfg, "data.input"));
    const auto text = operator_text(cfg);
    std::optional<Video> ref;
    if (!cfg.get("data.ref").empty()) ref = load_svtf(cfg.get("data.ref"));
    const Shape in = ref ? ref->shape() : infer_input_shape(text, y.shape());
    const auto op = parse_operator<float>(text, in);
    auto scfg = solver_config(cfg);
    const auto out = required(cfg, "output.out");
    const bool dump = !cfg.get("output.tweedie_dir").empty();
    scfg.trace = dump;
    const auto sched = schedule(cfg);
    const auto model = denoiser(cfg);
    cfg.write(out + ".resolved.cfg");

    auto [x, trace] = solve(op, y, model, sched, scfg);
    save_svtf(x, out);
    if (!cfg.get("output.trace").empty()) write_trace(cfg.get("output.trace"), trace);
    if (dump) dump_tweedie(cfg.get("output.tweedie_dir"), trace);
    if (!cfg.get("output.ppm_dir").empty()) save_ppm_frames(x, cfg.get("output.ppm_dir"));
    if (ref) {
        auto report = evaluate(x, *ref);
        report.residual = residual(op, x, y);
        emit_metrics(cfg, out + ".metrics.json", report);
    }
    return kOk;
}

inline int cmd_blind(RunConfig& cfg) {
    const Video y = load_svtf(required(cfg, "data.input"));
    std::optional<Video> pre;
    if (!cfg.get("data.pre_restoration").empty()) pre = load_svtf(cfg.get("data.pre_restoration"));
    const auto& fam = cfg.get("solver.psf_family");
    PsfFamily family = PsfFamily::Uniform;
    if (fam == "gauss" || fam == "gaussian") family = PsfFamily::Gaussian;
    else if (fam != "uniform") fail(ErrorCode::ConfigError, "solver.psf_family must be uniform or gaussian");
    const auto scfg = solver_config(cfg);
    const auto out = required(cfg, "output.out");
    const auto sched = schedule(cfg);
    const auto model = denoiser(cfg);
    cfg.write(out + ".resolved.cfg");

    const auto result = blind_deblur(y, model, sched, scfg, pre, family, cfg.get_double_list("solver.grid"));
    save_svtf(result.video, out);
    json j{{"initial_psf", result.initial_psf.descriptor()},
           {"refined_psf", result.refined_psf.descriptor()},
           {"stage1_residual", result.stage1_residual},
           {"stage2_residual", result.stage2_residual}};
    write_text(out + ".psf.json", j.dump() + "\n");
    std::cout << j.dump() << "\n";
    if (!cfg.get("data.ref").empty()) {
        const Video ref = load_svtf(cfg.get("data.ref"));
        auto report = evaluate(result.video, ref);
        report.residual = result.stage2_residual;
        emit_metrics(cfg, out + ".metrics.json", report);
    }
    return kOk;
}

inline int cmd_baseline(RunConfig& cfg) {
    const Video y = load_svtf(required(cfg, "data.input"));
    const auto text = operator_text(cfg);
    std::optional<Video> ref;
    if (!cfg.get("data.ref").empty()) ref = load_svtf(cfg.get("data.ref"));
    const auto op = parse_operator<float>(text, ref ? ref->shape() : infer_input_shape(text, y.shape()));
    const auto out = required(cfg, "output.out");
    const auto& method = cfg.get("solver.method");
    Video x;
    if (method == "cg") {
        std::size_t iters = cfg.get_size("solver.iters");
        if (iters == 0) iters = cfg.get_size("solver.nfe") * cfg.get_size("solver.l");
        cfg.write(out + ".resolved.cfg");
        x = standalone_cg(op, y, iters);
    } else if (method == "admm-tv") {
        AdmmConfig a;
        a.rho = cfg.get_double("solver.rho");
        a.lambda = cfg.get_double("solver.lambda");
        a.outer = cfg.get_size("solver.outer");
        a.inner = cfg.get_size("solver.inner");
        const auto& axes = cfg.get("solver.tv_axes");
        a.axes = TvAxes{axes.find('t') != std::string::npos, axes.find('h') != std::string::npos,
                        axes.find('w') != std::string::npos};
        cfg.write(out + ".resolved.cfg");
        x = admm_tv(op, y, a).video;
    } else {
        fail(ErrorCode::ConfigError, "solver.method must be cg or admm-tv, got '" + method + "'");
    }
    save_svtf(x, out);
    if (ref) {
        auto report = evaluate(x, *ref);
        report.residual = residual(op, x, y);
        emit_metrics(cfg, out + ".metrics.json", report);
    }
    return kOk;
}

inline int cmd_metrics(RunConfig& cfg) {
    const Video x = load_svtf(required(cfg, "data.input"));
    const Video ref = load_svtf(required(cfg, "data.ref"));
    auto report = evaluate(x, ref);
    if (!cfg.get("data.measurement").empty()) {
        const Video y = load_svtf(cfg.get("data.measurement"));
        const auto op = parse_operator<float>(required(cfg, "op.op"), x.shape());
        report.residual = residual(op, x, y);
    }
    emit_metrics(cfg, "", report);
    return kOk;
}

inline int cmd_ablate(RunConfig& cfg) {
    const Video ref = load_svtf(required(cfg, "data.ref"));
    const auto op = parse_operator<float>(required(cfg, "op.op"), ref.shape());
    const Video y = degrade(ref, op, cfg.get_double("op.noise_std"), cfg.get_size("op.seed"));
    const auto base = solver_config(cfg);
    const auto sched = schedule(cfg);
    const auto model = denoiser(cfg);
    const auto csv = required(cfg, "output.csv");
    cfg.write(csv + ".resolved.cfg");

    std::ostringstream table;
    table << "noise_sync,update,eta,nfe,l,psnr_db,ssim,residual,inter_batch_diff\n";
    for (const auto& sync : cfg.get_list("solver.sync_grid")) {
        for (const auto& upd : cfg.get_list("solver.update_grid")) {
            for (double eta : cfg.get_double_list("solver.eta_grid")) {
                RunConfig row = cfg;
                row.set("solver.noise_sync", sync);
                row.set("solver.update", upd);
                SolverConfig s = solver_config(row);
                s.eta = eta;
                s.seed = base.seed;
                const Video x = solve(op, y, model, sched, s).first;
                char line[256];
                std::snprintf(line, sizeof(line), "%s,%s,%.6g,%zu,%zu,%.6f,%.6f,%.6e,%.6e\n", s.noise_sync ? "on" : "off",
                              upd.c_str(), eta, s.nfe, s.l, psnr(x, ref), ssim(x, ref), residual(op, x, y),
                              x.frames() >= 2 ? inter_batch_diff(x) : 0.0);
                table << line;
            }
        }
    }
    write_text(csv, table.str());
    return kOk;
}

// ---------------------------------------------------------------------------

inline int exit_code_for(const Error& e) {
    if (e.is_external()) return kExternalFailure;
    if (e.code() == ErrorCode::NonFiniteEncountered || e.code() == ErrorCode::EtaTooLarge) return kNumericFailure;
    return kConfigFailure;
}

/// args[0] is the subcommand.
inline int run(const std::vector<std::string>& args) {
    CLI::App app{"Video inverse problem solver with per-frame diffusion priors", "vidsolve"};
    app.require_subcommand(1);

    Command generate(app, "generate", "Write a synthetic test clip");
    generate.add({{"--kind", "data.kind", "moving_square, gradient_drift or static"},
                  {"--frames", "data.n", "Frames"},
                  {"--channels", "data.c", "Channels"},
                  {"--height", "data.h", "Height"},
                  {"--width", "data.w", "Width"},
                  {"--seed", "data.seed", "Generator seed"},
                  {"--out", "output.out", "Output SVTF"},
                  {"--ppm-dir", "output.ppm_dir", "Also export PPM frames here"}});

    Command degrade_cmd(app, "degrade", "Apply a degradation operator and noise");
    degrade_cmd.add({{"--in", "data.input", "Clean SVTF"},
                     {"--op", "op.op", "Operator descriptor"},
                     {"--noise-std", "op.noise_std", "Measurement noise std"},
                     {"--seed", "op.seed", "Noise seed"},
                     {"--out", "output.out", "Measurement SVTF"}});

    Command solve_cmd(app, "solve", "Restore a measurement with batch-consistent diffusion sampling");
    solve_cmd.add({{"--in", "data.input", "Measurement SVTF"},
                   {"--op", "op.op", "Operator descriptor (default: sidecar)"},
                   {"--ref", "data.ref", "Ground truth for metrics"},
                   {"--out", "output.out", "Output SVTF"},
                   {"--trace", "output.trace", "Per-step JSONL trace"},
                   {"--tweedie-dir", "output.tweedie_dir", "Dump per-step denoised batches"},
                   {"--metrics", "output.metrics", "Metric report JSON"},
                   {"--ppm-dir", "output.ppm_dir", "Export result frames as PPM"}});
    solve_cmd.add(solver_flags());

    Command blind(app, "blind", "Blind temporal deblurring with PSF estimation");
    blind.add({{"--in", "data.input", "Measurement SVTF"},
               {"--ref", "data.ref", "Ground truth for metrics"},
               {"--pre-restoration", "data.pre_restoration", "Pre-restored clip for the initial PSF"},
               {"--grid", "solver.grid", "Comma-separated PSF parameters"},
               {"--psf-family", "solver.psf_family", "uniform or gaussian"},
               {"--out", "output.out", "Output SVTF"},
               {"--metrics", "output.metrics", "Metric report JSON"}});
    blind.add(solver_flags());

    Command baseline(app, "baseline", "Classical reconstruction (cg or admm-tv)");
    baseline.add({{"--in", "data.input", "Measurement SVTF"},
                  {"--op", "op.op", "Operator descriptor (default: sidecar)"},
                  {"--ref", "data.ref", "Ground truth for metrics"},
                  {"--method", "solver.method", "cg or admm-tv"},
                  {"--iters", "solver.iters", "CG iterations (0 = nfe * l)"},
                  {"--nfe", "solver.nfe", "Used for the default CG budget"},
                  {"--l", "solver.l", "Used for the default CG budget"},
                  {"--rho", "solver.rho", "ADMM penalty"},
                  {"--lambda", "solver.lambda", "TV weight"},
                  {"--outer", "solver.outer", "ADMM iterations"},
                  {"--inner", "solver.inner", "CG iterations per ADMM step"},
                  {"--tv-axes", "solver.tv_axes", "Subset of thw"},
                  {"--out", "output.out", "Output SVTF"},
                  {"--metrics", "output.metrics", "Metric report JSON"}});

    Command metrics_cmd(app, "metrics", "Compare two SVTF files");
    metrics_cmd.add({{"--in", "data.input", "Estimate SVTF"},
                     {"--ref", "data.ref", "Reference SVTF"},
                     {"--measurement", "data.measurement", "Measurement for the residual"},
                     {"--op", "op.op", "Operator for the residual"},
                     {"--metrics", "output.metrics", "Also write the report here"}});

    Command ablate(app, "ablate", "Sweep noise sync, update rule and eta; write a CSV");
    ablate.add({{"--ref", "data.ref", "Ground-truth SVTF"},
                {"--op", "op.op", "Operator descriptor"},
                {"--noise-std", "op.noise_std", "Measurement noise std"},
                {"--op-seed", "op.seed", "Measurement noise seed"},
                {"--eta-grid", "solver.eta_grid", "Comma-separated eta values"},
                {"--sync-grid", "solver.sync_grid", "Comma-separated on/off"},
                {"--update-grid", "solver.update_grid", "Comma-separated cg/gd"},
                {"--csv", "output.csv", "Output CSV"}});
    ablate.add(solver_flags());

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigFailure;
    }

    try {
        const std::vector<std::pair<Command*, int (*)(RunConfig&)>> table = {
            {&generate, cmd_generate}, {&degrade_cmd, cmd_degrade}, {&solve_cmd, cmd_solve}, {&blind, cmd_blind},
            {&baseline, cmd_baseline}, {&metrics_cmd, cmd_metrics}, {&ablate, cmd_ablate}};
        for (const auto& [cmd, fn] : table) {
            if (!cmd->parsed()) continue;
            RunConfig cfg = cmd->resolve();
            set_num_threads(static_cast<unsigned>(cfg.get_size("solver.threads")));
            return fn(cfg);
        }
    } catch (const Error& e) {
        std::cerr << "vidsolve: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "vidsolve: " << e.what() << "\n";
        return kConfigFailure;
    }
    return kConfigFailure;
}

inline int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace vidsolve::cli
