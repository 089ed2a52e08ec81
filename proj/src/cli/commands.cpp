#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "qctrl/cli.hpp"
#include "qctrl/ion.hpp"
#include "qctrl/nogo.hpp"
#include "qctrl/photonic.hpp"

namespace qctrl::cli {

namespace {

using nlohmann::ordered_json;

ordered_json complex_json(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

ordered_json vector_json(const Vector &v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(complex_json(v(i)));
    }
    return out;
}

ordered_json matrix_json(const Matrix &m) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.push_back(vector_json(m.row(r).transpose()));
    }
    return out;
}

nlohmann::json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

const std::set<std::string> kPhotonicPresets{"fig2", "fig5", "fig2-bb"};
const std::set<std::string> kIonPresets{"ion-ctrl-u", "ion-ctrl-switch"};

photonic::Network photonic_preset(const std::string &name, std::size_t dim) {
    if (name == "fig2") return photonic::preset_fig2(dim);
    if (name == "fig5") return photonic::preset_fig5(dim);
    if (name == "fig2-bb") return photonic::preset_fig2(dim).with_big_brother("U");
    throw ValidationError("unknown photonic preset '" + name + "'");
}

ion::PulseSequence ion_preset(const std::string &name) {
    if (name == "ion-ctrl-u") return ion::seq_ctrl_u();
    if (name == "ion-ctrl-switch") return ion::seq_ctrl_switch();
    throw ValidationError("unknown ion preset '" + name + "'");
}

enum class TargetKind { CtrlU, CtrlSwitch };

/// Declared target if any, otherwise read off the slot names.
TargetKind infer_target(photonic::Target declared, std::set<std::string> slots) {
    if (declared == photonic::Target::CtrlU) return TargetKind::CtrlU;
    if (declared == photonic::Target::CtrlSwitch) return TargetKind::CtrlSwitch;
    if (slots == std::set<std::string>{"U"}) return TargetKind::CtrlU;
    if (slots == std::set<std::string>{"Uf", "Ug"}) return TargetKind::CtrlSwitch;
    throw ValidationError("cannot determine the analytic target: expected slots {U} or {Uf, Ug}");
}

struct Amplitudes {
    Complex alpha;
    Complex beta;
};

Amplitudes control_amplitudes(const RunOptions &opts, std::vector<std::string> &warnings) {
    if (!std::isfinite(opts.alpha) || !std::isfinite(opts.beta) || !std::isfinite(opts.beta_phase)) {
        throw ValidationError("amplitudes must be finite");
    }
    const double n = std::hypot(opts.alpha, opts.beta);
    if (n == 0.0) {
        throw ValidationError("alpha and beta cannot both be zero");
    }
    if (std::abs(n - 1.0) > 1e-12) {
        warnings.push_back("(alpha, beta) has norm " + std::to_string(n) + "; normalizing");
    }
    return {Complex(opts.alpha / n), std::polar(opts.beta / n, opts.beta_phase)};
}

ordered_json input_json(const RunOptions &opts, const Amplitudes &amp, const Vector &psi) {
    return {{"alpha", complex_json(amp.alpha)},
            {"beta", complex_json(amp.beta)},
            {"psi_spec", opts.psi},
            {"psi", vector_json(psi)}};
}

CommandResult run_photonic(const RunOptions &opts, const photonic::Network &net, ordered_json scheme_id) {
    CommandResult res;
    const Amplitudes amp = control_amplitudes(opts, res.warnings);
    const std::size_t d = net.space().internal_dim;
    const Vector psi = parse_state_spec(opts.psi, d);

    const std::map<std::string, std::string> specs{{"U", opts.u}, {"Uf", opts.uf}, {"Ug", opts.ug}};
    photonic::Bindings bindings;
    ordered_json bindings_json;
    for (const auto &slot : net.slots()) {
        const auto it = specs.find(slot);
        if (it == specs.end()) {
            throw ValidationError("no command-line binding for device slot '" + slot + "'");
        }
        bindings.emplace(slot, parse_gate_spec(it->second, d));
        bindings_json[slot] = it->second;
    }
    const auto slots = net.slots();
    const TargetKind kind = infer_target(net.target(), {slots.begin(), slots.end()});
    const auto input = photonic::product_input(net.space(), net.input_path(), amp.alpha, amp.beta, psi);
    const auto target = kind == TargetKind::CtrlU
                            ? photonic::ctrl_u_target(net.space(), net.output_path(), amp.alpha, amp.beta, psi,
                                                      bindings.at("U"))
                            : photonic::ctrl_switch_target(net.space(), net.output_path(), amp.alpha, amp.beta, psi,
                                                           bindings.at("Uf"), bindings.at("Ug"));

    ordered_json &r = res.report;
    r["tool"] = kToolName;
    r["version"] = kToolVersion;
    r["command"] = "run";
    r["scheme"] = std::move(scheme_id);
    r["platform"] = "photonic";
    r["target"] = kind == TargetKind::CtrlU ? "ctrl_u" : "ctrl_switch";
    r["bindings"] = bindings_json;
    r["input"] = input_json(opts, amp, psi);
    r["seed"] = opts.seed;

    const auto outcome = photonic::propagate(net, input, bindings);
    if (const auto *pure = std::get_if<photonic::Pure>(&outcome)) {
        const double f = fidelity_pure(pure->state, target);
        r["output"] = {{"kind", "pure"}, {"amplitudes", vector_json(pure->state.amps())}};
        r["fidelity"] = f;
        r["tolerance"] = opts.tolerance;
        r["passed"] = f >= 1.0 - opts.tolerance;
        res.exit_code = f >= 1.0 - opts.tolerance ? kOk : kFidelityFailure;
    } else {
        const auto &mixed = std::get<photonic::Mixed>(outcome);
        const double f = fidelity_mixed(mixed.state, target);
        r["output"] = {{"kind", "mixed"}, {"density_matrix", matrix_json(mixed.state.matrix())}};
        r["fidelity"] = f;
        r["mixed_mode"] = true;
        if (opts.shots > 0) {
            Rng rng(opts.seed);
            std::map<std::string, std::size_t> counts;
            for (std::size_t s = 0; s < opts.shots; ++s) {
                const auto sampled = std::get<photonic::Sampled>(photonic::propagate(net, input, bindings, &rng));
                std::string key;
                for (const auto o : sampled.outcomes) key += std::to_string(o);
                ++counts[key];
            }
            ordered_json freq;
            for (const auto &[key, c] : counts) {
                freq[key] = static_cast<double>(c) / static_cast<double>(opts.shots);
            }
            r["shots"] = opts.shots;
            r["outcome_frequencies"] = freq;
        }
        res.exit_code = kOk;
    }
    return res;
}

CommandResult run_ion(const RunOptions &opts, const ion::PulseSequence &seq, ordered_json scheme_id) {
    CommandResult res;
    if (opts.dim != 2) {
        throw ValidationError("ion protocols act on a qubit system; --dim must be 2");
    }
    const Amplitudes amp = control_amplitudes(opts, res.warnings);
    const Vector psi = parse_state_spec(opts.psi, 2);
    const ion::TrapSpace space(opts.fock_cutoff);

    const std::map<std::string, std::string> specs{{"U", opts.u}, {"Uf", opts.uf}, {"Ug", opts.ug}};
    ion::Bindings bindings;
    ordered_json bindings_json;
    std::set<std::string> slots;
    for (const auto &[slot, usage] : seq.slot_usage()) {
        const auto it = specs.find(slot);
        if (it == specs.end()) {
            throw ValidationError("no command-line binding for pulse slot '" + slot + "'");
        }
        bindings.emplace(slot, parse_gate_spec(it->second, 2));
        bindings_json[slot] = it->second;
        slots.insert(slot);
    }
    const TargetKind kind = infer_target(photonic::Target::None, slots);
    const auto input = ion::protocol_input(space, amp.alpha, amp.beta, psi);
    const auto target = kind == TargetKind::CtrlU
                            ? ion::ctrl_u_target(space, amp.alpha, amp.beta, psi, bindings.at("U"))
                            : ion::ctrl_switch_target(space, amp.alpha, amp.beta, psi, bindings.at("Uf"),
                                                      bindings.at("Ug"));
    const auto run = ion::run_sequence(seq, space, input, bindings);
    const double f = fidelity_pure(run.final_state, target);
    const bool ground = ion::assert_ground_mode(run.final_state, space, 1e-12);

    ordered_json &r = res.report;
    r["tool"] = kToolName;
    r["version"] = kToolVersion;
    r["command"] = "run";
    r["scheme"] = std::move(scheme_id);
    r["platform"] = "ion";
    r["target"] = kind == TargetKind::CtrlU ? "ctrl_u" : "ctrl_switch";
    r["bindings"] = bindings_json;
    r["input"] = input_json(opts, amp, psi);
    r["seed"] = opts.seed;
    r["fock_cutoff"] = space.fock_cutoff;
    ordered_json usage;
    for (const auto &[slot, u] : seq.slot_usage()) {
        usage[slot] = {{"pulses_sent", u.pulses_sent}, {"interactions", u.interactions}};
    }
    r["slot_usage"] = usage;
    r["output"] = {{"kind", "pure"}, {"amplitudes", vector_json(run.final_state.amps())}};
    r["ground_mode"] = ground;
    r["fidelity"] = f;
    r["tolerance"] = opts.tolerance;
    const bool passed = ground && f >= 1.0 - opts.tolerance;
    r["passed"] = passed;
    res.exit_code = passed ? kOk : kFidelityFailure;
    return res;
}

void emit(const ordered_json &j, const std::string &out) {
    const std::string body = j.dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << body;
    } else {
        write_atomically(out, body);
    }
}

} // namespace

CommandResult cmd_run(const RunOptions &opts) {
    const int sources = static_cast<int>(opts.preset.has_value()) + static_cast<int>(opts.scheme_file.has_value()) +
                        static_cast<int>(opts.sequence_file.has_value());
    if (sources != 1) {
        throw ValidationError("run needs exactly one of --preset, --scheme, --sequence");
    }
    if (!(opts.tolerance >= 0.0)) {
        throw ValidationError("tolerance must be non-negative");
    }
    if (opts.preset) {
        const std::string &p = *opts.preset;
        const ordered_json id = {{"source", "preset"}, {"id", p}};
        if (kPhotonicPresets.contains(p)) {
            return run_photonic(opts, photonic_preset(p, opts.dim), id);
        }
        if (kIonPresets.contains(p)) {
            return run_ion(opts, ion_preset(p), id);
        }
        throw ValidationError("unknown preset '" + p + "'");
    }
    if (opts.scheme_file) {
        const auto net = photonic::network_from_json(read_json_file(*opts.scheme_file));
        if (net.space().internal_dim != opts.dim) {
            throw ValidationError("scheme internal_dim " + std::to_string(net.space().internal_dim) +
                                  " does not match --dim " + std::to_string(opts.dim));
        }
        return run_photonic(opts, net, {{"source", "file"}, {"id", *opts.scheme_file}});
    }
    const auto seq = ion::sequence_from_json(read_json_file(*opts.sequence_file));
    return run_ion(opts, seq, {{"source", "file"}, {"id", *opts.sequence_file}});
}

CommandResult cmd_nogo(const NogoOptions &opts) {
    nogo::SearchConfig cfg;
    cfg.restarts = opts.restarts;
    cfg.sample_count = opts.samples;
    cfg.max_iters = opts.max_iters;
    cfg.seed = opts.seed;
    cfg.dims.ancilla = opts.ancilla;
    cfg.dims.system = opts.dim;
    cfg.threads = opts.threads;
    if (opts.method == "quasi-newton") {
        cfg.method = nogo::Method::QuasiNewton;
    } else if (opts.method == "nelder-mead") {
        cfg.method = nogo::Method::NelderMead;
    } else {
        throw ValidationError("unknown method '" + opts.method + "'");
    }
    if (opts.gradient == "analytic") {
        cfg.gradient = nogo::GradientMode::Analytic;
    } else if (opts.gradient == "finite-difference") {
        cfg.gradient = nogo::GradientMode::FiniteDifference;
    } else {
        throw ValidationError("unknown gradient mode '" + opts.gradient + "'");
    }
    if (opts.oracle == "haar") {
        cfg.oracle_mode = nogo::OracleMode::Haar;
    } else if (opts.oracle == "identity") {
        cfg.oracle_mode = nogo::OracleMode::Identity;
    } else {
        throw ValidationError("unknown oracle mode '" + opts.oracle + "'");
    }
    const auto kind = nogo::kind_from_string(opts.kind);
    cfg.validate();
    CommandResult res;
    res.report = nogo::to_json(nogo::optimize(kind, cfg));
    return res;
}

nlohmann::ordered_json cmd_emit_scheme(const std::string &preset, std::size_t dim) {
    if (kPhotonicPresets.contains(preset)) {
        return photonic::to_json(photonic_preset(preset, dim));
    }
    if (kIonPresets.contains(preset)) {
        return ion::to_json(ion_preset(preset));
    }
    throw ValidationError("unknown preset '" + preset + "'");
}

void write_atomically(const std::string &path, const std::string &content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ValidationError("cannot write '" + tmp.string() + "'");
        }
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ValidationError("failed writing '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, target);
}

int run_main(int argc, const char *const *argv) {
    CLI::App app{"Simulate quantum control of unknown operations and search for circuit realizations", kToolName};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string out;
    RunOptions run_opts;
    std::string preset;
    std::string scheme;
    std::string sequence;
    auto *run = app.add_subcommand("run", "Run a preset or scheme/sequence file and check the analytic target");
    run->add_option("--preset", preset, "fig2 | fig5 | fig2-bb | ion-ctrl-u | ion-ctrl-switch");
    run->add_option("--scheme", scheme, "Photonic network JSON file");
    run->add_option("--sequence", sequence, "Ion pulse-sequence JSON file");
    run->add_option("--u", run_opts.u, "Gate bound to slot U");
    run->add_option("--uf", run_opts.uf, "Gate bound to slot Uf");
    run->add_option("--ug", run_opts.ug, "Gate bound to slot Ug");
    run->add_option("--dim", run_opts.dim, "System (internal) dimension")->check(CLI::PositiveNumber);
    run->add_option("--alpha", run_opts.alpha, "Amplitude of H / g");
    run->add_option("--beta", run_opts.beta, "Magnitude of the V / e amplitude");
    run->add_option("--beta-phase", run_opts.beta_phase, "Phase of beta in radians");
    run->add_option("--psi", run_opts.psi, "System state: basis:k | haar:N | vec:[[re,im],...]");
    run->add_option("--seed", run_opts.seed, "Seed for sampled measurements");
    run->add_option("--shots", run_opts.shots, "Sampled big-brother runs to tally");
    run->add_option("--fock-cutoff", run_opts.fock_cutoff, "Vibrational levels kept for ion runs");
    run->add_option("--tolerance", run_opts.tolerance, "Pass if fidelity >= 1 - tolerance");
    run->add_option("--out", out, "Report path (default stdout)");

    NogoOptions nogo_opts;
    auto *ng = app.add_subcommand("nogo", "Search fixed circuits for ctrl-U or the controlled switch");
    ng->add_option("--kind", nogo_opts.kind, "ctrl-u | switch");
    ng->add_option("--dim", nogo_opts.dim, "System dimension d")->check(CLI::PositiveNumber);
    ng->add_option("--ancilla", nogo_opts.ancilla, "Ancilla dimension a")->check(CLI::PositiveNumber);
    ng->add_option("--restarts", nogo_opts.restarts, "Independent restarts")->check(CLI::PositiveNumber);
    ng->add_option("--samples", nogo_opts.samples, "Oracle samples")->check(CLI::PositiveNumber);
    ng->add_option("--max-iters", nogo_opts.max_iters, "Iterations per stage")->check(CLI::PositiveNumber);
    ng->add_option("--seed", nogo_opts.seed, "Seed for oracles and restarts");
    ng->add_option("--method", nogo_opts.method, "quasi-newton | nelder-mead");
    ng->add_option("--gradient", nogo_opts.gradient, "analytic | finite-difference");
    ng->add_option("--oracle", nogo_opts.oracle, "haar | identity");
    ng->add_option("--threads", nogo_opts.threads, "Worker threads (0 = all cores)");
    ng->add_option("--out", out, "Report path (default stdout)");

    std::string emit_preset;
    std::size_t emit_dim = 2;
    auto *em = app.add_subcommand("emit-scheme", "Write a preset as a network or pulse-sequence file");
    em->add_option("--preset", emit_preset, "Preset name")->required();
    em->add_option("--dim", emit_dim, "Internal dimension for photonic presets")->check(CLI::PositiveNumber);
    em->add_option("--out", out, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (run->parsed()) {
            if (!preset.empty()) run_opts.preset = preset;
            if (!scheme.empty()) run_opts.scheme_file = scheme;
            if (!sequence.empty()) run_opts.sequence_file = sequence;
            auto res = cmd_run(run_opts);
            for (const auto &w : res.warnings) std::cerr << "warning: " << w << "\n";
            emit(res.report, out);
            return res.exit_code;
        }
        if (ng->parsed()) {
            auto res = cmd_nogo(nogo_opts);
            emit(res.report, out);
            return res.exit_code;
        }
        emit(cmd_emit_scheme(emit_preset, emit_dim), out);
        return kOk;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
}

} // namespace qctrl::cli
