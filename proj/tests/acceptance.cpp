// Acceptance checks, one line per criterion:  [PASS|FAIL] <n> <label> (<detail>, <seconds>)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>

#include "qctrl/cli.hpp"
#include "qctrl/gates.hpp"
#include "qctrl/ion.hpp"
#include "qctrl/nogo.hpp"
#include "qctrl/photonic.hpp"

using namespace qctrl;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Vector random_unit(std::size_t n, Rng &rng) {
    Vector v(static_cast<Eigen::Index>(n));
    for (auto &x : v) x = Complex(rng.normal(), rng.normal());
    return v / v.norm();
}

std::string fmt(const char *f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

Outcome photonic_ctrl_u() {
    Rng rng(101);
    double worst = 1.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(t % 2);
        const auto net = photonic::preset_fig2(d);
        const auto u = haar_unitary(d, rng);
        const Vector psi = random_unit(d, rng);
        const Vector c = random_unit(2, rng);
        const auto in = photonic::product_input(net.space(), net.input_path(), c(0), c(1), psi);
        const auto out = std::get<photonic::Pure>(photonic::propagate(net, in, {{"U", u}}));
        const auto target = photonic::ctrl_u_target(net.space(), net.output_path(), c(0), c(1), psi, u);
        worst = std::min(worst, fidelity_pure(out.state, target));
    }
    return {worst >= 1.0 - 1e-10, fmt("min fidelity %.15f", worst)};
}

Outcome photonic_switch() {
    Rng rng(202);
    double worst = 1.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(t % 2);
        const auto net = photonic::preset_fig5(d);
        const auto uf = haar_unitary(d, rng);
        const auto ug = haar_unitary(d, rng);
        const Vector psi = random_unit(d, rng);
        const Vector c = random_unit(2, rng);
        const auto in = photonic::product_input(net.space(), net.input_path(), c(0), c(1), psi);
        const auto out = std::get<photonic::Pure>(photonic::propagate(net, in, {{"Uf", uf}, {"Ug", ug}}));
        const auto target = photonic::ctrl_switch_target(net.space(), net.output_path(), c(0), c(1), psi, uf, ug);
        worst = std::min(worst, fidelity_pure(out.state, target));
    }
    return {worst >= 1.0 - 1e-10, fmt("min fidelity %.15f", worst)};
}

Outcome ion_ctrl_u() {
    using L = ion::Level;
    const ion::TrapSpace s(3);
    const auto seq = ion::seq_ctrl_u();
    Rng rng(303);
    double worst = 1.0;
    double step_err = 0.0;
    bool ground = true;
    for (int t = 0; t < 100; ++t) {
        const auto u = haar_unitary(2, rng);
        const Vector psi = random_unit(2, rng);
        const Vector c = random_unit(2, rng);
        const Vector upsi = u.matrix() * psi;
        const auto run = ion::run_sequence(seq, s, ion::protocol_input(s, c(0), c(1), psi), {{"U", u}});

        // Step kets: (alpha-branch levels, alpha phonons, beta-branch vector) after pulses 0, 2, 3, 5.
        const auto ket = [&](L ga, L ea, std::size_t na, const Vector &b) {
            Vector v = Vector::Zero(static_cast<Eigen::Index>(s.total_dim()));
            v(static_cast<Eigen::Index>(s.index(L::E, ga, na))) += c(0) * psi(0);
            v(static_cast<Eigen::Index>(s.index(L::E, ea, na))) += c(0) * psi(1);
            v(static_cast<Eigen::Index>(s.index(L::E, L::G, 0))) += c(1) * b(0);
            v(static_cast<Eigen::Index>(s.index(L::E, L::E, 0))) += c(1) * b(1);
            return v;
        };
        step_err = std::max(step_err, max_abs_diff(run.trace[0].amps(), ket(L::G, L::E, 1, psi)));
        step_err = std::max(step_err, max_abs_diff(run.trace[2].amps(), ket(L::GPrime, L::EPrime, 0, psi)));
        step_err = std::max(step_err, max_abs_diff(run.trace[3].amps(), ket(L::GPrime, L::EPrime, 0, upsi)));
        step_err = std::max(step_err, max_abs_diff(run.trace[5].amps(), ket(L::G, L::E, 1, upsi)));

        worst = std::min(worst, fidelity_pure(run.final_state, ion::ctrl_u_target(s, c(0), c(1), psi, u)));
        ground = ground && ion::assert_ground_mode(run.final_state, s, 1e-12);
    }
    return {worst >= 1.0 - 1e-10 && step_err <= 1e-12 && ground,
            fmt("min fidelity %.15f", worst) + fmt(", max step-ket error %.1e", step_err) +
                (ground ? ", ground mode ok" : ", ground mode FAILED")};
}

Outcome ion_switch() {
    const ion::TrapSpace s(3);
    const auto seq = ion::seq_ctrl_switch();
    Rng rng(404);
    double worst = 1.0;
    for (int t = 0; t < 100; ++t) {
        const auto uf = haar_unitary(2, rng);
        const auto ug = haar_unitary(2, rng);
        const Vector psi = random_unit(2, rng);
        const Vector c = random_unit(2, rng);
        const auto run =
            ion::run_sequence(seq, s, ion::protocol_input(s, c(0), c(1), psi), {{"Uf", uf}, {"Ug", ug}});
        worst = std::min(worst, fidelity_pure(run.final_state, ion::ctrl_switch_target(s, c(0), c(1), psi, uf, ug)));
    }
    const auto &usage = seq.slot_usage();
    const bool once = usage.size() == 2 && usage.at("Uf").pulses_sent == 1 && usage.at("Ug").pulses_sent == 1;
    return {worst >= 1.0 - 1e-10 && once,
            fmt("min fidelity %.15f", worst) + (once ? ", pulses_sent = 1 per slot" : ", pulse count wrong")};
}

Outcome big_brother() {
    const auto bb = photonic::preset_fig2(2).with_big_brother("U");
    Rng rng(505);
    double err = 0.0;
    for (int k = 0; k <= 10; ++k) {
        const double a = k / 10.0;
        const double b = std::sqrt(1.0 - a * a);
        const auto u = haar_unitary(2, rng);
        const Vector psi = random_unit(2, rng);
        const auto in = photonic::product_input(bb.space(), "a", a, b, psi);
        const auto mixed = std::get<photonic::Mixed>(photonic::propagate(bb, in, {{"U", u}}));
        const double f = fidelity_mixed(mixed.state, photonic::ctrl_u_target(bb.space(), "a", a, b, psi, u));
        err = std::max(err, std::abs(f - (std::pow(a, 4) + std::pow(b, 4))));
    }
    const double h = 1.0 / std::sqrt(2.0);
    const auto u = haar_unitary(2, rng);
    const Vector psi = random_unit(2, rng);
    const auto in_half = photonic::product_input(bb.space(), "a", h, h, psi);
    const auto half = std::get<photonic::Mixed>(photonic::propagate(bb, in_half, {{"U", u}}));
    const double f_half =
        fidelity_mixed(half.state, photonic::ctrl_u_target(bb.space(), "a", h, h, psi, u));

    const double a = 0.6, b = 0.8;
    const auto in = photonic::product_input(bb.space(), "a", a, b, psi);
    const std::size_t shots = 100000;
    std::size_t inside = 0;
    Rng shot_rng(506);
    for (std::size_t i = 0; i < shots; ++i) {
        inside += std::get<photonic::Sampled>(photonic::propagate(bb, in, {{"U", u}}, &shot_rng)).outcomes.at(0);
    }
    const double f_inside = static_cast<double>(inside) / shots;
    const bool ok = std::abs(f_half - 0.5) <= 1e-10 && err <= 1e-10 && std::abs(f_inside - b * b) <= 0.01 &&
                    std::abs((1.0 - f_inside) - a * a) <= 0.01;
    return {ok, fmt("F(1/sqrt2) = %.12f", f_half) + fmt(", grid max error %.1e", err) +
                    fmt(", sampled |beta|^2 = %.4f vs 0.64", f_inside)};
}

Outcome two_photon() {
    Rng rng(606);
    double err = 0.0;
    for (int t = 0; t < 20; ++t) {
        const auto u = haar_unitary(2, rng);
        const auto g = photonic::two_photon_product(photonic::Device{"l", "U"}, u);
        err = std::max(err, max_abs_diff(g.matrix(), tensor(Operator::identity(2), u).matrix()));
    }
    return {err <= 1e-12, fmt("max entry error %.1e", err)};
}

Outcome subspace_equivalence() {
    Rng rng(707);
    double err = 0.0;
    for (std::size_t d : {1, 2, 3, 4}) {
        const auto net = photonic::preset_fig2(d);
        const auto u = haar_unitary(d, rng);
        const Matrix w = photonic::network_unitary(net, {{"U", u}}).matrix();
        const auto off = static_cast<Eigen::Index>(net.space().path_index(net.input_path()) * 2 * d);
        const auto n = static_cast<Eigen::Index>(2 * d);
        err = std::max(err, max_abs_diff(w.block(off, off, n, n), gates::controlled(u).matrix()));
    }
    return {err <= 1e-10, fmt("max entry error %.1e", err)};
}

Outcome nogo_falsification() {
    nogo::SearchConfig cfg;
    cfg.restarts = 20;
    cfg.sample_count = 16;
    cfg.seed = 42;
    cfg.dims = {2, 2};
    const double cu = nogo::optimize(nogo::Kind::CtrlU, cfg).best_worst_case_fidelity;
    const double sw = nogo::optimize(nogo::Kind::Switch, cfg).best_worst_case_fidelity;
    const double sanity = nogo::oracle_sanity();
    nogo::SearchConfig known = cfg;
    known.sample_count = 1;
    const double k_cu = nogo::optimize(nogo::Kind::CtrlU, known).best_worst_case_fidelity;
    const double k_sw = nogo::optimize(nogo::Kind::Switch, known).best_worst_case_fidelity;
    const bool ok = cu < 0.999 && sw < 0.999 && sanity >= 1.0 - 1e-10 && k_cu >= 1.0 - 1e-6 && k_sw >= 1.0 - 1e-6;
    return {ok, fmt("ctrl-u best %.6f", cu) + fmt(", switch best %.6f", sw) + fmt(", oracle_sanity %.15f", sanity) +
                    fmt(", known-oracle ctrl-u %.9f", k_cu) + fmt(" / switch %.9f", k_sw)};
}

Outcome invariant_suite() {
    std::vector<std::string> failed;
    Rng rng(909);

    // Unitarity of every element / pulse and norm conservation.
    const photonic::PhotonicSpace ps{{"a", "b"}, 3};
    const auto u3 = haar_unitary(3, rng);
    for (const photonic::Element &e :
         std::vector<photonic::Element>{photonic::Pbs{{"a", "b"}, {"b", "a"}}, photonic::Hwp{"b"},
                                        photonic::Device{"a", "U"}, photonic::Reroute{{"b", "a"}}}) {
        const auto op = photonic::element_unitary(e, ps, {{"U", u3}});
        if (!is_unitary(op, 1e-10)) failed.push_back("element unitarity");
        const StateVector psi(ps.hilbert(), random_unit(ps.sector_dim(), rng));
        if (std::abs(apply(op, psi).norm() - 1.0) > 1e-10) failed.push_back("norm conservation");
    }
    const ion::TrapSpace ts(3);
    std::vector<ion::Pulse> pulses;
    for (int i : {1, 2}) {
        pulses.push_back(ion::SidebandSwap{i});
        pulses.push_back(ion::Hiding{i, ion::HidingKind::H1});
        pulses.push_back(ion::Hiding{i, ion::HidingKind::H2});
        pulses.push_back(ion::SigmaX{i, ion::SigmaKind::Sg});
        pulses.push_back(ion::SigmaX{i, ion::SigmaKind::Se});
    }
    for (const auto &p : pulses) {
        const auto op = ion::pulse_unitary(p, ts, {});
        if (!is_unitary(op, 1e-12)) failed.push_back("pulse unitarity");
        if (max_abs_diff((op * op).matrix(), Matrix::Identity(48, 48)) > 1e-12) failed.push_back("pulse involution");
    }
    if (!is_unitary(ion::pulse_unitary(ion::Carrier{2, "U"}, ts, {{"U", haar_unitary(2, rng)}}), 1e-12)) {
        failed.push_back("carrier unitarity");
    }

    // Fock leakage at n_max = 3 across both protocols.
    for (const auto &seq : {ion::seq_ctrl_u(), ion::seq_ctrl_switch()}) {
        const auto run = ion::run_sequence(seq, ts, ion::protocol_input(ts, 0.6, 0.8, random_unit(2, rng)),
                                           {{"U", haar_unitary(2, rng)}, {"Uf", haar_unitary(2, rng)},
                                            {"Ug", haar_unitary(2, rng)}});
        for (const auto &st : run.trace) {
            if (ion::top_fock_population(st, ts) > 1e-12) failed.push_back("fock leakage");
        }
    }

    // CPTP realized channels.
    for (const auto kind : {nogo::Kind::CtrlU, nogo::Kind::Switch}) {
        const nogo::CircuitDims dims{2, 2};
        std::vector<double> p(nogo::ParamCircuit::param_count(kind, dims));
        for (auto &x : p) x = rng.normal();
        const nogo::ParamCircuit pc(kind, dims, p);
        nogo::OracleSample o{haar_unitary(2, rng), std::nullopt};
        if (kind == nogo::Kind::Switch) o.second = haar_unitary(2, rng);
        const Matrix choi = nogo::realized_channel(pc, o);
        const Eigen::SelfAdjointEigenSolver<Matrix> es(choi);
        if (max_abs_diff(choi, choi.adjoint()) > 1e-8 || es.eigenvalues().minCoeff() < -1e-8 ||
            std::abs(choi.trace() - Complex(4.0)) > 1e-8) {
            failed.push_back("choi CPTP");
        }
    }

    // Determinism of reports.
    cli::RunOptions ro;
    ro.preset = "fig2-bb";
    ro.u = "haar:7";
    ro.alpha = ro.beta = 1.0;
    ro.shots = 1000;
    ro.seed = 11;
    if (cli::cmd_run(ro).report.dump() != cli::cmd_run(ro).report.dump()) failed.push_back("run determinism");
    cli::NogoOptions no;
    no.restarts = 2;
    no.samples = 4;
    no.max_iters = 40;
    if (cli::cmd_nogo(no).report.dump() != cli::cmd_nogo(no).report.dump()) failed.push_back("nogo determinism");

    std::string detail = failed.empty() ? "all invariants hold" : "failed:";
    for (const auto &f : failed) detail += " " + f;
    return {failed.empty(), detail};
}

} // namespace

int main() {
    struct Criterion {
        std::string label;
        std::function<Outcome()> check;
        double budget_s;
    };
    const double none = std::numeric_limits<double>::infinity();
    const std::vector<Criterion> criteria{
        {"photonic ctrl-U (fig2, 100 instances)", photonic_ctrl_u, 5.0},
        {"photonic ctrl-switch (fig5, 100 instances)", photonic_switch, 5.0},
        {"ion ctrl-U step kets and final state", ion_ctrl_u, 5.0},
        {"ion ctrl-switch final state and pulse count", ion_switch, 5.0},
        {"big-brother mixed fidelity and sampling", big_brother, none},
        {"two-photon product equals 1 (x) U", two_photon, none},
        {"fig2 input block equals 1_d (+) U", subspace_equivalence, none},
        {"no-go falsification and oracle sanity", nogo_falsification, 600.0},
        {"invariant suite and determinism", invariant_suite, none},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].check();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > criteria[i].budget_s) {
            o.pass = false;
            o.detail += fmt(", over the %.0f s budget", criteria[i].budget_s);
        }
        std::printf("[%s] %zu %s (%s, %.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].label.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
