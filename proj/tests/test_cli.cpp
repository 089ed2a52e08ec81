#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qctrl/cli.hpp"
#include "qctrl/gates.hpp"
#include "qctrl/photonic.hpp"

using namespace qctrl;
using namespace qctrl::cli;
namespace fs = std::filesystem;

namespace {

int run_args(std::vector<std::string> args) {
    args.insert(args.begin(), "qctrl");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    return run_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string &name) {
    const auto dir = fs::temp_directory_path() / "qctrl_cli_test";
    fs::create_directories(dir);
    const auto p = dir / name;
    fs::remove(p);
    return p;
}

std::string photonic_roundtrip_text(const fs::path &p) {
    const auto net = photonic::network_from_json(nlohmann::json::parse(slurp(p)));
    return photonic::to_json(net).dump(2) + "\n";
}

} // namespace

TEST_CASE("gate specs") {
    CHECK(max_abs_diff(parse_gate_spec("x").matrix(), gates::pauli_x().matrix()) == 0.0);
    CHECK(max_abs_diff(parse_gate_spec("rz:0").matrix(), Matrix::Identity(2, 2)) == 0.0);
    CHECK(max_abs_diff(parse_gate_spec("matrix:[[0,0],[1,0],[1,0],[0,0]]").matrix(), gates::pauli_x().matrix()) <
          1e-15);
    CHECK(max_abs_diff(parse_gate_spec("ry:1.25").matrix(), gates::ry(1.25).matrix()) == 0.0);
    CHECK(max_abs_diff(parse_gate_spec("haar:7", 3).matrix(), parse_gate_spec("haar:7", 3).matrix()) == 0.0);
    CHECK(parse_gate_spec("haar:7", 3).dim() == 3);
    CHECK(parse_gate_spec("i", 4).dim() == 4);
    for (const char *name : {"y", "z", "h", "s", "t", "rx:-0.5"}) {
        CHECK(is_unitary(parse_gate_spec(name), 1e-12));
    }
    CHECK_THROWS_AS(parse_gate_spec("q"), GateSpecError);
    CHECK_THROWS_AS(parse_gate_spec("rx:abc"), GateSpecError);
    CHECK_THROWS_AS(parse_gate_spec("rx:1.0x"), GateSpecError);
    CHECK_THROWS_AS(parse_gate_spec("matrix:[[1,0],[0,0],[0,0],[2,0]]"), GateSpecError);
    CHECK_THROWS_AS(parse_gate_spec("matrix:[[1,0],[0,0],[0,0]]"), GateSpecError);
    CHECK_THROWS_AS(parse_gate_spec("matrix:[[1,0"), GateSpecError);
    CHECK_THROWS_AS(parse_gate_spec("x", 3), GateSpecError);
    CHECK_THROWS_AS(parse_gate_spec("haar:-1"), GateSpecError);

    CHECK(parse_state_spec("basis:1", 3)(1) == Complex(1.0));
    CHECK(std::abs(parse_state_spec("vec:[[3,0],[0,4]]", 2).norm() - 1.0) < 1e-15);
    CHECK_THROWS_AS(parse_state_spec("basis:2", 2), GateSpecError);
    CHECK_THROWS_AS(parse_state_spec("vec:[[0,0],[0,0]]", 2), GateSpecError);
}

TEST_CASE("run presets") {
    RunOptions o;
    o.preset = "fig2";
    o.u = "x";
    o.alpha = 0.6;
    o.beta = 0.8;
    auto r = cmd_run(o);
    CHECK(r.exit_code == kOk);
    CHECK(std::abs(r.report["fidelity"].get<double>() - 1.0) < 1e-10);
    CHECK(r.warnings.empty());
    CHECK(r.report["tool"] == "qctrl");
    CHECK(r.report["bindings"]["U"] == "x");

    RunOptions sw;
    sw.preset = "ion-ctrl-switch";
    sw.alpha = 0.6;
    sw.beta = 0.8;
    const auto rs = cmd_run(sw);
    CHECK(rs.exit_code == kOk);
    CHECK(std::abs(rs.report["fidelity"].get<double>() - 1.0) < 1e-10);
    CHECK(rs.report["slot_usage"]["Uf"]["pulses_sent"] == 1);

    RunOptions bb;
    bb.preset = "fig2-bb";
    bb.u = "haar:7";
    bb.alpha = 0.7071;
    bb.beta = 0.7071;
    const auto rb = cmd_run(bb);
    CHECK(rb.exit_code == kOk);
    CHECK(std::abs(rb.report["fidelity"].get<double>() - 0.5) < 1e-6);
    CHECK(rb.report["output"]["kind"] == "mixed");
    CHECK_FALSE(rb.warnings.empty());

    RunOptions f5;
    f5.preset = "fig5";
    f5.uf = "haar:1";
    f5.ug = "haar:2";
    f5.dim = 3;
    f5.beta = 1.0;
    f5.beta_phase = 0.3;
    f5.psi = "haar:4";
    CHECK(cmd_run(f5).exit_code == kOk);

    RunOptions iu;
    iu.preset = "ion-ctrl-u";
    iu.u = "h";
    iu.beta = 2.0;
    CHECK(cmd_run(iu).exit_code == kOk);
    iu.dim = 3;
    CHECK_THROWS_AS(cmd_run(iu), ValidationError);
}

TEST_CASE("run errors") {
    RunOptions none;
    CHECK_THROWS_AS(cmd_run(none), ValidationError);
    RunOptions both;
    both.preset = "fig2";
    both.scheme_file = "x.json";
    CHECK_THROWS_AS(cmd_run(both), ValidationError);
    RunOptions unknown;
    unknown.preset = "fig9";
    CHECK_THROWS_AS(cmd_run(unknown), ValidationError);
    RunOptions zero;
    zero.preset = "fig2";
    zero.alpha = 0.0;
    CHECK_THROWS_AS(cmd_run(zero), ValidationError);
    RunOptions missing;
    missing.scheme_file = "/nonexistent/scheme.json";
    CHECK_THROWS_AS(cmd_run(missing), ValidationError);
}

TEST_CASE("fidelity failure exit code") {
    // A scheme whose declared target does not match its routing.
    const auto path = scratch("wrong.json");
    auto j = cmd_emit_scheme("fig2", 2);
    j["target"] = "ctrl_switch";
    j["stages"][1]["slot"] = "Uf";
    j["stages"].push_back({{"type", "device"}, {"path", "a"}, {"slot", "Ug"}});
    j["slots"] = {"Uf", "Ug"};
    {
        std::ofstream(path) << j.dump();
    }
    RunOptions o;
    o.scheme_file = path.string();
    o.uf = "x";
    o.ug = "z";
    o.alpha = 0.6;
    o.beta = 0.8;
    const auto r = cmd_run(o);
    CHECK(r.exit_code == kFidelityFailure);
    CHECK(r.report["passed"] == false);
}

TEST_CASE("emit-scheme round trip") {
    for (const std::string preset : {"fig2", "fig5", "fig2-bb"}) {
        const auto path = scratch(preset + ".json");
        REQUIRE(run_args({"emit-scheme", "--preset", preset, "--out", path.string()}) == kOk);
        const auto reload = photonic_roundtrip_text(path);
        CHECK(reload == slurp(path));

        RunOptions from_preset;
        from_preset.preset = preset;
        from_preset.u = from_preset.uf = "haar:3";
        from_preset.ug = "haar:5";
        from_preset.alpha = 0.6;
        from_preset.beta = 0.8;
        from_preset.psi = "haar:9";
        RunOptions from_file = from_preset;
        from_file.preset.reset();
        from_file.scheme_file = path.string();
        auto a = cmd_run(from_preset).report;
        auto b = cmd_run(from_file).report;
        CHECK(a["output"] == b["output"]);
        CHECK(a["fidelity"] == b["fidelity"]);
    }
    for (const std::string preset : {"ion-ctrl-u", "ion-ctrl-switch"}) {
        const auto path = scratch(preset + ".json");
        REQUIRE(run_args({"emit-scheme", "--preset", preset, "--out", path.string()}) == kOk);
        RunOptions from_preset;
        from_preset.preset = preset;
        from_preset.u = from_preset.uf = "haar:3";
        from_preset.ug = "haar:5";
        from_preset.beta = 1.0;
        RunOptions from_file = from_preset;
        from_file.preset.reset();
        from_file.sequence_file = path.string();
        CHECK(cmd_run(from_preset).report["output"] == cmd_run(from_file).report["output"]);
    }
}

TEST_CASE("nogo command") {
    NogoOptions o;
    o.kind = "switch";
    o.restarts = 1;
    o.samples = 1;
    o.seed = 1;
    o.max_iters = 50;
    const auto r = cmd_nogo(o);
    CHECK(r.exit_code == kOk);
    const double v = r.report["best_worst_case_fidelity"].get<double>();
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(cmd_nogo(o).report.dump() == r.report.dump());

    NogoOptions bad = o;
    bad.method = "simplex";
    CHECK_THROWS_AS(cmd_nogo(bad), ValidationError);
    bad = o;
    bad.restarts = 0;
    CHECK_THROWS_AS(cmd_nogo(bad), ValidationError);
}

TEST_CASE("command line: determinism, exit codes, no partial files") {
    const auto a = scratch("a.json");
    const auto b = scratch("b.json");
    const std::vector<std::string> run{"run", "--preset", "fig2-bb", "--u", "haar:7", "--alpha", "1", "--beta", "1",
                                       "--shots", "500", "--seed", "3"};
    auto ra = run;
    ra.insert(ra.end(), {"--out", a.string()});
    auto rb = run;
    rb.insert(rb.end(), {"--out", b.string()});
    CHECK(run_args(ra) == kOk);
    CHECK(run_args(rb) == kOk);
    CHECK(slurp(a) == slurp(b));

    const auto na = scratch("na.json");
    const auto nb = scratch("nb.json");
    const std::vector<std::string> ng{"nogo", "--kind", "ctrl-u", "--restarts", "2", "--samples", "3",
                                      "--max-iters", "30", "--seed", "5"};
    auto ga = ng;
    ga.insert(ga.end(), {"--out", na.string()});
    auto gb = ng;
    gb.insert(gb.end(), {"--out", nb.string(), "--threads", "1"});
    CHECK(run_args(ga) == kOk);
    CHECK(run_args(gb) == kOk);
    CHECK(slurp(na) == slurp(nb));

    const auto bad = scratch("bad.json");
    CHECK(run_args({"run", "--preset", "fig2", "--u", "nope", "--out", bad.string()}) == kUsageError);
    CHECK_FALSE(fs::exists(bad));
    CHECK_FALSE(fs::exists(fs::path(bad.string() + ".tmp")));
    CHECK(run_args({"run", "--preset", "fig2", "--bogus-flag"}) == kUsageError);
    CHECK(run_args({"nogo", "--kind", "ctrl-u", "--restarts", "0", "--out", bad.string()}) == kUsageError);
    CHECK_FALSE(fs::exists(bad));
    CHECK(run_args({}) == kUsageError);

    const auto tight = scratch("tight.json");
    CHECK(run_args({"run", "--preset", "fig2", "--u", "x", "--alpha", "0.6", "--beta", "0.8", "--tolerance", "0",
                    "--out", tight.string()}) != kUsageError);
}

TEST_CASE("write_atomically replaces the target") {
    const auto p = scratch("atomic.txt");
    write_atomically(p.string(), "one");
    write_atomically(p.string(), "two");
    CHECK(slurp(p) == "two");
    CHECK_FALSE(fs::exists(fs::path(p.string() + ".tmp")));
    CHECK_THROWS(write_atomically("/nonexistent-dir/x/y.json", "z"));
}
