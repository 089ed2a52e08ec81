#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qctrl/hilbert.hpp"

namespace qctrl::cli {

inline constexpr const char *kToolName = "qctrl";
inline constexpr const char *kToolVersion = "0.1.0";

/// Exit codes shared by all commands.
enum ExitCode : int { kOk = 0, kFidelityFailure = 1, kUsageError = 2 };

class GateSpecError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// Gate text forms: i x y z h s t, rx:θ ry:θ rz:θ (radians), haar:N, and
/// matrix:[[re,im],...] (row-major, square). Named gates are qubit gates;
/// haar:N draws a dim × dim unitary from seed N.
Operator parse_gate_spec(const std::string &text, std::size_t dim = 2);

/// System state text forms: basis:k, haar:N (first column of haar:N),
/// vec:[[re,im],...] (normalized after parsing).
Vector parse_state_spec(const std::string &text, std::size_t dim);

struct RunOptions {
    std::optional<std::string> preset;
    std::optional<std::string> scheme_file;
    std::optional<std::string> sequence_file;
    std::string u = "i";
    std::string uf = "i";
    std::string ug = "i";
    std::size_t dim = 2;
    double alpha = 1.0;
    double beta = 0.0;
    double beta_phase = 0.0;
    std::string psi = "basis:0";
    std::uint64_t seed = 0;
    std::size_t shots = 0;
    std::size_t fock_cutoff = 3;
    double tolerance = 1e-9;
};

struct NogoOptions {
    std::string kind = "ctrl-u";
    std::size_t dim = 2;
    std::size_t ancilla = 2;
    std::size_t restarts = 20;
    std::size_t samples = 16;
    std::size_t max_iters = 300;
    std::uint64_t seed = 42;
    std::string method = "quasi-newton";
    std::string gradient = "analytic";
    std::string oracle = "haar";
    std::size_t threads = 0;
};

struct CommandResult {
    int exit_code = kOk;
    nlohmann::ordered_json report;
    /// Non-fatal notes for stderr (e.g. amplitude renormalization).
    std::vector<std::string> warnings;
};

/// Runs a preset or a scheme/sequence file and compares the output with
/// the analytic target. Throws ValidationError/DimensionError on bad input.
CommandResult cmd_run(const RunOptions &opts);
CommandResult cmd_nogo(const NogoOptions &opts);
/// Network JSON for photonic presets, pulse array for ion presets.
nlohmann::ordered_json cmd_emit_scheme(const std::string &preset, std::size_t dim);

/// Writes to a temporary sibling and renames it over `path`.
void write_atomically(const std::string &path, const std::string &content);

/// Full command-line entry point; returns the process exit code.
int run_main(int argc, const char *const *argv);

} // namespace qctrl::cli
