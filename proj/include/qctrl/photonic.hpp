#pragma once

/**
 * @file
 * Single-photon linear-optics networks built from polarizing beam
 * splitters, half-wave plates, black-box devices and path permutations.
 *
 * The state space is the single-photon sector: one photon on one of the
 * network's paths, with a polarization qubit {H, V} and an internal d-level
 * degree of freedom (the "system"). Factor order is (path, pol, internal).
 */

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qctrl/hilbert.hpp"

namespace qctrl::photonic {

enum class Pol : std::size_t { H = 0, V = 1 };

struct PhotonicSpace {
    std::vector<std::string> paths;
    std::size_t internal_dim = 1;

    HilbertSpace hilbert() const;
    std::size_t sector_dim() const { return paths.size() * 2 * internal_dim; }
    std::size_t path_index(const std::string &label) const;
    bool has_path(const std::string &label) const;
    bool operator==(const PhotonicSpace &) const = default;
};

/// Transmits H from in_ports[k] to out_ports[k]; reflects V from
/// in_ports[k] to out_ports[1 − k]. The two out ports must be the same
/// pair of paths as the in ports.
struct Pbs {
    std::array<std::string, 2> in_ports;
    std::array<std::string, 2> out_ports;
};

/// H ↔ V on one path; identity on the internal state.
struct Hwp {
    std::string path;
};

/// Applies the operator bound to `slot` to the internal state of
/// amplitude on `path`, whatever the polarization.
struct Device {
    std::string path;
    std::string slot;
};

/// A Device wrapped by a non-demolition photon-number measurement on its
/// path, which collapses superpositions across the device boundary.
struct BigBrotherDevice {
    std::string path;
    std::string slot;
};

/// Moves the amplitude of paths[i] to destinations[i].
struct Reroute {
    std::vector<std::string> destinations;
};

using Element = std::variant<Pbs, Hwp, Device, BigBrotherDevice, Reroute>;
using Bindings = std::map<std::string, Operator>;

/// Which analytic formula a network is meant to reproduce.
enum class Target { None, CtrlU, CtrlSwitch };

class Network {
  public:
    /// Validates ports and the single-use rule: a slot may be listed at
    /// several stages (one physical device traversed by different beams),
    /// but no amplitude entering on input_path may pass the same device
    /// twice.
    Network(PhotonicSpace space, std::vector<Element> stages, std::string input_path,
            std::string output_path, Target target = Target::None);

    const PhotonicSpace &space() const { return space_; }
    const std::vector<Element> &stages() const { return stages_; }
    const std::string &input_path() const { return input_path_; }
    const std::string &output_path() const { return output_path_; }
    Target target() const { return target_; }

    /// Slot name → number of stages at which the device is traversed.
    const std::map<std::string, std::size_t> &slot_traversals() const { return traversals_; }
    /// Slot names in order of first appearance.
    std::vector<std::string> slots() const;
    bool has_big_brother() const;

    /// Copy with every Device of `slot` replaced by a BigBrotherDevice.
    Network with_big_brother(const std::string &slot) const;

  private:
    PhotonicSpace space_;
    std::vector<Element> stages_;
    std::string input_path_;
    std::string output_path_;
    Target target_;
    std::map<std::string, std::size_t> traversals_;
};

struct Pure {
    StateVector state;
};
struct Mixed {
    DensityMatrix state;
};
struct Sampled {
    /// Outcomes of the big-brother measurements in stage order,
    /// 1 = photon found inside the device path.
    std::vector<std::size_t> outcomes;
    StateVector state;
    double probability = 1.0;
};
using SchemeOutcome = std::variant<Pure, Mixed, Sampled>;

Operator element_unitary(const Element &e, const PhotonicSpace &space, const Bindings &bindings);

/// Product of all stage unitaries (big-brother measurements ignored).
Operator network_unitary(const Network &net, const Bindings &bindings);

/// Runs the network. Without big-brother devices the result is Pure. With
/// them it is the full Mixed ensemble, or one Sampled branch when rng is
/// supplied.
SchemeOutcome propagate(const Network &net, const StateVector &input, const Bindings &bindings,
                        Rng *rng = nullptr);

/// |path⟩ ⊗ (α|H⟩ + β|V⟩) ⊗ |ψ⟩; requires |α|² + |β|² = 1.
StateVector product_input(const PhotonicSpace &space, const std::string &path, Complex alpha,
                          Complex beta, const Vector &psi);

/// α|H⟩|ψ⟩ + β|V⟩U|ψ⟩ on the given path.
StateVector ctrl_u_target(const PhotonicSpace &space, const std::string &path, Complex alpha,
                          Complex beta, const Vector &psi, const Operator &u);

/// α|H⟩U_gU_f|ψ⟩ + β|V⟩U_fU_g|ψ⟩ on the given path.
StateVector ctrl_switch_target(const PhotonicSpace &space, const std::string &path, Complex alpha,
                               Complex beta, const Vector &psi, const Operator &uf,
                               const Operator &ug);

/// Mach-Zehnder: PBS, device "U" on the reflected (V) arm, PBS.
Network preset_fig2(std::size_t internal_dim);
/// Polarization-loop routing in which H meets U_f then U_g and V meets
/// U_g then U_f; each device is crossed once by each polarization branch.
Network preset_fig5(std::size_t internal_dim);

/// Two distinguishable photons, one on the upper path "u" and one on the
/// lower path "l", both H-polarized, passing the given device fragment.
/// Returns the joint operator on (internal_u ⊗ internal_l).
Operator two_photon_product(const Device &fragment, const Operator &u);

// JSON network description.
nlohmann::ordered_json to_json(const Network &net);
Network network_from_json(const nlohmann::json &j);

std::string to_string(Target t);
Target target_from_string(const std::string &s);

} // namespace qctrl::photonic
