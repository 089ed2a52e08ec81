#include "qctrl/photonic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace qctrl::photonic {

namespace {

template <class... Ts> struct Overloaded : Ts... {
    using Ts::operator()...;
};

std::size_t flat(std::size_t path, Pol pol, std::size_t internal, std::size_t d) {
    return (path * 2 + static_cast<std::size_t>(pol)) * d + internal;
}

/// Permutation matrix sending basis index src → perm[src].
Matrix permutation_matrix(const std::vector<std::size_t> &perm) {
    const auto n = static_cast<Eigen::Index>(perm.size());
    Matrix m = Matrix::Zero(n, n);
    for (std::size_t src = 0; src < perm.size(); ++src) {
        m(static_cast<Eigen::Index>(perm[src]), static_cast<Eigen::Index>(src)) = 1.0;
    }
    return m;
}

const Operator &bound(const Bindings &bindings, const std::string &slot, std::size_t d) {
    const auto it = bindings.find(slot);
    if (it == bindings.end()) {
        throw ValidationError("unbound device slot '" + slot + "'");
    }
    if (it->second.dim() != d) {
        throw DimensionError("slot '" + slot + "' bound to operator of dim " +
                             std::to_string(it->second.dim()) + ", internal dim is " +
                             std::to_string(d));
    }
    if (!is_unitary(it->second, kDefaultTol)) {
        throw ValidationError("slot '" + slot + "' bound to a non-unitary operator");
    }
    return it->second;
}

Operator device_unitary(const std::string &path, const Operator &u, const PhotonicSpace &space) {
    const std::size_t d = space.internal_dim;
    const std::size_t p = space.path_index(path);
    std::vector<std::size_t> block;
    block.reserve(2 * d);
    for (std::size_t pol = 0; pol < 2; ++pol) {
        for (std::size_t i = 0; i < d; ++i) {
            block.push_back(flat(p, static_cast<Pol>(pol), i, d));
        }
    }
    const Operator u_marked(u.matrix(), true);
    return subspace_embed(tensor(Operator::identity(2), u_marked), DirectSumBlock{block, space.sector_dim()});
}

void check_port(const PhotonicSpace &space, const std::string &path) {
    if (!space.has_path(path)) {
        throw DimensionError("dangling port: no path named '" + path + "'");
    }
}

void validate_element(const Element &e, const PhotonicSpace &space) {
    std::visit(Overloaded{
                   [&](const Pbs &b) {
                       for (const auto &p : b.in_ports) check_port(space, p);
                       for (const auto &p : b.out_ports) check_port(space, p);
                       if (b.in_ports[0] == b.in_ports[1]) {
                           throw DimensionError("PBS input ports must be distinct paths");
                       }
                       const std::set<std::string> in(b.in_ports.begin(), b.in_ports.end());
                       const std::set<std::string> out(b.out_ports.begin(), b.out_ports.end());
                       if (in != out) {
                           throw DimensionError("PBS output ports must be the same paths as its inputs");
                       }
                   },
                   [&](const Hwp &h) { check_port(space, h.path); },
                   [&](const Device &dv) { check_port(space, dv.path); },
                   [&](const BigBrotherDevice &dv) { check_port(space, dv.path); },
                   [&](const Reroute &r) {
                       if (r.destinations.size() != space.paths.size()) {
                           throw DimensionError("reroute must list one destination per path");
                       }
                       for (const auto &p : r.destinations) check_port(space, p);
                       const std::set<std::string> dest(r.destinations.begin(), r.destinations.end());
                       if (dest.size() != r.destinations.size()) {
                           throw DimensionError("reroute destinations must be a permutation of the paths");
                       }
                   },
               },
               e);
}

std::optional<std::pair<std::string, std::string>> device_of(const Element &e) {
    if (const auto *d = std::get_if<Device>(&e)) {
        return std::make_pair(d->path, d->slot);
    }
    if (const auto *d = std::get_if<BigBrotherDevice>(&e)) {
        return std::make_pair(d->path, d->slot);
    }
    return std::nullopt;
}

Operator path_projector(const PhotonicSpace &space, const std::string &path) {
    const auto n = static_cast<Eigen::Index>(space.sector_dim());
    Matrix m = Matrix::Zero(n, n);
    const std::size_t p = space.path_index(path);
    const std::size_t d = space.internal_dim;
    for (std::size_t pol = 0; pol < 2; ++pol) {
        for (std::size_t i = 0; i < d; ++i) {
            const auto k = static_cast<Eigen::Index>(flat(p, static_cast<Pol>(pol), i, d));
            m(k, k) = 1.0;
        }
    }
    return Operator(std::move(m));
}

} // namespace

// ---------------------------------------------------------------------------

HilbertSpace PhotonicSpace::hilbert() const {
    return HilbertSpace({{"path", paths.size()}, {"pol", 2}, {"internal", internal_dim}});
}

std::size_t PhotonicSpace::path_index(const std::string &label) const {
    const auto it = std::find(paths.begin(), paths.end(), label);
    if (it == paths.end()) {
        throw DimensionError("unknown path '" + label + "'");
    }
    return static_cast<std::size_t>(it - paths.begin());
}

bool PhotonicSpace::has_path(const std::string &label) const {
    return std::find(paths.begin(), paths.end(), label) != paths.end();
}

Operator element_unitary(const Element &e, const PhotonicSpace &space, const Bindings &bindings) {
    validate_element(e, space);
    const std::size_t d = space.internal_dim;
    const std::size_t n = space.sector_dim();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = i;
    }
    return std::visit(
        Overloaded{
            [&](const Pbs &b) {
                for (std::size_t k = 0; k < 2; ++k) {
                    const std::size_t src = space.path_index(b.in_ports[k]);
                    const std::size_t through = space.path_index(b.out_ports[k]);
                    const std::size_t reflected = space.path_index(b.out_ports[1 - k]);
                    for (std::size_t i = 0; i < d; ++i) {
                        perm[flat(src, Pol::H, i, d)] = flat(through, Pol::H, i, d);
                        perm[flat(src, Pol::V, i, d)] = flat(reflected, Pol::V, i, d);
                    }
                }
                return Operator(permutation_matrix(perm), true);
            },
            [&](const Hwp &h) {
                const std::size_t p = space.path_index(h.path);
                for (std::size_t i = 0; i < d; ++i) {
                    perm[flat(p, Pol::H, i, d)] = flat(p, Pol::V, i, d);
                    perm[flat(p, Pol::V, i, d)] = flat(p, Pol::H, i, d);
                }
                return Operator(permutation_matrix(perm), true);
            },
            [&](const Device &dv) { return device_unitary(dv.path, bound(bindings, dv.slot, d), space); },
            [&](const BigBrotherDevice &dv) {
                return device_unitary(dv.path, bound(bindings, dv.slot, d), space);
            },
            [&](const Reroute &r) {
                for (std::size_t src = 0; src < space.paths.size(); ++src) {
                    const std::size_t dst = space.path_index(r.destinations[src]);
                    for (std::size_t pol = 0; pol < 2; ++pol) {
                        for (std::size_t i = 0; i < d; ++i) {
                            perm[flat(src, static_cast<Pol>(pol), i, d)] = flat(dst, static_cast<Pol>(pol), i, d);
                        }
                    }
                }
                return Operator(permutation_matrix(perm), true);
            },
        },
        e);
}

// ---------------------------------------------------------------------------
// Network

Network::Network(PhotonicSpace space, std::vector<Element> stages, std::string input_path,
                 std::string output_path, Target target)
    : space_(std::move(space)), stages_(std::move(stages)), input_path_(std::move(input_path)),
      output_path_(std::move(output_path)), target_(target) {
    if (space_.paths.empty()) {
        throw DimensionError("network needs at least one path");
    }
    if (space_.internal_dim == 0) {
        throw DimensionError("internal dimension must be at least 1");
    }
    if (std::set<std::string>(space_.paths.begin(), space_.paths.end()).size() != space_.paths.size()) {
        throw DimensionError("path labels must be unique");
    }
    check_port(space_, input_path_);
    check_port(space_, output_path_);

    std::map<std::string, bool> is_bb;
    std::map<std::string, std::vector<std::size_t>> at_stage;
    for (std::size_t k = 0; k < stages_.size(); ++k) {
        validate_element(stages_[k], space_);
        if (const auto dev = device_of(stages_[k])) {
            const bool bb = std::holds_alternative<BigBrotherDevice>(stages_[k]);
            const auto [it, fresh] = is_bb.emplace(dev->second, bb);
            if (!fresh && it->second != bb) {
                throw ValidationError("slot '" + dev->second + "' is used both as plain and big-brother device");
            }
            at_stage[dev->second].push_back(k);
        }
    }

    // Routing does not depend on what the devices do, so the single-use
    // rule is checked on the path/polarization skeleton (d = 1, devices =
    // identity): for two traversals k1 < k2 of one slot, the amplitude that
    // entered on the input path and sat in the device at k1 must be absent
    // from it at k2.
    const PhotonicSpace skeleton{space_.paths, 1};
    Bindings trivial;
    for (const auto &[slot, stages_of_slot] : at_stage) {
        trivial.emplace(slot, Operator::identity(1));
    }
    const auto n = static_cast<Eigen::Index>(skeleton.sector_dim());
    std::vector<Matrix> reach{path_projector(skeleton, input_path_).matrix()};
    for (const auto &stage : stages_) {
        reach.push_back(element_unitary(stage, skeleton, trivial).matrix() * reach.back());
    }
    for (const auto &[slot, ks] : at_stage) {
        traversals_[slot] = ks.size();
        for (std::size_t x = 0; x < ks.size(); ++x) {
            for (std::size_t y = x + 1; y < ks.size(); ++y) {
                const auto first = device_of(stages_[ks[x]]);
                const auto second = device_of(stages_[ks[y]]);
                Matrix transfer = Matrix::Identity(n, n);
                for (std::size_t k = ks[x]; k < ks[y]; ++k) {
                    transfer = element_unitary(stages_[k], skeleton, trivial).matrix() * transfer;
                }
                const Matrix overlap = path_projector(skeleton, second->first).matrix() * transfer *
                                       path_projector(skeleton, first->first).matrix() * reach[ks[x]];
                if (overlap.cwiseAbs().maxCoeff() > kDefaultTol) {
                    throw ValidationError("slot '" + slot + "' would be traversed twice by the same amplitude (stages " +
                                          std::to_string(ks[x]) + " and " + std::to_string(ks[y]) + ")");
                }
            }
        }
    }
}

std::vector<std::string> Network::slots() const {
    std::vector<std::string> out;
    for (const auto &e : stages_) {
        if (const auto dev = device_of(e)) {
            if (std::find(out.begin(), out.end(), dev->second) == out.end()) {
                out.push_back(dev->second);
            }
        }
    }
    return out;
}

bool Network::has_big_brother() const {
    return std::any_of(stages_.begin(), stages_.end(),
                       [](const Element &e) { return std::holds_alternative<BigBrotherDevice>(e); });
}

Network Network::with_big_brother(const std::string &slot) const {
    if (!traversals_.contains(slot)) {
        throw ValidationError("no device slot named '" + slot + "'");
    }
    std::vector<Element> stages = stages_;
    for (auto &e : stages) {
        if (const auto *d = std::get_if<Device>(&e); d != nullptr && d->slot == slot) {
            e = BigBrotherDevice{d->path, d->slot};
        }
    }
    return Network(space_, std::move(stages), input_path_, output_path_, target_);
}

Operator network_unitary(const Network &net, const Bindings &bindings) {
    Operator total = Operator::identity(net.space().sector_dim());
    for (const auto &e : net.stages()) {
        total = element_unitary(e, net.space(), bindings) * total;
    }
    return total;
}

SchemeOutcome propagate(const Network &net, const StateVector &input, const Bindings &bindings, Rng *rng) {
    const HilbertSpace hs = net.space().hilbert();
    if (!(input.space() == hs)) {
        throw DimensionError("propagate: input state does not live in the network space");
    }

    struct Branch {
        double weight;
        Vector amps;
    };
    std::vector<Branch> branches{{1.0, input.amps()}};
    std::vector<std::size_t> outcomes;
    double sampled_probability = 1.0;

    for (const auto &e : net.stages()) {
        const Operator u = element_unitary(e, net.space(), bindings);
        if (const auto *bb = std::get_if<BigBrotherDevice>(&e)) {
            const Operator inside = path_projector(net.space(), bb->path);
            const Operator outside(Matrix::Identity(inside.matrix().rows(), inside.matrix().cols()) -
                                   inside.matrix());
            const std::array<Operator, 2> projectors{outside, inside};
            if (rng != nullptr) {
                const StateVector current(hs, branches.front().amps);
                const auto result = measure_projective(current, projectors, *rng);
                outcomes.push_back(result.outcome);
                sampled_probability *= result.probability;
                branches.front().amps = result.post_state.amps();
            } else {
                std::vector<Branch> split;
                for (const auto &b : branches) {
                    for (const auto &p : projectors) {
                        const Vector v = p.matrix() * b.amps;
                        const double q = v.squaredNorm();
                        if (q > 0.0) {
                            split.push_back({b.weight * q, v / std::sqrt(q)});
                        }
                    }
                }
                branches = std::move(split);
            }
        }
        for (auto &b : branches) {
            b.amps = u.matrix() * b.amps;
        }
    }

    if (!net.has_big_brother()) {
        return Pure{StateVector(hs, branches.front().amps)};
    }
    if (rng != nullptr) {
        return Sampled{outcomes, StateVector(hs, branches.front().amps), sampled_probability};
    }
    const auto n = static_cast<Eigen::Index>(hs.total_dim());
    Matrix rho = Matrix::Zero(n, n);
    for (const auto &b : branches) {
        rho += b.weight * (b.amps * b.amps.adjoint());
    }
    return Mixed{DensityMatrix(hs, std::move(rho))};
}

// ---------------------------------------------------------------------------
// States and presets

namespace {

Vector place(const PhotonicSpace &space, const std::string &path, const Vector &h_part, const Vector &v_part) {
    const std::size_t d = space.internal_dim;
    const std::size_t p = space.path_index(path);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(space.sector_dim()));
    out.segment(static_cast<Eigen::Index>(flat(p, Pol::H, 0, d)), static_cast<Eigen::Index>(d)) = h_part;
    out.segment(static_cast<Eigen::Index>(flat(p, Pol::V, 0, d)), static_cast<Eigen::Index>(d)) = v_part;
    return out;
}

void check_psi(const PhotonicSpace &space, const Vector &psi) {
    if (static_cast<std::size_t>(psi.size()) != space.internal_dim) {
        throw DimensionError("system state dimension does not match internal_dim");
    }
}

} // namespace

StateVector product_input(const PhotonicSpace &space, const std::string &path, Complex alpha, Complex beta,
                          const Vector &psi) {
    check_psi(space, psi);
    return StateVector(space.hilbert(), place(space, path, alpha * psi, beta * psi));
}

StateVector ctrl_u_target(const PhotonicSpace &space, const std::string &path, Complex alpha, Complex beta,
                          const Vector &psi, const Operator &u) {
    check_psi(space, psi);
    return StateVector(space.hilbert(), place(space, path, alpha * psi, beta * (u.matrix() * psi)));
}

StateVector ctrl_switch_target(const PhotonicSpace &space, const std::string &path, Complex alpha, Complex beta,
                               const Vector &psi, const Operator &uf, const Operator &ug) {
    check_psi(space, psi);
    const Vector gf = ug.matrix() * (uf.matrix() * psi);
    const Vector fg = uf.matrix() * (ug.matrix() * psi);
    return StateVector(space.hilbert(), place(space, path, alpha * gf, beta * fg));
}

Network preset_fig2(std::size_t internal_dim) {
    PhotonicSpace space{{"a", "b"}, internal_dim};
    std::vector<Element> stages{
        Pbs{{"a", "b"}, {"a", "b"}},
        Device{"b", "U"},
        Pbs{{"a", "b"}, {"a", "b"}},
    };
    return Network(std::move(space), std::move(stages), "a", "a", Target::CtrlU);
}

Network preset_fig5(std::size_t internal_dim) {
    PhotonicSpace space{{"a", "b"}, internal_dim};
    // H branch: a → U_f → (HWP, PBS) → b → U_g.
    // V branch: b → U_g → (PBS) → a → U_f.
    std::vector<Element> stages{
        Pbs{{"a", "b"}, {"a", "b"}},
        Device{"a", "Uf"},
        Device{"b", "Ug"},
        Hwp{"a"},
        Pbs{{"a", "b"}, {"a", "b"}},
        Device{"a", "Uf"},
        Device{"b", "Ug"},
        Hwp{"b"},
        Pbs{{"a", "b"}, {"a", "b"}},
    };
    return Network(std::move(space), std::move(stages), "a", "b", Target::CtrlSwitch);
}

Operator two_photon_product(const Device &fragment, const Operator &u) {
    if (!is_unitary(u, kDefaultTol)) {
        throw ValidationError("two_photon_product: operator is not unitary");
    }
    const std::size_t d = u.dim();
    const PhotonicSpace space{{"u", "l"}, d};
    const Operator g = element_unitary(fragment, space, Bindings{{fragment.slot, u}});

    // First-quantized picture: each photon evolves with the same
    // single-photon operator; read off the H-polarized, path-preserving
    // block for the photon starting on "u" and the one starting on "l".
    const std::size_t up = space.path_index("u");
    const std::size_t low = space.path_index("l");
    const auto dd = static_cast<Eigen::Index>(d * d);
    Matrix joint = Matrix::Zero(dd, dd);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = 0; k < d; ++k) {
                for (std::size_t m = 0; m < d; ++m) {
                    const Complex a = g(flat(up, Pol::H, i, d), flat(up, Pol::H, k, d));
                    const Complex b = g(flat(low, Pol::H, j, d), flat(low, Pol::H, m, d));
                    joint(static_cast<Eigen::Index>(i * d + j), static_cast<Eigen::Index>(k * d + m)) = a * b;
                }
            }
        }
    }
    const Operator expected = fragment.path == "l" ? tensor(Operator::identity(d), u) : tensor(u, Operator::identity(d));
    if (max_abs_diff(joint, expected.matrix()) > 1e-12) {
        throw std::logic_error("two-photon device action is not a product of single-photon actions");
    }
    return Operator(std::move(joint), true);
}

std::string to_string(Target t) {
    switch (t) {
    case Target::CtrlU:
        return "ctrl_u";
    case Target::CtrlSwitch:
        return "ctrl_switch";
    case Target::None:
        break;
    }
    return "none";
}

Target target_from_string(const std::string &s) {
    if (s == "ctrl_u") return Target::CtrlU;
    if (s == "ctrl_switch") return Target::CtrlSwitch;
    if (s == "none") return Target::None;
    throw ValidationError("unknown target '" + s + "'");
}

} // namespace qctrl::photonic
