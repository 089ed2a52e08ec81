#include "qctrl/ion.hpp"

#include <algorithm>

namespace qctrl::ion {

namespace {

template <class... Ts> struct Overloaded : Ts... {
    using Ts::operator()...;
};

struct LevelAndPhonons {
    Level level;
    std::size_t phonons;
};

void check_ion(int ion) {
    if (ion != 1 && ion != 2) {
        throw DimensionError("ion index must be 1 or 2, got " + std::to_string(ion));
    }
}

std::size_t index_on(const TrapSpace &space, int ion, Level mine, Level other, std::size_t n) {
    return ion == 1 ? space.index(mine, other, n) : space.index(other, mine, n);
}

/// Real symmetric exchange of two (level, n) configurations of one ion,
/// for every level of the other ion.
Operator exchange(const TrapSpace &space, int ion, LevelAndPhonons a, LevelAndPhonons b) {
    check_ion(ion);
    const auto dim = static_cast<Eigen::Index>(space.total_dim());
    Matrix m = Matrix::Identity(dim, dim);
    for (std::size_t o = 0; o < kLevelsPerIon; ++o) {
        const auto other = static_cast<Level>(o);
        const auto ia = static_cast<Eigen::Index>(index_on(space, ion, a.level, other, a.phonons));
        const auto ib = static_cast<Eigen::Index>(index_on(space, ion, b.level, other, b.phonons));
        m(ia, ia) = 0.0;
        m(ib, ib) = 0.0;
        m(ia, ib) = 1.0;
        m(ib, ia) = 1.0;
    }
    return Operator(std::move(m), true);
}

Operator carrier(const TrapSpace &space, int ion, const Operator &u) {
    check_ion(ion);
    const auto dim = static_cast<Eigen::Index>(space.total_dim());
    Matrix m = Matrix::Identity(dim, dim);
    const std::array<Level, 2> qubit{Level::G, Level::E};
    for (std::size_t o = 0; o < kLevelsPerIon; ++o) {
        const auto other = static_cast<Level>(o);
        for (std::size_t r = 0; r < 2; ++r) {
            for (std::size_t c = 0; c < 2; ++c) {
                const auto ir = static_cast<Eigen::Index>(index_on(space, ion, qubit[r], other, 0));
                const auto ic = static_cast<Eigen::Index>(index_on(space, ion, qubit[c], other, 0));
                m(ir, ic) = u(r, c);
            }
        }
    }
    return Operator(std::move(m), true);
}

} // namespace

TrapSpace::TrapSpace(std::size_t cutoff) : fock_cutoff(cutoff) {
    if (fock_cutoff < 2) {
        throw DimensionError("fock cutoff must be at least 2");
    }
}

HilbertSpace TrapSpace::hilbert() const {
    return HilbertSpace({{"ion1", kLevelsPerIon}, {"ion2", kLevelsPerIon}, {"mode", fock_cutoff}});
}

std::size_t TrapSpace::index(Level ion1, Level ion2, std::size_t phonons) const {
    if (phonons >= fock_cutoff) {
        throw DimensionError("phonon number beyond the Fock cutoff");
    }
    return (static_cast<std::size_t>(ion1) * kLevelsPerIon + static_cast<std::size_t>(ion2)) * fock_cutoff +
           phonons;
}

PulseSequence::PulseSequence(std::vector<Pulse> pulses) : pulses_(std::move(pulses)) {
    std::map<std::string, std::size_t> in_flight;
    for (const auto &p : pulses_) {
        std::visit([](const auto &x) { check_ion(x.ion); }, p);
        const auto *c = std::get_if<Carrier>(&p);
        if (c == nullptr) {
            continue;
        }
        if (c->slot.empty()) {
            throw ValidationError("carrier pulse needs a slot name");
        }
        auto &use = usage_[c->slot];
        ++use.interactions;
        if (c->pass == PassKind::Outgoing) {
            ++use.pulses_sent;
            ++in_flight[c->slot];
        } else {
            if (in_flight[c->slot] == 0) {
                throw ValidationError("return pass of slot '" + c->slot + "' without a preceding outgoing pulse");
            }
            --in_flight[c->slot];
        }
    }
}

Operator pulse_unitary(const Pulse &p, const TrapSpace &space, const Bindings &bindings) {
    return std::visit(
        Overloaded{
            [&](const SidebandSwap &s) { return exchange(space, s.ion, {Level::G, 0}, {Level::E, 1}); },
            [&](const Hiding &h) {
                return h.which == HidingKind::H1 ? exchange(space, h.ion, {Level::G, 1}, {Level::GPrime, 0})
                                                 : exchange(space, h.ion, {Level::E, 1}, {Level::EPrime, 0});
            },
            [&](const SigmaX &s) {
                return s.which == SigmaKind::Sg ? exchange(space, s.ion, {Level::G, 0}, {Level::GPrime, 0})
                                                : exchange(space, s.ion, {Level::E, 0}, {Level::EPrime, 0});
            },
            [&](const Carrier &c) {
                const auto it = bindings.find(c.slot);
                if (it == bindings.end()) {
                    throw ValidationError("unbound carrier slot '" + c.slot + "'");
                }
                if (it->second.dim() != 2) {
                    throw DimensionError("carrier slot '" + c.slot + "' must be bound to a 2x2 operator");
                }
                if (!is_unitary(it->second, kDefaultTol)) {
                    throw ValidationError("carrier slot '" + c.slot + "' bound to a non-unitary operator");
                }
                return carrier(space, c.ion, it->second);
            },
        },
        p);
}

RunResult run_sequence(const PulseSequence &seq, const TrapSpace &space, const StateVector &init,
                       const Bindings &bindings) {
    if (!(init.space() == space.hilbert())) {
        throw DimensionError("run_sequence: initial state is not in the trap space");
    }
    RunResult out{init, {}};
    out.trace.reserve(seq.size());
    for (const auto &p : seq.pulses()) {
        out.final_state = apply(pulse_unitary(p, space, bindings), out.final_state);
        out.trace.push_back(out.final_state);
    }
    return out;
}

PulseSequence seq_ctrl_u() {
    return PulseSequence({
        SidebandSwap{1},
        Hiding{2, HidingKind::H1},
        Hiding{2, HidingKind::H2},
        Carrier{2, "U", PassKind::Outgoing},
        Hiding{2, HidingKind::H1},
        Hiding{2, HidingKind::H2},
        SidebandSwap{1},
    });
}

PulseSequence seq_ctrl_switch() {
    return PulseSequence({
        SidebandSwap{1},
        Hiding{2, HidingKind::H1},
        Hiding{2, HidingKind::H2},
        Carrier{2, "Ug", PassKind::Outgoing},
        SigmaX{2, SigmaKind::Sg},
        SigmaX{2, SigmaKind::Se},
        Carrier{2, "Uf", PassKind::Outgoing},
        Carrier{2, "Ug", PassKind::Return},
        SigmaX{2, SigmaKind::Sg},
        SigmaX{2, SigmaKind::Se},
        Carrier{2, "Uf", PassKind::Return},
        Hiding{2, HidingKind::H1},
        Hiding{2, HidingKind::H2},
        SidebandSwap{1},
    });
}

bool assert_ground_mode(const StateVector &s, const TrapSpace &space, double tol) {
    double excited = 0.0;
    for (std::size_t idx = 0; idx < space.total_dim(); ++idx) {
        if (idx % space.fock_cutoff != 0) {
            excited += std::norm(s.amps()(static_cast<Eigen::Index>(idx)));
        }
    }
    return excited <= tol;
}

double top_fock_population(const StateVector &s, const TrapSpace &space) {
    double pop = 0.0;
    for (std::size_t idx = space.fock_cutoff - 1; idx < space.total_dim(); idx += space.fock_cutoff) {
        pop += std::norm(s.amps()(static_cast<Eigen::Index>(idx)));
    }
    return pop;
}

Vector qubit_levels(const Vector &psi2) {
    if (psi2.size() != 2) {
        throw DimensionError("ion system state must be a qubit");
    }
    Vector v = Vector::Zero(kLevelsPerIon);
    v(0) = psi2(0);
    v(1) = psi2(1);
    return v;
}

namespace {

StateVector assemble(const TrapSpace &space, const Vector &g_branch, Complex alpha, const Vector &e_branch,
                     Complex beta) {
    Vector ion1_g = Vector::Zero(kLevelsPerIon);
    ion1_g(0) = 1.0;
    Vector ion1_e = Vector::Zero(kLevelsPerIon);
    ion1_e(1) = 1.0;
    Vector mode0 = Vector::Zero(static_cast<Eigen::Index>(space.fock_cutoff));
    mode0(0) = 1.0;
    const auto kron3 = [](const Vector &a, const Vector &b, const Vector &c) {
        Vector out(a.size() * b.size() * c.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            for (Eigen::Index j = 0; j < b.size(); ++j) {
                out.segment((i * b.size() + j) * c.size(), c.size()) = a(i) * b(j) * c;
            }
        }
        return out;
    };
    return StateVector(space.hilbert(), alpha * kron3(ion1_g, qubit_levels(g_branch), mode0) +
                                            beta * kron3(ion1_e, qubit_levels(e_branch), mode0));
}

} // namespace

StateVector protocol_input(const TrapSpace &space, Complex alpha, Complex beta, const Vector &psi) {
    return assemble(space, psi, alpha, psi, beta);
}

StateVector ctrl_u_target(const TrapSpace &space, Complex alpha, Complex beta, const Vector &psi, const Operator &u) {
    return assemble(space, psi, alpha, u.matrix() * psi, beta);
}

StateVector ctrl_switch_target(const TrapSpace &space, Complex alpha, Complex beta, const Vector &psi,
                               const Operator &uf, const Operator &ug) {
    return assemble(space, ug.matrix() * (uf.matrix() * psi), alpha, uf.matrix() * (ug.matrix() * psi), beta);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::ordered_json to_json(const PulseSequence &seq) {
    using nlohmann::ordered_json;
    ordered_json arr = ordered_json::array();
    for (const auto &p : seq.pulses()) {
        arr.push_back(std::visit(
            Overloaded{
                [](const SidebandSwap &s) { return ordered_json{{"type", "sideband_swap"}, {"ion", s.ion}}; },
                [](const Hiding &h) {
                    return ordered_json{
                        {"type", "hiding"}, {"ion", h.ion}, {"which", h.which == HidingKind::H1 ? "H1" : "H2"}};
                },
                [](const SigmaX &s) {
                    return ordered_json{
                        {"type", "sigma_x"}, {"ion", s.ion}, {"which", s.which == SigmaKind::Sg ? "Sg" : "Se"}};
                },
                [](const Carrier &c) {
                    return ordered_json{{"type", "carrier"},
                                        {"ion", c.ion},
                                        {"slot", c.slot},
                                        {"pass", c.pass == PassKind::Outgoing ? "outgoing" : "return"}};
                },
            },
            p));
    }
    return arr;
}

PulseSequence sequence_from_json(const nlohmann::json &j) {
    if (!j.is_array()) {
        throw ValidationError("pulse-sequence file must be a JSON array");
    }
    const auto str = [](const nlohmann::json &p, const char *key) -> std::string {
        if (!p.contains(key) || !p.at(key).is_string()) {
            throw ValidationError(std::string("pulse entry: missing string field '") + key + "'");
        }
        return p.at(key).get<std::string>();
    };
    std::vector<Pulse> pulses;
    for (const auto &p : j) {
        if (!p.contains("ion") || !p.at("ion").is_number_integer()) {
            throw ValidationError("pulse entry: missing integer field 'ion'");
        }
        const int ion = p.at("ion").get<int>();
        const std::string type = str(p, "type");
        if (type == "sideband_swap") {
            pulses.emplace_back(SidebandSwap{ion});
        } else if (type == "hiding") {
            const auto w = str(p, "which");
            if (w != "H1" && w != "H2") throw ValidationError("hiding pulse: which must be H1 or H2");
            pulses.emplace_back(Hiding{ion, w == "H1" ? HidingKind::H1 : HidingKind::H2});
        } else if (type == "sigma_x") {
            const auto w = str(p, "which");
            if (w != "Sg" && w != "Se") throw ValidationError("sigma_x pulse: which must be Sg or Se");
            pulses.emplace_back(SigmaX{ion, w == "Sg" ? SigmaKind::Sg : SigmaKind::Se});
        } else if (type == "carrier") {
            PassKind pass = PassKind::Outgoing;
            if (p.contains("pass")) {
                const auto s = str(p, "pass");
                if (s != "outgoing" && s != "return") throw ValidationError("carrier pulse: bad pass");
                pass = s == "outgoing" ? PassKind::Outgoing : PassKind::Return;
            }
            pulses.emplace_back(Carrier{ion, str(p, "slot"), pass});
        } else {
            throw ValidationError("unknown pulse type '" + type + "'");
        }
    }
    return PulseSequence(std::move(pulses));
}

} // namespace qctrl::ion
