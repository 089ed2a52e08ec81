#include "qctrl/nogo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "qctrl/photonic.hpp"

namespace qctrl::nogo {

namespace {

constexpr std::uint64_t kOracleStream = 0;

using Params = std::vector<double>;

struct StageResult {
    std::size_t iterations = 0;
    bool converged = false;
};

/// BFGS ascent with Armijo backtracking on f(·, temperature).
StageResult quasi_newton_stage(const Objective &obj, Params &x, double temperature, const SearchConfig &cfg) {
    const std::size_t n = x.size();
    const auto en = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(en, en);
    bool h_is_identity = true;

    const auto eval = [&](const Params &p, Params &grad) {
        if (cfg.gradient == GradientMode::Analytic) {
            return obj.value_and_gradient(p, temperature, grad);
        }
        grad = obj.gradient(p, temperature, cfg.fd_step);
        return obj(p, temperature);
    };
    Params g;
    double f = eval(x, g);
    StageResult res;

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        res.iterations = it + 1;
        const Eigen::Map<const Eigen::VectorXd> gv(g.data(), en);
        Eigen::VectorXd dir = h * gv;
        double slope = gv.dot(dir);
        if (!(slope > 0.0)) {
            h.setIdentity();
            h_is_identity = true;
            dir = gv;
            slope = gv.squaredNorm();
        }
        if (std::sqrt(slope) < cfg.xtol) {
            res.converged = true;
            break;
        }

        double t = 1.0;
        Params trial(n);
        double f_trial = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = x[i] + t * dir(static_cast<Eigen::Index>(i));
            }
            f_trial = obj(trial, temperature);
            if (f_trial >= f + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!h_is_identity) {
                h.setIdentity();
                h_is_identity = true;
                continue;
            }
            res.converged = true;
            break;
        }

        Params g_new;
        eval(trial, g_new);
        Eigen::VectorXd s(en);
        Eigen::VectorXd y(en);
        for (std::size_t i = 0; i < n; ++i) {
            s(static_cast<Eigen::Index>(i)) = trial[i] - x[i];
            // Curvature pair for minimizing −f.
            y(static_cast<Eigen::Index>(i)) = g[i] - g_new[i];
        }
        const double sy = s.dot(y);
        if (sy > 1e-14) {
            if (h_is_identity) {
                h *= sy / y.squaredNorm();
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = h * y;
            h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
            h_is_identity = false;
        }

        const double gain = f_trial - f;
        x = std::move(trial);
        g = std::move(g_new);
        f = f_trial;
        if (gain < cfg.ftol || s.norm() < cfg.xtol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Nelder-Mead maximization of the exact worst case.
StageResult nelder_mead(const Objective &obj, Params &x, const SearchConfig &cfg) {
    const std::size_t n = x.size();
    std::vector<Params> simplex(n + 1, x);
    std::vector<double> val(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += 0.5;
    }
    const auto f = [&](const Params &p) { return -obj.worst_case(p); };
    for (std::size_t i = 0; i <= n; ++i) {
        val[i] = f(simplex[i]);
    }
    StageResult res;
    std::vector<std::size_t> order(n + 1);
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        res.iterations = it + 1;
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];
        if (val[worst] - val[best] < cfg.ftol) {
            res.converged = true;
            break;
        }
        Params centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
        }
        const auto along = [&](double coeff) {
            Params p(n);
            for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + coeff * (simplex[worst][k] - centroid[k]);
            return p;
        };
        Params refl = along(-1.0);
        const double fr = f(refl);
        if (fr < val[best]) {
            Params expd = along(-2.0);
            const double fe = f(expd);
            if (fe < fr) {
                simplex[worst] = std::move(expd);
                val[worst] = fe;
            } else {
                simplex[worst] = std::move(refl);
                val[worst] = fr;
            }
        } else if (fr < val[second]) {
            simplex[worst] = std::move(refl);
            val[worst] = fr;
        } else {
            Params contr = fr < val[worst] ? along(-0.5) : along(0.5);
            const double fc = f(contr);
            if (fc < std::min(fr, val[worst])) {
                simplex[worst] = std::move(contr);
                val[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t k = 0; k < n; ++k) {
                        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
                    }
                    val[i] = f(simplex[i]);
                }
            }
        }
    }
    const auto best_it = std::min_element(val.begin(), val.end());
    x = simplex[static_cast<std::size_t>(best_it - val.begin())];
    return res;
}

RestartTrace run_restart(const Objective &obj, const SearchConfig &cfg, std::size_t index) {
    RestartTrace trace;
    trace.index = index;
    trace.seed = Rng::derive_seed(cfg.seed, index + 1);
    Rng rng(trace.seed);
    Params x(obj.dimension());
    for (auto &v : x) {
        v = cfg.init_scale * rng.normal();
    }
    if (cfg.method == Method::NelderMead) {
        const auto r = nelder_mead(obj, x, cfg);
        trace.iterations = r.iterations;
        trace.converged = r.converged;
    } else {
        std::vector<double> temps = cfg.sample_count == 1 ? std::vector<double>{0.0} : cfg.temperatures;
        for (const double t : temps) {
            const auto r = quasi_newton_stage(obj, x, t, cfg);
            trace.iterations += r.iterations;
            trace.converged = r.converged;
        }
    }
    trace.final_value = obj.worst_case(x);
    return trace;
}

} // namespace

void SearchConfig::validate() const {
    if (restarts == 0) throw ValidationError("restarts must be positive");
    if (max_iters == 0) throw ValidationError("max_iters must be positive");
    if (sample_count == 0) throw ValidationError("sample_count must be positive");
    if (dims.ancilla == 0) throw ValidationError("ancilla dimension must be positive");
    if (dims.system == 0) throw ValidationError("system dimension must be positive");
    if (!(init_scale > 0.0)) throw ValidationError("init_scale must be positive");
    if (!(fd_step > 0.0)) throw ValidationError("fd_step must be positive");
    if (!(ftol > 0.0) || !(xtol > 0.0)) throw ValidationError("tolerances must be positive");
    if (method == Method::QuasiNewton && sample_count > 1 && temperatures.empty()) {
        throw ValidationError("at least one soft-min temperature is required");
    }
    for (const double t : temperatures) {
        if (!(t > 0.0)) throw ValidationError("soft-min temperatures must be positive");
    }
}

SampledOracleSet sample_oracles(Kind kind, std::size_t dim, std::size_t count, OracleMode mode, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, kOracleStream);
    SampledOracleSet out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        OracleSample s;
        if (mode == OracleMode::Identity) {
            s.first = Operator::identity(dim);
            if (kind == Kind::Switch) s.second = Operator::identity(dim);
        } else {
            s.first = haar_unitary(dim, rng);
            if (kind == Kind::Switch) s.second = haar_unitary(dim, rng);
        }
        out.push_back(std::move(s));
    }
    return out;
}

SearchReport optimize(Kind kind, const SearchConfig &config) {
    config.validate();
    const Objective obj(kind, config.dims,
                        sample_oracles(kind, config.dims.system, config.sample_count, config.oracle_mode, config.seed));

    SearchReport report;
    report.kind = kind;
    report.config = config;
    report.restarts.resize(config.restarts);

    std::size_t workers = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, config.restarts);
    std::atomic<std::size_t> next{0};
    const auto work = [&]() {
        for (std::size_t i = next++; i < config.restarts; i = next++) {
            report.restarts[i] = run_restart(obj, config, i);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    report.best_worst_case_fidelity = -1.0;
    for (const auto &r : report.restarts) {
        if (r.final_value > report.best_worst_case_fidelity) {
            report.best_worst_case_fidelity = r.final_value;
            report.best_restart = r.index;
        }
    }
    return report;
}

OracleSanity oracle_sanity_detail(std::size_t samples, std::size_t dim, std::uint64_t seed) {
    using namespace photonic;
    const Network fig2 = preset_fig2(dim);
    const Network fig5 = preset_fig5(dim);
    Rng rng = Rng::derive(seed, 0x5a17);
    OracleSanity out{1.0, 1.0};
    for (std::size_t i = 0; i < samples; ++i) {
        const Operator u = haar_unitary(dim, rng);
        const Operator uf = haar_unitary(dim, rng);
        const Operator ug = haar_unitary(dim, rng);
        const Vector psi = haar_unitary(dim, rng).matrix().col(0);
        const double theta = 0.5 * std::numbers::pi * rng.uniform();
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        const Complex alpha = std::cos(theta);
        const Complex beta = std::polar(std::sin(theta), phi);

        const auto in2 = product_input(fig2.space(), fig2.input_path(), alpha, beta, psi);
        const auto out2 = std::get<Pure>(propagate(fig2, in2, {{"U", u}})).state;
        out.ctrl_u = std::min(
            out.ctrl_u, fidelity_pure(out2, ctrl_u_target(fig2.space(), fig2.output_path(), alpha, beta, psi, u)));

        const auto in5 = product_input(fig5.space(), fig5.input_path(), alpha, beta, psi);
        const auto out5 = std::get<Pure>(propagate(fig5, in5, {{"Uf", uf}, {"Ug", ug}})).state;
        out.ctrl_switch =
            std::min(out.ctrl_switch,
                     fidelity_pure(out5, ctrl_switch_target(fig5.space(), fig5.output_path(), alpha, beta, psi, uf, ug)));
    }
    return out;
}

double oracle_sanity(std::size_t samples, std::size_t dim, std::uint64_t seed) {
    return oracle_sanity_detail(samples, dim, seed).worst();
}

nlohmann::ordered_json to_json(const SearchReport &report) {
    using nlohmann::ordered_json;
    const auto &c = report.config;
    ordered_json j;
    j["kind"] = to_string(report.kind);
    j["dims"] = {{"ancilla", c.dims.ancilla}, {"control", CircuitDims::control}, {"system", c.dims.system}};
    j["config"] = {{"restarts", c.restarts},
                   {"max_iters", c.max_iters},
                   {"sample_count", c.sample_count},
                   {"seed", c.seed},
                   {"method", to_string(c.method)},
                   {"gradient", to_string(c.gradient)},
                   {"oracle_mode", to_string(c.oracle_mode)},
                   {"init_scale", c.init_scale},
                   {"fd_step", c.fd_step},
                   {"ftol", c.ftol},
                   {"xtol", c.xtol},
                   {"temperatures", c.temperatures}};
    j["best_worst_case_fidelity"] = report.best_worst_case_fidelity;
    j["best_restart"] = report.best_restart;
    ordered_json rs = ordered_json::array();
    for (const auto &r : report.restarts) {
        rs.push_back({{"index", r.index},
                      {"seed", r.seed},
                      {"final_value", r.final_value},
                      {"iterations", r.iterations},
                      {"converged", r.converged}});
    }
    j["restarts"] = std::move(rs);
    return j;
}

} // namespace qctrl::nogo
