#include "mfg/cli.hpp"

#include "mfg/formula_audit.hpp"
#include "mfg/gaussian.hpp"
#include "mfg/halfline.hpp"
#include "mfg/mc.hpp"
#include "mfg/merton.hpp"
#include "mfg/pde.hpp"
#include "mfg/svg.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>

namespace mfg::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

Config parse_config(std::istream& in, const std::string& origin) {
    Config cfg;
    cfg.origin = origin;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("{}:{}: expected `key = value`", origin, lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(fmt::format("{}:{}: empty key or value", origin, lineno));
        }
        if (!cfg.values.emplace(key, value).second) {
            throw ConfigError(fmt::format("{}:{}: duplicate key `{}`", origin, lineno, key));
        }
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    return parse_config(in, path);
}

const std::string* KeyReader::find(const std::string& key) {
    used_.insert(key);
    const auto it = config_.values.find(key);
    return it == config_.values.end() ? nullptr : &it->second;
}

double KeyReader::number(const std::string& key, double fallback) {
    const std::string* v = find(key);
    if (v == nullptr) return fallback;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size() || !std::isfinite(out)) {
        throw ConfigError(fmt::format("{}: `{}` is not a finite number: {}", config_.origin, key, *v));
    }
    return out;
}

double KeyReader::required_number(const std::string& key) {
    if (config_.values.count(key) == 0) {
        throw ConfigError(fmt::format("{}: missing required key `{}`", config_.origin, key));
    }
    return number(key, 0.0);
}

std::size_t KeyReader::count(const std::string& key, std::size_t fallback) {
    const std::string* v = find(key);
    if (v == nullptr) return fallback;
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
        throw ConfigError(fmt::format("{}: `{}` is not a non-negative integer: {}", config_.origin,
                                      key, *v));
    }
    return out;
}

std::uint64_t KeyReader::seed(const std::string& key, std::uint64_t fallback) {
    return count(key, fallback);
}

bool KeyReader::flag(const std::string& key, bool fallback) {
    const std::string* v = find(key);
    if (v == nullptr) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ConfigError(fmt::format("{}: `{}` must be true or false", config_.origin, key));
}

std::string KeyReader::text(const std::string& key, const std::string& fallback) {
    const std::string* v = find(key);
    return v == nullptr ? fallback : *v;
}

void KeyReader::finish() const {
    std::string unknown;
    for (const auto& [key, value] : config_.values) {
        if (used_.count(key) == 0) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) {
        throw ConfigError(fmt::format("{}: unknown key(s): {}", config_.origin, unknown));
    }
}

// ---------------------------------------------------------------- helpers

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Options {
    std::string config;
    std::string out_dir;
    bool svg = false;
    bool pde = false;
    bool mc = false;
    bool dump = false;
    std::uint64_t seed = 7;
    std::size_t per_regime = 5;
    double delta = 0.2;
    double lambda = 0.1;
};

std::string num(double v) { return fmt::format("{:.17g}", v); }

class Summary {
public:
    void add(const std::string& key, const std::string& value) {
        lines_ += key + "=" + value + "\n";
    }
    void add(const std::string& key, double value) { add(key, num(value)); }
    void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
    void add(const std::string& key, const char* value) { add(key, std::string(value)); }
    void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }

    /// Write-then-rename so readers never see a partial file.
    void write(const fs::path& dir) const {
        const fs::path tmp = dir / "summary.txt.tmp";
        {
            auto out = fmt::output_file(tmp.string());
            out.print("{}", lines_);
        }
        fs::rename(tmp, dir / "summary.txt");
    }

private:
    std::string lines_;
};

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header)
        : out_(fmt::output_file(path.string())) {
        std::string line;
        for (std::size_t i = 0; i < header.size(); ++i) line += (i ? "," : "") + header[i];
        out_.print("{}\n", line);
    }
    void row(const std::vector<double>& values) {
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            line += (i ? "," : "") + num(values[i]);
        }
        out_.print("{}\n", line);
    }

private:
    fmt::ostream out_;
};

fs::path resolve_out(const Options& opt, KeyReader* reader) {
    std::string dir = opt.out_dir;
    if (reader != nullptr) {
        const std::string from_config = reader->text("out_dir", "out");
        if (dir.empty()) dir = from_config;
    }
    if (dir.empty()) dir = "out";
    return dir;
}

void require_kind(KeyReader& reader, const std::string& expected) {
    const std::string kind = reader.text("kind", "");
    if (kind.empty()) throw ConfigError("config has no `kind`");
    if (kind != expected) {
        throw ConfigError(fmt::format("config kind `{}` does not match subcommand `{}`", kind,
                                      expected));
    }
}

struct GaussianProblem {
    QuadraticCost cost;
    QuadraticTerminal terminal;
    GaussianInitial initial{0.0, 1.0};
};

struct HalfProblem {
    QuadraticCost cost;
    QuadraticTerminal terminal;
    HalfLineInitial initial{1.0};
};

QuadraticCost read_cost(KeyReader& r, bool with_b) {
    QuadraticCost c;
    c.a = r.required_number("a");
    c.b = with_b ? r.number("b", 0.0) : 0.0;
    c.c = r.number("c", 0.0);
    c.delta = r.required_number("delta");
    c.horizon = r.required_number("horizon");
    return c;
}

GaussianProblem read_gaussian(KeyReader& r) {
    GaussianProblem p;
    p.cost = read_cost(r, true);
    p.terminal = {r.number("a_t", 0.0), r.number("b_t", 0.0), r.number("c_t", 0.0)};
    p.initial = GaussianInitial(r.required_number("x0"), r.required_number("lambda"));
    return p;
}

HalfProblem read_halfline(KeyReader& r) {
    HalfProblem p;
    p.cost = read_cost(r, true);
    p.terminal = {r.number("a_t", 0.0), r.number("b_t", 0.0), r.number("c_t", 0.0)};
    p.initial = HalfLineInitial(r.required_number("kappa"));
    return p;
}

merton::DriftOpinionScenario read_drift(KeyReader& r) {
    merton::DriftOpinionScenario s;
    s.mu_bar = r.required_number("mu_bar");
    s.sigma = r.required_number("sigma");
    s.r = r.required_number("r");
    s.q = r.required_number("q");
    s.beta = r.number("beta", s.beta);
    s.gamma = r.number("gamma", s.gamma);
    s.delta = r.number("delta", s.delta);
    s.horizon = r.number("horizon", s.horizon);
    s.mu0 = r.required_number("mu0");
    s.lambda = r.number("lambda", s.lambda);
    s.log_utility = r.flag("log_utility", false);
    return s;
}

merton::VolOpinionScenario read_vol(KeyReader& r) {
    merton::VolOpinionScenario s;
    s.mu = r.required_number("mu");
    s.r = r.required_number("r");
    s.q = r.required_number("q");
    s.beta = r.number("beta", s.beta);
    s.gamma = r.number("gamma", s.gamma);
    s.delta = r.number("delta", s.delta);
    s.horizon = r.number("horizon", s.horizon);
    s.xi0 = r.required_number("xi0");
    s.log_utility = r.flag("log_utility", false);
    return s;
}

void add_existence(Summary& s, const ExistenceReport& e) {
    s.add("regime", regime_name(e.regime));
    s.add("global", e.global());
    s.add("blowup_time", e.blowup_time ? num(*e.blowup_time) : std::string("none"));
}

// ---------------------------------------------------------------- solvers

/// Writes the full-line solution; returns false when the value function is
/// not global.
bool emit_gaussian(const GaussianProblem& p, std::size_t samples, const fs::path& dir,
                   bool svg, Summary& s) {
    const auto sol = gaussian::solve(p.cost, p.terminal, p.initial, samples);
    add_existence(s, sol.existence);
    const auto& path = sol.path;
    const auto& mode = sol.mode;
    if (sol.existence.global()) {
        CsvWriter csv(dir / "curves.csv", {"t", "A", "B", "C", "K2", "K1", "K0", "Q"});
        for (std::size_t i = 0; i < path.times.size(); ++i) {
            csv.row({path.times[i], path.A[i], path.B[i], path.C[i], path.K2[i], path.K1[i],
                     path.K0[i], mode.values[i]});
        }
        const std::size_t last = path.times.size() - 1;
        s.add("mass_T", gaussian::density_mass(path.K2[last], path.K1[last], path.K0[last]));
        s.add("variance_T", gaussian::density_variance(path.K2[last]));
    } else {
        CsvWriter value(dir / "value.csv", {"t", "A", "B", "C"});
        for (std::size_t i = 0; i < path.times.size(); ++i) {
            value.row({path.times[i], path.A[i], path.B[i], path.C[i]});
        }
    }
    CsvWriter mcsv(dir / "mode.csv", {"t", "Q"});
    for (std::size_t i = 0; i < mode.times.size(); ++i) mcsv.row({mode.times[i], mode.values[i]});
    s.add("mode_0", mode.values.front());
    s.add("mode_T", mode.values.back());
    if (p.cost.a < 0.0) s.add("q_star", -p.cost.b / (2.0 * p.cost.a));
    if (svg) {
        svg::write((dir / "mode.svg").string(), {"Density mode", "t", "Q(t)"},
                   {{"Q", mode.times, mode.values}});
        svg::write((dir / "coefficients.svg").string(), {"Value coefficients", "t", ""},
                   {{"A", path.times, path.A}, {"B", path.times, path.B}});
    }
    return sol.existence.global();
}

bool emit_halfline(const HalfProblem& p, std::size_t samples, const fs::path& dir, bool svg,
                   Summary& s) {
    const auto sol = halfline::solve_halfline(p.cost, p.terminal, p.initial, samples);
    add_existence(s, sol.existence);
    const auto& path = sol.path;
    const auto& mode = sol.mode;
    if (sol.existence.global()) {
        CsvWriter csv(dir / "curves.csv", {"t", "A", "C", "K2", "K0", "Q"});
        for (std::size_t i = 0; i < path.times.size(); ++i) {
            csv.row({path.times[i], path.A[i], path.C[i], path.K2[i], path.K0[i],
                     mode.values[i]});
        }
        const std::size_t last = path.times.size() - 1;
        // The wall at x = 0 absorbs, so this is below 1 for delta > 0.
        s.add("mass_T", halfline::halfline_mass(path.K2[last], path.K0[last]));
    } else {
        CsvWriter value(dir / "value.csv", {"t", "A", "C"});
        for (std::size_t i = 0; i < path.times.size(); ++i) {
            value.row({path.times[i], path.A[i], path.C[i]});
        }
    }
    CsvWriter mcsv(dir / "mode.csv", {"t", "Q"});
    for (std::size_t i = 0; i < mode.times.size(); ++i) mcsv.row({mode.times[i], mode.values[i]});
    s.add("mode_0", mode.values.front());
    s.add("mode_T", mode.values.back());
    if (p.cost.a < 0.0) {
        const double k = std::sqrt(-0.5 * p.cost.a);
        s.add("q_star", p.cost.delta / (2.0 * std::sqrt(k)));
    }
    if (svg) {
        svg::write((dir / "mode.svg").string(), {"Half-line density mode", "t", "Q(t)"},
                   {{"Q", mode.times, mode.values}});
    }
    return sol.existence.global();
}

void add_outcome(Summary& s, const merton::OutcomeReport& rep) {
    s.add("outcome", merton::to_string(rep.kind));
    switch (rep.kind) {
    case merton::OutcomeKind::OpinionForms:
        s.add("limit", rep.limit);
        s.add("audited_limit", rep.audited_limit ? num(*rep.audited_limit) : std::string("none"));
        break;
    case merton::OutcomeKind::Oscillates:
        s.add("angular_frequency", rep.angular_frequency);
        s.add("period", 2.0 * std::numbers::pi / rep.angular_frequency);
        s.add("center", rep.center);
        break;
    case merton::OutcomeKind::Drifts: break;
    }
    s.add("no_global_value", rep.no_global_value());
}

// ---------------------------------------------------------------- commands

int cmd_gaussian(const Options& opt) {
    const Config cfg = load_config(opt.config);
    KeyReader r(cfg);
    require_kind(r, "gaussian");
    const auto p = read_gaussian(r);
    const std::size_t samples = r.count("samples", kDefaultSamples);
    const fs::path dir = resolve_out(opt, &r);
    r.finish();
    fs::create_directories(dir);
    Summary s;
    s.add("kind", "gaussian");
    const bool global = emit_gaussian(p, samples, dir, opt.svg, s);
    s.write(dir);
    return global ? kOk : kSolverFailure;
}

int cmd_halfline(const Options& opt) {
    const Config cfg = load_config(opt.config);
    KeyReader r(cfg);
    require_kind(r, "halfline");
    const auto p = read_halfline(r);
    const std::size_t samples = r.count("samples", kDefaultSamples);
    const fs::path dir = resolve_out(opt, &r);
    r.finish();
    fs::create_directories(dir);
    Summary s;
    s.add("kind", "halfline");
    const bool global = emit_halfline(p, samples, dir, opt.svg, s);
    s.write(dir);
    return global ? kOk : kSolverFailure;
}

int cmd_merton_drift(const Options& opt) {
    const Config cfg = load_config(opt.config);
    KeyReader r(cfg);
    require_kind(r, "merton-drift");
    const auto sc = read_drift(r);
    const std::size_t samples = r.count("samples", 4001);
    const fs::path dir = resolve_out(opt, &r);
    r.finish();
    fs::create_directories(dir);
    const auto p = merton::build_drift_problem(sc);
    Summary s;
    s.add("kind", "merton-drift");
    s.add("R", sc.R());
    s.add("a", p.cost.a);
    s.add("b", p.cost.b);
    s.add("c", p.cost.c);
    emit_gaussian({p.cost, p.terminal, p.initial}, samples, dir, opt.svg, s);
    const auto rep = merton::classify_outcome(p.cost, p.terminal, sc.mu0);
    add_outcome(s, rep);
    if (rep.kind == merton::OutcomeKind::OpinionForms) {
        s.add("drift_opinion_limit", merton::drift_opinion_limit(sc));
    }
    s.write(dir);
    return kOk;
}

int cmd_merton_vol(const Options& opt) {
    const Config cfg = load_config(opt.config);
    KeyReader r(cfg);
    require_kind(r, "merton-vol");
    const auto sc = read_vol(r);
    const std::size_t samples = r.count("samples", 4001);
    const fs::path dir = resolve_out(opt, &r);
    r.finish();
    fs::create_directories(dir);
    const auto p = merton::build_vol_problem(sc);
    Summary s;
    s.add("kind", "merton-vol");
    s.add("P", sc.P());
    s.add("a", p.cost.a);
    s.add("c", p.cost.c);
    s.add("kappa", p.initial.kappa());
    emit_halfline({p.cost, p.terminal, p.initial}, samples, dir, opt.svg, s);
    add_outcome(s, merton::classify_outcome(p.cost, p.terminal, sc.xi0, merton::Line::Half));
    s.write(dir);
    return kOk;
}

struct VerifySetup {
    bool half = false;
    GaussianProblem line;
    HalfProblem half_problem;
};

int cmd_verify(const Options& opt) {
    const Config cfg = load_config(opt.config);
    KeyReader r(cfg);
    const std::string kind = r.text("kind", "");
    VerifySetup v;
    if (kind == "gaussian") {
        v.line = read_gaussian(r);
    } else if (kind == "halfline") {
        v.half = true;
        v.half_problem = read_halfline(r);
    } else if (kind == "merton-drift") {
        const auto p = merton::build_drift_problem(read_drift(r));
        v.line = {p.cost, p.terminal, p.initial};
    } else if (kind == "merton-vol") {
        const auto p = merton::build_vol_problem(read_vol(r));
        v.half = true;
        v.half_problem = {p.cost, p.terminal, p.initial};
    } else {
        throw ConfigError(fmt::format("{}: unsupported or missing kind `{}`", cfg.origin, kind));
    }
    bool run_pde = r.flag("pde", false) || opt.pde;
    bool run_mc = r.flag("mc", false) || opt.mc;
    if (!run_pde && !run_mc) run_pde = run_mc = true;
    const std::size_t nx = r.count("nx", 512), nt = r.count("nt", 512);
    const std::size_t n_agents = r.count("n_agents", 100000);
    const double dt = r.number("dt", 0.0);
    const std::uint64_t seed = r.seed("seed", 1);
    const std::size_t outputs = r.count("outputs", 101);
    const fs::path dir = resolve_out(opt, &r);
    r.finish();
    fs::create_directories(dir);

    const QuadraticCost& cost = v.half ? v.half_problem.cost : v.line.cost;
    const QuadraticTerminal& terminal = v.half ? v.half_problem.terminal : v.line.terminal;
    Summary s;
    s.add("kind", kind);
    s.add("domain", v.half ? "halfline" : "fullline");

    // Riccati reference: mode and density coefficients as functions of t.
    std::optional<gaussian::GaussianSolution> gsol;
    std::optional<halfline::HalfLineSolution> hsol;
    ExistenceReport existence;
    if (v.half) {
        hsol = halfline::solve_halfline(cost, terminal, v.half_problem.initial);
        existence = hsol->existence;
    } else {
        gsol = gaussian::solve(cost, terminal, v.line.initial);
        existence = gsol->existence;
    }
    add_existence(s, existence);
    if (!existence.global()) {
        s.add("verified", false);
        s.write(dir);
        return kSolverFailure;
    }
    const auto& dens = v.half ? hsol->path.density_dense : gsol->path.density_dense;
    auto ref_mode = [&](double t) {
        const auto k = dens->state(t);
        return v.half ? 1.0 / std::sqrt(k[0]) : gaussian::mode_from_density(k[1], k[0]);
    };

    bool ok = true;
    std::vector<svg::Series> overlay;
    if (run_pde) {
        const auto grid = v.half ? pde::Grid1D::for_halfline(*hsol, nx, nt)
                                 : pde::Grid1D::for_gaussian(*gsol, nx, nt);
        const auto sol = v.half ? pde::solve_halfline(cost, terminal, v.half_problem.initial, grid)
                                : pde::solve_gaussian(cost, terminal, v.line.initial, grid);
        CsvWriter csv(dir / "pde.csv", {"t", "Q_riccati", "Q_pde", "mass_pde", "mass_riccati", "r2"});
        double max_dev = 0.0, min_r2 = 1.0, max_mass_dev = 0.0;
        std::vector<double> qs;
        for (std::size_t n = 0; n < sol.times.size(); ++n) {
            const double t = sol.times[n];
            const double q = ref_mode(t);
            const auto k = dens->state(t);
            const double mass = v.half ? halfline::halfline_mass(k[0], k[1])
                                       : gaussian::density_mass(k[0], k[1], k[2]);
            max_dev = std::max(max_dev, std::abs(sol.mode_curve[n] - q));
            min_r2 = std::min(min_r2, sol.gaussian_r2[n]);
            max_mass_dev = std::max(max_mass_dev, std::abs(sol.mass_curve[n] - mass));
            csv.row({t, q, sol.mode_curve[n], sol.mass_curve[n], mass, sol.gaussian_r2[n]});
            qs.push_back(q);
        }
        const double tol = 2.0 * grid.dx();
        const bool pass = max_dev <= tol && min_r2 >= 0.999 && max_mass_dev <= 1e-3;
        s.add("pde_nx", grid.nx);
        s.add("pde_nt", grid.nt);
        s.add("pde_x_min", grid.x_min);
        s.add("pde_x_max", grid.x_max);
        s.add("pde_max_mode_deviation", max_dev);
        s.add("pde_mode_tolerance", tol);
        s.add("pde_min_r2", min_r2);
        s.add("pde_max_mass_deviation", max_mass_dev);
        s.add("pde_absorbed_mass", sol.diagnostics.absorbed_mass);
        s.add("pde_clipped_mass", sol.diagnostics.clipped_mass);
        s.add("pde_pass", pass);
        ok = ok && pass;
        overlay.push_back({"Riccati", sol.times, qs});
        overlay.push_back({"PDE", sol.times, sol.mode_curve});
        if (opt.dump) pde::write_fields_csv(sol, (dir / "fields.csv").string());
    }
    if (run_mc) {
        mc::EnsembleOptions mo;
        mo.n_agents = n_agents;
        mo.dt = dt;
        mo.seed = seed;
        mo.outputs = outputs;
        const auto value = gaussian::solve_backward(cost, terminal);
        const auto ens = v.half ? mc::simulate_halfline(value, cost, v.half_problem.initial, mo)
                                : mc::simulate_ensemble(value, cost, v.line.initial, mo);
        const auto& st = ens.stats;
        CsvWriter csv(dir / "mc.csv", {"t", "mean_ref", "mean", "stderr_mean", "variance_ref",
                                       "variance", "mode_kde", "skewness", "alive", "alive_ref"});
        double max_z = 0.0, max_var = 0.0, max_alive_z = 0.0;
        const double n = static_cast<double>(n_agents);
        for (std::size_t k = 0; k < st.times.size(); ++k) {
            const double t = st.times[k];
            const auto c = dens->state(t);
            double mean_ref = 0.0, var_ref = 0.0, alive_ref = 1.0;
            if (v.half) {
                // Survivors are distributed as x exp(-K2 x^2 / 2).
                mean_ref = std::sqrt(std::numbers::pi / (2.0 * c[0]));
                var_ref = (4.0 - std::numbers::pi) / (2.0 * c[0]);
                alive_ref = halfline::halfline_mass(c[0], c[1]);
            } else {
                mean_ref = gaussian::mode_from_density(c[1], c[0]);
                var_ref = gaussian::density_variance(c[0]);
            }
            csv.row({t, mean_ref, st.mean[k], st.stderr_mean[k], var_ref, st.variance[k],
                     st.mode_kde[k], st.skewness[k], st.alive[k], alive_ref});
            const double live = st.alive[k] * n;
            if (live < 1000.0) continue; // too few survivors for a meaningful comparison
            if (st.stderr_mean[k] > 0.0) {
                max_z = std::max(max_z, std::abs(st.mean[k] - mean_ref) / st.stderr_mean[k]);
            } else if (st.mean[k] != mean_ref) {
                max_z = std::numeric_limits<double>::infinity();
            }
            // Half-line survivors thin out, so the sampling error of the
            // variance (kurtosis 3.245 for x exp(-K2 x^2 / 2)) is added.
            const double var_tol = v.half ? 0.05 + 3.0 * std::sqrt(2.245 / live) : 0.05;
            if (var_ref > 0.0) {
                max_var = std::max(max_var, std::abs(st.variance[k] / var_ref - 1.0) / var_tol);
            }
            if (v.half) {
                const double sd = std::sqrt(alive_ref * (1.0 - alive_ref) / n);
                max_alive_z = std::max(max_alive_z, std::abs(st.alive[k] - alive_ref) / (sd + 1e-300));
            }
        }
        const bool pass = max_z <= 3.0 && max_var <= 1.0 && (!v.half || max_alive_z <= 4.0);
        s.add("mc_n_agents", n_agents);
        s.add("mc_seed", std::to_string(seed));
        s.add("mc_dt", st.dt);
        s.add("mc_max_mean_z", max_z);
        s.add("mc_max_variance_ratio", max_var); // relative error / tolerance
        if (v.half) s.add("mc_max_alive_z", max_alive_z);
        s.add("mc_pass", pass);
        ok = ok && pass;
        overlay.push_back({"MC mean", st.times, st.mean});
        if (opt.dump) mc::write_samples_csv(ens, (dir / "samples.csv").string());
    }
    s.add("verified", ok);
    if (opt.svg) svg::write((dir / "verify.svg").string(), {"Oracle agreement", "t", "mode"}, overlay);
    s.write(dir);
    return ok ? kOk : kOracleDisagreement;
}

int cmd_audit(const Options& opt) {
    const fs::path dir = resolve_out(opt, nullptr);
    fs::create_directories(dir);
    const auto cases = audit::randomized_suite(opt.seed, opt.per_regime);
    const auto results = audit::audit_all(cases);
    Summary s;
    s.add("kind", "audit-formulas");
    s.add("seed", std::to_string(opt.seed));
    s.add("scenarios", cases.size());
    {
        auto out = fmt::output_file((dir / "audit.csv").string());
        out.print("formula_id,verdict,max_abs_deviation,corrected_max_deviation,scenarios\n");
        for (const auto& a : results) {
            out.print("{},{},{},{},{}\n", audit::to_string(a.formula_id), audit::to_string(a.verdict),
                      num(a.max_abs_deviation), num(a.corrected_max_deviation), a.scenarios);
            s.add("verdict_" + audit::to_string(a.formula_id), audit::to_string(a.verdict));
        }
    }
    // Half-line equilibrium: stationary point versus the two printed constants.
    const QuadraticCost eq_cost{-2.0, 0.0, 0.0, 0.5, 30.0};
    const auto eq = halfline::audit_equilibrium(eq_cost, 0.0, 4.0);
    s.add("equilibrium_scenario", "a=-2 delta=0.5 a_t=0 horizon=30 kappa=4");
    s.add("equilibrium_audited", eq.audited);
    s.add("equilibrium_stationary", eq.stationary);
    s.add("equilibrium_quarter_root", eq.quarter_root);
    s.add("equilibrium_penalty_form", eq.penalty_form);
    s.add("equilibrium_winner", eq.winner);
    s.add("equilibrium_conflict",
          "printed half-line limit delta/(4 sqrt(k_minus)) and printed volatility limit "
          "delta/sqrt(-8P) both differ from the stationary point delta/(2 sqrt(k_minus))");
    s.write(dir);
    return kOk;
}

int cmd_figure1(const Options& opt) {
    const fs::path dir = resolve_out(opt, nullptr);
    fs::create_directories(dir);
    const double gammas[] = {0.0, 1.0, 2.0};
    std::vector<gaussian::ModeCurve> curves;
    std::vector<merton::DriftOpinionScenario> scenarios;
    for (double g : gammas) {
        merton::DriftOpinionScenario sc; // q=-10, sigma=0.5, beta=1, mu_bar=0.5, r=0.1, mu0=0.2
        sc.gamma = g;
        sc.horizon = 40.0;
        sc.delta = opt.delta;
        sc.lambda = opt.lambda;
        const auto p = merton::build_drift_problem(sc);
        curves.push_back(gaussian::solve(p.cost, p.terminal, p.initial, 4001).mode);
        scenarios.push_back(sc);
    }
    {
        CsvWriter csv(dir / "figure1.csv", {"t", "Q_gamma0", "Q_gamma1", "Q_gamma2"});
        for (std::size_t i = 0; i < curves[0].times.size(); ++i) {
            csv.row({curves[0].times[i], curves[0].values[i], curves[1].values[i],
                     curves[2].values[i]});
        }
    }
    svg::write((dir / "figure1.svg").string(),
               {"Opinion mode, q=-10, sigma=0.5, beta=1, mu_bar=0.5, r=0.1", "t", "Q(t)"},
               {{"gamma = 0", curves[0].times, curves[0].values},
                {"gamma = 1", curves[1].times, curves[1].values},
                {"gamma = 2", curves[2].times, curves[2].values}});

    Summary s;
    s.add("kind", "figure1");
    const double R = scenarios[0].R();
    const double expected_spacing = 2.0 * std::numbers::pi / std::sqrt(2.0 * R);
    const auto peaks = merton::peak_times(curves[0]);
    double spacing = kNaN;
    if (peaks.size() >= 2) spacing = (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
    const bool spacing_ok = std::abs(spacing - expected_spacing) <= 0.01 * expected_spacing;
    s.add("gamma0_peaks", peaks.size());
    s.add("gamma0_peak_spacing", spacing);
    s.add("gamma0_expected_spacing", expected_spacing);
    s.add("gamma0_spacing_ok", spacing_ok);

    const double mu_bar = scenarios[0].mu_bar;
    double plateau[3] = {kNaN, kNaN, kNaN};
    bool plateaus_ok = true;
    for (int g = 1; g <= 2; ++g) {
        const auto& c = curves[static_cast<std::size_t>(g)];
        plateau[g] = c.values[c.values.size() / 2];
        const double limit = merton::drift_opinion_limit(scenarios[static_cast<std::size_t>(g)]);
        const bool near = std::abs(plateau[g] - limit) <= 1e-3;
        const bool above = plateau[g] > mu_bar;
        s.add(fmt::format("gamma{}_plateau", g), plateau[g]);
        s.add(fmt::format("gamma{}_limit", g), limit);
        s.add(fmt::format("gamma{}_plateau_ok", g), near && above);
        plateaus_ok = plateaus_ok && near && above;
    }
    const bool ordering = std::abs(plateau[2] - mu_bar) < std::abs(plateau[1] - mu_bar);
    s.add("larger_gamma_closer", ordering);
    const bool ok = spacing_ok && plateaus_ok && ordering;
    s.add("reproduced", ok);
    s.write(dir);
    return ok ? kOk : kOracleDisagreement;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Linear-quadratic mean-field game solver with PDE and Monte Carlo oracles",
                 "mfglab"};
    app.require_subcommand(1);
    Options opt;

    auto scenario_cmd = [&](const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", opt.config, "scenario file")->required();
        sub->add_option("--out", opt.out_dir, "output directory (default: out_dir key or ./out)");
        sub->add_flag("--svg", opt.svg, "also write SVG plots");
        return sub;
    };
    auto* gaussian_cmd = scenario_cmd("gaussian", "full-line Gaussian MFG");
    auto* halfline_cmd = scenario_cmd("halfline", "half-line MFG with even cost");
    auto* drift_cmd = scenario_cmd("merton-drift", "investors form an opinion on the drift");
    auto* vol_cmd = scenario_cmd("merton-vol", "investors form an opinion on the volatility");
    auto* verify_cmd = scenario_cmd("verify", "compare the Riccati solution with PDE/MC oracles");
    verify_cmd->add_flag("--pde", opt.pde, "run the finite-difference oracle");
    verify_cmd->add_flag("--mc", opt.mc, "run the Monte Carlo oracle");
    verify_cmd->add_flag("--dump", opt.dump, "write PDE fields and MC samples");

    auto* audit_cmd = app.add_subcommand("audit-formulas", "audit published closed forms");
    audit_cmd->add_option("--out", opt.out_dir, "output directory");
    audit_cmd->add_option("--seed", opt.seed, "seed of the randomized scenario suite");
    audit_cmd->add_option("--per-regime", opt.per_regime, "scenarios per regime")
        ->check(CLI::PositiveNumber);

    auto* fig_cmd = app.add_subcommand("figure1", "reproduce the three opinion curves");
    fig_cmd->add_option("--out", opt.out_dir, "output directory");
    fig_cmd->add_option("--delta", opt.delta, "opinion diffusivity")->check(CLI::PositiveNumber);
    fig_cmd->add_option("--lambda", opt.lambda, "initial opinion width")->check(CLI::PositiveNumber);

    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalidConfig;
    }

    try {
        if (gaussian_cmd->parsed()) return cmd_gaussian(opt);
        if (halfline_cmd->parsed()) return cmd_halfline(opt);
        if (drift_cmd->parsed()) return cmd_merton_drift(opt);
        if (vol_cmd->parsed()) return cmd_merton_vol(opt);
        if (verify_cmd->parsed()) return cmd_verify(opt);
        if (audit_cmd->parsed()) return cmd_audit(opt);
        if (fig_cmd->parsed()) return cmd_figure1(opt);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const InvalidParameter& e) {
        err << "invalid parameter: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << "\n";
        return kSolverFailure;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const std::system_error& e) {
        err << "i/o error: " << e.what() << "\n";
        return kInvalidConfig;
    }
    return kInvalidConfig;
}

} // namespace mfg::cli
