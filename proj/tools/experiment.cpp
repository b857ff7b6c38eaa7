#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "bdb/error.hpp"

namespace bdb::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
    throw Error(ErrorCode::kConfig, key + ": " + what);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) config_error(key, "expected a number, got '" + v + "'");
    return out;
}

long long to_integer(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) config_error(key, "expected an integer, got '" + v + "'");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    const long long n = to_integer(key, v);
    if (n < -1000000000LL || n > 1000000000LL) config_error(key, "integer out of range");
    return static_cast<int>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    config_error(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
    if (out.empty()) config_error(key, "expected a non-empty list");
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment.kind", [](auto& c, auto&, auto& v) { c.kind = v; }},
        {"experiment.output", [](auto& c, auto&, auto& v) { c.output = v; }},
        {"experiment.seed",
         [](auto& c, auto& k, auto& v) {
             const long long s = to_integer(k, v);
             if (s < 0) config_error(k, "seed must be >= 0");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"experiment.threads", [](auto& c, auto& k, auto& v) { c.threads = to_int(k, v); }},
        {"model.lambda0", [](auto& c, auto& k, auto& v) { c.model.entropy.lambda0 = to_double(k, v); }},
        {"model.lambda1", [](auto& c, auto& k, auto& v) { c.model.entropy.lambda1 = to_double(k, v); }},
        {"model.eta", [](auto& c, auto& k, auto& v) { c.model.entropy.eta = to_double(k, v); }},
        {"model.U", [](auto& c, auto& k, auto& v) { c.model.physical.U = to_double(k, v); }},
        {"model.tau", [](auto& c, auto& k, auto& v) { c.model.physical.tau = to_double(k, v); }},
        {"model.epsilon0", [](auto& c, auto& k, auto& v) { c.model.band.epsilon0 = to_double(k, v); }},
        {"model.d",
         [](auto& c, auto& k, auto& v) {
             c.model.band.d = to_int(k, v);
             c.grid.d = c.model.band.d;
         }},
        {"grid.nx", [](auto& c, auto& k, auto& v) { c.grid.nx = to_int(k, v); }},
        {"grid.np", [](auto& c, auto& k, auto& v) { c.grid.np = to_int(k, v); }},
        {"grid.lx", [](auto& c, auto& k, auto& v) { c.grid.lx = to_double(k, v); }},
        {"solver.dt", [](auto& c, auto& k, auto& v) { c.solver.dt = to_double(k, v); }},
        {"solver.t_end", [](auto& c, auto& k, auto& v) { c.solver.t_end = to_double(k, v); }},
        {"solver.scheme",
         [](auto& c, auto& k, auto& v) {
             if (v == "strang_split")
                 c.solver.scheme = Scheme::kStrangSplit;
             else if (v == "duhamel_picard")
                 c.solver.scheme = Scheme::kDuhamelPicard;
             else
                 config_error(k, "expected strang_split or duhamel_picard, got '" + v + "'");
         }},
        {"solver.collision",
         [](auto& c, auto& k, auto& v) {
             if (v == "relaxation")
                 c.solver.collision = Collision::kRelaxation;
             else if (v == "bgk")
                 c.solver.collision = Collision::kBgk;
             else
                 config_error(k, "expected relaxation or bgk, got '" + v + "'");
         }},
        {"solver.picard_max_iter", [](auto& c, auto& k, auto& v) { c.solver.picard_max_iter = to_int(k, v); }},
        {"solver.picard_tol", [](auto& c, auto& k, auto& v) { c.solver.picard_tol = to_double(k, v); }},
        {"solver.record_every", [](auto& c, auto& k, auto& v) { c.solver.record_every = to_int(k, v); }},
        {"solver.density_every", [](auto& c, auto& k, auto& v) { c.solver.density_every = to_int(k, v); }},
        {"solver.enforce_cfl", [](auto& c, auto& k, auto& v) { c.solver.enforce_cfl = to_bool(k, v); }},
        {"solver.transformed", [](auto& c, auto& k, auto& v) { c.transformed = to_bool(k, v); }},
        {"solver.tau0",
         [](auto& c, auto& k, auto& v) {
             if (v != "auto" && v != "none" && !(to_double(k, v) > 0.0))
                 config_error(k, "expected auto, none or a positive number");
             c.tau0 = v;
         }},
        {"solver.tau0_depth", [](auto& c, auto& k, auto& v) { c.tau0_depth = to_int(k, v); }},
        {"gevrey.enabled",
         [](auto& c, auto& k, auto& v) {
             if (to_bool(k, v)) {
                 if (!c.solver.gevrey) c.solver.gevrey = GevreySchedule{};
             } else {
                 c.solver.gevrey.reset();
             }
         }},
        {"gevrey.nu0", [](auto& c, auto& k, auto& v) { c.solver.gevrey.emplace().nu0 = to_double(k, v); }},
        {"gevrey.mu", [](auto& c, auto& k, auto& v) { c.solver.gevrey.emplace().mu = to_double(k, v); }},
        {"gevrey.delta", [](auto& c, auto& k, auto& v) { c.solver.gevrey.emplace().delta = to_double(k, v); }},
        {"gevrey.n_max", [](auto& c, auto& k, auto& v) { c.solver.gevrey.emplace().n_max = to_int(k, v); }},
        {"perturbation.modes",
         [](auto& c, auto& k, auto& v) {
             c.modes.clear();
             for (const auto& item : split(v, ',')) {
                 const auto parts = split(item, ':');
                 if (parts.size() != 2) config_error(k, "expected mode:amplitude pairs, got '" + item + "'");
                 c.modes.push_back({to_int(k, parts[0]), to_double(k, parts[1])});
             }
         }},
        {"perturbation.random", [](auto& c, auto& k, auto& v) { c.random_amplitude = to_double(k, v); }},
        {"perturbation.snapshot", [](auto& c, auto&, auto& v) { c.snapshot = v; }},
        {"stability.lambda0", [](auto& c, auto& k, auto& v) { c.stability.lambda0 = to_list(k, v); }},
        {"stability.lambda1", [](auto& c, auto& k, auto& v) { c.stability.lambda1 = to_list(k, v); }},
        {"stability.U", [](auto& c, auto& k, auto& v) { c.stability.U = to_list(k, v); }},
        {"stability.np", [](auto& c, auto& k, auto& v) { c.stability.np = to_int(k, v); }},
        {"stability.penrose_gamma", [](auto& c, auto& k, auto& v) { c.stability.penrose_gamma = to_int(k, v); }},
        {"stability.penrose_tau", [](auto& c, auto& k, auto& v) { c.stability.penrose_tau = to_int(k, v); }},
        {"stability.penrose_eta", [](auto& c, auto& k, auto& v) { c.stability.penrose_eta = to_int(k, v); }},
        {"linear.samples", [](auto& c, auto& k, auto& v) { c.linear.samples = to_int(k, v); }},
        {"linear.tolerance", [](auto& c, auto& k, auto& v) { c.linear.tolerance = to_double(k, v); }},
        {"abstract.seeds", [](auto& c, auto& k, auto& v) { c.abstract_suite.seeds = to_int(k, v); }},
        {"abstract.trials", [](auto& c, auto& k, auto& v) { c.abstract_suite.trials = to_int(k, v); }},
        {"abstract.max_order", [](auto& c, auto& k, auto& v) { c.abstract_suite.max_order = to_int(k, v); }},
        {"abstract.inject_noncommuting",
         [](auto& c, auto& k, auto& v) { c.abstract_suite.inject_noncommuting = to_bool(k, v); }},
        {"norms.points", [](auto& c, auto& k, auto& v) { c.norms.points = to_int(k, v); }},
        {"norms.trajectory", [](auto& c, auto&, auto& v) { c.norms.trajectory = v; }},
    };
    return table;
}

template <class Fn>
void revalidate(const char* what, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        throw Error(ErrorCode::kConfig, std::string(what) + ": " + e.what());
    }
}

}  // namespace

ConfigEntries parse_config_text(const std::string& text) {
    ConfigEntries out;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::kConfig, "line " + std::to_string(line) + ": expected 'section.key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const bool valid_chars = !key.empty() && std::all_of(key.begin(), key.end(), [](char ch) {
            return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.';
        });
        if (!valid_chars || std::count(key.begin(), key.end(), '.') != 1 || key.front() == '.' || key.back() == '.')
            throw Error(ErrorCode::kConfig, "line " + std::to_string(line) + ": malformed key '" + key + "'");
        if (value.empty()) throw Error(ErrorCode::kConfig, key + ": empty value on line " + std::to_string(line));
        if (out.values.count(key))
            throw Error(ErrorCode::kConfig, key + ": repeated on line " + std::to_string(line));
        out.values[key] = {value, line};
    }
    return out;
}

ConfigEntries parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kConfig, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::uint64_t config_hash(const ConfigEntries& entries) {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [key, value] : entries.values) feed(key + "=" + value.first + "\n");
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, setter] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

ExperimentConfig load_experiment(const ConfigEntries& entries) {
    ExperimentConfig cfg;
    for (const auto& [key, value] : entries.values) {
        const auto it = setters().find(key);
        if (it == setters().end())
            throw Error(ErrorCode::kConfig, "unknown key '" + key + "' on line " + std::to_string(value.second));
        it->second(cfg, key, value.first);
    }
    cfg.hash = config_hash(entries);

    revalidate("model", [&] { cfg.model.validate(); });
    revalidate("grid", [&] { cfg.grid.validate(); });
    revalidate("solver", [&] { cfg.solver.validate(cfg.grid, cfg.model); });
    if (cfg.threads && *cfg.threads < 1) config_error("experiment.threads", "must be >= 1");
    for (const auto& m : cfg.modes) {
        if (m.mode < 0 || m.mode >= cfg.grid.nx / 2)
            config_error("perturbation.modes", "mode " + std::to_string(m.mode) + " not resolved on the grid");
        if (!std::isfinite(m.amplitude)) config_error("perturbation.modes", "amplitude must be finite");
    }
    if (!(cfg.random_amplitude >= 0.0)) config_error("perturbation.random", "must be >= 0");
    if (cfg.tau0_depth < 1 || cfg.tau0_depth > 12) config_error("solver.tau0_depth", "must be in [1, 12]");
    if (cfg.stability.np < 4) config_error("stability.np", "must be >= 4");
    if (cfg.stability.penrose_gamma < 1 || cfg.stability.penrose_tau < 1 || cfg.stability.penrose_eta < 1)
        config_error("stability.penrose_*", "sample counts must be >= 1");
    if (cfg.linear.samples < 1) config_error("linear.samples", "must be >= 1");
    if (!(cfg.linear.tolerance >= 0.0)) config_error("linear.tolerance", "must be >= 0");
    if (cfg.abstract_suite.seeds < 1) config_error("abstract.seeds", "must be >= 1");
    if (cfg.abstract_suite.trials < 1) config_error("abstract.trials", "must be >= 1");
    if (cfg.abstract_suite.max_order < 1 || cfg.abstract_suite.max_order > 6)
        config_error("abstract.max_order", "must be in [1, 6]");
    if (cfg.norms.points < 2) config_error("norms.points", "must be >= 2");
    return cfg;
}

PhaseGridFunction initial_data(const ExperimentConfig& cfg, double* start_time) {
    if (start_time) *start_time = 0.0;
    if (!cfg.snapshot.empty()) {
        Snapshot snap = read_snapshot(cfg.snapshot);
        if (!(snap.field.grid() == cfg.grid))
            throw Error(ErrorCode::kConfig, "perturbation.snapshot: grid differs from the configured grid");
        if (start_time) *start_time = snap.time;
        return snap.field;
    }
    PhaseGridFunction f = PhaseGridFunction::equilibrium(cfg.grid, cfg.model.entropy, cfg.model.band);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (const auto& m : cfg.modes) {
        if (m.amplitude == 0.0) continue;
        f += PhaseGridFunction::from_function(cfg.grid, [&](auto x, auto p) {
            return m.amplitude * std::cos(two_pi * m.mode * x[0] / cfg.grid.lx) * (1.0 + 0.5 * std::cos(two_pi * p[0]));
        });
    }
    if (cfg.random_amplitude > 0.0) {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> phase(0.0, two_pi);
        for (int kx = 1; kx <= 3; ++kx) {
            for (int kp = 0; kp <= 3; ++kp) {
                const double a = cfg.random_amplitude * normal(rng) / (kx + kp);
                const double px = phase(rng);
                const double pp = phase(rng);
                f += PhaseGridFunction::from_function(cfg.grid, [&](auto x, auto p) {
                    return a * std::cos(two_pi * kx * x[0] / cfg.grid.lx + px) * std::cos(two_pi * kp * p[0] + pp);
                });
            }
        }
    }
    return f;
}

}  // namespace bdb::cli
