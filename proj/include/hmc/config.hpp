#ifndef HMC_CONFIG_HPP
#define HMC_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmc/samplers.hpp"

namespace hmc {

/// Bad or missing settings. Commands map this to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem failures. Commands map this to exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Settings for one experiment. Flags given on the command line override the
/// same keys read from a config file.
struct ExperimentConfig {
    std::string target = "gauss1d";
    Kernel kernel = Kernel::hmc;
    TrajectoryPlan plan;
    long iterations = 1000;
    std::optional<long> burn_in;  // defaults to 10% of iterations
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::vector<std::size_t> monitor;  // empty: every coordinate
    std::vector<double> initial;       // empty: the origin

    long effective_burn_in() const { return burn_in.value_or(iterations / 10); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
    return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_number<T>(key, item));
    }
    return out;
}

}  // namespace detail

/// Parse `key = value` lines; `#` starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
        kv[key] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

/// Apply settings to `cfg`. Unknown keys are an error.
inline void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
    using detail::parse_list;
    using detail::parse_number;
    for (const auto& [key, value] : kv) {
        if (key == "target") {
            cfg.target = value;
        } else if (key == "kernel") {
            try {
                cfg.kernel = parse_kernel(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "iters") {
            cfg.iterations = parse_number<long>(key, value);
        } else if (key == "burn_in") {
            cfg.burn_in = parse_number<long>(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "monitor") {
            cfg.monitor = parse_list<std::size_t>(key, value);
        } else if (key == "initial") {
            cfg.initial = parse_list<double>(key, value);
        } else if (key == "epsilon_lo") {
            cfg.plan.epsilon.first = parse_number<double>(key, value);
        } else if (key == "epsilon_hi") {
            cfg.plan.epsilon.second = parse_number<double>(key, value);
        } else if (key == "steps_lo") {
            cfg.plan.steps.first = parse_number<long>(key, value);
        } else if (key == "steps_hi") {
            cfg.plan.steps.second = parse_number<long>(key, value);
        } else if (key == "window") {
            cfg.plan.window = parse_number<long>(key, value);
        } else if (key == "window_weights") {
            cfg.plan.window_weights = parse_list<double>(key, value);
        } else if (key == "alpha_temp") {
            cfg.plan.alpha_temp = parse_number<double>(key, value);
        } else if (key == "alpha_ref") {
            cfg.plan.alpha_ref = parse_number<double>(key, value);
        } else if (key == "updates") {
            cfg.plan.updates_per_iteration = parse_number<long>(key, value);
        } else if (key == "shortcut") {
            if (value == "none") {
                cfg.plan.shortcut.reset();
            } else if (value == "terminate" || value == "reverse") {
                if (!cfg.plan.shortcut) cfg.plan.shortcut.emplace();
                cfg.plan.shortcut->mode = value == "terminate" ? Shortcut::Mode::terminate : Shortcut::Mode::reverse;
            } else {
                throw ConfigError("shortcut must be none, terminate or reverse");
            }
        } else if (key == "shortcut_threshold" || key == "shortcut_group" || key == "shortcut_lower" ||
                   key == "shortcut_upper") {
            if (!cfg.plan.shortcut) cfg.plan.shortcut.emplace();
            auto& s = *cfg.plan.shortcut;
            if (key == "shortcut_threshold") s.threshold = parse_number<double>(key, value);
            if (key == "shortcut_group") s.group_size = parse_number<long>(key, value);
            if (key == "shortcut_lower") s.lower = parse_number<double>(key, value);
            if (key == "shortcut_upper") s.upper = parse_number<double>(key, value);
        } else {
            throw ConfigError("unknown setting '" + key + "'");
        }
    }
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_key_values(in);
}

/// Checks that do not need the target: seed present, counts sensible, plan valid.
inline void validate(const ExperimentConfig& cfg) {
    if (!cfg.seed) throw ConfigError("a seed is required");
    if (cfg.iterations < 1) throw ConfigError("iters must be at least 1");
    if (cfg.effective_burn_in() < 0 || cfg.effective_burn_in() >= cfg.iterations)
        throw ConfigError("burn_in must be smaller than iters");
    try {
        cfg.plan.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace hmc

#endif  // HMC_CONFIG_HPP
