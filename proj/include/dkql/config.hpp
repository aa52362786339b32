#ifndef DKQL_CONFIG_HPP
#define DKQL_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dkql/features.hpp"
#include "dkql/io.hpp"

namespace dkql {

enum class Learner { ls, krr, dkrr, skrr, fixed };

inline std::string_view to_string(Learner l) {
    switch (l) {
        case Learner::ls: return "ls";
        case Learner::krr: return "krr";
        case Learner::dkrr: return "dkrr";
        case Learner::skrr: return "skrr";
        case Learner::fixed: return "fixed";
    }
    return "?";
}

inline Learner parse_learner(std::string_view s) {
    for (Learner l : {Learner::ls, Learner::krr, Learner::dkrr, Learner::skrr, Learner::fixed})
        if (s == to_string(l)) return l;
    throw InputError("unknown learner '" + std::string(s) + "' (expected ls, krr, dkrr, skrr or fixed)");
}

inline bool is_kernel_learner(Learner l) { return l == Learner::krr || l == Learner::dkrr || l == Learner::skrr; }

/// One experiment. Text form is `key = value` per line, `#` starts a
/// comment; lists are comma separated. An empty lambda/sigma list means
/// the default grid for the simulator.
struct ExperimentConfig {
    SimKind simulator = SimKind::sim1;
    Learner learner = Learner::krr;
    FeatureCase fcase = FeatureCase::MJ;
    std::size_t n_train = 2000;
    std::size_t n_eval = 1000;
    std::vector<std::size_t> m{1};
    std::vector<double> lambda;  ///< empty: lambda_grid(n_train, simulator)
    std::vector<double> sigma;   ///< empty: sigma_grid(sigma_lo, sigma_hi, sigma_count)
    double sigma_lo = 0.001;
    double sigma_hi = 1.0;
    std::size_t sigma_count = 20;
    std::size_t repeats = 20;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::vector<std::string> fixed;  ///< empty: every fixed policy of the simulator
    unsigned threads = 1;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Grid bounds used when the config leaves sigma_lo/sigma_hi unset.
inline std::pair<double, double> default_sigma_range(SimKind sim) {
    return sim == SimKind::sim1 ? std::pair{0.001, 1.0} : std::pair{0.01, 10.0};
}

inline ExperimentConfig default_config(SimKind sim) {
    ExperimentConfig c;
    c.simulator = sim;
    std::tie(c.sigma_lo, c.sigma_hi) = default_sigma_range(sim);
    return c;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(v);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!v.empty() && v.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parse_unsigned(const std::string& s, const std::string& key, int line) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || p != end)
        throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'", line);
    return v;
}

inline double parse_positive(const std::string& s, const std::string& key, int line) {
    double v = 0.0;
    try {
        v = parse_real(s);
    } catch (const InputError&) {
        throw ConfigError(key + ": expected a number, got '" + s + "'", line);
    }
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key + ": must be positive and finite, got '" + s + "'", line);
    return v;
}

inline std::string join_reals(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + format_real(v[k]);
    return out;
}

}  // namespace detail

/// Checks cross-field rules. `line_of` maps a key to the line that set it
/// (0 when the key came from defaults).
inline void validate(const ExperimentConfig& c, const std::map<std::string, int>& line_of = {}) {
    auto line = [&](const std::string& key) {
        const auto it = line_of.find(key);
        return it == line_of.end() ? 0 : it->second;
    };
    try {
        check_case(c.simulator, c.fcase);
    } catch (const InputError& e) {
        throw ConfigError(e.what(), line("case"));
    }
    if (c.n_train < 1) throw ConfigError("n_train must be at least 1", line("n_train"));
    if (c.n_eval < 1) throw ConfigError("n_eval must be at least 1", line("n_eval"));
    if (c.repeats < 1) throw ConfigError("repeats must be at least 1", line("repeats"));
    if (c.threads < 1) throw ConfigError("threads must be at least 1", line("threads"));
    if (c.out.empty()) throw ConfigError("out must name a directory", line("out"));
    if (c.m.empty()) throw ConfigError("m needs at least one value", line("m"));
    for (auto m : c.m) {
        if (m < 1) throw ConfigError("m must be at least 1", line("m"));
        if (m > c.n_train) throw ConfigError("m = " + std::to_string(m) + " exceeds n_train", line("m"));
    }
    for (double v : c.lambda)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("lambda values must be positive", line("lambda"));
    for (double v : c.sigma)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("sigma values must be positive", line("sigma"));
    if (!(c.sigma_lo > 0.0) || !(c.sigma_hi >= c.sigma_lo))
        throw ConfigError("need 0 < sigma_lo <= sigma_hi", line(line_of.count("sigma_hi") ? "sigma_hi" : "sigma_lo"));
    if (c.sigma_count < 1) throw ConfigError("sigma_count must be at least 1", line("sigma_count"));
    if (c.sigma_lo == c.sigma_hi && c.sigma_count != 1)
        throw ConfigError("sigma_lo == sigma_hi needs sigma_count = 1", line("sigma_count"));
    for (const auto& f : c.fixed) {
        try {
            if (c.simulator == SimKind::sim1)
                (void)FixedPolicy::sim1_sequence(f);
            else
                (void)FixedPolicy::sim2_dose(parse_real(f));
        } catch (const InputError& e) {
            throw ConfigError("fixed: '" + f + "': " + e.what(), line("fixed"));
        }
    }
}

/// Parses the text form and validates it. Unknown keys, duplicates and
/// malformed values are reported with their line number.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::map<std::string, int> line_of;
    std::map<std::string, std::pair<std::string, int>> entries;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string body = detail::trim(std::string_view(raw).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + body + "'", lineno);
        const std::string key = detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key before '='", lineno);
        if (entries.count(key)) throw ConfigError("duplicate key '" + key + "' (first set on line " +
                                                  std::to_string(entries[key].second) + ")", lineno);
        entries[key] = {value, lineno};
        line_of[key] = lineno;
    }

    // The simulator decides the defaults of the sigma range, so read it first.
    if (auto it = entries.find("simulator"); it != entries.end()) {
        try {
            c = default_config(parse_sim_kind(it->second.first));
        } catch (const InputError& e) {
            throw ConfigError(e.what(), it->second.second);
        }
    }

    for (const auto& [key, entry] : entries) {
        const auto& [v, ln] = entry;
        if (key == "simulator") continue;
        if (v.empty()) throw ConfigError(key + ": missing value", ln);
        try {
            if (key == "learner") {
                c.learner = parse_learner(v);
            } else if (key == "case") {
                c.fcase = parse_feature_case(v);
            } else if (key == "n_train") {
                c.n_train = detail::parse_unsigned<std::size_t>(v, key, ln);
            } else if (key == "n_eval") {
                c.n_eval = detail::parse_unsigned<std::size_t>(v, key, ln);
            } else if (key == "m") {
                c.m.clear();
                for (const auto& s : detail::split_list(v)) c.m.push_back(detail::parse_unsigned<std::size_t>(s, key, ln));
            } else if (key == "lambda" || key == "sigma") {
                auto& dst = key == "lambda" ? c.lambda : c.sigma;
                dst.clear();
                if (v != "auto")
                    for (const auto& s : detail::split_list(v)) dst.push_back(detail::parse_positive(s, key, ln));
            } else if (key == "sigma_lo") {
                c.sigma_lo = detail::parse_positive(v, key, ln);
            } else if (key == "sigma_hi") {
                c.sigma_hi = detail::parse_positive(v, key, ln);
            } else if (key == "sigma_count") {
                c.sigma_count = detail::parse_unsigned<std::size_t>(v, key, ln);
            } else if (key == "repeats") {
                c.repeats = detail::parse_unsigned<std::size_t>(v, key, ln);
            } else if (key == "seed") {
                c.seed = detail::parse_unsigned<std::uint64_t>(v, key, ln);
            } else if (key == "out") {
                c.out = v;
            } else if (key == "fixed") {
                c.fixed.clear();
                if (v != "all")
                    for (const auto& s : detail::split_list(v)) {
                        if (s.empty()) throw ConfigError("fixed: empty entry", ln);
                        c.fixed.push_back(s);
                    }
            } else if (key == "threads") {
                c.threads = detail::parse_unsigned<unsigned>(v, key, ln);
            } else {
                throw ConfigError("unknown key '" + key + "'", ln);
            }
        } catch (const InputError& e) {
            throw ConfigError(key + ": " + e.what(), ln);
        }
    }
    validate(c, line_of);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

/// Text form; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& c) {
    std::string out;
    auto kv = [&](const char* k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
    kv("simulator", std::string(to_string(c.simulator)));
    kv("learner", std::string(to_string(c.learner)));
    kv("case", std::string(to_string(c.fcase)));
    kv("n_train", std::to_string(c.n_train));
    kv("n_eval", std::to_string(c.n_eval));
    std::string ms;
    for (std::size_t k = 0; k < c.m.size(); ++k) ms += (k ? ", " : "") + std::to_string(c.m[k]);
    kv("m", ms);
    kv("lambda", c.lambda.empty() ? "auto" : detail::join_reals(c.lambda));
    kv("sigma", c.sigma.empty() ? "auto" : detail::join_reals(c.sigma));
    kv("sigma_lo", format_real(c.sigma_lo));
    kv("sigma_hi", format_real(c.sigma_hi));
    kv("sigma_count", std::to_string(c.sigma_count));
    kv("repeats", std::to_string(c.repeats));
    kv("seed", std::to_string(c.seed));
    kv("out", c.out);
    std::string fx;
    for (std::size_t k = 0; k < c.fixed.size(); ++k) fx += (k ? ", " : "") + c.fixed[k];
    kv("fixed", c.fixed.empty() ? "all" : fx);
    kv("threads", std::to_string(c.threads));
    return out;
}

/// Short stable digest of the config text (FNV-1a, hex), stored in reports.
inline std::string config_fingerprint(const ExperimentConfig& c) {
    const std::string text = emit_config(c);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dkql

#endif  // DKQL_CONFIG_HPP
