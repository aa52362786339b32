#ifndef DKQL_IO_HPP
#define DKQL_IO_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dkql/distributed.hpp"
#include "dkql/evaluation.hpp"
#include "dkql/policy.hpp"

namespace dkql {

/// %.17g: enough digits that parsing gives back the same double.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_real(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    // strtod rather than stod: stod throws on subnormal results.
    if (s.empty() || std::isspace(static_cast<unsigned char>(s.front()))) throw InputError("not a number: '" + s + "'");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(v)))
        throw InputError("not a number: '" + s + "'");
    return v;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) ensure_directory(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    auto out = open_for_write(path);
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// CSV

/// Comma-separated table with a header row. Cells are written verbatim, so
/// callers format reals with format_real.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<std::string> row) {
        if (row.size() != header_.size())
            throw InputError("csv row has " + std::to_string(row.size()) + " cells, header has " +
                             std::to_string(header_.size()));
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

    [[nodiscard]] std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (k) out += ',';
                out += cells[k];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    void save(const std::filesystem::path& path) const { write_file(path, str()); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Splits CSV text into rows of cells. No quoting: none of our files need it.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline CsvTable timing_table(const std::vector<WorkerStats>& stats) {
    CsvTable t({"stage", "worker", "fit_seconds", "predict_seconds", "entries_sent", "flops"});
    for (const auto& s : stats)
        t.add({std::to_string(s.stage), std::to_string(s.worker), format_real(s.fit_seconds),
               format_real(s.predict_seconds), format_real(s.entries_sent), format_real(s.flops)});
    return t;
}

/// One row per trial.
inline CsvTable report_table(const EvalReport& r) {
    std::vector<std::string> header{"trial"};
    header.insert(header.end(), r.metrics.begin(), r.metrics.end());
    CsvTable t(header);
    for (std::size_t i = 0; i < r.per_trial.size(); ++i) {
        std::vector<std::string> row{std::to_string(i)};
        for (double v : r.per_trial[i]) row.push_back(format_real(v));
        t.add(std::move(row));
    }
    return t;
}

inline nlohmann::json report_summary_json(const EvalReport& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["fingerprint"] = r.fingerprint;
    j["trials"] = r.per_trial.size();
    for (std::size_t k = 0; k < r.metrics.size(); ++k)
        j["metrics"][r.metrics[k]] = {{"mean", r.mean[k]}, {"std", r.stddev[k]}};
    return j;
}

inline void save_report(const EvalReport& r, const std::filesystem::path& csv_path,
                        const std::filesystem::path& json_path) {
    report_table(r).save(csv_path);
    write_file(json_path, report_summary_json(r).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Trajectories, one JSON object per line.
//
// {"id":7,"sim":"sim1","termination":"TimeLimit","real_stages":2,
//  "stages":[{"state":[...],"action":0,"code":1,"reward":0.5,"padded":false,"tau":0.31},...],
//  "terminal":[...]}
//
// sim1 state is [wellness, tumor size, time in years], sim2 state is
// [toxicity, tumor size]. tau is null where no survival draw was made.

namespace detail {

inline void append_array(std::string& out, const std::vector<double>& v) {
    out += '[';
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ',';
        out += std::isfinite(v[k]) ? format_real(v[k]) : std::string("null");
    }
    out += ']';
}

inline double json_real(const nlohmann::json& j) {
    if (j.is_null()) return kNaN;
    return j.get<double>();
}

}  // namespace detail

inline std::string trajectory_to_line(const Trajectory& tr) {
    std::string out = "{\"id\":" + std::to_string(tr.id) + ",\"sim\":\"" + std::string(to_string(tr.sim)) +
                      "\",\"termination\":\"" + std::string(to_string(tr.termination)) +
                      "\",\"real_stages\":" + std::to_string(tr.real_stages) + ",\"stages\":[";
    for (std::size_t s = 0; s < tr.stages.size(); ++s) {
        const auto& st = tr.stages[s];
        if (s) out += ',';
        out += "{\"state\":";
        detail::append_array(out, st.state);
        out += ",\"action\":" + std::to_string(st.action) + ",\"code\":" + format_real(st.action_code) +
               ",\"reward\":" + format_real(st.reward) + ",\"padded\":" + (st.padded ? "true" : "false") +
               ",\"tau\":" + (std::isfinite(st.tau) ? format_real(st.tau) : std::string("null")) + "}";
    }
    out += "],\"terminal\":";
    detail::append_array(out, tr.terminal_state);
    out += '}';
    return out;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory tr;
    tr.id = j.at("id").get<std::uint64_t>();
    tr.sim = parse_sim_kind(j.at("sim").get<std::string>());
    tr.termination = parse_termination(j.at("termination").get<std::string>());
    tr.real_stages = j.at("real_stages").get<int>();
    for (const auto& js : j.at("stages")) {
        StageRecord st;
        for (const auto& v : js.at("state")) st.state.push_back(detail::json_real(v));
        st.action = js.at("action").get<std::size_t>();
        st.action_code = js.at("code").get<double>();
        st.reward = js.at("reward").get<double>();
        st.padded = js.at("padded").get<bool>();
        st.tau = detail::json_real(js.at("tau"));
        tr.stages.push_back(std::move(st));
    }
    for (const auto& v : j.at("terminal")) tr.terminal_state.push_back(detail::json_real(v));
    return tr;
}

inline std::string trajectories_to_ndjson(std::span<const Trajectory> data) {
    std::string out;
    for (const auto& tr : data) {
        out += trajectory_to_line(tr);
        out += '\n';
    }
    return out;
}

inline std::vector<Trajectory> trajectories_from_ndjson(const std::string& text) {
    std::vector<Trajectory> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("trajectory line " + std::to_string(lineno) + ": " + e.what());
        } catch (const InputError& e) {
            throw IoError("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline void save_trajectories(std::span<const Trajectory> data, const std::filesystem::path& path) {
    write_file(path, trajectories_to_ndjson(data));
}

inline std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
    return trajectories_from_ndjson(read_file(path));
}

// ---------------------------------------------------------------------------
// Policies. Versioned JSON:
//
// {"format":"dkql-policy","version":1,"simulator":"sim1","case":"MJ","learner":"krr","horizon":3,
//  "stages":[{"stage":1,"actions":{"codes":[...],"labels":[...]},
//             "components":[[{"weight":1,"kind":"krr","sigma":..,"lambda":..,
//                             "support":[[...],...],"alphas":[...]}]]}, ...]}
//
// A linear component has "kind":"linear","slopes":[...],"intercept":x.
// nlohmann writes doubles in shortest round-trip form.

inline constexpr int kPolicyFormatVersion = 1;

inline nlohmann::json policy_to_json(const DtrPolicy& p) {
    using nlohmann::json;
    json j;
    j["format"] = "dkql-policy";
    j["version"] = kPolicyFormatVersion;
    j["simulator"] = std::string(to_string(p.problem().sim));
    j["case"] = std::string(to_string(p.feature_case()));
    j["learner"] = p.learner();
    j["horizon"] = p.horizon();
    json stages = json::array();
    for (const auto& sp : p.stages()) {
        json js;
        js["stage"] = sp.stage;
        js["actions"] = {{"codes", sp.actions.codes}, {"labels", sp.actions.labels}};
        json lists = json::array();
        for (const auto& list : sp.components) {
            json jl = json::array();
            for (const auto& wm : list) {
                json c;
                c["weight"] = wm.weight;
                if (const auto* km = std::get_if<KernelModel>(&wm.model)) {
                    c["kind"] = "krr";
                    c["sigma"] = km->params.sigma;
                    c["lambda"] = km->params.lambda;
                    json support = json::array();
                    for (Eigen::Index r = 0; r < km->support.rows(); ++r) {
                        std::vector<double> row(static_cast<std::size_t>(km->support.cols()));
                        for (Eigen::Index k = 0; k < km->support.cols(); ++k) row[static_cast<std::size_t>(k)] = km->support(r, k);
                        support.push_back(row);
                    }
                    c["support"] = std::move(support);
                    c["alphas"] = std::vector<double>(km->alphas.data(), km->alphas.data() + km->alphas.size());
                } else {
                    const auto& lm = std::get<LinearModel>(wm.model);
                    c["kind"] = "linear";
                    c["slopes"] = std::vector<double>(lm.slopes.data(), lm.slopes.data() + lm.slopes.size());
                    c["intercept"] = lm.intercept;
                }
                jl.push_back(std::move(c));
            }
            lists.push_back(std::move(jl));
        }
        js["components"] = std::move(lists);
        stages.push_back(std::move(js));
    }
    j["stages"] = std::move(stages);
    return j;
}

inline DtrPolicy policy_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "dkql-policy") throw IoError("not a dkql policy file");
        const int version = j.at("version").get<int>();
        if (version != kPolicyFormatVersion)
            throw IoError("unsupported policy format version " + std::to_string(version));
        const SimKind sim = parse_sim_kind(j.at("simulator").get<std::string>());
        const FeatureCase c = parse_feature_case(j.at("case").get<std::string>());
        DtrProblem problem = problem_for(sim);
        if (j.at("horizon").get<int>() != problem.horizon) throw IoError("policy horizon does not match the simulator");
        DtrPolicy p(problem, c, j.at("learner").get<std::string>());
        for (const auto& js : j.at("stages")) {
            StagePolicy sp;
            sp.stage = js.at("stage").get<int>();
            sp.actions.codes = js.at("actions").at("codes").get<std::vector<double>>();
            sp.actions.labels = js.at("actions").at("labels").get<std::vector<std::string>>();
            if (sp.stage < 1 || sp.stage > problem.horizon) throw IoError("policy stage out of range");
            if (sp.actions != problem.action_set(sp.stage))
                throw IoError("policy stage " + std::to_string(sp.stage) + " action set does not match the simulator");
            for (const auto& jl : js.at("components")) {
                std::vector<WeightedModel> list;
                for (const auto& jc : jl) {
                    WeightedModel wm;
                    wm.weight = jc.at("weight").get<double>();
                    const auto kind = jc.at("kind").get<std::string>();
                    if (kind == "krr") {
                        KernelModel km;
                        km.params = {jc.at("sigma").get<double>(), jc.at("lambda").get<double>()};
                        km.params.validate();
                        const auto rows = jc.at("support").get<std::vector<std::vector<double>>>();
                        const auto alphas = jc.at("alphas").get<std::vector<double>>();
                        if (rows.size() != alphas.size()) throw IoError("support and alphas differ in length");
                        const auto dim = rows.empty() ? 0 : rows.front().size();
                        km.support.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
                        for (std::size_t r = 0; r < rows.size(); ++r) {
                            if (rows[r].size() != dim) throw IoError("support points differ in dimension");
                            for (std::size_t k = 0; k < dim; ++k)
                                km.support(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
                        }
                        km.alphas = Eigen::Map<const Vector>(alphas.data(), static_cast<Eigen::Index>(alphas.size()));
                        wm.model = std::move(km);
                    } else if (kind == "linear") {
                        LinearModel lm;
                        const auto slopes = jc.at("slopes").get<std::vector<double>>();
                        lm.slopes = Eigen::Map<const Vector>(slopes.data(), static_cast<Eigen::Index>(slopes.size()));
                        lm.intercept = jc.at("intercept").get<double>();
                        wm.model = std::move(lm);
                    } else {
                        throw IoError("unknown model kind '" + kind + "'");
                    }
                    list.push_back(std::move(wm));
                }
                sp.components.push_back(std::move(list));
            }
            const std::size_t lists = is_joint(c) ? 1 : sp.actions.size();
            if (sp.components.size() != lists)
                throw IoError("policy stage " + std::to_string(sp.stage) + " needs " + std::to_string(lists) +
                              " component lists");
            for (const auto& list : sp.components)
                if (list.empty()) throw IoError("policy stage " + std::to_string(sp.stage) + " has an empty component list");
            p.set_stage(std::move(sp));
        }
        if (p.stages().size() != static_cast<std::size_t>(problem.horizon)) throw IoError("policy is missing stages");
        for (std::size_t k = 0; k < p.stages().size(); ++k)
            if (p.stages()[k].components.empty()) throw IoError("policy is missing stage " + std::to_string(k + 1));
        p.check_compatible(problem);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed policy: ") + e.what());
    } catch (const InputError& e) {
        throw IoError(std::string("invalid policy: ") + e.what());
    }
}

inline void save_policy(const DtrPolicy& p, const std::filesystem::path& path) {
    write_file(path, policy_to_json(p).dump() + "\n");
}

inline DtrPolicy load_policy(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return policy_from_json(j);
}

}  // namespace dkql

#endif  // DKQL_IO_HPP
