#include "fwdsat/report.hpp"

#include "fwdsat/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fwdsat {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out = "t";
    for (std::size_t i = 1; i <= traj.n; ++i) out += ",x" + std::to_string(i);
    out += ",u,sampled";
    const std::size_t l = traj.disturbances.empty() ? 0 : traj.disturbances.front().dim();
    for (std::size_t i = 1; i <= l; ++i) out += ",d" + std::to_string(i);
    out += "\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out += format_double(traj.times[k]);
        for (std::size_t i = 0; i < traj.n; ++i)
            out += "," + format_double(traj.states[k][i]);
        out += "," + format_double(traj.inputs[k]);
        out += traj.sample_flags[k] ? ",1" : ",0";
        for (std::size_t i = 0; i < l; ++i)
            out += "," + format_double(traj.disturbances[k][i]);
        out += "\n";
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        cells.push_back(line.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return cells;
}

double parse_cell(const std::string& cell) {
    double v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ParseError("bad numeric cell '" + cell + "'");
    return v;
}

} // namespace

Trajectory trajectory_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("trajectory csv: empty file");
    const auto header = split_csv_line(line);
    std::size_t n = 0, l = 0;
    for (const std::string& h : header) {
        if (h.size() >= 2 && h[0] == 'x') ++n;
        if (h.size() >= 2 && h[0] == 'd' && h != "sampled") ++l;
    }
    if (header.empty() || header[0] != "t" || n == 0)
        throw ParseError("trajectory csv: unexpected header");
    Trajectory traj;
    traj.n = n;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 1 + n + 2 + l)
            throw ParseError("trajectory csv: wrong column count");
        traj.times.push_back(parse_cell(cells[0]));
        Vec x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = parse_cell(cells[1 + i]);
        traj.states.push_back(std::move(x));
        traj.inputs.push_back(parse_cell(cells[1 + n]));
        traj.sample_flags.push_back(cells[2 + n] == "1" ? 1 : 0);
        Vec d(l);
        for (std::size_t i = 0; i < l; ++i) d[i] = parse_cell(cells[3 + n + i]);
        traj.disturbances.push_back(std::move(d));
    }
    return traj;
}

std::string predictions_to_csv(const std::vector<PredictionSample>& preds) {
    std::string out = "tau_i,X1,X2,X3,x1_true_at_tau_i_plus_tau,"
                      "x2_true_at_tau_i_plus_tau,x3_true_at_tau_i_plus_tau\n";
    for (const PredictionSample& p : preds) {
        out += format_double(p.tau_i);
        for (std::size_t i = 0; i < 3; ++i) out += "," + format_double(p.X[i]);
        for (std::size_t i = 0; i < 3; ++i)
            out += p.x_true ? "," + format_double((*p.x_true)[i]) : ",";
        out += "\n";
    }
    return out;
}

namespace {

json mat_to_json(const Mat& M) {
    json rows = json::array();
    for (std::size_t i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat mat_from_json(const json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = j.at(0).size();
    Mat M(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k) M(i, k) = j.at(i).at(k).get<double>();
    return M;
}

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (std::size_t i = 0; i < v.dim(); ++i) arr.push_back(v[i]);
    return arr;
}

Vec vec_from_json(const json& j) {
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
    return v;
}

} // namespace

std::string gain_schedule_to_json(const GainSchedule& g) {
    json j;
    j["n"] = g.n;
    j["K0"] = g.K0;
    j["omega0"] = g.omega0;
    j["stages"] = json::array();
    for (const DesignStage& s : g.stages) {
        json js;
        js["i"] = s.index;
        js["P"] = mat_to_json(s.P);
        js["p"] = vec_to_json(s.p);
        js["c"] = vec_to_json(s.c); // derived; rechecked on load
        js["K"] = s.K;
        js["R"] = s.R;
        js["omega"] = s.omega;
        js["M"] = s.M;
        js["delta"] = s.delta;
        j["stages"].push_back(std::move(js));
    }
    return j.dump(2) + "\n";
}

GainSchedule gain_schedule_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("gain schedule json: ") + e.what());
    }
    try {
        GainSchedule g;
        g.n = j.at("n").get<std::size_t>();
        g.K0 = j.at("K0").get<double>();
        g.omega0 = j.at("omega0").get<double>();
        for (const json& js : j.at("stages")) {
            g.stages.push_back(DesignStage::make(
                js.at("i").get<std::size_t>(), mat_from_json(js.at("P")),
                vec_from_json(js.at("p")), js.at("K").get<double>(),
                js.at("R").get<double>(), js.at("omega").get<double>(),
                js.at("M").get<double>(), js.at("delta").get<double>()));
        }
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw ParseError(std::string("gain schedule json: ") + e.what());
    }
}

namespace {

json certificate_to_json(const Certificate& c) {
    json j;
    j["condition"] = c.condition;
    j["pass"] = c.pass;
    j["margin"] = c.margin;
    j["grid"] = {{"angular", c.grid.angular},
                 {"radial", c.grid.radial},
                 {"input", c.grid.input},
                 {"disturbance", c.grid.disturbance},
                 {"quasi_random", c.grid.quasi_random},
                 {"points", c.grid_points}};
    json wp;
    wp["x"] = vec_to_json(c.worst.x);
    wp["u"] = c.worst.u;
    if (c.worst.z) wp["z"] = *c.worst.z;
    wp["d"] = vec_to_json(c.worst.d);
    j["worst_point"] = std::move(wp);
    return j;
}

} // namespace

std::string certificates_to_json(const std::vector<Certificate>& certs) {
    json arr = json::array();
    for (const Certificate& c : certs) arr.push_back(certificate_to_json(c));
    return arr.dump(2) + "\n";
}

std::string stability_report_to_json(const StabilityReport& rep) {
    json j;
    j["trajectories"] = rep.trajectories;
    j["sup_norm"] = rep.sup_norm;
    j["lyapunov_ratio"] = rep.lyapunov_ratio;
    json ttb = json::array();
    for (const auto& [eps, t] : rep.time_to_ball) {
        json e;
        e["eps"] = eps;
        if (std::isfinite(t))
            e["time"] = t;
        else
            e["time"] = nullptr;
        ttb.push_back(std::move(e));
    }
    j["time_to_ball"] = std::move(ttb);
    if (rep.decay_rate_mu)
        j["decay_rate_mu"] = *rep.decay_rate_mu;
    else
        j["decay_rate_mu"] = nullptr;
    return j.dump(2) + "\n";
}

std::string masp_result_to_json(double masp, double r_hi, std::size_t combos) {
    json j;
    j["masp"] = masp;
    j["r_hi"] = r_hi;
    j["bank_combinations"] = combos;
    return j.dump(2) + "\n";
}

std::string delayed_report_to_json(const DelayedRunResult& run, double max_pred_err,
                                   std::size_t audited) {
    json j;
    j["ugas_initial"] = run.ugas_initial;
    j["ugas_final"] = run.ugas_final;
    j["ugas_ratio"] = run.ugas_initial > 0 ? run.ugas_final / run.ugas_initial : 0.0;
    j["prediction_samples"] = run.predictions.size();
    j["prediction_samples_audited"] = audited;
    j["max_prediction_error"] = max_pred_err;
    return j.dump(2) + "\n";
}

std::string error_record_to_json(const std::string& kind, const std::string& message,
                                 int exit_code) {
    json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit"] = exit_code;
    return j.dump(2) + "\n";
}

} // namespace fwdsat
