#include "adaptsafe/scenario_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace adaptsafe {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (auto k : allowed) known = known || item.key() == k;
        if (!known) throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
    }
}

Vec vector_from(const json& j, const std::string& where)
{
    if (!j.is_array()) throw std::invalid_argument(where + ": expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw std::invalid_argument(where + ": expected numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Mat matrix_from(const json& j, const std::string& where)
{
    if (!j.is_array() || j.empty()) throw std::invalid_argument(where + ": expected an array of rows");
    const Vec first = vector_from(j[0], where);
    Mat m(static_cast<Eigen::Index>(j.size()), first.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vec row = vector_from(j[i], where);
        if (row.size() != m.cols()) throw std::invalid_argument(where + ": ragged matrix");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

template <int R, int C>
Eigen::Matrix<double, R, C> fixed_matrix_from(const json& j, const std::string& where)
{
    const Mat m = matrix_from(j, where);
    if (m.rows() != R || m.cols() != C)
        throw std::invalid_argument(where + ": expected " + std::to_string(R) + "x" + std::to_string(C));
    return m;
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector_from(const json& j, const std::string& where)
{
    const Vec v = vector_from(j, where);
    if (v.size() != N) throw std::invalid_argument(where + ": expected " + std::to_string(N) + " entries");
    return v;
}

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Mat& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
    return rows;
}

template <typename T>
T number(const json& j, const std::string& where)
{
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw std::invalid_argument(where + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw std::invalid_argument(where + ": expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (j.get<long long>() < 0) throw std::invalid_argument(where + ": expected a non-negative integer");
        }
    } else {
        if (!j.is_number()) throw std::invalid_argument(where + ": expected a number");
    }
    return j.get<T>();
}

PropagationMode propagation_from(const json& j)
{
    const auto name = j.get<std::string>();
    if (name == "information") return PropagationMode::Information;
    if (name == "ode") return PropagationMode::Ode;
    throw std::invalid_argument("estimator.propagation: expected 'information' or 'ode'");
}

} // namespace

ScenarioConfig scenario_from_json(std::string_view text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario: malformed JSON: ") + e.what());
    }
    reject_unknown(root,
                   {"mode", "duration", "dt", "log_stride", "control_divisor", "seed", "noise_on", "plant", "prior",
                    "filter", "stack_capacity", "estimator", "initial_state"},
                   "scenario");

    ScenarioConfig cfg;
    try {
        if (root.contains("mode")) cfg.mode = scenario_mode_from_string(root["mode"].get<std::string>());
        if (root.contains("duration")) cfg.duration = number<double>(root["duration"], "duration");
        if (root.contains("dt")) cfg.dt = number<double>(root["dt"], "dt");
        if (root.contains("log_stride")) cfg.log_stride = number<int>(root["log_stride"], "log_stride");
        if (root.contains("control_divisor"))
            cfg.control_divisor = number<int>(root["control_divisor"], "control_divisor");
        if (root.contains("seed")) cfg.seed = number<std::uint64_t>(root["seed"], "seed");
        if (root.contains("noise_on")) cfg.noise_on = number<bool>(root["noise_on"], "noise_on");
        if (root.contains("stack_capacity"))
            cfg.stack_capacity = number<std::size_t>(root["stack_capacity"], "stack_capacity");
        if (root.contains("initial_state") && !root["initial_state"].is_null())
            cfg.initial_state = fixed_vector_from<4>(root["initial_state"], "initial_state");

        if (root.contains("plant")) {
            const json& p = root["plant"];
            reject_unknown(p, {"theta_true", "obstacles", "mu", "noise_cov", "tracking_gains"}, "plant");
            if (p.contains("theta_true")) cfg.plant.theta_true = fixed_vector_from<2>(p["theta_true"], "plant.theta_true");
            if (p.contains("mu")) cfg.plant.mu = number<double>(p["mu"], "plant.mu");
            if (p.contains("noise_cov")) cfg.plant.noise_cov = fixed_matrix_from<4, 4>(p["noise_cov"], "plant.noise_cov");
            if (p.contains("obstacles")) {
                if (!p["obstacles"].is_array()) throw std::invalid_argument("plant.obstacles: expected an array");
                cfg.plant.obstacles.clear();
                for (const auto& o : p["obstacles"]) {
                    reject_unknown(o, {"center", "radius"}, "plant.obstacles[]");
                    plant::ObstacleSpec spec;
                    spec.center = fixed_vector_from<2>(o.at("center"), "plant.obstacles[].center");
                    spec.radius = number<double>(o.at("radius"), "plant.obstacles[].radius");
                    cfg.plant.obstacles.push_back(spec);
                }
            }
            if (p.contains("tracking_gains")) {
                const json& g = p["tracking_gains"];
                reject_unknown(g, {"kp", "kd"}, "plant.tracking_gains");
                if (g.contains("kp")) cfg.plant.kp = fixed_matrix_from<2, 2>(g["kp"], "plant.tracking_gains.kp");
                if (g.contains("kd")) cfg.plant.kd = fixed_matrix_from<2, 2>(g["kd"], "plant.tracking_gains.kd");
            }
        }
        if (root.contains("prior")) {
            const json& p = root["prior"];
            reject_unknown(p, {"theta_bar0", "sigma0"}, "prior");
            if (p.contains("theta_bar0")) cfg.prior.theta_bar0 = vector_from(p["theta_bar0"], "prior.theta_bar0");
            if (p.contains("sigma0")) cfg.prior.sigma0 = matrix_from(p["sigma0"], "prior.sigma0");
        }
        if (root.contains("filter")) {
            const json& f = root["filter"];
            reject_unknown(f, {"alpha_gain", "delta", "c_delta"}, "filter");
            if (f.contains("alpha_gain")) cfg.filter.alpha_gain = number<double>(f["alpha_gain"], "filter.alpha_gain");
            if (f.contains("delta")) {
                cfg.filter.delta = number<double>(f["delta"], "filter.delta");
                cfg.filter.c_delta = confidence_quantile(cfg.filter.delta);
            }
            if (f.contains("c_delta")) cfg.filter.c_delta = number<double>(f["c_delta"], "filter.c_delta");
        }
        if (root.contains("estimator")) {
            const json& e = root["estimator"];
            reject_unknown(e, {"propagation", "fe_threshold", "record_margin", "record_stride"}, "estimator");
            if (e.contains("propagation")) cfg.estimator.propagation = propagation_from(e["propagation"]);
            if (e.contains("fe_threshold"))
                cfg.estimator.fe_threshold = number<double>(e["fe_threshold"], "estimator.fe_threshold");
            if (e.contains("record_margin"))
                cfg.estimator.record_margin = number<double>(e["record_margin"], "estimator.record_margin");
            if (e.contains("record_stride"))
                cfg.estimator.record_stride = number<int>(e["record_stride"], "estimator.record_stride");
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg)
{
    json obstacles = json::array();
    for (const auto& o : cfg.plant.obstacles)
        obstacles.push_back({{"center", to_json(Vec(o.center))}, {"radius", o.radius}});
    json root = {
        {"mode", to_string(cfg.mode)},
        {"duration", cfg.duration},
        {"dt", cfg.dt},
        {"log_stride", cfg.log_stride},
        {"control_divisor", cfg.control_divisor},
        {"seed", cfg.seed},
        {"noise_on", cfg.noise_on},
        {"stack_capacity", cfg.stack_capacity},
        {"plant",
         {{"theta_true", to_json(Vec(cfg.plant.theta_true))},
          {"obstacles", obstacles},
          {"mu", cfg.plant.mu},
          {"noise_cov", to_json(Mat(cfg.plant.noise_cov))},
          {"tracking_gains", {{"kp", to_json(Mat(cfg.plant.kp))}, {"kd", to_json(Mat(cfg.plant.kd))}}}}},
        {"prior", {{"theta_bar0", to_json(cfg.prior.theta_bar0)}, {"sigma0", to_json(cfg.prior.sigma0)}}},
        {"filter", {{"alpha_gain", cfg.filter.alpha_gain}, {"delta", cfg.filter.delta}, {"c_delta", cfg.filter.c_delta}}},
        {"estimator",
         {{"propagation", cfg.estimator.propagation == PropagationMode::Ode ? "ode" : "information"},
          {"fe_threshold", cfg.estimator.fe_threshold},
          {"record_margin", cfg.estimator.record_margin},
          {"record_stride", cfg.estimator.record_stride}}},
    };
    root["initial_state"] = cfg.initial_state ? to_json(Vec(*cfg.initial_state)) : json(nullptr);
    return root.dump(2);
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return scenario_from_json(buf.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

std::string metrics_to_json(const RunLog& log)
{
    const Metrics& m = log.metrics;
    json j = {
        {"mode", to_string(log.mode)},
        {"seed", log.seed},
        {"min_h", m.min_h},
        {"rms_tracking_error", m.rms_tracking_error},
        {"final_param_error", m.final_param_error},
        {"containment_violations", m.containment_violations},
        {"infeasible_steps", m.infeasible_steps},
        {"safety_certificate", m.safety_certificate},
    };
    j["time_to_fe"] = m.time_to_fe ? json(*m.time_to_fe) : json(nullptr);
    return j.dump(2);
}

namespace {

class CsvFile {
public:
    explicit CsvFile(const std::filesystem::path& path) : path_(path), out_(path)
    {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    std::ostream& stream() { return out_; }
    void close()
    {
        out_.close();
        if (!out_) throw std::runtime_error("failed writing " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

void put(std::ostream& os, const Eigen::Ref<const Mat>& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << format_number(m(i, j));
}

void indexed_header(std::ostream& os, const std::string& name, Eigen::Index n)
{
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << name << '_' << i + 1;
}

void matrix_header(std::ostream& os, const std::string& name, Eigen::Index n)
{
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) os << ',' << name << '_' << i + 1 << j + 1;
}

} // namespace

void export_run(const RunLog& log, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    const auto p = log.param_dim;
    const auto k = static_cast<Eigen::Index>(log.obstacle_count);

    CsvFile traj(dir / "trajectory.csv");
    auto& ts = traj.stream();
    ts << "t,q_1,q_2,qdot_1,qdot_2,qd_1,qd_2,u_1,u_2,k0_1,k0_2\n";
    for (const auto& r : log.records) {
        ts << format_number(r.t);
        put(ts, r.x);
        put(ts, r.q_desired);
        put(ts, r.u);
        put(ts, r.k0);
        ts << '\n';
    }
    traj.close();

    CsvFile params(dir / "params.csv");
    auto& ps = params.stream();
    ps << 't';
    indexed_header(ps, "theta_hat", p);
    matrix_header(ps, "gamma", p);
    ps << ",lambda_min,fe_satisfied,contains_truth\n";
    for (const auto& r : log.records) {
        ps << format_number(r.t);
        put(ps, r.theta_hat);
        put(ps, r.gamma);
        ps << ',' << format_number(r.lambda_min) << ',' << int(r.fe_satisfied) << ',' << int(r.contains_truth)
           << '\n';
    }
    params.close();

    CsvFile sets(dir / "sets.csv");
    auto& ss = sets.stream();
    ss << 't';
    indexed_header(ss, "center", p);
    matrix_header(ss, "generator", p);
    indexed_header(ss, "mean", p);
    matrix_header(ss, "cov", p);
    ss << '\n';
    for (const auto& r : log.records) {
        ss << format_number(r.t);
        put(ss, r.theta_hat);
        put(ss, r.gamma);
        put(ss, r.theta_hat);
        put(ss, r.covariance);
        ss << '\n';
    }
    sets.close();

    CsvFile filter(dir / "filter.csv");
    auto& fs = filter.stream();
    fs << "t,mode";
    indexed_header(fs, "h", k);
    indexed_header(fs, "slack", k);
    fs << ",du_norm,active_set,feasible\n";
    for (const auto& r : log.records) {
        fs << format_number(r.t) << ',' << to_string(log.mode);
        for (double h : r.h) fs << ',' << format_number(h);
        for (Eigen::Index i = 0; i < k; ++i) {
            // Unfiltered runs have no rows; their slack columns stay empty.
            fs << ',';
            if (static_cast<std::size_t>(i) < r.slack.size()) fs << format_number(r.slack[i]);
        }
        fs << ',' << format_number((r.u - r.k0).norm()) << ',';
        for (std::size_t i = 0; i < r.active_set.size(); ++i) fs << (i ? ";" : "") << r.active_set[i] + 1;
        fs << ',' << int(r.feasible) << '\n';
    }
    filter.close();

    CsvFile stack(dir / "stack.csv");
    write_stack_csv(stack.stream(), log.final_stack, plant::kStateDim, p);
    stack.close();

    std::ofstream metrics(dir / "metrics.json");
    metrics << metrics_to_json(log) << '\n';
    if (!metrics) throw std::runtime_error("failed writing " + (dir / "metrics.json").string());
}

void export_comparison(const ComparisonReport& report, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    CsvFile file(dir / "comparison.csv");
    auto& os = file.stream();
    os << "label,mode,min_h,rms_tracking_error,final_param_error,time_to_fe,containment_violations,"
          "infeasible_steps,safety_certificate\n";
    for (const auto& row : report.rows) {
        const Metrics& m = row.metrics;
        os << row.label << ',' << to_string(row.mode) << ',' << format_number(m.min_h) << ','
           << format_number(m.rms_tracking_error) << ',' << format_number(m.final_param_error) << ','
           << (m.time_to_fe ? format_number(*m.time_to_fe) : "") << ',' << m.containment_violations << ','
           << m.infeasible_steps << ',' << int(m.safety_certificate) << '\n';
    }
    file.close();
}

} // namespace adaptsafe
