#include "cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "cloudheight/errors.hpp"

namespace cloudheight::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& into, const std::string& where)
{
    if (!j.contains(key))
        return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : fs::absolute(base / p); }

std::string divisor_name(SigmaDivisor d) { return d == SigmaDivisor::m ? "m" : "m_minus_3"; }

SigmaDivisor parse_divisor(const std::string& s)
{
    if (s == "m")
        return SigmaDivisor::m;
    if (s == "m_minus_3")
        return SigmaDivisor::m_minus_3;
    throw ConfigError("sigma_divisor: expected 'm' or 'm_minus_3', got '" + s + "'");
}

}  // namespace

RunConfig default_config()
{
    RunConfig cfg;
    for (const auto& cam : misr_camera_bank()) {
        if (cam.name == "An" || cam.name == "Af" || cam.name == "Aa")
            cfg.cameras.push_back({cam, fs::absolute(cam.name + ".csv")});
    }
    std::stable_partition(cfg.cameras.begin(), cfg.cameras.end(),
                          [](const CameraInput& c) { return c.spec.name == "An"; });
    return cfg;
}

RunConfig config_from_json(const json& j, const fs::path& base_dir)
{
    check_keys(j, "config",
               {"cameras", "pitch_m", "matern", "nugget", "sigma_divisor", "window", "stride", "grid", "mode",
                "tau_flat", "min_valid_fraction", "stabilization", "out", "seed", "workers", "simulate", "table1"});
    RunConfig cfg = default_config();
    const std::string top = "config";

    if (j.contains("cameras")) {
        const auto& cams = j.at("cameras");
        if (!cams.is_array() || cams.empty())
            throw ConfigError("config.cameras: expected a nonempty array");
        cfg.cameras.clear();
        const auto bank = misr_camera_bank();
        for (std::size_t i = 0; i < cams.size(); ++i) {
            const auto& c = cams[i];
            const std::string where = "config.cameras[" + std::to_string(i) + "]";
            check_keys(c, where, {"name", "theta_deg", "delay_s", "path"});
            CameraInput in;
            read(c, "name", in.spec.name, where);
            if (in.spec.name.empty())
                throw ConfigError(where + ": missing name");
            for (const auto& b : bank) {
                if (b.name == in.spec.name)
                    in.spec = b;
            }
            if (!c.contains("theta_deg") && in.spec.theta_deg == 0.0 && in.spec.name != "An")
                throw ConfigError(where + ": theta_deg required for non-MISR camera '" + in.spec.name + "'");
            read(c, "theta_deg", in.spec.theta_deg, where);
            read(c, "delay_s", in.spec.delay_s, where);
            std::string path = in.spec.name + ".csv";
            read(c, "path", path, where);
            in.path = resolve(path, base_dir);
            cfg.cameras.push_back(std::move(in));
        }
    } else {
        for (auto& c : cfg.cameras)
            c.path = resolve(c.path.filename(), base_dir);
    }

    read(j, "pitch_m", cfg.pitch, top);
    if (j.contains("matern")) {
        const auto& m = j.at("matern");
        check_keys(m, "config.matern", {"sigma", "rho", "nu"});
        read(m, "sigma", cfg.params.sigma, "config.matern");
        read(m, "rho", cfg.params.rho, "config.matern");
        read(m, "nu", cfg.params.nu, "config.matern");
    }
    read(j, "nugget", cfg.nugget, top);
    if (j.contains("sigma_divisor")) {
        std::string d;
        read(j, "sigma_divisor", d, top);
        cfg.divisor = parse_divisor(d);
    }
    if (j.contains("window")) {
        const auto& w = j.at("window");
        check_keys(w, "config.window", {"rows", "cols"});
        read(w, "rows", cfg.window.rows, "config.window");
        read(w, "cols", cfg.window.cols, "config.window");
    }
    read(j, "stride", cfg.stride, top);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, "config.grid", {"h_min", "h_max", "h_step", "v1", "v2"});
        read(g, "h_min", cfg.grid.h_min, "config.grid");
        read(g, "h_max", cfg.grid.h_max, "config.grid");
        read(g, "h_step", cfg.grid.h_step, "config.grid");
        read(g, "v1", cfg.grid.v1, "config.grid");
        read(g, "v2", cfg.grid.v2, "config.grid");
    }
    if (j.contains("mode")) {
        std::string mode;
        read(j, "mode", mode, top);
        cfg.mode = parse_mode(mode);
    }
    read(j, "tau_flat", cfg.tau_flat, top);
    read(j, "min_valid_fraction", cfg.min_valid_fraction, top);
    if (j.contains("stabilization")) {
        const auto& s = j.at("stabilization");
        check_keys(s, "config.stabilization", {"begin", "end", "reference"});
        if (s.contains("begin") || s.contains("end")) {
            ColumnRange r{0, 0};
            read(s, "begin", r.begin, "config.stabilization");
            if (!s.contains("end"))
                throw ConfigError("config.stabilization: 'end' is required with 'begin'");
            read(s, "end", r.end, "config.stabilization");
            cfg.stabilization.region = r;
        }
        read(s, "reference", cfg.stabilization.reference, "config.stabilization");
    }
    if (j.contains("out")) {
        std::string out;
        read(j, "out", out, top);
        cfg.out = resolve(out, base_dir);
    }
    read(j, "seed", cfg.seed, top);
    read(j, "workers", cfg.workers, top);
    if (j.contains("simulate")) {
        const auto& s = j.at("simulate");
        const std::string where = "config.simulate";
        check_keys(s, where, {"rows", "cols", "h", "v1", "v2", "format"});
        read(s, "rows", cfg.simulate.rows, where);
        read(s, "cols", cfg.simulate.cols, where);
        read(s, "h", cfg.simulate.truth.h, where);
        read(s, "v1", cfg.simulate.truth.v1, where);
        read(s, "v2", cfg.simulate.truth.v2, where);
        read(s, "format", cfg.simulate.format, where);
    }
    if (j.contains("table1")) {
        const auto& t = j.at("table1");
        check_keys(t, "config.table1", {"reps", "methods"});
        read(t, "reps", cfg.table1.reps, "config.table1");
        if (t.contains("methods")) {
            std::vector<std::string> names;
            read(t, "methods", names, "config.table1");
            cfg.table1.methods.clear();
            for (const auto& n : names)
                cfg.table1.methods.push_back(parse_method(n));
        }
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": byte " + std::to_string(e.byte) + ": malformed JSON");
    }
    if (j.is_object() && j.value("kind", "") == kManifestKind) {
        if (!j.contains("config"))
            throw ConfigError(path.string() + ": manifest without a config section");
        return config_from_json(j.at("config"), fs::absolute(path).parent_path());
    }
    return config_from_json(j, fs::absolute(path).parent_path());
}

json config_to_json(const RunConfig& cfg)
{
    json cams = json::array();
    for (const auto& c : cfg.cameras)
        cams.push_back({{"name", c.spec.name},
                        {"theta_deg", c.spec.theta_deg},
                        {"delay_s", c.spec.delay_s},
                        {"path", c.path.string()}});
    json stab = json::object();
    if (cfg.stabilization.region) {
        stab["begin"] = cfg.stabilization.region->begin;
        stab["end"] = cfg.stabilization.region->end;
    }
    stab["reference"] = cfg.stabilization.reference;
    json methods = json::array();
    for (const auto m : cfg.table1.methods)
        methods.push_back(std::string(to_string(m)));
    return {
        {"cameras", cams},
        {"pitch_m", cfg.pitch},
        {"matern", {{"sigma", cfg.params.sigma}, {"rho", cfg.params.rho}, {"nu", cfg.params.nu}}},
        {"nugget", cfg.nugget},
        {"sigma_divisor", divisor_name(cfg.divisor)},
        {"window", {{"rows", cfg.window.rows}, {"cols", cfg.window.cols}}},
        {"stride", cfg.stride},
        {"grid",
         {{"h_min", cfg.grid.h_min},
          {"h_max", cfg.grid.h_max},
          {"h_step", cfg.grid.h_step},
          {"v1", cfg.grid.v1},
          {"v2", cfg.grid.v2}}},
        {"mode", std::string(to_string(cfg.mode))},
        {"tau_flat", cfg.tau_flat},
        {"min_valid_fraction", cfg.min_valid_fraction},
        {"stabilization", stab},
        {"out", fs::absolute(cfg.out).string()},
        {"seed", cfg.seed},
        {"workers", cfg.workers},
        {"simulate",
         {{"rows", cfg.simulate.rows},
          {"cols", cfg.simulate.cols},
          {"h", cfg.simulate.truth.h},
          {"v1", cfg.simulate.truth.v1},
          {"v2", cfg.simulate.truth.v2},
          {"format", cfg.simulate.format}}},
        {"table1", {{"reps", cfg.table1.reps}, {"methods", methods}}},
    };
}

void validate(const RunConfig& cfg)
{
    if (cfg.cameras.empty())
        throw ConfigError("at least one camera is required");
    std::set<std::string> names;
    for (const auto& c : cfg.cameras) {
        if (!names.insert(c.spec.name).second)
            throw ConfigError("duplicate camera '" + c.spec.name + "'");
    }
    try {
        validate(estimator_config(cfg));
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    validate(cfg.grid);
    if (cfg.window.rows < 1 || cfg.window.cols < 1 || cfg.window.rows * cfg.window.cols <= 3)
        throw ConfigError("window must hold more than 3 pixels");
    if (cfg.stride < 1)
        throw ConfigError("stride must be at least 1");
    if (!(cfg.min_valid_fraction >= 0.0 && cfg.min_valid_fraction <= 1.0))
        throw ConfigError("min_valid_fraction must lie in [0, 1]");
    if (!(cfg.tau_flat >= 0.0))
        throw ConfigError("tau_flat must be nonnegative");
    if (!cfg.stabilization.reference.empty() && !names.count(cfg.stabilization.reference))
        throw ConfigError("stabilization reference '" + cfg.stabilization.reference + "' is not a configured camera");
    if (cfg.stabilization.region && cfg.stabilization.region->begin >= cfg.stabilization.region->end)
        throw ConfigError("stabilization region must have begin < end");
    if (cfg.workers < 1)
        throw ConfigError("workers must be at least 1");
    if (cfg.simulate.format != "csv" && cfg.simulate.format != "pgm")
        throw ConfigError("simulate.format must be 'csv' or 'pgm'");
    validate(scene_config(cfg));
    if (cfg.table1.reps < 1)
        throw ConfigError("table1.reps must be at least 1");
    if (cfg.table1.methods.empty())
        throw ConfigError("table1.methods must name at least one method");
}

EstimatorConfig estimator_config(const RunConfig& cfg)
{
    EstimatorConfig out;
    for (const auto& c : cfg.cameras)
        out.cameras.push_back(c.spec);
    out.pitch = cfg.pitch;
    out.params = cfg.params;
    out.nugget = cfg.nugget;
    out.divisor = cfg.divisor;
    out.mode = cfg.mode;
    out.tau_flat = cfg.tau_flat;
    out.min_valid_fraction = cfg.min_valid_fraction;
    out.workers = cfg.workers;
    return out;
}

SceneConfig scene_config(const RunConfig& cfg)
{
    SceneConfig out;
    for (const auto& c : cfg.cameras)
        out.cameras.push_back(c.spec);
    out.rows = cfg.simulate.rows;
    out.cols = cfg.simulate.cols;
    out.pitch = cfg.pitch;
    out.truth = cfg.simulate.truth;
    out.params = cfg.params;
    out.nugget = cfg.nugget;
    return out;
}

}  // namespace cloudheight::cli
