#include <fstream>
#include <sstream>

#include <json.hpp>

#include "costcal/cli.hpp"

namespace costcal::cli {

namespace {

using nlohmann::json;

double number(const json& section, const char* section_name, const char* key, double fallback, bool required) {
    const std::string field = std::string(section_name) + "." + key;
    if (!section.contains(key)) {
        if (required) throw Error(ErrorCode::InvalidConfig, "missing field " + field);
        return fallback;
    }
    const auto& v = section.at(key);
    if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, field + " must be a number");
    return v.get<double>();
}

const json* section(const json& root, const char* name) {
    if (!root.contains(name)) return nullptr;
    const auto& s = root.at(name);
    if (!s.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be an object");
    return &s;
}

}  // namespace

Config parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Io, std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw Error(ErrorCode::InvalidConfig, "config root must be an object");

    Config cfg;
    const json* m = section(root, "model");
    if (!m) throw Error(ErrorCode::InvalidConfig, "missing section model");
    cfg.model = {number(*m, "model", "gamma_drift", 0, true), number(*m, "model", "sigma", 0, true),
                 number(*m, "model", "delta", 0, true), number(*m, "model", "epsilon", 0, true)};

    if (const json* j = section(root, "jumps")) {
        if (j->contains("atoms")) {
            const auto& atoms = j->at("atoms");
            if (!atoms.is_array()) throw Error(ErrorCode::InvalidConfig, "jumps.atoms must be an array");
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                const std::string name = "jumps.atoms[" + std::to_string(i) + "]";
                if (!atoms[i].is_object()) throw Error(ErrorCode::InvalidConfig, name + " must be an object");
                cfg.jumps.atoms.push_back({number(atoms[i], name.c_str(), "rate", 0, true),
                                           number(atoms[i], name.c_str(), "factor", 0, true)});
            }
        }
    }
    if (const json* c = section(root, "costs"))
        cfg.costs = CostParams{number(*c, "costs", "lambda", 0, true), number(*c, "costs", "kappa", 0, true)};
    if (const json* t = section(root, "targets"))
        cfg.targets = PolicyTargets{number(*t, "targets", "x_hat", 0, true), number(*t, "targets", "x_star", 0, true)};
    if (const json* s = section(root, "sim")) {
        cfg.sim.dt = number(*s, "sim", "dt", cfg.sim.dt, false);
        cfg.sim.t_max = number(*s, "sim", "t_max", cfg.sim.t_max, false);
        cfg.sim.x0 = number(*s, "sim", "x0", cfg.sim.x0, false);
        if (s->contains("paths")) {
            if (!s->at("paths").is_number_integer()) throw Error(ErrorCode::InvalidConfig, "sim.paths must be an integer");
            cfg.sim.paths = s->at("paths").get<std::int64_t>();
        }
        if (s->contains("seed")) {
            if (!s->at("seed").is_number_unsigned()) throw Error(ErrorCode::InvalidConfig, "sim.seed must be a non-negative integer");
            cfg.sim.seed = s->at("seed").get<std::uint64_t>();
        }
        if (s->contains("threads")) {
            if (!s->at("threads").is_number_integer()) throw Error(ErrorCode::InvalidConfig, "sim.threads must be an integer");
            cfg.sim.threads = s->at("threads").get<int>();
        }
    }
    if (const json* p = section(root, "principal")) {
        auto& pp = cfg.principal;
        pp.delta_p = number(*p, "principal", "delta_p", pp.delta_p, false);
        pp.lambda_p = number(*p, "principal", "lambda_p", pp.lambda_p, false);
        pp.c_p = number(*p, "principal", "c_p", pp.c_p, false);
        pp.alpha_p = number(*p, "principal", "alpha_p", pp.alpha_p, false);
        pp.w0 = number(*p, "principal", "w0", pp.w0, false);
        pp.w1 = number(*p, "principal", "w1", pp.w1, false);
        pp.w2 = number(*p, "principal", "w2", pp.w2, false);
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::Io, "error reading config file '" + path + "'");
    try {
        return parse_config(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), e.detail() + " (in '" + path + "')");
    }
}

}  // namespace costcal::cli
