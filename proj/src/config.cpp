#include "rdt/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rdt/errors.hpp"

namespace rdt {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

using Setter = std::function<void(Config&, const std::string&)>;

double to_number(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double parsed = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' has a non-numeric value '" + value + "'");
    }
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        const auto num = [&t](const char* key, double* (*field)(Config&)) {
            t[key] = [key, field](Config& c, const std::string& v) {
                *field(c) = to_number(v, key);
            };
        };
        // transmission geometry and materials
        num("pressure_max_pa", [](Config& c) { return &c.transmission.pressure_max_pa; });
        num("radius_piston_m", [](Config& c) { return &c.transmission.radius_piston_m; });
        num("radius_capstan_m", [](Config& c) { return &c.transmission.radius_capstan_m; });
        num("cable_modulus_pa", [](Config& c) { return &c.transmission.cable_modulus_pa; });
        num("cable_area_m2", [](Config& c) { return &c.transmission.cable_area_m2; });
        num("cable_free_length_m",
            [](Config& c) { return &c.transmission.cable_free_length_m; });
        num("stiffness_core_n_per_m",
            [](Config& c) { return &c.transmission.stiffness_core_n_per_m; });
        num("stiffness_diaphragm_n_per_m",
            [](Config& c) { return &c.transmission.stiffness_diaphragm_n_per_m; });
        // fluid line
        num("bulk_modulus_water_pa",
            [](Config& c) { return &c.transmission.fluid.bulk_modulus_water_pa; });
        num("bulk_modulus_air_pa",
            [](Config& c) { return &c.transmission.fluid.bulk_modulus_air_pa; });
        num("area_cylinder_m2",
            [](Config& c) { return &c.transmission.fluid.area_cylinder_m2; });
        num("area_hose_m2", [](Config& c) { return &c.transmission.fluid.area_hose_m2; });
        num("length_cylinder_m",
            [](Config& c) { return &c.transmission.fluid.length_cylinder_m; });
        num("length_hose_m", [](Config& c) { return &c.transmission.fluid.length_hose_m; });
        num("fraction_water", [](Config& c) { return &c.transmission.fluid.fraction_water; });
        num("fraction_air", [](Config& c) { return &c.transmission.fluid.fraction_air; });
        // plant dynamics
        num("inertia_kgm2", [](Config& c) { return &c.plant.model.inertia; });
        num("damping_nms_per_rad", [](Config& c) { return &c.plant.model.damping; });
        num("stiffness_nm_per_rad", [](Config& c) { return &c.plant.model.stiffness; });
        num("coulomb_torque_nm", [](Config& c) { return &c.plant.coulomb_torque; });
        num("stiction_band_rad_per_s", [](Config& c) { return &c.plant.stiction_band; });
        num("load_inertia_kgm2", [](Config& c) { return &c.plant.load_inertia; });
        num("load_damping_nms_per_rad", [](Config& c) { return &c.plant.load_damping; });
        num("phase_constant_deg_per_ml",
            [](Config& c) { return &c.plant.phase_constant_deg_per_ml; });
        num("encoder_counts_per_rev",
            [](Config& c) { return &c.plant.encoder_counts_per_rev; });
        num("torque_noise_sigma_nm", [](Config& c) { return &c.plant.torque_noise_sigma; });
        num("pressure_quantum_kpa", [](Config& c) { return &c.plant.pressure_quantum_kpa; });
        num("dt_s", [](Config& c) { return &c.plant.dt; });
        // valves and line pressures
        num("intake_flow_factor", [](Config& c) { return &c.plant.intake.flow_factor; });
        num("intake_latency_s", [](Config& c) { return &c.plant.intake.latency_s; });
        num("outlet_flow_factor", [](Config& c) { return &c.plant.outlet.flow_factor; });
        num("outlet_latency_s", [](Config& c) { return &c.plant.outlet.latency_s; });
        num("supply_pressure_kpa", [](Config& c) { return &c.plant.supply_pressure_kpa; });
        num("regulator_max_kpa", [](Config& c) { return &c.plant.regulator_max_kpa; });
        num("operating_preload_kpa",
            [](Config& c) { return &c.plant.operating_preload_kpa; });
        num("hibernate_preload_kpa",
            [](Config& c) { return &c.plant.hibernate_preload_kpa; });
        num("pressure_per_ml_kpa", [](Config& c) { return &c.plant.pressure_per_ml_kpa; });
        num("initial_air_fraction", [](Config& c) { return &c.plant.initial_air_fraction; });
        num("bleed_factor", [](Config& c) { return &c.plant.bleed_factor; });
        num("bleed_floor", [](Config& c) { return &c.plant.bleed_floor; });
        // phasing
        num("phasing_tolerance_deg", [](Config& c) { return &c.phasing.tolerance_deg; });
        num("phasing_fine_delta_p_kpa",
            [](Config& c) { return &c.phasing.fine_delta_p_kpa; });
        num("phasing_injection_pressure_kpa",
            [](Config& c) { return &c.phasing.injection_pressure_kpa; });
        num("phasing_fine_threshold_deg",
            [](Config& c) { return &c.phasing.fine_threshold_deg; });
        num("phasing_settle_time_s", [](Config& c) { return &c.phasing.settle_time_s; });

        t["phasing_max_iterations"] = [](Config& c, const std::string& v) {
            c.phasing.max_iterations =
                static_cast<int>(to_number(v, "phasing_max_iterations"));
        };
        t["bleed_cycles"] = [](Config& c, const std::string& v) {
            c.bleed_cycles = static_cast<int>(to_number(v, "bleed_cycles"));
        };
        t["constant_delta_p"] = [](Config& c, const std::string& v) {
            if (v == "true" || v == "1") {
                c.plant.constant_delta_p = true;
            } else if (v == "false" || v == "0") {
                c.plant.constant_delta_p = false;
            } else {
                throw ConfigError("constant_delta_p must be true/false");
            }
        };
        t["composition_mode"] = [](Config& c, const std::string& v) {
            if (v == "core_series") {
                c.transmission.composition_mode = CompositionMode::CoreSeries;
            } else if (v == "core_parallel") {
                c.transmission.composition_mode = CompositionMode::CoreParallel;
            } else {
                throw ConfigError("composition_mode must be core_series or core_parallel");
            }
        };
        return t;
    }();
    return table;
}

}  // namespace

void Config::validate() const {
    transmission.validate();
    plant.validate();
    if (!(phasing.tolerance_deg > 0.0) || !(phasing.fine_delta_p_kpa > 0.0)) {
        throw ConfigError("phasing tolerance and fine dP must be > 0");
    }
    if (phasing.max_iterations < 1) {
        throw ConfigError("phasing_max_iterations must be >= 1");
    }
    if (bleed_cycles < 1) {
        throw ConfigError("bleed_cycles must be >= 1");
    }
}

Config parse_config(std::istream& in, const std::string& origin) {
    Config config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) {
            line = line.substr(0, comment);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        }
        it->second(config, value);
    }
    config.validate();
    return config;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    return parse_config(in, path);
}

}  // namespace rdt
