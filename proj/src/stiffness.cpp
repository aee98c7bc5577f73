#include "rdt/stiffness.hpp"

#include <cmath>
#include <sstream>

#include "rdt/errors.hpp"
#include "rdt/experiment_log.hpp"

namespace rdt {

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0)) {
        throw NonPositiveInput(std::string(name) + " must be > 0");
    }
}

// Compliance of one fluid column per unit phase fraction:
// 2*L_cyl/(A_cyl*E) + L_hose/(A_hose*E).
double unit_fluid_compliance(const FluidProperties& props, double modulus) {
    return 2.0 * props.length_cylinder_m / (props.area_cylinder_m2 * modulus) +
           props.length_hose_m / (props.area_hose_m2 * modulus);
}

double fluid_stiffness_at_fraction(const FluidProperties& props, double modulus,
                                   double fraction) {
    if (fraction == 0.0) {
        throw ZeroFraction("fluid phase fraction is zero; stiffness is unbounded");
    }
    return 1.0 / (fraction * unit_fluid_compliance(props, modulus));
}

}  // namespace

void FluidProperties::validate() const {
    require_positive(bulk_modulus_water_pa, "bulk_modulus_water");
    require_positive(bulk_modulus_air_pa, "bulk_modulus_air");
    require_positive(area_cylinder_m2, "area_cylinder");
    require_positive(area_hose_m2, "area_hose");
    require_positive(length_cylinder_m, "length_cylinder");
    require_positive(length_hose_m, "length_hose");
    if (fraction_water < 0.0 || fraction_air < 0.0) {
        throw NonPositiveInput("phase fractions must be >= 0");
    }
    if (std::abs(fraction_water + fraction_air - 1.0) > 1e-9) {
        throw Error("fraction_water + fraction_air must equal 1");
    }
}

void TransmissionConfig::validate() const {
    require_positive(pressure_max_pa, "pressure_max");
    require_positive(radius_piston_m, "radius_piston");
    require_positive(radius_capstan_m, "radius_capstan");
    require_positive(cable_modulus_pa, "cable_modulus");
    require_positive(cable_area_m2, "cable_area");
    require_positive(cable_free_length_m, "cable_free_length");
    require_positive(stiffness_core_n_per_m, "stiffness_core");
    require_positive(stiffness_diaphragm_n_per_m, "stiffness_diaphragm");
    fluid.validate();
}

double fluid_stiffness(const FluidProperties& props, FluidPhase phase) {
    props.validate();
    const bool water = phase == FluidPhase::Water;
    const double modulus = water ? props.bulk_modulus_water_pa : props.bulk_modulus_air_pa;
    const double fraction = water ? props.fraction_water : props.fraction_air;
    return fluid_stiffness_at_fraction(props, modulus, fraction);
}

double cable_stiffness(double modulus_pa, double area_m2, double length_m) {
    require_positive(modulus_pa, "cable modulus");
    require_positive(area_m2, "cable area");
    require_positive(length_m, "cable length");
    return modulus_pa * area_m2 / length_m;
}

StiffnessBreakdown compose_stiffness(double k_water, double k_air, double k_cable,
                                     double k_core, double k_diaphragm,
                                     CompositionMode mode, double radius_capstan_m) {
    for (double k : {k_water, k_air, k_cable, k_core, k_diaphragm}) {
        if (!(k > 0.0)) {
            throw ZeroStiffnessComponent("stiffness components must be > 0");
        }
    }
    require_positive(radius_capstan_m, "radius_capstan");

    StiffnessBreakdown out;
    out.k_water = k_water;
    out.k_air = k_air;
    out.k_cable = k_cable;
    out.k_core = k_core;
    out.k_diaphragm = k_diaphragm;

    const double core_term = mode == CompositionMode::CoreSeries
                                 ? 2.0 / k_core
                                 : 1.0 / (2.0 * k_core);
    const double terms[5] = {1.0 / k_cable, core_term, 2.0 / k_diaphragm, 1.0 / k_water,
                             1.0 / k_air};
    const char* names[5] = {"cable", "core", "diaphragm", "water", "air"};

    double compliance = 0.0;
    for (double term : terms) {
        compliance += term;
    }
    out.k_total_linear = 1.0 / compliance;
    out.k_total_rotational = out.k_total_linear * radius_capstan_m * radius_capstan_m;
    for (int i = 0; i < 5; ++i) {
        out.compliance_share[names[i]] = terms[i] / compliance;
    }
    return out;
}

StiffnessBreakdown total_stiffness(const TransmissionConfig& config) {
    config.validate();
    const double k_water = fluid_stiffness(config.fluid, FluidPhase::Water);
    const double k_air = fluid_stiffness(config.fluid, FluidPhase::Air);
    const double k_cable = cable_stiffness(config.cable_modulus_pa, config.cable_area_m2,
                                           config.cable_free_length_m);
    return compose_stiffness(k_water, k_air, k_cable, config.stiffness_core_n_per_m,
                             config.stiffness_diaphragm_n_per_m, config.composition_mode,
                             config.radius_capstan_m);
}

std::vector<std::pair<double, double>> air_fraction_sweep(
    const TransmissionConfig& config, const std::vector<double>& fractions) {
    config.validate();
    const double k_water = fluid_stiffness(config.fluid, FluidPhase::Water);
    const double k_cable = cable_stiffness(config.cable_modulus_pa, config.cable_area_m2,
                                           config.cable_free_length_m);
    std::vector<std::pair<double, double>> curve;
    curve.reserve(fractions.size());
    for (double fraction : fractions) {
        if (!(fraction > 0.0) || fraction > 1.0) {
            throw Error("sweep fractions must lie in (0, 1]");
        }
        const double k_air = fluid_stiffness_at_fraction(
            config.fluid, config.fluid.bulk_modulus_air_pa, fraction);
        const StiffnessBreakdown b = compose_stiffness(
            k_water, k_air, k_cable, config.stiffness_core_n_per_m,
            config.stiffness_diaphragm_n_per_m, config.composition_mode,
            config.radius_capstan_m);
        curve.emplace_back(fraction, b.k_total_linear);
    }
    return curve;
}

double max_force(double pressure_max_pa, double radius_piston_m) {
    require_positive(pressure_max_pa, "pressure_max");
    require_positive(radius_piston_m, "radius_piston");
    const double pi = 3.14159265358979323846;
    return pressure_max_pa / 2.0 * (pi * radius_piston_m * radius_piston_m);
}

double max_torque(double force_n, double radius_capstan_m) {
    if (force_n < 0.0 || radius_capstan_m < 0.0) {
        throw NonPositiveInput("force and radius must be >= 0");
    }
    return force_n * radius_capstan_m;
}

double moment_balance_residual(const CableTensionSet& tensions) {
    if (tensions.tension_left_n < 0.0 || tensions.tension_right_n < 0.0) {
        throw NonPositiveInput("cable tensions must be >= 0");
    }
    return moment_balance_residual(tensions.tension_left_n, tensions.arm_left_m,
                                   tensions.arm_left_m, tensions.tension_right_n,
                                   tensions.arm_right_m, tensions.arm_right_m);
}

double moment_balance_residual(double tension_left, double arm_left_depart,
                               double arm_left_terminate, double tension_right,
                               double arm_right_depart, double arm_right_terminate) {
    return tension_left * arm_left_depart - tension_left * arm_left_terminate +
           tension_right * arm_right_depart - tension_right * arm_right_terminate;
}

std::string breakdown_csv(const StiffnessBreakdown& breakdown) {
    std::ostringstream out;
    out << "component,stiffness_N_per_m,compliance_share\n";
    const std::pair<const char*, double> rows[] = {
        {"water", breakdown.k_water},         {"air", breakdown.k_air},
        {"cable", breakdown.k_cable},         {"core", breakdown.k_core},
        {"diaphragm", breakdown.k_diaphragm},
    };
    for (const auto& [name, stiffness] : rows) {
        out << name << ',' << format_double(stiffness) << ','
            << format_double(breakdown.compliance_share.at(name)) << '\n';
    }
    out << "total_linear," << format_double(breakdown.k_total_linear) << ",1\n";
    out << "total_rotational_Nm_per_rad," << format_double(breakdown.k_total_rotational)
        << ",\n";
    return out.str();
}

}  // namespace rdt
