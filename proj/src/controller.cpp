#include "rdt/controller.hpp"

#include <cmath>
#include <sstream>

namespace rdt {

namespace {

OperationMode make_mode(Mode mode, double preload) {
    return OperationMode{mode, preload};
}

}  // namespace

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::Depressurized: return "depressurized";
        case Mode::Bleeding: return "bleeding";
        case Mode::Hibernating: return "hibernating";
        case Mode::Pressurizing: return "pressurizing";
        case Mode::Phasing: return "phasing";
        case Mode::Operating: return "operating";
        case Mode::Depressurizing: return "depressurizing";
    }
    return "?";
}

const char* command_name(Command command) {
    switch (command) {
        case Command::Bleed: return "bleed";
        case Command::Hibernate: return "hibernate";
        case Command::Pressurize: return "pressurize";
        case Command::Phase: return "phase";
        case Command::Operate: return "operate";
        case Command::Depressurize: return "depressurize";
        case Command::Shutdown: return "shutdown";
    }
    return "?";
}

bool is_transitory(Mode mode) {
    switch (mode) {
        case Mode::Bleeding:
        case Mode::Pressurizing:
        case Mode::Phasing:
        case Mode::Depressurizing:
            return true;
        default:
            return false;
    }
}

OperationMode transition(const OperationMode& current, Command command,
                         const PlantConfig& config) {
    const auto illegal = [&]() -> OperationMode {
        std::ostringstream msg;
        msg << "no transition for command '" << command_name(command) << "' in mode '"
            << mode_name(current.mode) << "'";
        throw IllegalTransition(msg.str());
    };

    if (is_transitory(current.mode)) {
        return illegal();  // busy; transitory modes only auto-advance
    }

    switch (current.mode) {
        case Mode::Depressurized:
            switch (command) {
                case Command::Bleed:
                    return make_mode(Mode::Bleeding, config.hibernate_preload_kpa);
                case Command::Pressurize:
                    return make_mode(Mode::Pressurizing, config.operating_preload_kpa);
                case Command::Shutdown:
                    return current;
                default:
                    return illegal();
            }
        case Mode::Hibernating:
            switch (command) {
                case Command::Bleed:
                    return make_mode(Mode::Bleeding, config.hibernate_preload_kpa);
                case Command::Pressurize:
                case Command::Operate:  // full startup chain
                    return make_mode(Mode::Pressurizing, config.operating_preload_kpa);
                case Command::Depressurize:
                    return make_mode(Mode::Depressurizing, 0.0);
                case Command::Shutdown:
                    return current;
                default:
                    return illegal();
            }
        case Mode::Operating:
            switch (command) {
                case Command::Hibernate:
                    return make_mode(Mode::Hibernating, config.hibernate_preload_kpa);
                case Command::Phase:  // re-phase during operation
                    return make_mode(Mode::Phasing, config.operating_preload_kpa);
                case Command::Depressurize:
                    return make_mode(Mode::Depressurizing, 0.0);
                default:
                    return illegal();
            }
        default:
            return illegal();
    }
}

OperationMode on_complete(const OperationMode& current, const PlantConfig& config) {
    switch (current.mode) {
        case Mode::Bleeding:
            return make_mode(Mode::Hibernating, config.hibernate_preload_kpa);
        case Mode::Pressurizing:
            return make_mode(Mode::Phasing, current.target_preload_kpa);
        case Mode::Phasing:
            // The only way into Operating.
            return make_mode(Mode::Operating, current.target_preload_kpa);
        case Mode::Depressurizing:
            return make_mode(Mode::Depressurized, 0.0);
        default:
            throw IllegalTransition(std::string("mode '") + mode_name(current.mode) +
                                    "' has no completion step");
    }
}

double measure_phase_offset_deg(const PlantState& state, const PlantConfig& config) {
    const SensorFrame frame = read_sensors(state, config, 0.0, 0);
    const double deg_per_count = 360.0 / config.encoder_counts_per_rev;
    return static_cast<double>(frame.encoder_out - frame.encoder_in) * deg_per_count;
}

PhasePlan plan_correction(double delta_phi_deg, const ValveSpec& valve, double delta_p_kpa,
                          double phase_constant_deg_per_ml) {
    if (!(delta_p_kpa > 0.0)) {
        throw ZeroPressureDrop("valve planning needs a positive pressure drop");
    }
    if (!(valve.flow_factor > 0.0)) {
        throw NonPositiveInput("valve flow factor must be > 0");
    }
    PhasePlan plan;
    plan.measured_offset_deg = delta_phi_deg;
    plan.valve = delta_phi_deg > 0.0 ? ValvePort::Intake : ValvePort::Outlet;
    plan.predicted_volume_ml = volume_for_phase(delta_phi_deg, phase_constant_deg_per_ml);
    plan.open_time_s = std::abs(delta_phi_deg) /
                       (phase_constant_deg_per_ml * valve.flow_factor *
                        std::sqrt(delta_p_kpa));
    plan.predicted_residual_deg = 0.0;  // exact model inversion
    return plan;
}

PhasingResult run_phasing(const PlantState& state, const PlantConfig& config,
                          const PhasingConfig& phasing) {
    PhasingResult result;
    result.state = state;

    const auto settle = [&](PlantState s) {
        const int steps = static_cast<int>(std::ceil(phasing.settle_time_s / config.dt));
        for (int i = 0; i < steps; ++i) {
            s = step(s, config, 0.0, false, config.dt);
        }
        return s;
    };

    for (int iteration = 0; iteration < phasing.max_iterations; ++iteration) {
        result.state = settle(result.state);
        const double dphi = measure_phase_offset_deg(result.state, config);
        if (std::abs(dphi) <= phasing.tolerance_deg) {
            result.iterations = iteration;
            return result;
        }

        const bool wants_water = dphi > 0.0;
        const SensorFrame frame = read_sensors(result.state, config, 0.0, 0);
        double intake_dp = phasing.injection_pressure_kpa - frame.pressure_readout_kpa;

        // Fine regime (or an intake that cannot flow): bring the line to just
        // below the injection pressure so the intake dP is the fine value,
        // then plan from the pressure sensor rather than the commanded value.
        if (std::abs(dphi) <= phasing.fine_threshold_deg ||
            (wants_water && intake_dp < phasing.fine_delta_p_kpa)) {
            result.state = set_regulator(
                result.state, config,
                phasing.injection_pressure_kpa - phasing.fine_delta_p_kpa);
            intake_dp = phasing.injection_pressure_kpa -
                        read_sensors(result.state, config, 0.0, 0).pressure_readout_kpa;
        }

        const double outlet_dp =
            read_sensors(result.state, config, 0.0, 0).pressure_readout_kpa;
        const ValveSpec& belief =
            wants_water ? phasing.intake_belief.value_or(config.intake)
                        : phasing.outlet_belief.value_or(config.outlet);
        const double dp_belief = wants_water ? intake_dp : outlet_dp;

        PhasePlan plan =
            plan_correction(dphi, belief, dp_belief, config.phase_constant_deg_per_ml);
        result.state = apply_valve(result.state, config, plan.valve,
                                   plan.open_time_s + belief.latency_s);
        result.corrections.push_back(plan);
    }

    result.state = settle(result.state);
    const double residual = measure_phase_offset_deg(result.state, config);
    if (std::abs(residual) <= phasing.tolerance_deg) {
        result.iterations = phasing.max_iterations;
        return result;
    }
    std::ostringstream msg;
    msg << "phasing did not converge: residual " << residual << " deg after "
        << phasing.max_iterations << " corrections";
    throw DidNotConverge(msg.str(), result.corrections);
}

PlantState bleed(const PlantState& state, const PlantConfig& config, int cycles) {
    if (cycles < 1) {
        throw Error("bleed requires at least one cycle");
    }
    PlantState next = state;
    for (int i = 0; i < cycles; ++i) {
        next.line.air_fraction =
            std::max(config.bleed_floor, next.line.air_fraction * config.bleed_factor);
    }
    return next;
}

}  // namespace rdt
