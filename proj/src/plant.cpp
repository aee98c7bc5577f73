#include "rdt/plant.hpp"

#include <algorithm>
#include <cmath>

#include "rdt/errors.hpp"

namespace rdt {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kMaxDt = 0.010;

// Quasi-static line model: the preload regulator holds the air side, the
// water side follows it shifted by the injected volume.
void equalize_line(FluidLineState& line, const PlantConfig& config) {
    line.air_preload_kpa = line.regulator_setpoint_kpa;
    line.water_pressure_kpa = std::max(
        0.0, line.regulator_setpoint_kpa +
                 config.pressure_per_ml_kpa * line.water_volume_offset_ml);
}

void check_dt(double dt) {
    if (!(dt > 0.0)) {
        throw NonPositiveDt("dt must be > 0");
    }
    if (dt > kMaxDt) {
        throw Error("dt exceeds the 10 ms integration limit");
    }
}

}  // namespace

void SecondOrderModel::validate() const {
    if (!(inertia > 0.0)) {
        throw NonPositiveInput("model inertia must be > 0");
    }
    if (damping < 0.0 || stiffness < 0.0) {
        throw NonPositiveInput("model damping and stiffness must be >= 0");
    }
}

void PlantConfig::validate() const {
    model.validate();
    if (coulomb_torque < 0.0 || stiction_band < 0.0) {
        throw NonPositiveInput("friction parameters must be >= 0");
    }
    if (!(load_inertia > 0.0)) {
        throw NonPositiveInput("load inertia must be > 0");
    }
    if (!(phase_constant_deg_per_ml > 0.0)) {
        throw NonPositiveInput("phase constant must be > 0");
    }
    if (!(encoder_counts_per_rev > 0.0)) {
        throw NonPositiveInput("encoder resolution must be > 0");
    }
    if (!(intake.flow_factor > 0.0) || !(outlet.flow_factor > 0.0)) {
        throw NonPositiveInput("valve flow factors must be > 0");
    }
    if (intake.latency_s < 0.0 || outlet.latency_s < 0.0) {
        throw NonPositiveInput("valve latency must be >= 0");
    }
    check_dt(dt);
}

double phase_offset_deg(const PlantState& state, const PlantConfig& config) {
    return state.line.water_volume_offset_ml * config.phase_constant_deg_per_ml;
}

double spring_torque(const PlantState& state, const PlantConfig& config) {
    const double phi_rad = phase_offset_deg(state, config) * kPi / 180.0;
    return config.model.stiffness * (state.theta_in - state.theta_out - phi_rad);
}

PlantState step(const PlantState& state, const PlantConfig& config, double input_torque,
                bool output_clamped, double dt) {
    check_dt(dt);
    PlantState next = state;
    equalize_line(next.line, config);

    const double transmitted = spring_torque(next, config);
    const double net_in =
        input_torque - config.model.damping * next.omega_in - transmitted;
    shaft_step(next.theta_in, next.omega_in, config.model.inertia, net_in,
               config.coulomb_torque, config.stiction_band, dt);

    if (output_clamped) {
        next.omega_out = 0.0;
    } else {
        const double net_out = transmitted - config.load_damping * next.omega_out;
        shaft_step(next.theta_out, next.omega_out, config.load_inertia, net_out, 0.0,
                   config.stiction_band, dt);
    }

    next.time_s += dt;
    return next;
}

double valve_flow(const ValveSpec& valve, double delta_p_kpa) {
    if (delta_p_kpa < 0.0) {
        throw NegativePressureDrop("pressure drop must be oriented by the caller");
    }
    if (valve.state != ValveState::Open) {
        return 0.0;
    }
    return valve.flow_factor * std::sqrt(delta_p_kpa);
}

PlantState apply_valve(const PlantState& state, const PlantConfig& config, ValvePort which,
                       double duration_s) {
    if (duration_s < 0.0) {
        throw NonPositiveInput("valve duration must be >= 0");
    }
    PlantState next = state;
    equalize_line(next.line, config);

    ValveSpec valve = which == ValvePort::Intake ? config.intake : config.outlet;
    valve.state = ValveState::Open;
    const double latency = std::min(valve.latency_s, duration_s);
    const double flow_time = duration_s - latency;

    auto delta_p = [&](const FluidLineState& line) {
        return which == ValvePort::Intake
                   ? std::abs(line.supply_pressure_kpa - line.water_pressure_kpa)
                   : std::abs(line.water_pressure_kpa);
    };

    // Shaft dynamics keep running while the valve acts; the shafts track the
    // moving spring equilibrium instead of snapping to it afterwards.
    double waiting = latency;
    while (waiting > 0.0) {
        const double h = std::min(config.dt, waiting);
        next = step(next, config, 0.0, false, h);
        waiting -= h;
    }

    const double frozen_dp = delta_p(next.line);
    double remaining = flow_time;
    while (remaining > 0.0) {
        const double h = std::min(config.dt, remaining);
        const double dp = config.constant_delta_p ? frozen_dp : delta_p(next.line);
        const double q = valve_flow(valve, dp);  // mL/s
        const double moved = q * h;
        next.line.water_volume_offset_ml +=
            which == ValvePort::Intake ? moved : -moved;
        equalize_line(next.line, config);
        next = step(next, config, 0.0, false, h);
        remaining -= h;
    }
    return next;
}

double volume_for_phase(double delta_phi_deg, double phase_constant_deg_per_ml) {
    if (!(phase_constant_deg_per_ml > 0.0)) {
        throw NonPositiveInput("phase constant must be > 0");
    }
    return std::abs(delta_phi_deg) / phase_constant_deg_per_ml;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double gaussian(std::uint64_t seed) {
    // Box-Muller on two splitmix64 draws; fully deterministic across platforms.
    const std::uint64_t u1 = mix_seed(seed, 0x51ed2701);
    const std::uint64_t u2 = mix_seed(seed, 0xc0ffee42);
    const double a = (static_cast<double>(u1 >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
    const double b = static_cast<double>(u2 >> 11) * 0x1.0p-53;          // [0,1)
    return std::sqrt(-2.0 * std::log(a)) * std::cos(kTwoPi * b);
}

SensorFrame read_sensors(const PlantState& state, const PlantConfig& config,
                         double applied_torque, std::uint64_t noise_seed) {
    SensorFrame frame;
    const double counts = config.encoder_counts_per_rev;
    frame.encoder_in =
        static_cast<long long>(std::floor(state.theta_in / kTwoPi * counts));
    frame.encoder_out =
        static_cast<long long>(std::floor(state.theta_out / kTwoPi * counts));

    const double sigma = config.torque_noise_sigma;
    frame.torque_in = applied_torque + sigma * gaussian(mix_seed(noise_seed, 1));
    frame.torque_out =
        spring_torque(state, config) + sigma * gaussian(mix_seed(noise_seed, 2));

    const double quantum = config.pressure_quantum_kpa;
    frame.pressure_readout_kpa =
        quantum > 0.0
            ? std::round(state.line.water_pressure_kpa / quantum) * quantum
            : state.line.water_pressure_kpa;
    return frame;
}

PlantState set_regulator(const PlantState& state, const PlantConfig& config,
                         double setpoint_kpa) {
    PlantState next = state;
    next.line.regulator_setpoint_kpa =
        std::clamp(setpoint_kpa, 0.0, config.regulator_max_kpa);
    equalize_line(next.line, config);
    return next;
}

}  // namespace rdt
