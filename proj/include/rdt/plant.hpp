#pragma once

#include <cmath>
#include <cstdint>

namespace rdt {

// Rotational mass-spring-damper coefficients: J*theta'' + B*theta' + K*theta = tau.
struct SecondOrderModel {
    double inertia = 5.20e-5;   // kg*m^2
    double damping = 0.0021;    // N*m*s/rad
    double stiffness = 18.71;   // N*m/rad

    void validate() const;
};

enum class ValveState { Closed, Open };

struct ValveSpec {
    double flow_factor = 0.215;  // mL/(s*sqrt(kPa)); default makes a 0.4 deg fine correction take ~50 ms
    double latency_s = 0.005;    // solenoid response time
    ValveState state = ValveState::Closed;
};

struct FluidLineState {
    double water_pressure_kpa = 0.0;
    double air_preload_kpa = 0.0;
    double water_volume_offset_ml = 0.0;  // signed, relative to perfectly phased
    double supply_pressure_kpa = 700.0;   // pump side
    double regulator_setpoint_kpa = 0.0;  // electronic regulator, 0..860
    double air_fraction = 0.0064;         // undissolved air left after assembly
};

struct PlantState {
    double theta_in = 0.0;   // rad
    double theta_out = 0.0;  // rad
    double omega_in = 0.0;   // rad/s
    double omega_out = 0.0;  // rad/s
    FluidLineState line;
    double time_s = 0.0;
};

struct PlantConfig {
    SecondOrderModel model;             // input shaft inertia/damping, transmission spring
    double coulomb_torque = 0.0136;     // N*m, static friction signature is twice this
    double stiction_band = 1e-4;        // rad/s, velocity threshold for the stick state
    double load_inertia = 5.20e-5;      // output shaft side (bare far actuator by default)
    double load_damping = 0.0021;
    double phase_constant_deg_per_ml = 9.594;
    double encoder_counts_per_rev = 8000.0;
    double torque_noise_sigma = 0.002;  // N*m
    double pressure_quantum_kpa = 1.0;
    ValveSpec intake;
    ValveSpec outlet;
    double supply_pressure_kpa = 700.0;
    double regulator_max_kpa = 860.0;
    double operating_preload_kpa = 600.0;
    double hibernate_preload_kpa = 100.0;
    double pressure_per_ml_kpa = 2.0;  // line pressure shift per mL of injected volume
    bool constant_delta_p = false;     // freeze valve dP at its initial value (textbook mode)
    double dt = 1e-3;                  // default integration step; stable for dt*wn < 2
    double bleed_factor = 0.5;         // air fraction multiplier per bleed cycle
    double bleed_floor = 2e-4;         // residual undissolved air after a full bleed
    double initial_air_fraction = 0.0064;

    void validate() const;
};

struct SensorFrame {
    long long encoder_in = 0;   // counts, floor(theta / resolution)
    long long encoder_out = 0;
    double torque_in = 0.0;     // N*m, noise added
    double torque_out = 0.0;
    double pressure_readout_kpa = 0.0;  // quantized
};

enum class ValvePort { Intake, Outlet };

// One semi-implicit Euler update of a single shaft. Coulomb friction opposes
// motion; inside the stiction band the shaft sticks unless the net torque
// exceeds the friction level. A friction-caused velocity reversal within the
// step also sticks, otherwise the discrete system chatters around zero.
inline void shaft_step(double& theta, double& omega, double inertia, double net_torque,
                       double coulomb, double band, double dt) {
    double applied = net_torque;
    if (coulomb > 0.0) {
        if (std::abs(omega) <= band) {
            if (std::abs(applied) <= coulomb) {
                omega = 0.0;
                applied = 0.0;
            } else {
                applied -= std::copysign(coulomb, applied);
            }
        } else {
            const double kinetic = applied - std::copysign(coulomb, omega);
            const double tentative = omega + dt * kinetic / inertia;
            if (tentative * omega < 0.0 && std::abs(applied) <= coulomb) {
                omega = 0.0;
                applied = 0.0;
            } else {
                applied = kinetic;
            }
        }
    }
    omega += dt * applied / inertia;
    theta += dt * omega;
}

// Phase offset is a derived quantity: volume * phase constant, never stored.
double phase_offset_deg(const PlantState& state, const PlantConfig& config);

// Spring torque transmitted to the output shaft: K*(theta_in - theta_out - phi).
double spring_torque(const PlantState& state, const PlantConfig& config);

// Advance shaft dynamics one step. With output_clamped the output shaft is
// held and the transmission spring reacts against the clamp.
PlantState step(const PlantState& state, const PlantConfig& config, double input_torque,
                bool output_clamped, double dt);

// Q = Kv * sqrt(dP) when open, 0 when closed.
double valve_flow(const ValveSpec& valve, double delta_p_kpa);

// Open one valve for `duration` seconds (flow starts after the valve latency)
// and integrate the moved volume into the line state. Intake adds volume with
// dP = supply - water; outlet drains against the depressurized reservoir.
PlantState apply_valve(const PlantState& state, const PlantConfig& config, ValvePort which,
                       double duration_s);

// V = |dphi| / phase_constant, in mL.
double volume_for_phase(double delta_phi_deg, double phase_constant_deg_per_ml);

SensorFrame read_sensors(const PlantState& state, const PlantConfig& config,
                         double applied_torque, std::uint64_t noise_seed);

// Command the preload regulator (clamped to [0, max]) and equalize the line
// quasi-statically.
PlantState set_regulator(const PlantState& state, const PlantConfig& config,
                         double setpoint_kpa);

// splitmix64: tiny deterministic seed mixer for sensor noise streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Deterministic standard normal from a seed (Box-Muller on splitmix64 output).
double gaussian(std::uint64_t seed);

}  // namespace rdt
