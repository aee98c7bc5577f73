#include <doctest.h>

#include <cmath>
#include <vector>

#include "rdt/errors.hpp"
#include "rdt/plant.hpp"

using namespace rdt;

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

// Closed-form underdamped step response, the independent oracle for the
// integrator.
double step_response(double inertia, double damping, double stiffness, double torque,
                     double t) {
    const double wn = std::sqrt(stiffness / inertia);
    const double zeta = damping / (2.0 * std::sqrt(inertia * stiffness));
    REQUIRE(zeta < 1.0);
    const double wd = wn * std::sqrt(1.0 - zeta * zeta);
    const double ss = torque / stiffness;
    return ss * (1.0 - std::exp(-zeta * wn * t) *
                           (std::cos(wd * t) +
                            zeta / std::sqrt(1.0 - zeta * zeta) * std::sin(wd * t)));
}

PlantConfig quiet_config() {
    PlantConfig config;
    config.coulomb_torque = 0.0;
    config.torque_noise_sigma = 0.0;
    return config;
}

}  // namespace

TEST_CASE("equilibrium state stays put") {
    const PlantConfig config = quiet_config();
    PlantState state;
    const PlantState next = step(state, config, 0.0, false, 1e-3);
    CHECK(next.theta_in == 0.0);
    CHECK(next.theta_out == 0.0);
    CHECK(next.omega_in == 0.0);
    CHECK(next.omega_out == 0.0);
    CHECK(next.time_s == doctest::Approx(1e-3));
}

TEST_CASE("dt preconditions") {
    const PlantConfig config = quiet_config();
    PlantState state;
    CHECK_THROWS_AS(step(state, config, 0.0, false, 0.0), NonPositiveDt);
    CHECK_THROWS_AS(step(state, config, 0.0, false, -1e-3), NonPositiveDt);
    CHECK_THROWS_AS(step(state, config, 0.0, false, 0.02), Error);
}

TEST_CASE("clamped steady state is torque over stiffness") {
    const PlantConfig config = quiet_config();  // fitted coefficients by default
    PlantState state;
    for (int i = 0; i < 4000; ++i) {
        state = step(state, config, 0.1, true, 1e-3);
    }
    const double expected = 0.1 / config.model.stiffness;  // 5.345e-3
    CHECK(std::abs(state.theta_in - expected) / expected < 0.01);
    CHECK(state.theta_out == 0.0);
}

TEST_CASE("step response tracks the closed-form solution") {
    // dt*wn must be small for the first-order scheme; the acceptance suite
    // pins the same configuration.
    PlantConfig config = quiet_config();
    config.model.inertia = 0.1871;
    config.model.damping = 2.2452;
    config.model.stiffness = 18.71;
    const double dt = 1e-3;
    const double torque = 1.0;
    const double ss = torque / config.model.stiffness;

    PlantState state;
    double worst = 0.0;
    for (int k = 0; k < 3000; ++k) {
        state = step(state, config, torque, true, dt);
        const double exact = step_response(config.model.inertia, config.model.damping,
                                           config.model.stiffness, torque,
                                           (k + 1) * dt);
        worst = std::max(worst, std::abs(state.theta_in - exact) / ss);
    }
    CHECK(worst < 0.01);
}

TEST_CASE("step response oracle also holds for the fitted coefficients at fine dt") {
    PlantConfig config = quiet_config();
    const double dt = 5e-6;
    const double torque = 0.1;
    const double ss = torque / config.model.stiffness;
    PlantState state;
    double worst = 0.0;
    for (int k = 0; k < 60000; ++k) {
        state = step(state, config, torque, true, dt);
        const double exact = step_response(config.model.inertia, config.model.damping,
                                           config.model.stiffness, torque,
                                           (k + 1) * dt);
        worst = std::max(worst, std::abs(state.theta_in - exact) / ss);
    }
    CHECK(worst < 0.01);
}

TEST_CASE("undamped frictionless motion conserves energy") {
    PlantConfig config = quiet_config();
    config.model.inertia = 1.0;
    config.model.damping = 0.0;
    config.model.stiffness = 1.0;
    PlantState state;
    state.theta_in = 1.0;
    const double e0 = 0.5 * config.model.stiffness;  // all potential
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        state = step(state, config, 0.0, true, 1e-3);
        const double e = 0.5 * config.model.inertia * state.omega_in * state.omega_in +
                         0.5 * config.model.stiffness * state.theta_in * state.theta_in;
        worst = std::max(worst, std::abs(e - e0) / e0);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("stiction holds the shaft below the breakaway torque") {
    PlantConfig config = quiet_config();
    config.coulomb_torque = 0.0136;
    PlantState state;
    for (int i = 0; i < 100; ++i) {
        state = step(state, config, 0.01, true, 1e-3);  // below breakaway
    }
    CHECK(state.theta_in == 0.0);
    for (int i = 0; i < 2000; ++i) {
        state = step(state, config, 0.1, true, 1e-3);  // well above
    }
    CHECK(state.theta_in > 0.0);
    // sticks somewhere inside the friction band around the equilibrium
    const double frictionless = 0.1 / config.model.stiffness;
    const double band = config.coulomb_torque / config.model.stiffness;
    CHECK(std::abs(state.theta_in - frictionless) <= 1.1 * band);
    CHECK(state.omega_in == 0.0);
}

TEST_CASE("valve flow follows the square-root law") {
    ValveSpec valve;
    valve.flow_factor = 1.0;
    valve.state = ValveState::Open;
    CHECK(valve_flow(valve, 4.0) == doctest::Approx(2.0));
    CHECK(valve_flow(valve, 0.0) == 0.0);
    valve.state = ValveState::Closed;
    CHECK(valve_flow(valve, 4.0) == 0.0);
    CHECK_THROWS_AS(valve_flow(valve, -1.0), NegativePressureDrop);
}

TEST_CASE("valve integration moves the booked volume") {
    PlantConfig config = quiet_config();
    config.intake.flow_factor = 1.0;
    config.intake.latency_s = 0.0;
    config.constant_delta_p = true;
    PlantState state;
    state.line.supply_pressure_kpa = 700.0;
    state = set_regulator(state, config, 699.0);  // dP = 1 kPa

    SUBCASE("zero duration changes nothing") {
        const PlantState next = apply_valve(state, config, ValvePort::Intake, 0.0);
        CHECK(next.line.water_volume_offset_ml == state.line.water_volume_offset_ml);
    }
    SUBCASE("one second at 1 kPa moves one mL and 9.594 degrees") {
        const PlantState next = apply_valve(state, config, ValvePort::Intake, 1.0);
        CHECK(next.line.water_volume_offset_ml == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(phase_offset_deg(next, config) == doctest::Approx(9.594).epsilon(1e-9));
    }
    SUBCASE("latency delays the flow") {
        config.intake.latency_s = 0.25;
        const PlantState next = apply_valve(state, config, ValvePort::Intake, 1.0);
        CHECK(next.line.water_volume_offset_ml == doctest::Approx(0.75).epsilon(1e-9));
    }
    SUBCASE("outlet drains the line") {
        const PlantState next = apply_valve(state, config, ValvePort::Outlet, 0.1);
        CHECK(next.line.water_volume_offset_ml < 0.0);
    }
}

TEST_CASE("water volume bookkeeping is exact") {
    PlantConfig config = quiet_config();
    PlantState state;
    state = set_regulator(state, config, 600.0);
    double tracked = state.line.water_volume_offset_ml;
    std::uint64_t rng = 99;
    for (int i = 0; i < 20; ++i) {
        rng = mix_seed(rng, i);
        const ValvePort port = (rng & 1) ? ValvePort::Intake : ValvePort::Outlet;
        const double duration = static_cast<double>((rng >> 8) % 100) / 400.0;
        const PlantState next = apply_valve(state, config, port, duration);
        tracked += next.line.water_volume_offset_ml - state.line.water_volume_offset_ml;
        state = next;
        // offset never changes through step()
        const PlantState stepped = step(state, config, 0.05, false, 1e-3);
        CHECK(stepped.line.water_volume_offset_ml == state.line.water_volume_offset_ml);
        state = stepped;
    }
    CHECK(tracked == state.line.water_volume_offset_ml);
}

TEST_CASE("volume for a phase correction") {
    CHECK(volume_for_phase(9.594, 9.594) == doctest::Approx(1.0));
    CHECK(volume_for_phase(0.0, 9.594) == 0.0);
    CHECK(volume_for_phase(-19.188, 9.594) == doctest::Approx(2.0));
    CHECK_THROWS_AS(volume_for_phase(1.0, 0.0), NonPositiveInput);
}

TEST_CASE("phase offset is always volume times the constant") {
    PlantConfig config = quiet_config();
    PlantState state;
    std::uint64_t rng = 123;
    for (int i = 0; i < 10; ++i) {
        rng = mix_seed(rng, i);
        state.line.water_volume_offset_ml =
            static_cast<double>(static_cast<int>(rng % 2000) - 1000) / 100.0;
        CHECK(phase_offset_deg(state, config) ==
              state.line.water_volume_offset_ml * config.phase_constant_deg_per_ml);
    }
}

TEST_CASE("sensors") {
    PlantConfig config = quiet_config();
    PlantState state;

    SUBCASE("one revolution reads exactly 8000 counts") {
        state.theta_in = kTwoPi;
        const SensorFrame frame = read_sensors(state, config, 0.0, 0);
        CHECK(frame.encoder_in == 8000);
    }
    SUBCASE("noise-free torque readout is exact") {
        state.theta_in = 0.01;
        const SensorFrame frame = read_sensors(state, config, 0.25, 5);
        CHECK(frame.torque_in == 0.25);
        CHECK(frame.torque_out == spring_torque(state, config));
    }
    SUBCASE("same state and seed give identical frames") {
        config.torque_noise_sigma = 0.002;
        state.theta_in = 0.35;
        state.line.water_pressure_kpa = 612.3;
        const SensorFrame a = read_sensors(state, config, 0.5, 77);
        const SensorFrame b = read_sensors(state, config, 0.5, 77);
        CHECK(a.torque_in == b.torque_in);
        CHECK(a.torque_out == b.torque_out);
        CHECK(a.encoder_in == b.encoder_in);
        const SensorFrame c = read_sensors(state, config, 0.5, 78);
        CHECK(a.torque_in != c.torque_in);
    }
    SUBCASE("pressure readout is quantized") {
        state.line.regulator_setpoint_kpa = 612.3;
        PlantState s = set_regulator(state, config, 612.3);
        const SensorFrame frame = read_sensors(s, config, 0.0, 0);
        CHECK(frame.pressure_readout_kpa == doctest::Approx(612.0));
    }
}

TEST_CASE("trajectories are deterministic") {
    PlantConfig config;
    auto run = [&config]() {
        PlantState state;
        state = set_regulator(state, config, 600.0);
        std::vector<double> samples;
        for (int k = 0; k < 500; ++k) {
            const double torque = 0.5 * std::sin(0.01 * k);
            state = step(state, config, torque, false, 1e-3);
            samples.push_back(state.theta_in);
            samples.push_back(state.omega_out);
        }
        state = apply_valve(state, config, ValvePort::Intake, 0.2);
        samples.push_back(state.line.water_volume_offset_ml);
        return samples;
    };
    CHECK(run() == run());
}

TEST_CASE("regulator setpoint is clamped to the hardware range") {
    const PlantConfig config = quiet_config();
    PlantState state;
    state = set_regulator(state, config, 900.0);
    CHECK(state.line.regulator_setpoint_kpa == 860.0);
    state = set_regulator(state, config, -5.0);
    CHECK(state.line.regulator_setpoint_kpa == 0.0);
}
