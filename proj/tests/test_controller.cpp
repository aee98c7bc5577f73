#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "rdt/controller.hpp"
#include "rdt/errors.hpp"

using namespace rdt;

namespace {

PlantState pressurized_state(const PlantConfig& config, double volume_offset_ml) {
    PlantState state;
    state.line.supply_pressure_kpa = config.supply_pressure_kpa;
    state = set_regulator(state, config, config.operating_preload_kpa);
    state.line.water_volume_offset_ml = volume_offset_ml;
    // start at the spring equilibrium for the offset
    state.theta_in = phase_offset_deg(state, config) * 3.14159265358979323846 / 180.0;
    return state;
}

double uniform(std::uint64_t& rng, double lo, double hi) {
    rng = mix_seed(rng, 0xabcdef);
    return lo + (hi - lo) * (static_cast<double>(rng >> 11) * 0x1.0p-53);
}

// The controller believes the config's nominal flow factors while the plant
// flows scale-times more (or less).
PhasingConfig belief_with_scale(const PlantConfig& actual, double scale) {
    PhasingConfig phasing;
    ValveSpec intake = actual.intake;
    intake.flow_factor /= scale;
    ValveSpec outlet = actual.outlet;
    outlet.flow_factor /= scale;
    phasing.intake_belief = intake;
    phasing.outlet_belief = outlet;
    return phasing;
}

const Mode kAllModes[] = {Mode::Depressurized, Mode::Bleeding,     Mode::Hibernating,
                          Mode::Pressurizing,  Mode::Phasing,      Mode::Operating,
                          Mode::Depressurizing};
const Command kAllCommands[] = {Command::Bleed,   Command::Hibernate, Command::Pressurize,
                                Command::Phase,   Command::Operate,   Command::Depressurize,
                                Command::Shutdown};

}  // namespace

TEST_CASE("valve-time planning inverts the flow model") {
    ValveSpec valve;
    valve.flow_factor = 1.0;

    SUBCASE("unit values") {
        const PhasePlan plan = plan_correction(9.594, valve, 1.0, 9.594);
        CHECK(plan.open_time_s == doctest::Approx(1.0));
        CHECK(plan.predicted_volume_ml == doctest::Approx(1.0));
        CHECK(plan.valve == ValvePort::Intake);
    }
    SUBCASE("zero offset plans zero time") {
        const PhasePlan plan = plan_correction(0.0, valve, 1.0, 9.594);
        CHECK(plan.open_time_s == 0.0);
    }
    SUBCASE("negative offset drains through the outlet") {
        valve.flow_factor = 2.0;
        const PhasePlan plan = plan_correction(-9.594, valve, 4.0, 9.594);
        CHECK(plan.valve == ValvePort::Outlet);
        CHECK(plan.open_time_s == doctest::Approx(0.25));
    }
    SUBCASE("zero pressure drop is rejected") {
        CHECK_THROWS_AS(plan_correction(1.0, valve, 0.0, 9.594), ZeroPressureDrop);
    }
}

TEST_CASE("phasing on an ideal plant converges in one correction") {
    PlantConfig config;
    config.constant_delta_p = true;
    config.intake.latency_s = 0.0;
    config.outlet.latency_s = 0.0;
    PhasingConfig phasing;
    // excess water: measured offset is -10 deg
    PlantState state = pressurized_state(config, volume_for_phase(10.0, 9.594));
    const PhasingResult result = run_phasing(state, config, phasing);
    CHECK(result.corrections.size() == 1);
    CHECK(result.corrections[0].valve == ValvePort::Outlet);
    CHECK(std::abs(measure_phase_offset_deg(result.state, config)) <= 0.4);
}

TEST_CASE("phasing with a 10% optimistic flow model converges within 3 corrections") {
    PlantConfig config;
    const PhasingConfig phasing = belief_with_scale(config, 1.10);
    PlantState state = pressurized_state(config, -volume_for_phase(10.0, 9.594));
    const PhasingResult result = run_phasing(state, config, phasing);
    CHECK(std::abs(measure_phase_offset_deg(result.state, config)) <= 0.4);
    CHECK(result.corrections.size() <= 3);
}

TEST_CASE("phasing inside tolerance takes no valve action") {
    PlantConfig config;
    PhasingConfig phasing;
    PlantState state = pressurized_state(config, volume_for_phase(0.3, 9.594));
    const PhasingResult result = run_phasing(state, config, phasing);
    CHECK(result.corrections.empty());
}

TEST_CASE("phasing terminates from random offsets under flow-model error") {
    PlantConfig config;
    std::uint64_t rng = 2024;
    for (int trial = 0; trial < 25; ++trial) {
        const double offset_deg = uniform(rng, -180.0, 180.0);
        const double kv_scale = 1.0 + uniform(rng, -0.25, 0.25);
        const PhasingConfig phasing = belief_with_scale(config, kv_scale);
        PlantState state =
            pressurized_state(config, -offset_deg / config.phase_constant_deg_per_ml);
        const PhasingResult result = run_phasing(state, config, phasing);
        CHECK(std::abs(measure_phase_offset_deg(result.state, config)) <=
              phasing.tolerance_deg);
        CHECK(static_cast<int>(result.corrections.size()) <= phasing.max_iterations);
        // |offset| non-increasing across corrections while above tolerance
        for (std::size_t i = 1; i < result.corrections.size(); ++i) {
            CHECK(std::abs(result.corrections[i].measured_offset_deg) <=
                  std::abs(result.corrections[i - 1].measured_offset_deg) + 1e-9);
        }
        // regulator stayed within the hardware range
        CHECK(result.state.line.regulator_setpoint_kpa <= config.regulator_max_kpa);
        CHECK(result.state.line.regulator_setpoint_kpa >= 0.0);
    }
}

TEST_CASE("phasing at full preload leans on the pressure maneuver") {
    // At 860 kPa the water line sits above the injection pressure, so every
    // intake needs the line brought down to injection - fine dP first.
    PlantConfig config;
    config.operating_preload_kpa = 860.0;
    const PhasingConfig phasing = belief_with_scale(config, 1.25);
    PlantState state;
    state.line.supply_pressure_kpa = config.supply_pressure_kpa;
    state = set_regulator(state, config, 860.0);
    state.line.water_volume_offset_ml = -180.0 / config.phase_constant_deg_per_ml;
    state.theta_in = phase_offset_deg(state, config) * 3.14159265358979323846 / 180.0;
    const PhasingResult result = run_phasing(state, config, phasing);
    CHECK(std::abs(measure_phase_offset_deg(result.state, config)) <=
          phasing.tolerance_deg);
    bool used_intake = false;
    for (const PhasePlan& plan : result.corrections) {
        used_intake = used_intake || plan.valve == ValvePort::Intake;
    }
    CHECK(used_intake);
}

TEST_CASE("phasing gives up cleanly when the flow model is hopeless") {
    PlantConfig config;
    PhasingConfig phasing = belief_with_scale(config, 2.6);  // 160% overshoot, diverges
    phasing.max_iterations = 6;
    PlantState state = pressurized_state(config, volume_for_phase(20.0, 9.594));
    CHECK_THROWS_AS(run_phasing(state, config, phasing), DidNotConverge);
    try {
        run_phasing(state, config, phasing);
    } catch (const DidNotConverge& e) {
        CHECK(e.corrections.size() == 6);  // the log rides along
    }
}

TEST_CASE("transition graph") {
    PlantConfig config;
    OperationMode mode;  // Depressurized

    SUBCASE("startup chain reaches operating through phasing") {
        mode = {Mode::Hibernating, config.hibernate_preload_kpa};
        mode = transition(mode, Command::Pressurize, config);
        CHECK(mode.mode == Mode::Pressurizing);
        mode = on_complete(mode, config);
        CHECK(mode.mode == Mode::Phasing);
        mode = on_complete(mode, config);
        CHECK(mode.mode == Mode::Operating);
    }
    SUBCASE("cold start cannot jump straight to operating") {
        CHECK_THROWS_AS(transition(mode, Command::Operate, config), IllegalTransition);
    }
    SUBCASE("hibernate from operating targets the storage preload") {
        mode = {Mode::Operating, config.operating_preload_kpa};
        mode = transition(mode, Command::Hibernate, config);
        CHECK(mode.mode == Mode::Hibernating);
        CHECK(mode.target_preload_kpa == doctest::Approx(100.0));
    }
    SUBCASE("transitory modes reject commands") {
        for (Mode m : {Mode::Bleeding, Mode::Pressurizing, Mode::Phasing,
                       Mode::Depressurizing}) {
            for (Command c : kAllCommands) {
                CHECK_THROWS_AS(transition({m, 0.0}, c, config), IllegalTransition);
            }
        }
    }
}

TEST_CASE("exhaustive transition table matches the operating procedure graph") {
    PlantConfig config;
    struct Edge {
        Mode from;
        Command command;
        Mode to;
    };
    const std::vector<Edge> legal = {
        {Mode::Depressurized, Command::Bleed, Mode::Bleeding},
        {Mode::Depressurized, Command::Pressurize, Mode::Pressurizing},
        {Mode::Depressurized, Command::Shutdown, Mode::Depressurized},
        {Mode::Hibernating, Command::Bleed, Mode::Bleeding},
        {Mode::Hibernating, Command::Pressurize, Mode::Pressurizing},
        {Mode::Hibernating, Command::Operate, Mode::Pressurizing},
        {Mode::Hibernating, Command::Depressurize, Mode::Depressurizing},
        {Mode::Hibernating, Command::Shutdown, Mode::Hibernating},
        {Mode::Operating, Command::Hibernate, Mode::Hibernating},
        {Mode::Operating, Command::Phase, Mode::Phasing},
        {Mode::Operating, Command::Depressurize, Mode::Depressurizing},
    };
    for (Mode from : kAllModes) {
        for (Command command : kAllCommands) {
            const Edge* expected = nullptr;
            for (const Edge& e : legal) {
                if (e.from == from && e.command == command) {
                    expected = &e;
                    break;
                }
            }
            if (expected) {
                const OperationMode next = transition({from, 0.0}, command, config);
                CHECK(next.mode == expected->to);
            } else {
                CHECK_THROWS_AS(transition({from, 0.0}, command, config),
                                IllegalTransition);
            }
        }
    }
}

TEST_CASE("operating is unreachable without passing through phasing") {
    PlantConfig config;
    // BFS over manual edges plus completions, recording predecessors of Operating.
    std::set<Mode> visited{Mode::Depressurized};
    std::vector<Mode> frontier{Mode::Depressurized};
    std::set<Mode> operating_predecessors;
    while (!frontier.empty()) {
        std::vector<Mode> next_frontier;
        for (Mode from : frontier) {
            std::vector<Mode> successors;
            for (Command c : kAllCommands) {
                try {
                    successors.push_back(transition({from, 0.0}, c, config).mode);
                } catch (const IllegalTransition&) {
                }
            }
            if (is_transitory(from)) {
                successors.push_back(on_complete({from, 0.0}, config).mode);
            }
            for (Mode to : successors) {
                if (to == Mode::Operating) {
                    operating_predecessors.insert(from);
                }
                if (visited.insert(to).second) {
                    next_frontier.push_back(to);
                }
            }
        }
        frontier = std::move(next_frontier);
    }
    CHECK(visited.count(Mode::Operating) == 1);
    CHECK(operating_predecessors == std::set<Mode>{Mode::Phasing});
}

TEST_CASE("bleed decays the air fraction geometrically to the floor") {
    PlantConfig config;
    PlantState state;
    state.line.air_fraction = 0.0064;
    SUBCASE("five halvings reach the floor") {
        const PlantState bled = bleed(state, config, 5);
        CHECK(bled.line.air_fraction == doctest::Approx(2e-4));
    }
    SUBCASE("more cycles stay clamped at the floor") {
        const PlantState bled = bleed(state, config, 12);
        CHECK(bled.line.air_fraction == doctest::Approx(2e-4));
    }
    SUBCASE("single cycle halves") {
        const PlantState bled = bleed(state, config, 1);
        CHECK(bled.line.air_fraction == doctest::Approx(0.0032));
    }
    SUBCASE("zero cycles are rejected") {
        CHECK_THROWS_AS(bleed(state, config, 0), Error);
    }
}
