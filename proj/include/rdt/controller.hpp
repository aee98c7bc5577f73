#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdt/errors.hpp"
#include "rdt/plant.hpp"

namespace rdt {

enum class Mode {
    Depressurized,
    Bleeding,
    Hibernating,
    Pressurizing,
    Phasing,
    Operating,
    Depressurizing,
};

enum class Command { Bleed, Hibernate, Pressurize, Phase, Operate, Depressurize, Shutdown };

struct OperationMode {
    Mode mode = Mode::Depressurized;
    double target_preload_kpa = 0.0;
};

struct PhasingConfig {
    double tolerance_deg = 0.4;       // acceptable residual phase offset
    double fine_delta_p_kpa = 15.0;   // intake dP once in the fine regime
    int max_iterations = 20;
    double injection_pressure_kpa = 700.0;
    double fine_threshold_deg = 2.0;  // below this the pressure maneuver kicks in
    double settle_time_s = 0.1;       // rest before each measurement

    // The controller's valve model. Left empty it matches the plant's specs;
    // set explicitly to exercise model error between belief and hardware.
    std::optional<ValveSpec> intake_belief;
    std::optional<ValveSpec> outlet_belief;
};

struct PhasePlan {
    ValvePort valve = ValvePort::Intake;
    double open_time_s = 0.0;
    double predicted_volume_ml = 0.0;
    double predicted_residual_deg = 0.0;
    double measured_offset_deg = 0.0;
};

struct PhasingResult {
    PlantState state;
    std::vector<PhasePlan> corrections;
    int iterations = 0;
};

struct DidNotConverge : Error {
    DidNotConverge(const std::string& what, std::vector<PhasePlan> log)
        : Error(what), corrections(std::move(log)) {}
    std::vector<PhasePlan> corrections;
};

const char* mode_name(Mode mode);
const char* command_name(Command command);
bool is_transitory(Mode mode);

// Manual command edges of the operating procedure graph. Transitory modes
// reject every command (they only auto-advance via on_complete). Throws
// IllegalTransition for edges that do not exist.
OperationMode transition(const OperationMode& current, Command command,
                         const PlantConfig& config);

// Auto-advance a transitory mode once its procedure finished.
OperationMode on_complete(const OperationMode& current, const PlantConfig& config);

// Phase offset as the controller sees it: encoder difference (out minus in),
// quantized to encoder resolution. Positive means the line wants more water.
double measure_phase_offset_deg(const PlantState& state, const PlantConfig& config);

// t = V/Q = |dphi| / (phase_constant * Kv * sqrt(dP)). Valve choice follows
// the offset sign: intake when water must be added.
PhasePlan plan_correction(double delta_phi_deg, const ValveSpec& valve, double delta_p_kpa,
                          double phase_constant_deg_per_ml);

// Measure -> plan -> apply until the measured offset is within tolerance.
// Before corrections in the fine regime the line pressure is brought to just
// below the injection pressure so the intake dP equals fine_delta_p.
PhasingResult run_phasing(const PlantState& state, const PlantConfig& config,
                          const PhasingConfig& phasing);

// Each bleed cycle multiplies the undissolved-air fraction by bleed_factor,
// clamped at bleed_floor.
PlantState bleed(const PlantState& state, const PlantConfig& config, int cycles);

}  // namespace rdt
