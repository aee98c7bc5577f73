#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdt/config.hpp"
#include "rdt/controller.hpp"
#include "rdt/experiment_log.hpp"
#include "rdt/sysid.hpp"

namespace rdt {

enum class ExperimentKind { StepFit, SineHysteresis, HandTracking };

// One operator session: owns the simulated plant, the operation mode, the
// event log and the experiment outputs. The text interface is a thin loop
// over execute().
class Session {
public:
    Session(Config config, SessionConfig session, std::ostream& out);

    // Dispatch one command line. Unknown verbs print help and return true;
    // returns false once the session should end (quit/shutdown).
    bool execute(const std::string& line);

    void run_script(std::istream& in);
    void repl(std::istream& in);

    // Command surface (also reachable through execute()).
    std::string status_text() const;
    void pressurize();
    void phase();
    void operate();
    void hibernate();
    void do_bleed();
    void depressurize();
    ExperimentLog run_experiment(ExperimentKind kind,
                                 const std::map<std::string, std::string>& args = {});
    FitResult fit_model(const std::map<std::string, std::string>& args = {});
    void report(const std::string& kind, const std::map<std::string, std::string>& args = {});
    void sweep(double lo, double hi, int points);

    const OperationMode& mode() const { return mode_; }
    const PlantState& plant() const { return plant_; }
    const Config& config() const { return config_; }
    const std::optional<FitResult>& last_fit() const { return last_fit_; }
    std::string log_path(const std::string& name) const;

private:
    void apply_command(Command command);
    void run_procedure();  // execute the active transitory mode to completion
    void settle(double seconds);
    void log_event(const std::string& event, double value);
    void set_mode(OperationMode next);
    Trajectory drive_clamped(const std::vector<double>& torque, std::uint64_t stream);
    Trajectory drive_loaded(const std::vector<double>& torque, double load_inertia,
                            std::uint64_t stream);
    std::uint64_t next_stream();

    Config config_;
    SessionConfig session_;
    PlantState plant_;
    OperationMode mode_;
    std::ostream* out_;
    EventWriter events_;
    std::optional<FitResult> last_fit_;
    std::string last_step_log_;
    std::uint64_t stream_counter_ = 0;
};

// Built-in torque profiles used by the experiments.
std::vector<double> step_sequence_profile(double dt, double amplitude, double segment_s);
std::vector<double> sine_cycle_profile(double dt, double amplitude, double frequency_hz,
                                       double ramp_s, double total_s);
std::vector<double> hand_profile(double dt, double total_s);

}  // namespace rdt
