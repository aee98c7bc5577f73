#include "rdt/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace rdt {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string token;
    while (in >> token) {
        tokens.push_back(token);
    }
    return tokens;
}

// Arguments after the verb are key=value pairs.
std::map<std::string, std::string> parse_args(const std::vector<std::string>& tokens,
                                              std::size_t first) {
    std::map<std::string, std::string> args;
    for (std::size_t i = first; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos) {
            args[tokens[i]] = "";
        } else {
            args[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
        }
    }
    return args;
}

double arg_number(const std::map<std::string, std::string>& args, const std::string& key,
                  double fallback) {
    const auto it = args.find(key);
    if (it == args.end() || it->second.empty()) {
        return fallback;
    }
    return std::stod(it->second);
}

const char* kHelp =
    "commands:\n"
    "  status                      show mode, pressures and phase offset\n"
    "  bleed                       run air bleed cycles (from depressurized/hibernating)\n"
    "  pressurize                  raise preload, then auto-phase into operating\n"
    "  phase                       re-run phasing (from operating)\n"
    "  operate                     full startup chain from hibernation\n"
    "  hibernate                   drop to the low-pressure storage state\n"
    "  depressurize                vent completely for transport/disassembly\n"
    "  runexperiment <kind> [...]  kind: stepfit | sinehysteresis | handtracking\n"
    "                              handtracking accepts profile=<schedule.csv>\n"
    "  fitmodel [log=<csv>] [J=] [B=] [K=]   fit the dynamics model to a step log\n"
    "  report <stiffness|fit|hysteresis|tracking> [log=<csv>]\n"
    "  sweep [lo=] [hi=] [points=] stiffness vs undissolved-air fraction\n"
    "  help                        this text\n"
    "  quit                        end the session\n";

}  // namespace

std::vector<double> step_sequence_profile(double dt, double amplitude, double segment_s) {
    const double levels[] = {0.0, 1.0, 2.0, 1.0, 0.0, -1.0, -2.0, -1.0, 0.0};
    const int n_levels = 9;
    const int per_segment = static_cast<int>(std::round(segment_s / dt));
    std::vector<double> torque;
    torque.reserve(static_cast<std::size_t>(per_segment) * n_levels + 1);
    for (int s = 0; s < n_levels; ++s) {
        for (int i = 0; i < per_segment; ++i) {
            torque.push_back(levels[s] * amplitude);
        }
    }
    torque.push_back(0.0);
    return torque;
}

std::vector<double> sine_cycle_profile(double dt, double amplitude, double frequency_hz,
                                       double ramp_s, double total_s) {
    const int n = static_cast<int>(std::round(total_s / dt)) + 1;
    std::vector<double> torque(n);
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        const double env =
            t < ramp_s ? 0.5 * (1.0 - std::cos(kPi * t / ramp_s)) : 1.0;
        torque[k] = amplitude * env * std::sin(2.0 * kPi * frequency_hz * t);
    }
    return torque;
}

std::vector<double> hand_profile(double dt, double total_s) {
    // Stand-in for a recorded hand drive: three incommensurate sub-hertz sines
    // with a gentle run-in.
    const int n = static_cast<int>(std::round(total_s / dt)) + 1;
    std::vector<double> torque(n);
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        const double env = std::min(t / 2.0, 1.0);
        torque[k] = env * (0.45 * std::sin(2.0 * kPi * 0.23 * t) +
                           0.30 * std::sin(2.0 * kPi * 0.53 * t) +
                           0.15 * std::sin(2.0 * kPi * 0.97 * t));
    }
    return torque;
}

Session::Session(Config config, SessionConfig session, std::ostream& out)
    : config_(std::move(config)), session_(std::move(session)), out_(&out) {
    config_.validate();
    plant_.line.supply_pressure_kpa = config_.plant.supply_pressure_kpa;
    plant_.line.air_fraction = config_.plant.initial_air_fraction;
    std::filesystem::create_directories(session_.log_directory);
    events_ = EventWriter(log_path("events.csv"));
    log_event("session_start", static_cast<double>(session_.random_seed));
}

std::string Session::log_path(const std::string& name) const {
    return (std::filesystem::path(session_.log_directory) / name).string();
}

void Session::log_event(const std::string& event, double value) {
    events_.write(plant_.time_s, mode_name(mode_.mode), event, value);
}

void Session::set_mode(OperationMode next) {
    mode_ = next;
    log_event("mode", mode_.target_preload_kpa);
}

std::uint64_t Session::next_stream() {
    return mix_seed(session_.random_seed, ++stream_counter_);
}

void Session::settle(double seconds) {
    const int steps = static_cast<int>(std::ceil(seconds / config_.plant.dt));
    for (int i = 0; i < steps; ++i) {
        plant_ = step(plant_, config_.plant, 0.0, false, config_.plant.dt);
        if (session_.realtime) {
            std::this_thread::sleep_for(std::chrono::duration<double>(config_.plant.dt));
        }
    }
}

void Session::apply_command(Command command) {
    set_mode(transition(mode_, command, config_.plant));
    if (!is_transitory(mode_.mode)) {
        // Direct moves between rest states still retarget the regulator
        // (operating -> hibernating drops straight to the storage preload).
        plant_ = set_regulator(plant_, config_.plant, mode_.target_preload_kpa);
        settle(0.2);
    }
    run_procedure();
}

void Session::run_procedure() {
    while (is_transitory(mode_.mode)) {
        switch (mode_.mode) {
            case Mode::Bleeding: {
                plant_ = set_regulator(plant_, config_.plant,
                                       config_.plant.hibernate_preload_kpa);
                plant_ = bleed(plant_, config_.plant, config_.bleed_cycles);
                log_event("bleed_cycles", static_cast<double>(config_.bleed_cycles));
                log_event("air_fraction", plant_.line.air_fraction);
                settle(0.1);
                break;
            }
            case Mode::Pressurizing: {
                plant_ = set_regulator(plant_, config_.plant, mode_.target_preload_kpa);
                log_event("regulator", plant_.line.regulator_setpoint_kpa);
                settle(0.5);
                break;
            }
            case Mode::Phasing: {
                try {
                    PhasingResult result =
                        run_phasing(plant_, config_.plant, config_.phasing);
                    plant_ = result.state;
                    for (const PhasePlan& plan : result.corrections) {
                        log_event(plan.valve == ValvePort::Intake ? "phase_intake"
                                                                  : "phase_outlet",
                                  plan.measured_offset_deg);
                    }
                    log_event("phase_residual",
                              measure_phase_offset_deg(plant_, config_.plant));
                    // Restore the operating preload after any fine-phasing maneuver.
                    plant_ = set_regulator(plant_, config_.plant, mode_.target_preload_kpa);
                    log_event("regulator", plant_.line.regulator_setpoint_kpa);
                    settle(0.2);
                } catch (const DidNotConverge& e) {
                    // Fall back to the storage state rather than pretending to run.
                    log_event("phasing_failed",
                              static_cast<double>(e.corrections.size()));
                    plant_ = set_regulator(plant_, config_.plant,
                                           config_.plant.hibernate_preload_kpa);
                    set_mode({Mode::Hibernating, config_.plant.hibernate_preload_kpa});
                    *out_ << "phasing failed: " << e.what() << "\n";
                    return;
                }
                break;
            }
            case Mode::Depressurizing: {
                plant_ = set_regulator(plant_, config_.plant, 0.0);
                log_event("regulator", 0.0);
                settle(0.5);
                break;
            }
            default:
                return;
        }
        set_mode(on_complete(mode_, config_.plant));
    }
}

std::string Session::status_text() const {
    std::ostringstream out;
    out << "mode: " << mode_name(mode_.mode) << "\n";
    out << "preload setpoint: " << format_double(plant_.line.regulator_setpoint_kpa)
        << " kPa (target " << format_double(mode_.target_preload_kpa) << " kPa)\n";
    out << "water pressure: " << format_double(plant_.line.water_pressure_kpa)
        << " kPa, supply " << format_double(plant_.line.supply_pressure_kpa) << " kPa\n";
    out << "phase offset: "
        << format_double(measure_phase_offset_deg(plant_, config_.plant))
        << " deg (volume offset "
        << format_double(plant_.line.water_volume_offset_ml) << " mL)\n";
    out << "undissolved air: " << format_double(100.0 * plant_.line.air_fraction)
        << " %\n";
    if (last_fit_) {
        out << "last fit: J=" << format_double(last_fit_->model.inertia)
            << " B=" << format_double(last_fit_->model.damping)
            << " K=" << format_double(last_fit_->model.stiffness) << " ("
            << format_double(last_fit_->fit_percentage) << "% fit)\n";
    }
    return out.str();
}

void Session::pressurize() { apply_command(Command::Pressurize); }
void Session::phase() { apply_command(Command::Phase); }
void Session::operate() { apply_command(Command::Operate); }
void Session::hibernate() { apply_command(Command::Hibernate); }
void Session::do_bleed() { apply_command(Command::Bleed); }
void Session::depressurize() { apply_command(Command::Depressurize); }

Trajectory Session::drive_clamped(const std::vector<double>& torque,
                                  std::uint64_t stream) {
    Trajectory trajectory;
    trajectory.reserve(torque.size());
    const double dt = config_.plant.dt;
    const double theta_in0 = plant_.theta_in;
    const double theta_out0 = plant_.theta_out;
    for (std::size_t k = 0; k < torque.size(); ++k) {
        const SensorFrame frame =
            read_sensors(plant_, config_.plant, torque[k], mix_seed(stream, k));
        TrajectoryRecord r;
        r.time_s = static_cast<double>(k) * dt;
        r.torque_in_nm = frame.torque_in;
        r.torque_out_nm = frame.torque_out;
        r.theta_in_rad = plant_.theta_in - theta_in0;  // encoders zeroed at start
        r.theta_out_rad = plant_.theta_out - theta_out0;
        r.water_kpa = plant_.line.water_pressure_kpa;
        r.air_kpa = plant_.line.air_preload_kpa;
        r.volume_offset_ml = plant_.line.water_volume_offset_ml;
        trajectory.push_back(r);
        plant_ = step(plant_, config_.plant, torque[k], true, dt);
        if (session_.realtime) {
            std::this_thread::sleep_for(std::chrono::duration<double>(dt));
        }
    }
    return trajectory;
}

Trajectory Session::drive_loaded(const std::vector<double>& torque, double load_inertia,
                                 std::uint64_t stream) {
    PlantConfig cfg = config_.plant;
    cfg.load_inertia = load_inertia;
    Trajectory trajectory;
    trajectory.reserve(torque.size());
    const double dt = cfg.dt;
    const double theta_in0 = plant_.theta_in;
    const double theta_out0 = plant_.theta_out;
    for (std::size_t k = 0; k < torque.size(); ++k) {
        const SensorFrame frame = read_sensors(plant_, cfg, torque[k], mix_seed(stream, k));
        TrajectoryRecord r;
        r.time_s = static_cast<double>(k) * dt;
        r.torque_in_nm = frame.torque_in;
        r.torque_out_nm = frame.torque_out;
        r.theta_in_rad = plant_.theta_in - theta_in0;
        r.theta_out_rad = plant_.theta_out - theta_out0;
        r.water_kpa = plant_.line.water_pressure_kpa;
        r.air_kpa = plant_.line.air_preload_kpa;
        r.volume_offset_ml = plant_.line.water_volume_offset_ml;
        trajectory.push_back(r);
        plant_ = step(plant_, cfg, torque[k], false, dt);
        if (session_.realtime) {
            std::this_thread::sleep_for(std::chrono::duration<double>(dt));
        }
    }
    return trajectory;
}

ExperimentLog Session::run_experiment(ExperimentKind kind,
                                      const std::map<std::string, std::string>& args) {
    if (mode_.mode != Mode::Operating) {
        throw NotOperating("experiments require the operating mode");
    }
    const double dt = config_.plant.dt;
    settle(0.5);  // start every experiment from rest

    std::map<std::string, std::string> metadata;
    metadata["seed"] = std::to_string(session_.random_seed);
    Trajectory trajectory;
    std::string filename;
    const std::uint64_t stream = next_stream();

    switch (kind) {
        case ExperimentKind::StepFit: {
            const double amplitude = arg_number(args, "amplitude", 1.0);
            metadata["experiment"] = "stepfit";
            trajectory = drive_clamped(step_sequence_profile(dt, amplitude, 0.8), stream);
            filename = "stepfit.csv";
            break;
        }
        case ExperimentKind::SineHysteresis: {
            const double amplitude = arg_number(args, "amplitude", 1.0);
            const double frequency = arg_number(args, "frequency", 0.1);
            metadata["experiment"] = "sinehysteresis";
            const double total = 2.0 + 1.25 / frequency;
            trajectory = drive_clamped(
                sine_cycle_profile(dt, amplitude, frequency, 2.0, total), stream);
            filename = "sinehysteresis.csv";
            break;
        }
        case ExperimentKind::HandTracking: {
            metadata["experiment"] = "handtracking";
            const double load = arg_number(args, "load", 0.0387);
            std::vector<double> torque;
            const auto profile = args.find("profile");
            if (profile != args.end() && !profile->second.empty()) {
                const auto schedule = read_schedule_csv(profile->second);
                const double total = schedule.back().time_s;
                const int n = static_cast<int>(std::round(total / dt)) + 1;
                torque.resize(n);
                for (int k = 0; k < n; ++k) {
                    torque[k] = schedule_torque(schedule, k * dt);
                }
                metadata["profile"] = profile->second;
            } else {
                torque = hand_profile(dt, 16.0);
            }
            trajectory = drive_loaded(torque, load, stream);
            filename = "handtracking.csv";
            break;
        }
    }

    const std::string path = log_path(filename);
    write_trajectory_csv(path, trajectory, metadata);
    log_event("experiment", static_cast<double>(trajectory.size()));
    if (kind == ExperimentKind::StepFit) {
        last_step_log_ = path;
    }
    *out_ << "wrote " << path << " (" << trajectory.size() << " samples)\n";
    return log_from_trajectory(trajectory, metadata);
}

FitResult Session::fit_model(const std::map<std::string, std::string>& args) {
    std::string path = last_step_log_;
    const auto log_arg = args.find("log");
    if (log_arg != args.end() && !log_arg->second.empty()) {
        path = log_arg->second;
    }
    if (path.empty()) {
        throw Error("no step log available; run 'runexperiment stepfit' first");
    }
    const ExperimentLog log = load_experiment_log(path);

    // Initial guess from prior theoretical numbers: the stiffness budget for K,
    // CAD-style estimates for J and B, overridable per call.
    SecondOrderModel init;
    init.inertia = arg_number(args, "J", 6.54e-5);
    init.damping = arg_number(args, "B", 0.005);
    init.stiffness =
        arg_number(args, "K", total_stiffness(config_.transmission).k_total_rotational);

    FitResult fit = fit_second_order(log, init);
    last_fit_ = fit;
    log_event("fit_stiffness", fit.model.stiffness);

    std::ofstream out(log_path("fit.csv"), std::ios::binary);
    out << fit_csv(fit);
    const std::vector<double> predicted =
        simulate_model(fit.model, log.torque_in, log.dt(), log.theta_in.front(), 0.0);
    write_plot_data(log_path("fit_validation.csv"), "time_s", log.time_s,
                    {{"theta_measured_rad", log.theta_in},
                     {"theta_predicted_rad", predicted}});
    *out_ << "fit: J=" << format_double(fit.model.inertia)
          << " B=" << format_double(fit.model.damping)
          << " K=" << format_double(fit.model.stiffness) << " ("
          << format_double(fit.fit_percentage) << "% fit, " << fit.iterations
          << " iterations)\n";
    return fit;
}

void Session::report(const std::string& kind,
                     const std::map<std::string, std::string>& args) {
    if (kind == "stiffness") {
        const StiffnessBreakdown breakdown = total_stiffness(config_.transmission);
        std::ofstream out(log_path("stiffness.csv"), std::ios::binary);
        out << breakdown_csv(breakdown);
        *out_ << breakdown_csv(breakdown);
        return;
    }
    if (kind == "fit") {
        if (!last_fit_) {
            throw Error("no fit yet; run 'fitmodel' first");
        }
        *out_ << fit_csv(*last_fit_);
        return;
    }
    const auto log_arg = args.find("log");
    if (log_arg == args.end() || log_arg->second.empty()) {
        throw Error("report " + kind + " needs log=<trajectory.csv>");
    }
    const ExperimentLog log = load_experiment_log(log_arg->second);
    if (kind == "hysteresis") {
        const HysteresisReport r = hysteresis_metrics(log);
        std::ofstream out(log_path("hysteresis.csv"), std::ios::binary);
        out << hysteresis_csv(r);
        *out_ << hysteresis_csv(r);
        return;
    }
    if (kind == "tracking") {
        const TrackingReport r = tracking_report(log);
        std::ofstream out(log_path("tracking.csv"), std::ios::binary);
        out << tracking_csv(r);
        *out_ << tracking_csv(r);
        return;
    }
    throw Error("unknown report '" + kind + "'");
}

void Session::sweep(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || hi > 1.0 || points < 2) {
        throw Error("sweep needs 0 < lo < hi <= 1 and points >= 2");
    }
    std::vector<double> fractions(points);
    const double step = std::log(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
        fractions[i] = lo * std::exp(step * i);
    }
    const auto curve = air_fraction_sweep(config_.transmission, fractions);
    const double r = config_.transmission.radius_capstan_m;
    std::vector<double> xs, lin, rot;
    for (const auto& [fraction, k_linear] : curve) {
        xs.push_back(fraction);
        lin.push_back(k_linear);
        rot.push_back(k_linear * r * r);
    }
    write_plot_data(log_path("air_sweep.csv"), "fraction", xs,
                    {{"k_linear_N_per_m", lin}, {"k_rot_Nm_per_rad", rot}});
    log_event("sweep_points", static_cast<double>(points));
    *out_ << "wrote " << log_path("air_sweep.csv") << "\n";
}

bool Session::execute(const std::string& line) {
    const auto tokens = tokenize(line);
    if (tokens.empty()) {
        return true;
    }
    std::string verb = tokens[0];
    std::transform(verb.begin(), verb.end(), verb.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto args = parse_args(tokens, 1);

    try {
        if (verb == "status") {
            *out_ << status_text();
        } else if (verb == "pressurize") {
            pressurize();
            *out_ << "mode: " << mode_name(mode_.mode) << "\n";
        } else if (verb == "phase") {
            phase();
            *out_ << "mode: " << mode_name(mode_.mode) << ", phase offset "
                  << format_double(measure_phase_offset_deg(plant_, config_.plant))
                  << " deg\n";
        } else if (verb == "operate") {
            operate();
            *out_ << "mode: " << mode_name(mode_.mode) << "\n";
        } else if (verb == "hibernate") {
            hibernate();
            *out_ << "mode: " << mode_name(mode_.mode) << ", preload setpoint "
                  << format_double(plant_.line.regulator_setpoint_kpa) << " kPa\n";
        } else if (verb == "bleed") {
            do_bleed();
            *out_ << "mode: " << mode_name(mode_.mode) << ", undissolved air "
                  << format_double(100.0 * plant_.line.air_fraction) << " %\n";
        } else if (verb == "depressurize") {
            depressurize();
            *out_ << "mode: " << mode_name(mode_.mode) << "\n";
        } else if (verb == "runexperiment") {
            if (tokens.size() < 2) {
                throw Error("runexperiment needs a kind: stepfit|sinehysteresis|handtracking");
            }
            std::string kind = tokens[1];
            std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) {
                return static_cast<char>(std::tolower(c));
            });
            const auto kind_args = parse_args(tokens, 2);
            if (kind == "stepfit") {
                run_experiment(ExperimentKind::StepFit, kind_args);
            } else if (kind == "sinehysteresis") {
                run_experiment(ExperimentKind::SineHysteresis, kind_args);
            } else if (kind == "handtracking") {
                run_experiment(ExperimentKind::HandTracking, kind_args);
            } else {
                throw Error("unknown experiment '" + kind + "'");
            }
        } else if (verb == "fitmodel") {
            fit_model(args);
        } else if (verb == "report") {
            if (tokens.size() < 2) {
                throw Error("report needs a kind: stiffness|fit|hysteresis|tracking");
            }
            std::string kind = tokens[1];
            std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) {
                return static_cast<char>(std::tolower(c));
            });
            report(kind, parse_args(tokens, 2));
        } else if (verb == "sweep") {
            sweep(arg_number(args, "lo", 1e-5), arg_number(args, "hi", 1e-2),
                  static_cast<int>(arg_number(args, "points", 50)));
        } else if (verb == "help") {
            *out_ << kHelp;
        } else if (verb == "quit" || verb == "exit" || verb == "shutdown") {
            log_event("session_end", 0.0);
            return false;
        } else {
            *out_ << "unknown command '" << verb << "'\n" << kHelp;
        }
    } catch (const std::exception& e) {
        // Operator mistakes must never kill the session.
        *out_ << "error: " << e.what() << "\n";
    }
    return true;
}

void Session::run_script(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') {
            continue;
        }
        if (!execute(line)) {
            return;
        }
    }
}

void Session::repl(std::istream& in) {
    std::string line;
    *out_ << "> " << std::flush;
    while (std::getline(in, line)) {
        if (!execute(line)) {
            return;
        }
        *out_ << "> " << std::flush;
    }
}

}  // namespace rdt
