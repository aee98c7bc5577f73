#pragma once

#include <string>
#include <vector>

#include "rdt/errors.hpp"
#include "rdt/experiment_log.hpp"
#include "rdt/plant.hpp"

namespace rdt {

struct FitResult {
    SecondOrderModel model;
    double fit_percentage = 0.0;  // 100*(1 - |e| / |y - mean(y)|)
    double residual_rms = 0.0;    // rad
    SecondOrderModel initial_guess;
    std::vector<double> cost_history;  // accepted iterations, sum of squares
    int iterations = 0;
};

struct NoImprovement : Error {
    NoImprovement(const std::string& what, FitResult best_so_far)
        : Error(what), best(std::move(best_so_far)) {}
    FitResult best;
};

struct HysteresisReport {
    double max_hysteresis_nm = 0.0;   // largest branch gap at equal angle
    double static_friction_nm = 0.0;  // torque travel with the shaft held still
    double percent_of_range = 0.0;    // max hysteresis on the 6 N*m full range
};

struct TrackingReport {
    double rms_angle_error_rad = 0.0;
    double rms_torque_error_nm = 0.0;
    double peak_angle_error_rad = 0.0;
    double peak_torque_error_nm = 0.0;
    double torque_slope = 0.0;  // regression of torque_out on torque_in
};

// Integrate J*th'' + B*th' + K*th = tau with the same semi-implicit Euler
// scheme as the plant (frictionless), one theta sample per torque sample.
std::vector<double> simulate_model(const SecondOrderModel& model,
                                   const std::vector<double>& torque, double dt,
                                   double theta0 = 0.0, double omega0 = 0.0);

double fit_percentage(const std::vector<double>& measured,
                      const std::vector<double>& predicted);

// Output-error fit of (J, B, K) to the log's torque_in -> theta_in pair.
// Damped Gauss-Newton over log-parameters with a finite-difference Jacobian.
FitResult fit_second_order(const ExperimentLog& log, const SecondOrderModel& init);

// Simulate the model on the log's input torque and score it against the
// measured position.
double validate_model(const SecondOrderModel& model, const ExperimentLog& log);

// Branch-separated torque-vs-angle analysis of one loaded/unloaded cycle.
HysteresisReport hysteresis_metrics(const ExperimentLog& log);

TrackingReport tracking_report(const ExperimentLog& log);

std::string fit_csv(const FitResult& fit);
std::string hysteresis_csv(const HysteresisReport& report);
std::string tracking_csv(const TrackingReport& report);

// Plot data: x plus one column per named curve.
void write_plot_data(const std::string& path, const std::string& x_name,
                     const std::vector<double>& x,
                     const std::vector<std::pair<std::string, std::vector<double>>>& curves);

}  // namespace rdt
