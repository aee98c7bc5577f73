#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rdt {

// One row of the trajectory CSV.
struct TrajectoryRecord {
    double time_s = 0.0;
    double torque_in_nm = 0.0;
    double torque_out_nm = 0.0;
    double theta_in_rad = 0.0;
    double theta_out_rad = 0.0;
    double water_kpa = 0.0;
    double air_kpa = 0.0;
    double volume_offset_ml = 0.0;
};

using Trajectory = std::vector<TrajectoryRecord>;

inline constexpr const char* kTrajectoryHeader =
    "time_s,torque_in_Nm,torque_out_Nm,theta_in_rad,theta_out_rad,water_kPa,air_kPa,"
    "volume_offset_mL";

// Uniformly sampled experiment channels consumed by the analysis routines.
struct ExperimentLog {
    std::vector<double> time_s;
    std::vector<double> torque_in;
    std::vector<double> torque_out;
    std::vector<double> theta_in;
    std::vector<double> theta_out;
    double sample_rate_hz = 0.0;
    std::map<std::string, std::string> metadata;

    std::size_t size() const { return time_s.size(); }
    double dt() const { return sample_rate_hz > 0 ? 1.0 / sample_rate_hz : 0.0; }

    // Time strictly increasing and uniform within 1 ppm; channels equally long.
    void validate() const;
};

// Deterministic formatting shared by every CSV writer ("%.12g").
std::string format_double(double value);

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory,
                          const std::map<std::string, std::string>& metadata = {});
Trajectory read_trajectory_csv(const std::string& path,
                               std::map<std::string, std::string>* metadata = nullptr);

ExperimentLog log_from_trajectory(const Trajectory& trajectory,
                                  std::map<std::string, std::string> metadata = {});
ExperimentLog load_experiment_log(const std::string& path);

// Replayable input schedule: CSV with at least time_s and torque_in_Nm columns.
struct SchedulePoint {
    double time_s = 0.0;
    double torque_in_nm = 0.0;
};
std::vector<SchedulePoint> read_schedule_csv(const std::string& path);

// Zero-order-hold sample of a schedule at time t.
double schedule_torque(const std::vector<SchedulePoint>& schedule, double t);

// Structured event log: time,mode,event,value rows.
class EventWriter {
public:
    EventWriter() = default;
    explicit EventWriter(const std::string& path);
    ~EventWriter();
    EventWriter(EventWriter&&) noexcept;
    EventWriter& operator=(EventWriter&&) noexcept;

    void write(double time_s, const std::string& mode, const std::string& event,
               double value);
    bool open() const { return out_ != nullptr; }

private:
    std::unique_ptr<std::ofstream> out_;
};

}  // namespace rdt
