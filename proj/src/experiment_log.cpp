#include "rdt/experiment_log.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rdt/errors.hpp"

namespace rdt {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& text, const std::string& origin) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument(text);
        }
        return value;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric field '" + text + "' in " + origin);
    }
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

void ExperimentLog::validate() const {
    const std::size_t n = time_s.size();
    if (n < 2) {
        throw Error("experiment log needs at least two samples");
    }
    if (torque_in.size() != n || torque_out.size() != n || theta_in.size() != n ||
        theta_out.size() != n) {
        throw Error("experiment log channels have mismatched lengths");
    }
    const double dt0 = time_s[1] - time_s[0];
    if (!(dt0 > 0.0)) {
        throw Error("experiment log time must be strictly increasing");
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double dt = time_s[i] - time_s[i - 1];
        if (!(dt > 0.0)) {
            throw Error("experiment log time must be strictly increasing");
        }
        if (std::abs(dt - dt0) > 1e-6 * dt0) {
            throw Error("experiment log sampling is not uniform");
        }
    }
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory,
                          const std::map<std::string, std::string>& metadata) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing");
    }
    for (const auto& [key, value] : metadata) {
        out << "# " << key << "=" << value << '\n';
    }
    out << kTrajectoryHeader << '\n';
    for (const TrajectoryRecord& r : trajectory) {
        out << format_double(r.time_s) << ',' << format_double(r.torque_in_nm) << ','
            << format_double(r.torque_out_nm) << ',' << format_double(r.theta_in_rad)
            << ',' << format_double(r.theta_out_rad) << ',' << format_double(r.water_kpa)
            << ',' << format_double(r.air_kpa) << ','
            << format_double(r.volume_offset_ml) << '\n';
    }
}

Trajectory read_trajectory_csv(const std::string& path,
                               std::map<std::string, std::string>* metadata) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open trajectory file '" + path + "'");
    }
    Trajectory trajectory;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (metadata && eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                while (!key.empty() && key.front() == ' ') key.erase(key.begin());
                while (!key.empty() && key.back() == ' ') key.pop_back();
                (*metadata)[key] = line.substr(eq + 1);
            }
            continue;
        }
        if (!header_seen) {
            if (line != kTrajectoryHeader) {
                throw Error("unexpected trajectory header in '" + path + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 8) {
            throw Error("bad trajectory row in '" + path + "'");
        }
        TrajectoryRecord r;
        r.time_s = parse_double(fields[0], path);
        r.torque_in_nm = parse_double(fields[1], path);
        r.torque_out_nm = parse_double(fields[2], path);
        r.theta_in_rad = parse_double(fields[3], path);
        r.theta_out_rad = parse_double(fields[4], path);
        r.water_kpa = parse_double(fields[5], path);
        r.air_kpa = parse_double(fields[6], path);
        r.volume_offset_ml = parse_double(fields[7], path);
        trajectory.push_back(r);
    }
    if (!header_seen) {
        throw Error("trajectory file '" + path + "' has no header");
    }
    return trajectory;
}

ExperimentLog log_from_trajectory(const Trajectory& trajectory,
                                  std::map<std::string, std::string> metadata) {
    ExperimentLog log;
    log.metadata = std::move(metadata);
    log.time_s.reserve(trajectory.size());
    for (const TrajectoryRecord& r : trajectory) {
        log.time_s.push_back(r.time_s);
        log.torque_in.push_back(r.torque_in_nm);
        log.torque_out.push_back(r.torque_out_nm);
        log.theta_in.push_back(r.theta_in_rad);
        log.theta_out.push_back(r.theta_out_rad);
    }
    if (trajectory.size() >= 2) {
        log.sample_rate_hz = 1.0 / (trajectory[1].time_s - trajectory[0].time_s);
    }
    log.validate();
    return log;
}

ExperimentLog load_experiment_log(const std::string& path) {
    std::map<std::string, std::string> metadata;
    const Trajectory trajectory = read_trajectory_csv(path, &metadata);
    return log_from_trajectory(trajectory, std::move(metadata));
}

std::vector<SchedulePoint> read_schedule_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open schedule file '" + path + "'");
    }
    std::string line;
    std::vector<SchedulePoint> schedule;
    int time_col = -1;
    int torque_col = -1;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (!header_seen) {
            for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
                if (fields[i] == "time_s") time_col = i;
                if (fields[i] == "torque_in_Nm") torque_col = i;
            }
            if (time_col < 0 || torque_col < 0) {
                throw Error("schedule '" + path + "' needs time_s and torque_in_Nm columns");
            }
            header_seen = true;
            continue;
        }
        if (static_cast<int>(fields.size()) <= std::max(time_col, torque_col)) {
            throw Error("bad schedule row in '" + path + "'");
        }
        schedule.push_back({parse_double(fields[time_col], path),
                            parse_double(fields[torque_col], path)});
    }
    if (schedule.empty()) {
        throw Error("schedule '" + path + "' has no samples");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (!(schedule[i].time_s > schedule[i - 1].time_s)) {
            throw Error("schedule time must be strictly increasing");
        }
    }
    return schedule;
}

double schedule_torque(const std::vector<SchedulePoint>& schedule, double t) {
    if (schedule.empty() || t < schedule.front().time_s) {
        return 0.0;
    }
    // zero-order hold
    std::size_t lo = 0;
    std::size_t hi = schedule.size();
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (schedule[mid].time_s <= t) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return schedule[lo].torque_in_nm;
}

EventWriter::EventWriter(const std::string& path)
    : out_(std::make_unique<std::ofstream>(path, std::ios::binary)) {
    if (!*out_) {
        throw Error("cannot open event log '" + path + "'");
    }
    *out_ << "time,mode,event,value\n";
}

EventWriter::~EventWriter() = default;
EventWriter::EventWriter(EventWriter&&) noexcept = default;
EventWriter& EventWriter::operator=(EventWriter&&) noexcept = default;

void EventWriter::write(double time_s, const std::string& mode, const std::string& event,
                        double value) {
    if (out_) {
        *out_ << format_double(time_s) << ',' << mode << ',' << event << ','
              << format_double(value) << '\n';
        out_->flush();
    }
}

}  // namespace rdt
