#include "rdt/sysid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace rdt {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
constexpr double kEncoderCountsPerRev = 8000.0;
constexpr double kVelocityDeadband = 1e-4;  // rad/s, branch/stick separation
constexpr double kFullTorqueRange = 6.0;    // N*m, rated output torque basis

std::vector<double> central_velocity(const std::vector<double>& theta, double dt) {
    const std::size_t n = theta.size();
    std::vector<double> vel(n, 0.0);
    if (n < 2) {
        return vel;
    }
    vel[0] = (theta[1] - theta[0]) / dt;
    vel[n - 1] = (theta[n - 1] - theta[n - 2]) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        vel[i] = (theta[i + 1] - theta[i - 1]) / (2.0 * dt);
    }
    return vel;
}

// Solve the 3x3 system A*x = b in place; returns false when a pivot vanishes.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int row = col + 1; row < 3; ++row) {
            if (std::abs(a[row][col]) > std::abs(a[pivot][col])) {
                pivot = row;
            }
        }
        if (!(std::abs(a[pivot][col]) > 1e-300)) {
            return false;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int row = col + 1; row < 3; ++row) {
            const double f = a[row][col] / a[col][col];
            for (int k = col; k < 3; ++k) {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    for (int row = 2; row >= 0; --row) {
        double sum = b[row];
        for (int k = row + 1; k < 3; ++k) {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    return x[0] == x[0] && x[1] == x[1] && x[2] == x[2];
}

double sum_of_squares(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return s;
}

struct BranchCurve {
    std::vector<double> angle;
    std::vector<double> torque;
};

// Average (angle, torque) per encoder-count bin for one motion direction.
BranchCurve bin_branch(const std::vector<double>& theta, const std::vector<double>& torque,
                       const std::vector<bool>& mask) {
    std::map<long long, std::pair<double, double>> sums;  // count -> (sum th, sum tq)
    std::map<long long, int> counts;
    const double res = kTwoPi / kEncoderCountsPerRev;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!mask[i]) {
            continue;
        }
        const long long c = static_cast<long long>(std::floor(theta[i] / res));
        sums[c].first += theta[i];
        sums[c].second += torque[i];
        counts[c] += 1;
    }
    BranchCurve curve;
    for (const auto& [c, s] : sums) {
        const int n = counts[c];
        curve.angle.push_back(s.first / n);
        curve.torque.push_back(s.second / n);
    }
    return curve;
}

double interp(const BranchCurve& curve, double x) {
    const auto& xs = curve.angle;
    const auto& ys = curve.torque;
    if (x <= xs.front()) {
        return ys.front();
    }
    if (x >= xs.back()) {
        return ys.back();
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

// Least-squares line through (0..n-1, y), returns value at index `at`.
double line_fit_value(const std::vector<double>& y, std::size_t begin, std::size_t count,
                      double at) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = static_cast<double>(i);
        const double v = y[begin + i];
        sx += x;
        sy += v;
        sxx += x * x;
        sxy += x * v;
    }
    const double n = static_cast<double>(count);
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) {
        return sy / n;
    }
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return intercept + slope * at;
}

}  // namespace

std::vector<double> simulate_model(const SecondOrderModel& model,
                                   const std::vector<double>& torque, double dt,
                                   double theta0, double omega0) {
    if (!(dt > 0.0)) {
        throw NonPositiveDt("dt must be > 0");
    }
    model.validate();
    std::vector<double> theta(torque.size());
    double th = theta0;
    double om = omega0;
    for (std::size_t k = 0; k < torque.size(); ++k) {
        theta[k] = th;
        const double net = torque[k] - model.damping * om - model.stiffness * th;
        shaft_step(th, om, model.inertia, net, 0.0, 0.0, dt);
    }
    return theta;
}

double fit_percentage(const std::vector<double>& measured,
                      const std::vector<double>& predicted) {
    const std::size_t n = std::min(measured.size(), predicted.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += measured[i];
    }
    mean /= static_cast<double>(n);
    double err = 0.0;
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = measured[i] - predicted[i];
        err += e * e;
        const double d = measured[i] - mean;
        spread += d * d;
    }
    if (spread == 0.0) {
        return err == 0.0 ? 100.0 : -std::numeric_limits<double>::infinity();
    }
    return 100.0 * (1.0 - std::sqrt(err / spread));
}

FitResult fit_second_order(const ExperimentLog& log, const SecondOrderModel& init) {
    log.validate();
    init.validate();
    if (!(init.damping > 0.0) || !(init.stiffness > 0.0)) {
        throw NonPositiveInput("initial guess must be strictly positive for a log-space fit");
    }
    if (log.size() < 30) {
        throw Error("log too short: need at least 10 samples per parameter");
    }
    const double dt = log.dt();
    const std::vector<double>& torque = log.torque_in;
    const std::vector<double>& theta_meas = log.theta_in;
    const double theta0 = theta_meas.front();

    // Parameters live in log space to keep them positive without constraints.
    std::array<double, 3> p = {std::log(init.inertia), std::log(init.damping),
                               std::log(init.stiffness)};

    const auto residual = [&](const std::array<double, 3>& q, std::vector<double>& r) {
        SecondOrderModel m;
        m.inertia = std::exp(q[0]);
        m.damping = std::exp(q[1]);
        m.stiffness = std::exp(q[2]);
        const std::vector<double> pred = simulate_model(m, torque, dt, theta0, 0.0);
        r.resize(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            r[i] = theta_meas[i] - pred[i];
        }
    };

    std::vector<double> r;
    residual(p, r);
    double cost = sum_of_squares(r);

    FitResult result;
    result.initial_guess = init;
    result.cost_history.push_back(cost);

    const auto finish = [&](const std::array<double, 3>& q, int iterations) {
        result.model.inertia = std::exp(q[0]);
        result.model.damping = std::exp(q[1]);
        result.model.stiffness = std::exp(q[2]);
        result.iterations = iterations;
        std::vector<double> rr;
        residual(q, rr);
        result.residual_rms =
            std::sqrt(sum_of_squares(rr) / static_cast<double>(rr.size()));
        const std::vector<double> pred =
            simulate_model(result.model, torque, dt, theta0, 0.0);
        result.fit_percentage = fit_percentage(theta_meas, pred);
        return result;
    };

    const double measured_scale = sum_of_squares(theta_meas);
    if (measured_scale <= 1e-30 && cost <= 1e-30) {
        throw NoImprovement("log carries no signal to fit", finish(p, 0));
    }
    if (cost <= 1e-24 * measured_scale) {
        return finish(p, 0);  // the initial guess already explains the log
    }

    double lambda = 1e-3;
    int accepted_total = 0;
    const int max_iterations = 100;
    std::vector<double> r_trial;
    for (int iteration = 0; iteration < max_iterations; ++iteration) {
        // Finite-difference Jacobian of the residual w.r.t. log-parameters.
        std::array<std::vector<double>, 3> jac;
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
            std::array<double, 3> q = p;
            q[j] += h;
            residual(q, jac[j]);
            for (std::size_t i = 0; i < r.size(); ++i) {
                jac[j][i] = (jac[j][i] - r[i]) / h;
            }
        }
        std::array<std::array<double, 3>, 3> jtj{};
        std::array<double, 3> jtr{};
        for (int a = 0; a < 3; ++a) {
            for (int b = a; b < 3; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < r.size(); ++i) {
                    s += jac[a][i] * jac[b][i];
                }
                jtj[a][b] = s;
                jtj[b][a] = s;
            }
            double s = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                s += jac[a][i] * r[i];
            }
            jtr[a] = -s;  // descent direction for cost = |r|^2
        }
        if (jtj[0][0] == 0.0 && jtj[1][1] == 0.0 && jtj[2][2] == 0.0) {
            throw SingularJacobian("residual is insensitive to every parameter");
        }

        bool accepted = false;
        std::array<double, 3> delta{};
        for (int attempt = 0; attempt < 16; ++attempt) {
            auto damped = jtj;
            for (int d = 0; d < 3; ++d) {
                damped[d][d] += lambda * (jtj[d][d] > 0.0 ? jtj[d][d] : 1.0);
            }
            if (!solve3(damped, jtr, delta)) {
                lambda *= 10.0;
                continue;
            }
            const std::array<double, 3> q = {p[0] + delta[0], p[1] + delta[1],
                                             p[2] + delta[2]};
            residual(q, r_trial);
            const double trial_cost = sum_of_squares(r_trial);
            if (trial_cost < cost) {
                p = q;
                r = r_trial;
                const double improvement = (cost - trial_cost) / std::max(cost, 1e-300);
                cost = trial_cost;
                lambda = std::max(lambda / 10.0, 1e-12);
                result.cost_history.push_back(cost);
                ++accepted_total;
                accepted = true;
                if (improvement < 1e-12) {
                    return finish(p, iteration + 1);
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            if (accepted_total == 0) {
                throw NoImprovement("no Gauss-Newton step improved the fit",
                                    finish(p, iteration + 1));
            }
            return finish(p, iteration + 1);
        }
        const double step_norm = std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] +
                                           delta[2] * delta[2]);
        if (step_norm < 1e-10) {
            return finish(p, iteration + 1);
        }
    }
    return finish(p, max_iterations);
}

double validate_model(const SecondOrderModel& model, const ExperimentLog& log) {
    log.validate();
    const std::vector<double> pred =
        simulate_model(model, log.torque_in, log.dt(), log.theta_in.front(), 0.0);
    return fit_percentage(log.theta_in, pred);
}

HysteresisReport hysteresis_metrics(const ExperimentLog& log) {
    log.validate();
    const double dt = log.dt();
    const std::vector<double>& theta = log.theta_in;
    const std::vector<double>& torque = log.torque_in;
    const std::size_t n = theta.size();
    const std::vector<double> vel = central_velocity(theta, dt);

    std::vector<bool> asc(n), desc(n);
    std::size_t n_asc = 0;
    std::size_t n_desc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        asc[i] = vel[i] > kVelocityDeadband;
        desc[i] = vel[i] < -kVelocityDeadband;
        n_asc += asc[i];
        n_desc += desc[i];
    }
    if (n_asc < 10 || n_desc < 10) {
        throw InsufficientCycle("log does not cover a full loading/unloading cycle");
    }

    const BranchCurve up = bin_branch(theta, torque, asc);
    const BranchCurve down = bin_branch(theta, torque, desc);
    if (up.angle.size() < 3 || down.angle.size() < 3) {
        throw InsufficientCycle("branches too short for a hysteresis estimate");
    }
    const double lo = std::max(up.angle.front(), down.angle.front());
    const double hi = std::min(up.angle.back(), down.angle.back());
    if (!(hi > lo)) {
        throw InsufficientCycle("loading and unloading branches do not overlap");
    }

    HysteresisReport report;
    // Trim the extremities: the stick segments live there and belong to the
    // static-friction metric, not the branch gap.
    const double span = hi - lo;
    const int grid = 201;
    for (int i = 0; i < grid; ++i) {
        const double x = lo + span * (0.05 + 0.90 * i / (grid - 1));
        const double gap = std::abs(interp(up, x) - interp(down, x));
        report.max_hysteresis_nm = std::max(report.max_hysteresis_nm, gap);
    }

    // Static friction: torque keeps moving while the shaft is held still at a
    // stroke reversal. Endpoint line fits reject sensor noise without lagging
    // the release point.
    const double res = kTwoPi / kEncoderCountsPerRev;
    const double th_max = *std::max_element(theta.begin(), theta.end());
    const double th_min = *std::min_element(theta.begin(), theta.end());
    const std::size_t fit_w = 51;
    std::size_t i = 0;
    while (i < n) {
        const bool still = std::abs(vel[i]) <= kVelocityDeadband;
        const bool near_ext =
            std::abs(theta[i] - th_max) < res || std::abs(theta[i] - th_min) < res;
        if (!(still && near_ext)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && std::abs(vel[j + 1]) <= kVelocityDeadband &&
               (std::abs(theta[j + 1] - th_max) < res ||
                std::abs(theta[j + 1] - th_min) < res)) {
            ++j;
        }
        const std::size_t len = j - i + 1;
        if (len >= 2 * fit_w) {
            const double start = line_fit_value(torque, i, fit_w, 0.0);
            const double end = line_fit_value(torque, j - fit_w + 1, fit_w,
                                              static_cast<double>(fit_w - 1));
            report.static_friction_nm =
                std::max(report.static_friction_nm, std::abs(start - end));
        }
        i = j + 1;
    }

    report.percent_of_range = 100.0 * report.max_hysteresis_nm / kFullTorqueRange;
    return report;
}

TrackingReport tracking_report(const ExperimentLog& log) {
    log.validate();
    TrackingReport report;
    const std::size_t n = log.size();
    double sum_a2 = 0.0;
    double sum_t2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ea = log.theta_in[i] - log.theta_out[i];
        const double et = log.torque_in[i] - log.torque_out[i];
        sum_a2 += ea * ea;
        sum_t2 += et * et;
        report.peak_angle_error_rad = std::max(report.peak_angle_error_rad, std::abs(ea));
        report.peak_torque_error_nm = std::max(report.peak_torque_error_nm, std::abs(et));
    }
    report.rms_angle_error_rad = std::sqrt(sum_a2 / static_cast<double>(n));
    report.rms_torque_error_nm = std::sqrt(sum_t2 / static_cast<double>(n));

    // Mechanical advantage: slope of torque_out regressed on torque_in.
    double mean_in = 0.0;
    double mean_out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_in += log.torque_in[i];
        mean_out += log.torque_out[i];
    }
    mean_in /= static_cast<double>(n);
    mean_out /= static_cast<double>(n);
    double cov = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = log.torque_in[i] - mean_in;
        cov += dx * (log.torque_out[i] - mean_out);
        var += dx * dx;
    }
    report.torque_slope = var > 0.0 ? cov / var : 0.0;
    return report;
}

std::string fit_csv(const FitResult& fit) {
    std::ostringstream out;
    out << "quantity,value\n";
    out << "inertia_kgm2," << format_double(fit.model.inertia) << '\n';
    out << "damping_Nms_per_rad," << format_double(fit.model.damping) << '\n';
    out << "stiffness_Nm_per_rad," << format_double(fit.model.stiffness) << '\n';
    out << "fit_percentage," << format_double(fit.fit_percentage) << '\n';
    out << "residual_rms_rad," << format_double(fit.residual_rms) << '\n';
    out << "iterations," << fit.iterations << '\n';
    out << "initial_inertia_kgm2," << format_double(fit.initial_guess.inertia) << '\n';
    out << "initial_damping_Nms_per_rad," << format_double(fit.initial_guess.damping)
        << '\n';
    out << "initial_stiffness_Nm_per_rad," << format_double(fit.initial_guess.stiffness)
        << '\n';
    return out.str();
}

std::string hysteresis_csv(const HysteresisReport& report) {
    std::ostringstream out;
    out << "quantity,value\n";
    out << "max_hysteresis_Nm," << format_double(report.max_hysteresis_nm) << '\n';
    out << "static_friction_Nm," << format_double(report.static_friction_nm) << '\n';
    out << "percent_of_range," << format_double(report.percent_of_range) << '\n';
    return out.str();
}

std::string tracking_csv(const TrackingReport& report) {
    std::ostringstream out;
    out << "quantity,value\n";
    out << "rms_angle_error_rad," << format_double(report.rms_angle_error_rad) << '\n';
    out << "rms_torque_error_Nm," << format_double(report.rms_torque_error_nm) << '\n';
    out << "peak_angle_error_rad," << format_double(report.peak_angle_error_rad) << '\n';
    out << "peak_torque_error_Nm," << format_double(report.peak_torque_error_nm) << '\n';
    out << "torque_slope," << format_double(report.torque_slope) << '\n';
    return out.str();
}

void write_plot_data(const std::string& path, const std::string& x_name,
                     const std::vector<double>& x,
                     const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open plot file '" + path + "'");
    }
    out << x_name;
    for (const auto& [name, _] : curves) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << format_double(x[i]);
        for (const auto& [_, ys] : curves) {
            out << ',' << (i < ys.size() ? format_double(ys[i]) : "");
        }
        out << '\n';
    }
}

}  // namespace rdt
