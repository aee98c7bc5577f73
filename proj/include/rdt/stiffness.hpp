#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace rdt {

enum class FluidPhase { Water, Air };

// How the series budget counts the translating core's two termination walls:
// as two springs in series (2/K_core, reproduces the reference component
// budget) or as a parallel pair (1/(2*K_core), kept for comparison because
// the two readings disagree by ~10% on the total).
enum class CompositionMode { CoreParallel, CoreSeries };

struct FluidProperties {
    double bulk_modulus_water_pa = 2.20e9;
    // Effective bulk modulus of entrained air near atmospheric pressure
    // (isentropic, gamma * ~1 atm).
    double bulk_modulus_air_pa = 1.42e5;
    double area_cylinder_m2 = 9.62e-4;
    double area_hose_m2 = 3.17e-5;
    double length_cylinder_m = 3.80e-2;
    double length_hose_m = 4.26e-2;
    double fraction_water = 0.9999;  // volume fraction, dimensionless
    double fraction_air = 1e-4;

    void validate() const;
};

struct TransmissionConfig {
    double pressure_max_pa = 1.7e6;    // rated diaphragm pressure
    double radius_piston_m = 0.015;
    double radius_capstan_m = 0.010;
    double cable_modulus_pa = 200e9;   // 304 stainless
    double cable_area_m2 = 1.2e-6;     // effective metallic cross-section
    double cable_free_length_m = 2.67261e-2;  // capstan to wrap-around wall
    double stiffness_core_n_per_m = 3.80e6;       // measured constant
    double stiffness_diaphragm_n_per_m = 1.02e6;  // measured constant
    FluidProperties fluid;
    CompositionMode composition_mode = CompositionMode::CoreSeries;

    void validate() const;
};

struct StiffnessBreakdown {
    double k_water = 0;
    double k_air = 0;
    double k_cable = 0;
    double k_core = 0;
    double k_diaphragm = 0;
    double k_total_linear = 0;      // N/m
    double k_total_rotational = 0;  // N*m/rad over the capstan
    std::map<std::string, double> compliance_share;  // component -> fraction of total compliance
};

// Preload tensions and moment arms on the two sides of the capstan pillar.
struct CableTensionSet {
    double tension_left_n = 0;
    double tension_right_n = 0;
    double arm_left_m = 0;
    double arm_right_m = 0;
};

// Axial stiffness of one fluid column: the cylinder volume appears twice
// (one chamber per diaphragm), the hose once, all scaled by the phase fraction.
double fluid_stiffness(const FluidProperties& props, FluidPhase phase);

// K = E*A/L
double cable_stiffness(double modulus_pa, double area_m2, double length_m);

// Series-combine explicit component stiffnesses and fill the compliance shares.
StiffnessBreakdown compose_stiffness(double k_water, double k_air, double k_cable,
                                     double k_core, double k_diaphragm,
                                     CompositionMode mode, double radius_capstan_m);

StiffnessBreakdown total_stiffness(const TransmissionConfig& config);

// Recompute k_air (only) for each air fraction and return (fraction, k_total_linear).
std::vector<std::pair<double, double>> air_fraction_sweep(const TransmissionConfig& config,
                                                          const std::vector<double>& fractions);

// F = (P/2) * pi * r^2 : rated pressure acts across one diaphragm piston,
// the opposed layout halves the usable differential.
double max_force(double pressure_max_pa, double radius_piston_m);

double max_torque(double force_n, double radius_capstan_m);

// Net moment of the four cable terminations about the pillar axis. Each side
// contributes one departure and one termination at equal arms, so the sum
// vanishes for any symmetric layout.
double moment_balance_residual(const CableTensionSet& tensions);
double moment_balance_residual(double tension_left, double arm_left_depart,
                               double arm_left_terminate, double tension_right,
                               double arm_right_depart, double arm_right_terminate);

// CSV rows: component,stiffness_N_per_m,compliance_share
std::string breakdown_csv(const StiffnessBreakdown& breakdown);

}  // namespace rdt
