#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradreduce/stochastic.hpp"

namespace gradreduce {

struct DomainConfig {
    double length = 3.141592653589793;
};

struct BasisConfig {
    int n_modes = 64;
    int n_quad = 0; // 0 = 2 n_modes
};

struct PotentialConfig {
    std::string kind = "double_well"; // zero | linear | double_well
    double epsilon = 0.5;
    double r_core = 1.0;
    double r_cut = 2.5;
    double lipschitz_bound = 0.0; // 0 = densely sampled bound
    double slope = 0.0;           // linear kind: V'(u) = slope * u
};

struct ReductionConfig {
    int m = 3;
    double tol = 1e-12;
    int max_iter = 200;
    /// Newton seeds; empty = 0 and +-s e_j for s in {0.5, 1, 2}.
    std::vector<std::vector<double>> seeds;
    double scan_min = -2.0;
    double scan_max = 2.0;
    int scan_points = 81;
};

struct SlopeWindow {
    double lower = 0.0;
    double upper = 1e300;
};

struct DynamicsConfig {
    double dt = 1e-3;
    double T = 10.0;
    int save_every = 10;
    /// Initial coefficients u_1, u_2, ...; missing entries are zero.
    std::vector<double> u0 = {0.5, 0.3};
    std::vector<int> cutoffs = {3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    double burn_in_rate = 1e-6;
    SlopeWindow flat{0.7, 1.3};
    SlopeWindow phi0{1.7, 2.3};
    SlopeWindow static_tail{1.7, 2.3};
    SlopeWindow eta{1.0, 1e300};
    SlopeWindow etaprime{1.0, 1e300};
};

/// How the stochastic and LDP layers see W: the reduced potential itself or a
/// Hermite table of it on [-radius, radius]^m.
struct LandscapeConfig {
    bool tabulate = false;
    double radius = 3.0;
    int intervals = 200;
};

struct SdeSection {
    double nu = 0.05;
    double dt = 1e-3;
    long n_paths = 1000;
    std::uint64_t seed = 1;
    double T = 1.0;
    std::vector<double> mu0; // empty = origin
};

struct FpSection {
    std::vector<GridAxis> box; // one axis per reduced coordinate
    double dt = 0.0;           // 0 = 0.9 of the stability limit
    double T = 1.0;
    int save_every = 100;
    std::string initial = "gaussian"; // gibbs | gaussian | delta
    std::vector<double> x0;           // centre of the initial density
    double variance = 0.05;
};

struct LdpSection {
    double alpha = 0.25;
    std::string optimizer = "quasi_newton";
    int K = 200;
    double T0 = 4.0;
    double dt = 0.02;
    double tol = 1e-8;
    double tol_rel = 1e-3;
    int max_iter = 2000;
    int max_doublings = 8;
    std::vector<double> x_hat;                 // guess for the base equilibrium
    std::vector<std::vector<double>> targets;  // quasi-potential scan points
    double theta_min = -1.0;                   // Mane parametric family range
    double theta_max = 1.0;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv"};
};

struct ExperimentConfig {
    int schema_version = 1;
    DomainConfig domain;
    BasisConfig basis;
    PotentialConfig potential;
    ReductionConfig reduction;
    DynamicsConfig dynamics;
    LandscapeConfig landscape;
    SdeSection sde;
    FpSection fp;
    LdpSection ldp;
    OutputConfig output;
};

/// Parses and validates. Unknown keys, wrong types and violated module guards
/// raise ConfigInvalid (ContractionViolated when q >= 1).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON text with every field written out.
std::string serialize_config(const ExperimentConfig& config);

/// SHA-256 of the canonical serialization, hex encoded.
std::string config_hash(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

} // namespace gradreduce
