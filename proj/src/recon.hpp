#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "operators.hpp"
#include "phantom.hpp"

namespace curvetomo {

struct SolveOptions {
    std::size_t max_iter = 50;
    double tol = 1e-6;           // relative residual of the normal equations
    double tikhonov = 0.0;       // lambda in (N + lambda I) f = rhs
    const ImageGrid* truth = nullptr;
    double truth_radius = kInf;  // error evaluated on |x| <= truth_radius
};

struct SolveReport {
    std::string method;
    std::size_t iterations = 0;
    std::vector<double> residual_history;  // ||rhs - (N + lambda) f_k|| / ||rhs||, k = 0 .. iterations
    double rel_error_vs_truth = std::numeric_limits<double>::quiet_NaN();
    double data_residual = std::numeric_limits<double>::quiet_NaN();  // ||A f - g|| / ||g||
    bool converged = false;
    double runtime_seconds = 0.0;
};

/// Krylov solve of the symmetric-localized normal equations. Uses the conjugate
/// residual recurrence, whose residual norm is monotone on symmetric positive
/// semidefinite operators. Throws DivergenceError after 5 consecutive increases.
std::pair<ImageGrid, SolveReport> cg_normal_solve(const NormalOperator& N, const Sinogram& g,
                                                  const SolveOptions& opt = {});
std::pair<ImageGrid, SolveReport> cg_normal_solve(PhasePtr pf, WeightPtr mu, const CutoffAtlas& atlas,
                                                  const Sinogram& g, const GridSpec& grid,
                                                  const SolveOptions& opt = {});

/// Landweber iteration f += omega (rhs - N f), omega from a power-method bound.
std::pair<ImageGrid, SolveReport> landweber_solve(const NormalOperator& N, const Sinogram& g,
                                                  const SolveOptions& opt = {});

/// sqrt(||f||^2 + ||D+ f||^2): forward differences with zero padding, spacing-weighted.
double h1_norm(const ImageGrid& img);

/// Phase for a builtin motion family ("static", "rotation", "breathing", "affine")
/// at the given amplitude; amplitude 0 is the static geometry.
PhasePtr family_phase(const std::string& family, double amplitude, TimeRange t_range = TimeRange::full());

struct StabilityOptions {
    std::string family = "breathing";
    std::vector<double> amplitudes{0.0};
    std::size_t n_samples = 50;
    GridSpec grid{64, 1.0, 1.0};
    std::size_t ns = 96;
    std::size_t nt = 180;
    std::uint64_t seed = 0xC0FFEE;
    double k_radius = 0.9;
    std::size_t krylov_dim = 30;
    double blowup_factor = 1e3;
};

struct StabilityReport {
    std::string family;
    std::uint64_t seed = 0;
    std::vector<double> amplitudes;
    std::vector<std::vector<double>> ratios;  // ||f||_{L2(K)} / ||N f||_{H1} per random sample
    std::vector<double> min_ratio, max_ratio, median_ratio;
    std::vector<double> worst_case_ratio;     // Rayleigh-Ritz on a Krylov space
    std::vector<bool> flagged;                // blow-up relative to the static median
    double static_median = 0.0;
};

StabilityReport stability_probe(const StabilityOptions& opt);

struct PerturbationOptions {
    std::string family = "breathing";
    double base_amplitude = 0.0;
    double motion_scale = 1.0;   // amplitude shift per unit delta
    double weight_scale = 1.0;   // bump amplitude per unit delta
    std::vector<double> deltas{1e-3, 3e-3, 1e-2, 3e-2};
    GridSpec grid{64, 1.0, 0.9};
    std::size_t ns = 96;
    std::size_t nt = 180;
};

struct PerturbationReport {
    std::vector<double> deltas;
    std::vector<double> ratios;  // ||(N - N~) f||_{H1} / ||f||
    double slope = 0.0;          // over strictly positive deltas
    bool monotone = true;
};

PerturbationReport perturbation_sweep(const PerturbationOptions& opt, const ImageGrid& probe_f);

/// Mean |directional gradient| of recon over that of truth on a 5-pixel window
/// along the edge normal through cov.x.
double edge_response(const ImageGrid& recon, const ImageGrid& truth, const CovectorSample& cov);

struct SymbolOrderReport {
    std::vector<double> k;      // radial shells, cycles per grid width
    std::vector<double> ratio;  // mean |F(N f)| / mean |F f|
    double slope = 0.0;         // log-log fit over the band [4, n/4]
};

/// Order of the static normal operator measured on an analytic Gaussian of width sigma.
SymbolOrderReport symbol_order_probe(std::size_t n = 128, std::size_t nt = 720, double sigma = 0.03);

}  // namespace curvetomo
