#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homstokes/cell.hpp"
#include "homstokes/config.hpp"
#include "homstokes/norms.hpp"

namespace homstokes {

inline constexpr std::array<const char*, 5> kErrorColumns{"l2_u", "h1_twoscale", "l2_pressure", "l2_w", "h1_w"};

struct RateRow {
    double epsilon = 0.0;
    int M = 0;
    // CSV columns
    double l2_u = 0.0;         ///< ||u_eps - u0||_L2
    double h1_twoscale = 0.0;  ///< ||u_eps - v_eps||_H1
    double l2_pressure = 0.0;  ///< ||p_eps - (p0 + pi^eps S grad u0 - mean)||_L2
    double l2_w = 0.0, h1_w = 0.0;
    double bl_const = 0.0;     ///< max over u_eps, u0, w and r in {eps, 2 eps}
    // diagnostics
    double z_h1 = 0.0;              ///< ||u_eps - v_eps + w_eps||_H1
    double h1_truncated = 0.0;      ///< ||u_eps - u0 - eps (1 - theta~) chi^eps S grad u0||_H1
    double l2_pressure_plain = 0.0; ///< ||p_eps - p0||_L2
    double u0_h2 = 0.0;
    double extension_ratio = 0.0;
    double compatibility_shift = 0.0;
    std::array<double, 6> bl{};     ///< (u_eps, u0, w) x (eps, 2 eps)
    int iterations_fine = 0, iterations_w = 0;
    std::vector<std::string> warnings;
    double seconds = 0.0;

    [[nodiscard]] double column(int k) const;
};

struct RateReport {
    StudyConfig config;
    EffectiveTensor effective;
    bool cache_hit = false;
    std::vector<RateRow> rows;                         ///< epsilon descending
    std::array<std::optional<RateFit>, 5> fits;        ///< per kErrorColumns entry
    std::optional<RateFit> z_fit;
    int first_fitted_row = 0;                          ///< 1 when the coarsest row was dropped
};

/// Corrector cache directory resolved from the config, the HS_CACHE_DIR
/// variable and the --no-cache switch (empty path: no caching).
[[nodiscard]] std::filesystem::path resolve_cache_dir(const StudyConfig& cfg, bool no_cache);

/// Throws SolverError / PreconditionError with the offending epsilon in the message.
[[nodiscard]] RateReport run_convergence_study(const StudyConfig& cfg, const std::filesystem::path& cache_dir,
                                               std::ostream* log = nullptr);

void write_rates_csv(const RateReport& report, std::ostream& out);
void write_rates_report(const RateReport& report, std::ostream& out);

/// Gate violations (empty when all configured gates hold).
[[nodiscard]] std::vector<std::string> check_gates(const RateReport& report, const RateGates& gates);

struct MmsRow {
    int M = 0;
    double l2_u = 0.0, l2_p = 0.0;
    int iterations = 0;
};
struct MmsReport {
    std::string label;
    std::vector<MmsRow> rows;
    RateFit velocity, pressure;  ///< slopes in h
};
[[nodiscard]] MmsReport run_mms_study(const std::optional<CoefficientTensor>& A, double eps,
                                      std::span<const int> grids, double tol, Recipe recipe = Recipe::Vortex);

struct SmoothingReport {
    std::vector<double> epsilons;
    std::array<std::vector<double>, 3> ratios;  ///< ||S u - u|| / (eps ||grad u||) per test field
    double ratio_bound = 0.0;                   ///< sqrt(d)
    double max_ratio = 0.0;
    double worst_excess = 0.0;                  ///< max of ||f^eps S u|| - ||f||_Y ||u||
    int product_checks = 0;
    double linearity_defect = 0.0;
    [[nodiscard]] bool pass(double slack = 1e-8) const;
};
/// Properties of S_eps: the O(eps) approximation ratio on three smooth fields and
/// the periodic product bound for every corrector component against `samples`
/// random smooth fields.
[[nodiscard]] SmoothingReport run_smoothing_suite(const CorrectorSet& correctors, std::span<const double> epsilons,
                                                  int samples = 10, unsigned long long seed = 20240917);

struct IdentityRun {
    int N = 0;
    EffectiveTensor effective;
    IdentityReport report;
    double b_raw_mean = 0.0;
    double seconds = 0.0;
};
[[nodiscard]] IdentityRun run_identities(const CoefficientTensor& A, int N, double tol);

/// Residual names and values in a fixed order: b1, qpi, decomposition.
[[nodiscard]] std::array<std::pair<const char*, double>, 3> refinement_residuals(const IdentityReport& r);
/// Violations of: every refinement residual drops by `factor` per doubling or
/// sits at or below `floor`; skew exactly zero; means <= mean_tol.
[[nodiscard]] std::vector<std::string> check_identity_refinement(std::span<const IdentityRun> runs, double factor,
                                                                 double floor, double mean_tol);

}  // namespace homstokes
