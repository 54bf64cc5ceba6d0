#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homstokes/coefficient.hpp"
#include "homstokes/domain.hpp"
#include "homstokes/twoscale.hpp"

namespace homstokes {

enum class SolveKind { Fine, Homogenized };

/// Optional gates checked by `rates`; unset entries are not checked.
struct RateGates {
    std::optional<double> min_slope_l2_u, max_slope_l2_u, min_r2_l2_u;
    std::optional<double> min_slope_h1_twoscale, min_slope_l2_pressure;
    std::optional<double> min_slope_l2_w, min_slope_h1_w;
    std::optional<double> max_bl_const;
    std::optional<double> max_error;  ///< bound on every error column (null tests)
    bool monotone = false;            ///< l2_u, h1_twoscale, l2_pressure nonincreasing
    [[nodiscard]] bool any() const;
};

struct StudyConfig {
    // [coefficient]
    Family family = Family::Constant;
    std::vector<double> params;
    // [cell]
    int N = 128;
    double cell_tol = 1e-9;
    // [study]
    std::vector<double> epsilons{0.25, 0.125, 0.0625, 0.03125};
    double grid_factor = 8.0;
    double tol = 1e-9;
    Recipe recipe = Recipe::Vortex;
    ExtensionMode extension = ExtensionMode::Analytic;
    // [output]
    std::string out_dir = "results";
    std::string cache_dir;  ///< empty: HS_CACHE_DIR, then no cache
    int jobs = 1;
    // [solve]
    SolveKind solve_kind = SolveKind::Fine;
    double solve_epsilon = 0.25;
    int solve_M = 64;
    // [mms]
    std::vector<int> mms_grids{32, 64, 128};
    double mms_epsilon = 0.25;
    double mms_min_slope = 1.7, mms_max_slope = 2.3;
    // [smoothing]
    std::vector<double> smoothing_epsilons{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    int smoothing_samples = 10;
    // [identities]
    double identities_factor = 1.7;
    double identities_floor = 1e-9;
    double identities_mean_tol = 1e-10;
    // [acceptance]
    RateGates gates;

    [[nodiscard]] CoefficientTensor coefficient() const;
    /// M = ceil(grid_factor / eps) rounded up to a power of two, at least 32.
    [[nodiscard]] int domain_resolution(double eps) const;
    /// Throws ValidationError naming the offending key.
    void validate() const;
};

[[nodiscard]] StudyConfig parse_config(const std::string& path);
[[nodiscard]] StudyConfig parse_config_text(const std::string& text);

[[nodiscard]] bool is_power_of_two(long long n);

}  // namespace homstokes
