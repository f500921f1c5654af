#ifndef VK_EXPERIMENT_HPP
#define VK_EXPERIMENT_HPP

#include "vk/fields.hpp"
#include "vk/nash_kuiper.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vk {

/** Flat key-value configuration with [section] headers. Every run is
 * reproducible from (config, seed). */
struct ExperimentConfig {
    // [domain]
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    int resolution = 256;    ///< core nodes per side, >= 64
    double margin = 0.3;

    // [problem]
    int k = 2;
    std::string source = "constant"; ///< constant | f
    double a_const = 0.2;            ///< A = a_const*Id2 when source == constant
    std::string f_expr = "one";      ///< one | zero | sine when source == f
    double f_scale = 1.0;
    double c_pad = 0.2;
    double v_amp = 0;                ///< optional smooth initial v
    double v_freq = 10;

    // [mode]
    std::string mode = "stage";      ///< stage | sweep | flex | verify | export

    // [stage]
    double l = 0.1, M = 1, gamma = 0.4, beta = 1.0, r0 = 0.1;
    std::vector<double> lambdas{40};

    // [nk] / [flex]
    double nk_l0 = 0.1, nk_lambda0 = 40, nk_ratio_l = 0.5, nk_ratio_lambda = 4;
    int nk_iters = 4;
    double deficit_target = 0;
    double target_rel = 0;
    double eps = 0.05, alpha = 0.2;
    double first_step_zeta = 6;
    double first_step_lambda0 = 0;
    double smoothing_l = 0;

    // [output]
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::vector<double> alphas{0.2, 0.5};
    bool export_fields = true;

    void validate() const;
    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig load(const std::string& path);
    /// Loads a named preset shipped with the repository.
    static ExperimentConfig preset(const std::string& name);
    std::string to_text() const;
};

/** Canonical problem instance derived from a config: initial pair (v, w),
 * target A and the scalar density f = -curl curl A. */
struct Problem {
    Field v, w, A, f;
};

Problem setup_problem(const ExperimentConfig& cfg);

/** Lifts a scalar density to a conformal target A = (phi + c_pad)*Id2 with
 * phi the zero-boundary solution of laplace(phi) = -f, so that
 * -curl_curl(A) = f within solver tolerance. */
Field f_to_A(const Field& f, double c_pad);

/** Fixed battery of compactly supported test functions for the weak form of
 * the determinant equation: each entry stores (psi, k11, k12, k22) with
 * K(psi) the Hessian cofactor, normalized so the L1 norm |k11|+2|k12|+|k22|
 * integrates to kMaBatteryMass. */
inline constexpr int kMaBatteryVersion = 1;
inline constexpr double kMaBatteryMass = 2.5;
std::vector<Field> ma_battery(const Grid2& g);

struct MaResiduals {
    double vk_residual = 0;     ///< sup-norm of A - (quadratic strain)
    double weak_ma_residual = 0;///< max over the battery of |weak determinant - f|
};

/** Consistency check of the determinant equation: the second residual moves
 * both derivatives onto the test function (valid for rough v). */
MaResiduals verify_ma(const Field& v, const Field& w, const Field& A, const Field& f);

struct RateFit {
    double slope = 0, intercept = 0, stderr_slope = 0;
    int n = 0;
};

/// Least-squares slope of log(y) against log(x); y values are floored at
/// 1e-300 before the log.
RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/** Runs the configured pipeline and writes artifacts into cfg.out_dir.
 * Returns 0 on success; propagates exceptions on pipeline errors. */
int run_experiment(const ExperimentConfig& cfg);

} // namespace vk

#endif
