#ifndef VK_NASH_KUIPER_HPP
#define VK_NASH_KUIPER_HPP

#include "vk/primitive.hpp"
#include "vk/stage.hpp"

#include <array>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace vk {

/** Iteration schedule l_i = B^((q^i-1)/(q-1)) l0^(q^i), lambda_i = b/l_i^a,
 * with M_i lower-bound recursions chosen by the regularity-vs-data case
 * split. Values collapse double-exponentially, so natural logs are kept
 * alongside; the plain arrays stop where doubles stop being representable
 * (truncated = true). */
struct NkSchedule {
    char case_tag = 'A';      ///< 'A' if beta/2 > S/(S+2J), else 'B'
    int S = 1, J = 1;
    double beta = 1, alpha = 0;
    double a = 1.05;          ///< ansatz exponent in (1,2)
    double b = 2;             ///< frequency base > 1
    double gamma = 0.01;      ///< small interpolation exponent
    double q = 1.1;           ///< growth exponent > 1
    double B_const = 0.5;     ///< geometric constant in (0,1)
    double C_const = 2;       ///< unspecified-constant default, configurable
    double l0 = 0, M0 = 0;
    double grad_v0 = 0, deficit0 = 0, A_holder = 0;
    int l0_halvings = 0;
    int gamma_halvings = 0;
    bool truncated = false;

    std::vector<double> l, lambda, M;                ///< representable prefix
    std::vector<double> log_l, log_lambda, log_M;    ///< full length, natural logs

    double threshold() const { return 1.0 * S / (S + 2.0 * J); }
    /** Throws unless the generated prefix satisfies lambda_i*l_i > 1,
     * l_{i+1} <= l_i/2, M strictly increasing, (l0 M0)^2 = deficit0, and
     * l_i M_i eventually decreasing. */
    void validate() const;
};

/** Builds the schedule for codimension exponents (S, J), data Hoelder
 * exponent beta, measured input norms and the target exponent alpha
 * (required: 0 < alpha < min(beta/2, S/(S+2J))). iters is the requested
 * iteration count; generation stops early at the double floor. */
NkSchedule build_schedule(int S, int J, double beta, double grad_v0_norm,
                          double deficit0_norm, double A_holder_norm,
                          double alpha, int iters, double C_const = 2.0);

/** The three requirement inequalities evaluated at i = 0, 1, 2 in log space:
 * log_lhs - log_rhs <= 0 for the series bound (index 0), >= 0 for the two
 * M-growth lower bounds (indices 1, 2). */
struct ScheduleChecks {
    std::array<std::array<double, 3>, 3> log_lhs{}, log_rhs{};
    std::array<std::array<bool, 3>, 3> ok{};
    bool all_ok() const;
};

ScheduleChecks check_requirements(const NkSchedule& s);

/** Desk-scale geometric surrogate schedule: l_i = l0*ratio_l^i,
 * lambda_i = lambda0*ratio_lambda^i, M_i measured from the current fields. */
struct NkPracticalSchedule {
    double l0 = 0.1, lambda0 = 40;
    double ratio_l = 0.5, ratio_lambda = 4;
    int iters = 4;
};

struct NkRunOptions {
    double gamma = 0.4;
    double beta = 1.0;
    double r0 = 0.1;
    double deficit_target = 0;          ///< stop when the deficit drops below (0: off)
    std::vector<double> alphas{0.2, 0.5}; ///< Hoelder-quotient tracks on grad v
    int max_guard_retries = 8;
};

struct NkRunReport {
    std::vector<double> deficit;        ///< entry + after each iteration
    std::vector<double> dv_c1, dw_c1;   ///< per-iteration C1 increments
    std::map<double, std::vector<double>> holder_grad_v; ///< per alpha track
    std::vector<double> l_used, lambda_used, M_used;
    std::vector<StageReport> stages;
    std::string termination;            ///< budget | target | nyquist | margin | schedule
    int iterations = 0;

    std::string csv() const;            ///< one row per iteration
    std::string json_summary() const;   ///< schedule echo + termination
};

/** Iterated stages with the paper-shaped schedule (usable prefix only). */
std::tuple<Field, Field, NkRunReport>
run(const Field& v, const Field& w, const Field& A,
    const NkSchedule& sched, const NkRunOptions& opt, int k);

/** Iterated stages with the practical geometric schedule. */
std::tuple<Field, Field, NkRunReport>
run(const Field& v, const Field& w, const Field& A,
    const NkPracticalSchedule& sched, const NkRunOptions& opt, int k);

struct FlexOptions {
    NkPracticalSchedule schedule;
    NkRunOptions nk;
    double first_step_zeta = 6.0;
    double first_step_lambda0 = 0;      ///< 0: auto start for the frequency sweep
    double target_rel = 0;              ///< deficit target as a fraction of the entry deficit
    double smoothing_l = 0;             ///< 0: choose by halving until eps^5-close
};

struct FlexReport {
    double eps = 0, alpha = 0;
    double smoothing_l = 0;
    double smooth_v_change = 0, smooth_w_change = 0, smooth_A_change = 0;
    FirstStepReport first_step;
    bool short_circuit = false;         ///< deficit below tolerance after the first pass
    double initial_deficit = 0, final_deficit = 0;
    double v_change = 0, w_change = 0;  ///< sup-norm distance to the input pair
    NkRunReport nk;

    std::string json() const;
};

/** End-to-end driver: smooth the triple to eps^5 closeness, run one
 * corrective pass, then (unless the deficit is already below tolerance)
 * iterate stages until the deficit target or the budget. Requires a
 * node-wise positive definite deficit, eps in (0,1) and
 * alpha < min(beta/2, 1/(1+4/k)). */
std::tuple<Field, Field, FlexReport>
full_flexibility(const Field& v, const Field& w, const Field& A,
                 double eps, double alpha, int k, const FlexOptions& opt = {});

} // namespace vk

#endif
