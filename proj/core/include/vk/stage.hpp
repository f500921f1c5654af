#ifndef VK_STAGE_HPP
#define VK_STAGE_HPP

#include "vk/fields.hpp"

#include <string>
#include <tuple>
#include <vector>

namespace vk {

/** Parameters of one corrugation stage at mollification scale l and base
 * frequency lambda (lambda*l > 1). M is the regularity budget of the input
 * pair, gamma the interpolation exponent, beta the Hoelder exponent of A. */
struct StageParams {
    double l = 0.1;
    double lambda = 20;
    double M = 1;
    double gamma = 0.4;
    double beta = 1.0;
    double r0 = 0.1;          ///< conformal smallness radius used in the amplitude offset
    int max_guard_retries = 8; ///< doublings of the offset when the a^2 >= C/2 guard trips
};

/** Step-count bookkeeping for codimension k: N = lcm(2,k) = 2S = kJ, and the
 * regularity threshold S/(S+2J) = 1/(1+4/k) as an exact rational. */
struct ExponentTable {
    int k = 1, N = 2, S = 1, J = 2;
    long long threshold_num = 1, threshold_den = 5;
    double threshold() const { return static_cast<double>(threshold_num) / threshold_den; }
};

ExponentTable exponents(int k);

/** Unique split i = k*j + gamma_axis = 2*s + delta with j = 0..J-1,
 * gamma_axis = 1..k, s = 0..S-1, delta = 1,2. */
struct IndexSplit {
    int j = 0, gamma_axis = 1, s = 0, delta = 1;
};

IndexSplit index_split(int i, int k);

/** Frequencies lambda_0..lambda_N: lambda_0 = 1/l and
 * lambda_i * l = (lambda*l)^(1 + j(i) + s(i)/2). Nondecreasing. */
std::vector<double> frequency_ladder(int k, double lambda, double l);

/** Everything measured during one stage. */
struct StageReport {
    int k = 0, N = 0, S = 0, J = 0;
    double l = 0, lambda = 0, M = 0, gamma = 0, gamma_internal = 0, beta = 0, r0 = 0;
    std::vector<double> lambdas;        ///< ladder, size N+1
    std::vector<double> v_step_c1;      ///< ||v_i - v_{i-1}||_1, i = 1..N
    std::vector<double> w_step_c1;
    std::vector<double> deficit_norm;   ///< ||D_s||_0, s = 0..S
    std::vector<double> c_tilde;        ///< accepted amplitude offsets
    std::vector<int> guard_retries;     ///< doublings needed per s
    std::vector<double> decomp_residual;
    double in_deficit = 0;              ///< input deficit sup-norm
    double moll_error_A = 0;            ///< ||A - A*phi_l||_0 on the output grid
    double out_deficit = 0;             ///< final deficit sup-norm
    double out_hess_v = 0, out_hess_w = 0;
    double v_change_c1 = 0, w_change_c1 = 0;
    double bookkeeping_error = 0;       ///< telescoping identity residual
    double fd_gap = 0;                  ///< accumulated FD-vs-spectral gap
    double amp_min = 0, amp_max = 0;

    std::string to_kv() const;                ///< flat "key value" lines
    static std::string csv_header();
    std::string csv_row() const;
};

/** One full stage: mollify the triple at scale l, then N corrugation steps
 * in k-tuples with the frequency ladder and one conformal rewrite per step
 * pair; returns the corrected pair on the margin-l grid plus the report.
 * Requires input grid margin >= 2l and an alias-free ladder. */
std::tuple<Field, Field, StageReport>
run_stage(const Field& v, const Field& w, const Field& A, const StageParams& p, int k);

} // namespace vk

#endif
