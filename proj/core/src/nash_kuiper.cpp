#include "vk/nash_kuiper.hpp"

#include "vk/mollify.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vk {

namespace {

constexpr double kLogFloor = 690.0; ///< |log x| beyond which doubles give out

double log_sum_exp(const std::vector<double>& logs) {
    double mx = *std::max_element(logs.begin(), logs.end());
    double s = 0;
    for (double x : logs) s += std::exp(x - mx);
    return mx + std::log(s);
}

/// log of the requirement-2 growth ratio for M_{i+1}^2 / M_i^2.
double log_ratio2(const NkSchedule& s, int i, double log_b, double log_B, double log_x) {
    double qi = std::pow(s.q, i);
    return std::log(2 * s.C_const) - (s.S - s.gamma) * log_b + 2 * std::log1p(s.grad_v0)
           - (s.S * (s.a - 1) - s.a * s.gamma) / (s.q - 1) * log_B
           - qi * (2 * s.J * (s.a - 1) + 6 * s.a * s.gamma) * log_x;
}

/// log of the requirement-3 lower bound for M_{i+1}^2.
double log_bound3(const NkSchedule& s, int i, double log_B, double log_x) {
    double qi = std::pow(s.q, i);
    double Ah = std::max(s.A_holder, 1e-300);
    return std::log(2 * s.C_const * Ah) + (2 - s.beta) / (s.q - 1) * log_B
           - qi * (2 * s.q - s.beta) * log_x;
}

/// log of the closed-form data-driven M_{i+1}^2 lower bound.
double log_bound_data(const NkSchedule& s, int i, double log_M0, double log_l0,
                      double log_B, double log_x) {
    double qi = std::pow(s.q, i);
    return 2.0 * (i + 1) * (log_M0 + std::log1p(s.grad_v0)) + (2 - s.beta) * log_l0
           + (2 - s.beta) / (s.q - 1) * log_B - qi * (2 * s.q - s.beta) * log_x;
}

} // namespace

void NkSchedule::validate() const {
    auto fail = [](const char* msg) { throw std::logic_error(std::string("NkSchedule: ") + msg); };
    if (!(a > 1) || !(a < 2)) fail("ansatz exponent a must lie in (1,2)");
    if (!(b > 1)) fail("frequency base b must exceed 1");
    if (!(q > 1)) fail("growth exponent q must exceed 1");
    if (!(B_const > 0) || !(B_const < 1)) fail("geometric constant B must lie in (0,1)");
    if (!(gamma > 0)) fail("gamma must be positive");
    size_t n = log_l.size();
    if (n < 2 || log_lambda.size() != n || log_M.size() != n) fail("inconsistent array sizes");
    if (std::abs(log_l[0] + log_M[0] - 0.5 * std::log(deficit0)) > 1e-9)
        fail("initial normalisation (l0 M0)^2 = deficit fails");
    for (size_t i = 0; i < n; ++i)
        if (!(log_lambda[i] + log_l[i] > 0)) fail("lambda_i * l_i <= 1");
    for (size_t i = 0; i + 1 < n; ++i) {
        if (log_l[i + 1] > log_l[i] - std::log(2.0) + 1e-12) fail("l_{i+1} > l_i / 2");
        if (!(log_M[i + 1] > log_M[i])) fail("M not strictly increasing");
    }
    // l_i M_i must decrease monotonically beyond some index.
    size_t start = n;
    for (size_t i = 0; i + 1 < n; ++i)
        if (log_l[i + 1] + log_M[i + 1] < log_l[i] + log_M[i]) { start = i; break; }
    if (start == n) fail("l_i M_i never starts decreasing");
    for (size_t i = start; i + 1 < n; ++i)
        if (log_l[i + 1] + log_M[i + 1] >= log_l[i] + log_M[i] - 1e-12)
            fail("l_i M_i not monotone past its peak");
    for (size_t i = 0; i < l.size(); ++i)
        if (!std::isfinite(l[i]) || !std::isfinite(lambda[i]) || !std::isfinite(M[i]))
            fail("non-finite representable prefix");
}

NkSchedule build_schedule(int S, int J, double beta, double grad_v0_norm,
                          double deficit0_norm, double A_holder_norm,
                          double alpha, int iters, double C_const) {
    if (S < 1 || J < 1) throw std::invalid_argument("build_schedule: S, J must be >= 1");
    if (!(beta > 0) || beta > 1) throw std::invalid_argument("build_schedule: beta must lie in (0,1]");
    if (!(deficit0_norm > 0) || deficit0_norm > 1)
        throw std::invalid_argument("build_schedule: deficit sup-norm must lie in (0,1]");
    if (!(C_const >= 1)) throw std::invalid_argument("build_schedule: C must be >= 1");
    if (iters < 1) throw std::invalid_argument("build_schedule: iters must be >= 1");

    NkSchedule s;
    s.S = S; s.J = J; s.beta = beta; s.alpha = alpha; s.C_const = C_const;
    s.grad_v0 = grad_v0_norm; s.deficit0 = deficit0_norm; s.A_holder = A_holder_norm;
    double thr = s.threshold();
    if (!(alpha > 0) || !(alpha < std::min(beta / 2, thr)))
        throw std::invalid_argument("build_schedule: alpha must lie in (0, min(beta/2, S/(S+2J)))");
    bool case_a = beta * (S + 2.0 * J) > 2.0 * S;
    s.case_tag = case_a ? 'A' : 'B';

    double slack = std::max(std::abs(beta / 2 - thr), 0.01);
    s.a = 1 + 0.05 * std::min(1.0, slack);

    // gamma: the case's smallness cap, then halved until the asymptotic
    // dominance of the matching M recursion holds (exponent sign test).
    s.gamma = case_a ? beta / 32
                     : 0.125 / (6.0 * (S + 2.0 * J) / (S * beta * beta) + 2 * s.a / beta);
    for (;; ++s.gamma_halvings) {
        s.q = 1 + (s.a - 1) * (S / 2.0 + J) + 2.5 * s.a * s.gamma;
        double e1 = 2 * s.q - beta;
        double e2 = (2 * s.q / (s.q - 1)) * (J * (s.a - 1) + 3 * s.a * s.gamma);
        // the per-iteration M growth must stay below the l shrink rate or
        // l_i M_i would increase forever
        bool contracting = J * (s.a - 1) + 3 * s.a * s.gamma < 0.95 * (s.q - 1);
        if ((case_a ? (e1 < e2) : (e1 > e2)) && contracting) break;
        if (s.gamma_halvings >= 60)
            throw std::runtime_error("build_schedule: no gamma satisfies the dominance signs");
        s.gamma /= 2;
    }

    double gv = grad_v0_norm, D0 = deficit0_norm;
    double log_b = 0, log_l0 = 0;
    auto compute_bases = [&]() {
        if (case_a) {
            log_b = (4.0 / S) * std::log(C_const * (1 + gv));
            double Ah = std::max(A_holder_norm, 1e-12);
            log_l0 = (std::log(D0) - std::log(C_const * Ah) - (S + 4.0 * J) * log_b) / beta;
        } else {
            log_l0 = (std::log(D0) - std::log(C_const * (1 + A_holder_norm))) / beta;
            log_b = (std::log(2 * (1 + gv)) - log_l0) * 6.0 / (S * beta);
        }
    };
    compute_bases();
    // l0 may also be decreased if needed: halve (at most 8 times) until it
    // is small enough for M0 >= 1, l0 <= 1/4 and a contracting first ratio.
    double log_l0_cap = std::min(std::log(0.25), 0.5 * std::log(D0));
    for (; s.l0_halvings < 8; ++s.l0_halvings) {
        if (!case_a) log_b = (std::log(2 * (1 + gv)) - log_l0) * 6.0 / (S * beta);
        double log_B = -(std::log(C_const) + (S / 2.0 + J + (S + 2.0 * J + 0.5) * s.gamma) * log_b);
        bool ok = log_l0 <= log_l0_cap && log_B + (s.q - 1) * log_l0 <= -std::log(2.0);
        if (ok) break;
        log_l0 -= std::log(2.0);
    }
    double log_B = -(std::log(C_const) + (S / 2.0 + J + (S + 2.0 * J + 0.5) * s.gamma) * log_b);
    if (!(log_B < 0)) throw std::runtime_error("build_schedule: geometric constant B >= 1");
    s.b = std::exp(log_b);
    s.B_const = std::exp(log_B);
    s.l0 = std::exp(log_l0);
    double log_M0 = 0.5 * std::log(D0) - log_l0;
    s.M0 = std::exp(log_M0);
    double log_x = log_B / (s.q - 1) + log_l0;

    // Generate the log-space window adaptively: the l_i M_i turnover can sit
    // well past the requested iterations and validate() wants to witness it.
    int n_min = std::max(iters + 1, 4);
    const int n_cap = 4096;
    int peak = -1;
    for (int i = 0; i < n_cap; ++i) {
        double qi = std::pow(s.q, i);
        s.log_l.push_back((qi - 1) / (s.q - 1) * log_B + qi * log_l0);
        s.log_lambda.push_back(log_b - s.a * s.log_l[i]);
        if (i == 0) {
            s.log_M.push_back(log_M0);
        } else {
            // each case runs its own closed-form M recursion (the other
            // requirement then holds through the parameter assignment)
            double lo = case_a
                ? 2 * s.log_M[i - 1] + log_ratio2(s, i - 1, log_b, log_B, log_x)
                : log_bound_data(s, i - 1, log_M0, log_l0, log_B, log_x);
            s.log_M.push_back(std::max(0.5 * lo, s.log_M[i - 1] + 1e-9));
            if (peak < 0 && s.log_l[i] + s.log_M[i] < s.log_l[i - 1] + s.log_M[i - 1])
                peak = i;
        }
        if (i + 1 >= n_min && peak >= 0 && i >= peak + 2) break;
    }
    int n = static_cast<int>(s.log_l.size());
    for (int i = 0; i < n; ++i) {
        if (std::abs(s.log_l[i]) > kLogFloor || std::abs(s.log_lambda[i]) > kLogFloor ||
            std::abs(s.log_M[i]) > kLogFloor) {
            s.truncated = true;
            break;
        }
        s.l.push_back(std::exp(s.log_l[i]));
        s.lambda.push_back(std::exp(s.log_lambda[i]));
        s.M.push_back(std::exp(s.log_M[i]));
    }
    if (static_cast<int>(s.l.size()) > iters + 1) {
        s.l.resize(iters + 1); s.lambda.resize(iters + 1); s.M.resize(iters + 1);
    }
    s.validate();
    return s;
}

bool ScheduleChecks::all_ok() const {
    for (const auto& row : ok)
        for (bool b : row)
            if (!b) return false;
    return true;
}

ScheduleChecks check_requirements(const NkSchedule& s) {
    if (s.log_l.size() < 4)
        throw std::invalid_argument("check_requirements: schedule too short (need i = 0..3)");
    ScheduleChecks c;
    double log_b = std::log(s.b), log_B = std::log(s.B_const);
    double log_l0 = s.log_l[0];
    double log_x = log_B / (s.q - 1) + log_l0;
    double rhs1 = std::log(s.C_const) + (s.S + 2.0 * s.J) * s.gamma * log_b
                  - 2 * s.a * s.gamma * log_l0 + std::log1p(s.grad_v0)
                  + 0.5 * std::log(s.deficit0);
    std::vector<double> terms;
    for (int i = 0; i < 3; ++i) {
        terms.push_back(s.gamma * log_b + (1 - s.a * s.gamma) * s.log_l[i] + s.log_M[i]);
        c.log_lhs[0][i] = log_sum_exp(terms);
        c.log_rhs[0][i] = rhs1;
        c.ok[0][i] = c.log_lhs[0][i] <= c.log_rhs[0][i] + 1e-9;

        c.log_lhs[1][i] = 2 * (s.log_M[i + 1] - s.log_M[i]);
        c.log_rhs[1][i] = log_ratio2(s, i, log_b, log_B, log_x);
        c.ok[1][i] = c.log_lhs[1][i] >= c.log_rhs[1][i] - 1e-9;

        c.log_lhs[2][i] = 2 * s.log_M[i + 1];
        c.log_rhs[2][i] = log_bound3(s, i, log_B, log_x);
        c.ok[2][i] = c.log_lhs[2][i] >= c.log_rhs[2][i] - 1e-9;
    }
    return c;
}

std::string NkRunReport::csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "i,l,lambda,M,deficit,dv_c1,dw_c1";
    for (const auto& kv : holder_grad_v) os << ",holder_grad_v_" << kv.first;
    os << "\n";
    for (size_t i = 0; i < deficit.size(); ++i) {
        if (i == 0)
            os << "0,,,," << deficit[0] << ",,";
        else
            os << i << "," << l_used[i - 1] << "," << lambda_used[i - 1] << "," << M_used[i - 1]
               << "," << deficit[i] << "," << dv_c1[i - 1] << "," << dw_c1[i - 1];
        for (const auto& kv : holder_grad_v) {
            os << ",";
            if (i < kv.second.size()) os << kv.second[i];
        }
        os << "\n";
    }
    return os.str();
}

std::string NkRunReport::json_summary() const {
    nlohmann::json j;
    j["iterations"] = iterations;
    j["termination"] = termination;
    j["deficit"] = deficit;
    j["dv_c1"] = dv_c1;
    j["dw_c1"] = dw_c1;
    j["l"] = l_used;
    j["lambda"] = lambda_used;
    j["M"] = M_used;
    for (const auto& kv : holder_grad_v)
        j["holder_grad_v"][std::to_string(kv.first)] = kv.second;
    return j.dump(2);
}

namespace {

struct IterParams {
    double l = 0, lambda = 0;
    bool has_M = false;
    double M = 1;
};

std::tuple<Field, Field, NkRunReport>
run_impl(const Field& v, const Field& w, const Field& A,
         const std::vector<IterParams>& plan, const NkRunOptions& opt, int k,
         bool exhausted_early) {
    if (plan.empty()) throw std::invalid_argument("nash-kuiper run: empty iteration plan");
    Field cv = v, cw = w;
    NkRunReport rep;
    double d0 = sup_norm(deficit(cv, cw, A.restrict_to(cv.grid)));
    if (!(d0 > 0))
        throw std::invalid_argument("nash-kuiper run: deficit must be positive at entry");
    if (d0 > 1 + 1e-12)
        throw std::invalid_argument("nash-kuiper run: deficit sup-norm must be <= 1");
    if (cv.grid.margin() < 2 * plan[0].l - 1e-9)
        throw std::invalid_argument("nash-kuiper run: grid margin must cover 2*l0");
    rep.deficit.push_back(d0);
    auto track = [&]() {
        NormReport nr = norms(fd_gradient(cv), opt.alphas);
        for (double al : opt.alphas) rep.holder_grad_v[al].push_back(nr.holder_at(al));
    };
    track();
    rep.termination = "budget";
    for (size_t i = 0; i < plan.size(); ++i) {
        double l = plan[i].l, lambda = plan[i].lambda;
        if (cv.grid.margin() < 2 * l - 1e-9) { rep.termination = "margin"; break; }
        if (frequency_ladder(k, lambda, l).back() * cv.grid.h > 0.25 + 1e-12) {
            rep.termination = "nyquist";
            break;
        }
        StageParams p;
        p.l = l; p.lambda = lambda;
        p.gamma = opt.gamma; p.beta = opt.beta; p.r0 = opt.r0;
        p.max_guard_retries = opt.max_guard_retries;
        p.M = plan[i].has_M
                  ? plan[i].M
                  : std::max({norms(cv).c2, norms(cw).c2, 1.0});
        try {
            auto [nv, nw, srep] = run_stage(cv, cw, A.restrict_to(cv.grid), p, k);
            cv = std::move(nv);
            cw = std::move(nw);
            rep.stages.push_back(srep);
            rep.l_used.push_back(l);
            rep.lambda_used.push_back(lambda);
            rep.M_used.push_back(p.M);
            rep.dv_c1.push_back(srep.v_change_c1);
            rep.dw_c1.push_back(srep.w_change_c1);
            rep.deficit.push_back(srep.out_deficit);
        } catch (const std::exception& e) {
            throw std::runtime_error("nash-kuiper iteration " + std::to_string(i) + ": " + e.what());
        }
        track();
        rep.iterations = static_cast<int>(i) + 1;
        if (opt.deficit_target > 0 && rep.deficit.back() <= opt.deficit_target) {
            rep.termination = "target";
            break;
        }
    }
    if (rep.termination == "budget" && exhausted_early) rep.termination = "schedule";
    return {std::move(cv), std::move(cw), std::move(rep)};
}

} // namespace

std::tuple<Field, Field, NkRunReport>
run(const Field& v, const Field& w, const Field& A,
    const NkSchedule& sched, const NkRunOptions& opt, int k) {
    std::vector<IterParams> plan;
    for (size_t i = 0; i < sched.l.size(); ++i)
        plan.push_back({sched.l[i], sched.lambda[i], true, sched.M[i]});
    return run_impl(v, w, A, plan, opt, k, sched.truncated);
}

std::tuple<Field, Field, NkRunReport>
run(const Field& v, const Field& w, const Field& A,
    const NkPracticalSchedule& sched, const NkRunOptions& opt, int k) {
    std::vector<IterParams> plan;
    double l = sched.l0, lambda = sched.lambda0;
    for (int i = 0; i < sched.iters; ++i) {
        plan.push_back({l, lambda, false, 1});
        l *= sched.ratio_l;
        lambda *= sched.ratio_lambda;
    }
    return run_impl(v, w, A, plan, opt, k, false);
}

std::string FlexReport::json() const {
    nlohmann::json j;
    j["eps"] = eps;
    j["alpha"] = alpha;
    j["smoothing_l"] = smoothing_l;
    j["smooth_v_change"] = smooth_v_change;
    j["smooth_w_change"] = smooth_w_change;
    j["smooth_A_change"] = smooth_A_change;
    j["first_step"] = {{"success", first_step.success},
                       {"target", first_step.target},
                       {"initial", first_step.initial},
                       {"achieved", first_step.achieved},
                       {"lambda_base", first_step.lambda_base},
                       {"retries", first_step.retries}};
    j["short_circuit"] = short_circuit;
    j["initial_deficit"] = initial_deficit;
    j["final_deficit"] = final_deficit;
    j["v_change"] = v_change;
    j["w_change"] = w_change;
    if (!short_circuit) j["nash_kuiper"] = nlohmann::json::parse(nk.json_summary());
    return j.dump(2);
}

namespace {

double min_eig(const Field& D) {
    long N = D.grid.nodes();
    const double *d11 = D.comp(0), *d12 = D.comp(1), *d22 = D.comp(3);
    double mn = std::numeric_limits<double>::max();
    for (long i = 0; i < N; ++i) {
        double half = 0.5 * (d11[i] - d22[i]);
        mn = std::min(mn, 0.5 * (d11[i] + d22[i]) - std::sqrt(half * half + d12[i] * d12[i]));
    }
    return mn;
}

} // namespace

std::tuple<Field, Field, FlexReport>
full_flexibility(const Field& v, const Field& w, const Field& A,
                 double eps, double alpha, int k, const FlexOptions& opt) {
    if (!(eps > 0) || !(eps < 1))
        throw std::invalid_argument("full_flexibility: eps must lie in (0,1)");
    double thr = 1.0 / (1.0 + 4.0 / k);
    if (!(alpha > 0) || !(alpha < std::min(opt.nk.beta / 2, thr)))
        throw std::invalid_argument("full_flexibility: alpha must lie in (0, min(beta/2, 1/(1+4/k)))");
    if (min_eig(deficit(v, w, A)) <= 0)
        throw std::invalid_argument("full_flexibility: deficit is not positive definite node-wise");

    FlexReport rep;
    rep.eps = eps;
    rep.alpha = alpha;
    rep.initial_deficit = sup_norm(deficit(v, w, A));
    double eps5 = std::pow(eps, 5);

    // Smooth the triple until the measured change drops below eps^5 (or the
    // kernel reaches its 2h floor: best achieved reported).
    double h = v.grid.h;
    double ls = opt.smoothing_l > 0 ? opt.smoothing_l
                                    : std::min(0.05, v.grid.margin() / 8);
    ls = std::max(ls, 2 * h);
    Field v1, w1, A1;
    for (;;) {
        v1 = mollify(v, ls);
        w1 = mollify(w, ls);
        A1 = mollify(A, ls);
        const Grid2& g = v1.grid;
        rep.smooth_v_change = norms(v1 - v.restrict_to(g)).c1;
        rep.smooth_w_change = norms(w1 - w.restrict_to(g)).c1;
        rep.smooth_A_change = sup_norm(A1 - A.restrict_to(g));
        double worst = std::max({rep.smooth_v_change, rep.smooth_w_change, rep.smooth_A_change});
        if (worst <= eps5 || opt.smoothing_l > 0 || ls <= 2 * h + 1e-12) break;
        ls = std::max(ls / 2, 2 * h);
    }
    rep.smoothing_l = ls;

    auto [v2, w2, fs] = first_step(v1, w1, A1, eps5, opt.first_step_zeta,
                                   opt.first_step_lambda0);
    rep.first_step = fs;
    Field vt = std::move(v2), wt = std::move(w2);
    if (fs.achieved <= eps5) {
        rep.short_circuit = true; // nothing left to cancel
    } else {
        NkRunOptions nk = opt.nk;
        if (opt.target_rel > 0)
            nk.deficit_target = std::max(nk.deficit_target, opt.target_rel * rep.initial_deficit);
        if (std::find(nk.alphas.begin(), nk.alphas.end(), alpha) == nk.alphas.end())
            nk.alphas.push_back(alpha);
        auto [v3, w3, nkrep] = run(vt, wt, A1.restrict_to(vt.grid), opt.schedule, nk, k);
        vt = std::move(v3);
        wt = std::move(w3);
        rep.nk = std::move(nkrep);
    }
    const Grid2& g = vt.grid;
    rep.final_deficit = sup_norm(deficit(vt, wt, A.restrict_to(g)));
    rep.v_change = sup_norm(vt - v.restrict_to(g));
    rep.w_change = sup_norm(wt - w.restrict_to(g));
    return {std::move(vt), std::move(wt), rep};
}

} // namespace vk
