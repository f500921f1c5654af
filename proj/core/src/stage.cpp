#include "vk/stage.hpp"

#include "vk/conformal.hpp"
#include "vk/mollify.hpp"
#include "vk/step.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace vk {

ExponentTable exponents(int k) {
    if (k < 1) throw std::invalid_argument("exponents: k must be >= 1");
    ExponentTable e;
    e.k = k;
    e.N = std::lcm(2, k);
    e.S = e.N / 2;
    e.J = e.N / k;
    long long num = e.S, den = e.S + 2LL * e.J;
    long long g = std::gcd(num, den);
    e.threshold_num = num / g;
    e.threshold_den = den / g;
    return e;
}

IndexSplit index_split(int i, int k) {
    ExponentTable e = exponents(k);
    if (i < 1 || i > e.N) throw std::invalid_argument("index_split: i out of range");
    IndexSplit s;
    s.j = (i - 1) / k;
    s.gamma_axis = i - k * s.j;
    s.s = (i - 1) / 2;
    s.delta = i - 2 * s.s;
    return s;
}

std::vector<double> frequency_ladder(int k, double lambda, double l) {
    if (!(l > 0) || !(lambda * l > 1))
        throw std::invalid_argument("frequency_ladder: need l > 0 and lambda*l > 1");
    ExponentTable e = exponents(k);
    std::vector<double> lam(e.N + 1);
    lam[0] = 1.0 / l;
    for (int i = 1; i <= e.N; ++i) {
        IndexSplit sp = index_split(i, k);
        lam[i] = std::pow(lambda * l, 1.0 + sp.j + 0.5 * sp.s) / l;
    }
    return lam;
}


std::string StageReport::to_kv() const {
    std::ostringstream os;
    os.precision(17);
    os << "k " << k << "\nN " << N << "\nS " << S << "\nJ " << J << "\n";
    os << "l " << l << "\nlambda " << lambda << "\nM " << M << "\n";
    os << "gamma " << gamma << "\ngamma_internal " << gamma_internal << "\n";
    os << "beta " << beta << "\nr0 " << r0 << "\n";
    os << "in_deficit " << in_deficit << "\nmoll_error_A " << moll_error_A << "\n";
    os << "out_deficit " << out_deficit << "\n";
    os << "out_hess_v " << out_hess_v << "\nout_hess_w " << out_hess_w << "\n";
    os << "v_change_c1 " << v_change_c1 << "\nw_change_c1 " << w_change_c1 << "\n";
    os << "bookkeeping_error " << bookkeeping_error << "\nfd_gap " << fd_gap << "\n";
    os << "amp_min " << amp_min << "\namp_max " << amp_max << "\n";
    for (size_t i = 0; i < lambdas.size(); ++i) os << "lambda_" << i << " " << lambdas[i] << "\n";
    for (size_t i = 0; i < deficit_norm.size(); ++i)
        os << "deficit_" << i << " " << deficit_norm[i] << "\n";
    for (size_t s = 0; s < c_tilde.size(); ++s) os << "c_tilde_" << s << " " << c_tilde[s] << "\n";
    for (size_t s = 0; s < guard_retries.size(); ++s)
        os << "guard_retries_" << s << " " << guard_retries[s] << "\n";
    for (size_t s = 0; s < decomp_residual.size(); ++s)
        os << "decomp_residual_" << s << " " << decomp_residual[s] << "\n";
    for (size_t i = 0; i < v_step_c1.size(); ++i) {
        os << "v_step_c1_" << i + 1 << " " << v_step_c1[i] << "\n";
        os << "w_step_c1_" << i + 1 << " " << w_step_c1[i] << "\n";
    }
    return os.str();
}

std::string StageReport::csv_header() {
    return "k,N,l,lambda,M,gamma,beta,in_deficit,out_deficit,out_hess_v,out_hess_w,"
           "v_change_c1,w_change_c1,bookkeeping_error,fd_gap,amp_max";
}

std::string StageReport::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << k << "," << N << "," << l << "," << lambda << "," << M << "," << gamma << "," << beta
       << "," << in_deficit << "," << out_deficit << "," << out_hess_v << "," << out_hess_w << ","
       << v_change_c1 << "," << w_change_c1 << "," << bookkeeping_error << "," << fd_gap << ","
       << amp_max;
    return os.str();
}

std::tuple<Field, Field, StageReport>
run_stage(const Field& v, const Field& w, const Field& A, const StageParams& p, int k) {
    ExponentTable ex = exponents(k);
    if (v.comps() != k) throw std::invalid_argument("run_stage: v must take values in R^k");
    if (w.comps() != 2 || A.comps() != 4)
        throw std::invalid_argument("run_stage: w must be R^2-valued and A symmetric 2x2");
    if (!w.grid.same_layout(v.grid) || !A.grid.same_layout(v.grid))
        throw std::invalid_argument("run_stage: fields live on different grids");
    if (!(p.l > 0) || !(p.lambda * p.l > 1))
        throw std::invalid_argument("run_stage: need l > 0 and lambda*l > 1");
    if (!(p.M >= 1)) throw std::invalid_argument("run_stage: regularity budget M must be >= 1");
    if (!(p.gamma > 0) || !(p.gamma < 1))
        throw std::invalid_argument("run_stage: gamma must lie in (0,1)");
    if (!(p.r0 > 0) || p.r0 > 1) throw std::invalid_argument("run_stage: r0 must lie in (0,1]");
    if (v.grid.margin() < 2 * p.l - 1e-9)
        throw std::invalid_argument("run_stage: grid margin must be >= 2l");

    std::vector<double> ladder = frequency_ladder(k, p.lambda, p.l);
    double h = v.grid.h;
    if (ladder.back() * h > 0.25 + 1e-12)
        throw std::invalid_argument("run_stage: ladder top violates the Nyquist guard");

    StageReport rep;
    rep.k = k; rep.N = ex.N; rep.S = ex.S; rep.J = ex.J;
    rep.l = p.l; rep.lambda = p.lambda; rep.M = p.M;
    rep.gamma = p.gamma; rep.beta = p.beta; rep.r0 = p.r0;
    rep.gamma_internal = p.gamma * 4.0 / (k * k + 5.0 * k + 2.0);
    rep.lambdas = ladder;
    rep.in_deficit = sup_norm(deficit(v, w, A));

    Field cv = mollify(v, p.l);
    Field cw = mollify(w, p.l);
    Field A0 = mollify(A, p.l);
    const Grid2& g = cv.grid;
    Field A_out = A.restrict_to(g);
    rep.moll_error_A = sup_norm(A_out - A0);

    // Working deficit in the metric-minus-target convention so that the
    // conformal rewrite produces sym_grad(Psi_s) = a_s^2 Id + D_s.
    Field D = vk_metric(cv, cw) - A0;
    Field psi_sum(g, 2, 1);
    const double gi = rep.gamma_internal;
    const double tail_base = rep.in_deficit + (p.l * p.M) * (p.l * p.M);
    double prod_even = ladder[0];
    rep.amp_min = std::numeric_limits<double>::max();

    for (int s = 0; s < ex.S; ++s) {
        if (s > 0) prod_even *= ladder[2 * s];
        rep.deficit_norm.push_back(sup_norm(D));

        NormReport nr = norms(D, {gi});
        double hold = nr.c0 + nr.holder_at(gi);
        double tail = std::pow(prod_even, gi) / std::pow(p.lambda * p.l, s) * tail_base;
        double C = (2.0 / p.r0) * (hold + tail);

        DecompResult dec = decompose(D);
        double abar_max = 0;
        for (long i = 0; i < g.nodes(); ++i)
            abar_max = std::max(abar_max, dec.a_bar.comp(0)[i]);
        int retries = 0;
        while (abar_max > 0.5 * C && retries < p.max_guard_retries) {
            C *= 2;
            ++retries;
        }
        if (abar_max > 0.5 * C)
            throw std::runtime_error("run_stage: amplitude guard a^2 >= C/2 unattainable");
        rep.c_tilde.push_back(C);
        rep.guard_retries.push_back(retries);
        rep.decomp_residual.push_back(dec.residual_norm);
        rep.fd_gap += sup_norm(sym_grad(dec.psi_bar) - dec.sym_grad_spec);

        Field amp(g, 1, 1);
        for (long i = 0; i < g.nodes(); ++i) {
            double a2 = C - dec.a_bar.comp(0)[i];
            amp.comp(0)[i] = std::sqrt(std::max(a2, 0.0));
            rep.amp_min = std::min(rep.amp_min, amp.comp(0)[i]);
            rep.amp_max = std::max(rep.amp_max, amp.comp(0)[i]);
        }

        // Psi_s = C*id - psi_bar, subtracted from w at assembly.
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                long i = static_cast<long>(iy) * g.nx + ix;
                psi_sum.comp(0)[i] += C * g.x(ix) - dec.psi_bar.comp(0)[i];
                psi_sum.comp(1)[i] += C * g.y(iy) - dec.psi_bar.comp(1)[i];
            }

        Field metric_before = vk_metric(cv, cw);
        for (int delta = 1; delta <= 2; ++delta) {
            int i = 2 * s + delta;
            IndexSplit sp = index_split(i, k);
            StepSpec st;
            st.a = amp;
            st.eta = (sp.delta == 1) ? std::array<double, 2>{1, 0} : std::array<double, 2>{0, 1};
            st.E.assign(k, 0.0);
            st.E[sp.gamma_axis - 1] = 1.0;
            st.lambda = ladder[i];
            Field pv = cv, pw = cw;
            std::tie(cv, cw) = apply_step(cv, cw, st);
            rep.v_step_c1.push_back(norms(cv - pv).c1);
            rep.w_step_c1.push_back(norms(cw - pw).c1);
        }
        D = vk_metric(cv, cw) - metric_before;
        for (long i = 0; i < g.nodes(); ++i) {
            double a2 = amp.comp(0)[i] * amp.comp(0)[i];
            D.comp(0)[i] -= a2;
            D.comp(3)[i] -= a2;
        }
    }
    rep.deficit_norm.push_back(sup_norm(D));

    Field vt = std::move(cv);
    Field wt = cw - psi_sum;
    Field Dt = deficit(vt, wt, A_out);
    rep.out_deficit = sup_norm(Dt);
    Field book = A_out - A0;
    book -= D;
    rep.bookkeeping_error = sup_norm(Dt - book);
    rep.out_hess_v = sup_norm(fd_hessian(vt));
    rep.out_hess_w = sup_norm(fd_hessian(wt));
    rep.v_change_c1 = norms(vt - v.restrict_to(g)).c1;
    rep.w_change_c1 = norms(wt - w.restrict_to(g)).c1;
    return {std::move(vt), std::move(wt), rep};
}

} // namespace vk
