#include "vk/experiment.hpp"

#include "vk/conformal.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vk {

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::string t = s;
    for (char& c : t)
        if (c == ',') c = ' ';
    std::istringstream is(t);
    std::vector<double> out;
    double x;
    while (is >> x) out.push_back(x);
    return out;
}

std::string list_text(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

} // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) {
        throw std::invalid_argument("config: " + msg);
    };
    if (resolution < 64) fail("resolution must be >= 64 per side");
    if (!(x_max > x_min) || !(y_max > y_min)) fail("empty domain rectangle");
    if (margin < 0) fail("negative margin");
    if (k < 1) fail("k must be >= 1");
    if (source != "constant" && source != "f") fail("unknown problem source " + source);
    if (f_expr != "one" && f_expr != "zero" && f_expr != "sine") fail("unknown f_expr " + f_expr);
    if (mode != "stage" && mode != "sweep" && mode != "flex" && mode != "verify" &&
        mode != "export")
        fail("unknown mode " + mode);
    if (lambdas.empty()) fail("empty lambda grid");
    if (alphas.empty()) fail("empty alpha list");
    for (double a : alphas)
        if (!(a > 0) || !(a < 1)) fail("alpha values must lie in (0,1)");
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
    ExperimentConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        if (key.front() == '[' && key.back() == ']') {
            section = key.substr(1, key.size() - 2);
            continue;
        }
        std::string value;
        std::getline(is, value);
        size_t eq = value.find('=');
        if (eq != std::string::npos) value.erase(eq, 1);
        size_t b = value.find_first_not_of(" \t");
        value = b == std::string::npos ? "" : value.substr(b);
        size_t e = value.find_last_not_of(" \t\r");
        if (e != std::string::npos) value.erase(e + 1);
        if (value.empty())
            throw std::invalid_argument("config: missing value at line " + std::to_string(lineno));

        std::string fk = section.empty() ? key : section + "." + key;
        auto num = [&]() { return std::stod(value); };
        if (fk == "domain.x_min") cfg.x_min = num();
        else if (fk == "domain.x_max") cfg.x_max = num();
        else if (fk == "domain.y_min") cfg.y_min = num();
        else if (fk == "domain.y_max") cfg.y_max = num();
        else if (fk == "domain.resolution") cfg.resolution = static_cast<int>(num());
        else if (fk == "domain.margin") cfg.margin = num();
        else if (fk == "problem.k") cfg.k = static_cast<int>(num());
        else if (fk == "problem.source") cfg.source = value;
        else if (fk == "problem.a_const") cfg.a_const = num();
        else if (fk == "problem.f_expr") cfg.f_expr = value;
        else if (fk == "problem.f_scale") cfg.f_scale = num();
        else if (fk == "problem.c_pad") cfg.c_pad = num();
        else if (fk == "problem.v_amp") cfg.v_amp = num();
        else if (fk == "problem.v_freq") cfg.v_freq = num();
        else if (fk == "mode.mode") cfg.mode = value;
        else if (fk == "stage.l") cfg.l = num();
        else if (fk == "stage.M") cfg.M = num();
        else if (fk == "stage.gamma") cfg.gamma = num();
        else if (fk == "stage.beta") cfg.beta = num();
        else if (fk == "stage.r0") cfg.r0 = num();
        else if (fk == "stage.lambdas") cfg.lambdas = parse_list(value);
        else if (fk == "nk.l0") cfg.nk_l0 = num();
        else if (fk == "nk.lambda0") cfg.nk_lambda0 = num();
        else if (fk == "nk.ratio_l") cfg.nk_ratio_l = num();
        else if (fk == "nk.ratio_lambda") cfg.nk_ratio_lambda = num();
        else if (fk == "nk.iters") cfg.nk_iters = static_cast<int>(num());
        else if (fk == "nk.deficit_target") cfg.deficit_target = num();
        else if (fk == "nk.target_rel") cfg.target_rel = num();
        else if (fk == "nk.eps") cfg.eps = num();
        else if (fk == "nk.alpha") cfg.alpha = num();
        else if (fk == "nk.first_step_zeta") cfg.first_step_zeta = num();
        else if (fk == "nk.first_step_lambda0") cfg.first_step_lambda0 = num();
        else if (fk == "nk.smoothing_l") cfg.smoothing_l = num();
        else if (fk == "output.out_dir") cfg.out_dir = value;
        else if (fk == "output.seed") cfg.seed = std::stoull(value);
        else if (fk == "output.alphas") cfg.alphas = parse_list(value);
        else if (fk == "output.export_fields") cfg.export_fields = value == "true" || value == "1";
        else
            throw std::invalid_argument("config: unknown key " + fk + " at line " +
                                        std::to_string(lineno));
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    return parse(in);
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
    std::vector<std::string> dirs;
    if (const char* env = std::getenv("VK_PRESET_DIR")) dirs.push_back(env);
#ifdef VK_PRESET_DIR
    dirs.push_back(VK_PRESET_DIR);
#endif
    dirs.push_back("presets");
    for (const auto& d : dirs) {
        std::filesystem::path p = std::filesystem::path(d) / (name + ".cfg");
        if (std::filesystem::exists(p)) return load(p.string());
    }
    throw std::invalid_argument("preset not found: " + name);
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "[domain]\n";
    os << "x_min " << x_min << "\nx_max " << x_max << "\ny_min " << y_min << "\ny_max " << y_max
       << "\n";
    os << "resolution " << resolution << "\nmargin " << margin << "\n";
    os << "[problem]\n";
    os << "k " << k << "\nsource " << source << "\na_const " << a_const << "\n";
    os << "f_expr " << f_expr << "\nf_scale " << f_scale << "\nc_pad " << c_pad << "\n";
    os << "v_amp " << v_amp << "\nv_freq " << v_freq << "\n";
    os << "[mode]\nmode " << mode << "\n";
    os << "[stage]\n";
    os << "l " << l << "\nM " << M << "\ngamma " << gamma << "\nbeta " << beta << "\nr0 " << r0
       << "\n";
    os << "lambdas " << list_text(lambdas) << "\n";
    os << "[nk]\n";
    os << "l0 " << nk_l0 << "\nlambda0 " << nk_lambda0 << "\nratio_l " << nk_ratio_l
       << "\nratio_lambda " << nk_ratio_lambda << "\niters " << nk_iters << "\n";
    os << "deficit_target " << deficit_target << "\ntarget_rel " << target_rel << "\n";
    os << "eps " << eps << "\nalpha " << alpha << "\n";
    os << "first_step_zeta " << first_step_zeta << "\nfirst_step_lambda0 " << first_step_lambda0
       << "\nsmoothing_l " << smoothing_l << "\n";
    os << "[output]\n";
    os << "out_dir " << out_dir << "\nseed " << seed << "\nalphas " << list_text(alphas) << "\n";
    os << "export_fields " << (export_fields ? "true" : "false") << "\n";
    return os.str();
}

Field f_to_A(const Field& f, double c_pad) {
    if (f.comps() != 1) throw std::invalid_argument("f_to_A: scalar field expected");
    if (!(c_pad > 0)) throw std::invalid_argument("f_to_A: c_pad must be positive");
    Field rhs = f;
    rhs *= -1.0;
    Field phi = solve_dirichlet(rhs);
    Field A(f.grid, 2, 2);
    long N = f.grid.nodes();
    for (long i = 0; i < N; ++i) {
        A.comp(0)[i] = phi.comp(0)[i] + c_pad;
        A.comp(3)[i] = phi.comp(0)[i] + c_pad;
    }
    return A;
}

Problem setup_problem(const ExperimentConfig& cfg) {
    Grid2 g = Grid2::make(cfg.x_min, cfg.x_max, cfg.y_min, cfg.y_max,
                          cfg.resolution, cfg.resolution, cfg.margin);
    Problem pb;
    pb.v = Field(g, cfg.k, 1);
    pb.w = Field(g, 2, 1);
    if (cfg.v_amp != 0) {
        double om = cfg.v_freq;
        for (int c = 0; c < cfg.k; ++c)
            for (int iy = 0; iy < g.ny; ++iy)
                for (int ix = 0; ix < g.nx; ++ix)
                    pb.v.at(c, ix, iy) = cfg.v_amp / (om * om) *
                                         std::sin(om * g.x(ix) + 0.3 * c) *
                                         std::sin(om * g.y(iy) + 0.7 * c);
    }
    if (cfg.source == "constant") {
        pb.A = Field(g, 2, 2);
        long N = g.nodes();
        for (long i = 0; i < N; ++i) {
            pb.A.comp(0)[i] = cfg.a_const;
            pb.A.comp(3)[i] = cfg.a_const;
        }
        pb.f = Field(g, 1, 1); // -curl curl of a constant field vanishes
    } else {
        pb.f = Field(g, 1, 1);
        double Lx = cfg.x_max - cfg.x_min, Ly = cfg.y_max - cfg.y_min;
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                double val = 0;
                if (cfg.f_expr == "one") val = cfg.f_scale;
                else if (cfg.f_expr == "sine")
                    val = cfg.f_scale * std::sin(M_PI * (g.x(ix) - cfg.x_min) / Lx) *
                          std::sin(M_PI * (g.y(iy) - cfg.y_min) / Ly);
                pb.f.at(0, ix, iy) = val;
            }
        pb.A = f_to_A(pb.f, cfg.c_pad);
    }
    return pb;
}

namespace {

/// 1D bump profile exp(-1/(1-u^2)), zero outside |u| < 1.
double bump(double u) {
    double u2 = u * u;
    return u2 >= 1.0 - 1e-12 ? 0.0 : std::exp(-1.0 / (1 - u2));
}

} // namespace

std::vector<Field> ma_battery(const Grid2& g) {
    // Version 1: five tensor-product bumps at fixed relative centers/radii.
    const double spec[5][3] = {{0.5, 0.5, 0.35},
                               {0.3, 0.3, 0.2},
                               {0.7, 0.3, 0.2},
                               {0.3, 0.7, 0.2},
                               {0.7, 0.7, 0.2}};
    double Lx = g.x_max - g.x_min, Ly = g.y_max - g.y_min;
    double h2 = g.h * g.h;
    std::vector<Field> battery;
    for (const auto& s : spec) {
        double cx = g.x_min + s[0] * Lx, cy = g.y_min + s[1] * Ly;
        double Rx = s[2] * Lx, Ry = s[2] * Ly;
        // Cofactor entries come from the shared FD stencils so that the weak
        // pairing telescopes exactly against the same discrete calculus.
        Field psi(g, 1, 1);
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                psi.at(0, ix, iy) = bump((g.x(ix) - cx) / Rx) * bump((g.y(iy) - cy) / Ry);
        Field H = fd_hessian(psi);
        Field e(g, 4, 1); // psi, k11, k12, k22
        double mass = 0;
        for (long i = 0; i < g.nodes(); ++i) {
            e.comp(0)[i] = psi.comp(0)[i];
            e.comp(1)[i] = H.comp(3)[i];
            e.comp(2)[i] = -H.comp(1)[i];
            e.comp(3)[i] = H.comp(0)[i];
            mass += h2 * (std::abs(e.comp(1)[i]) + 2 * std::abs(e.comp(2)[i]) +
                          std::abs(e.comp(3)[i]));
        }
        e *= kMaBatteryMass / mass;
        battery.push_back(std::move(e));
    }
    return battery;
}

MaResiduals verify_ma(const Field& v, const Field& w, const Field& A, const Field& f) {
    const Grid2& g = v.grid;
    Field Ar = A.grid.same_layout(g) ? A : A.restrict_to(g);
    Field fr = f.grid.same_layout(g) ? f : f.restrict_to(g);
    MaResiduals r;
    r.vk_residual = sup_norm(deficit(v, w, Ar));

    Field G = fd_gradient(v);
    long N = g.nodes();
    std::vector<double> P11(N, 0.0), P12(N, 0.0), P22(N, 0.0);
    for (int c = 0; c < v.comps(); ++c) {
        const double *gx = G.comp(c * 2), *gy = G.comp(c * 2 + 1);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < N; ++i) {
            P11[i] += gx[i] * gx[i];
            P12[i] += gx[i] * gy[i];
            P22[i] += gy[i] * gy[i];
        }
    }
    double h2 = g.h * g.h;
    for (const Field& e : ma_battery(g)) {
        const double *psi = e.comp(0), *k11 = e.comp(1), *k12 = e.comp(2), *k22 = e.comp(3);
        double I = 0;
#pragma omp parallel for schedule(static) reduction(+ : I)
        for (long i = 0; i < N; ++i)
            I += h2 * (-0.5 * (P11[i] * k11[i] + 2 * P12[i] * k12[i] + P22[i] * k22[i]) -
                       fr.comp(0)[i] * psi[i]);
        r.weak_ma_residual = std::max(r.weak_ma_residual, std::abs(I));
    }
    return r;
}

RateFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_loglog: need >= 2 matching points");
    RateFit fit;
    fit.n = static_cast<int>(x.size());
    std::vector<double> lx(fit.n), ly(fit.n);
    for (int i = 0; i < fit.n; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(std::max(y[i], 1e-300));
    }
    double mx = 0, my = 0;
    for (int i = 0; i < fit.n; ++i) { mx += lx[i]; my += ly[i]; }
    mx /= fit.n;
    my /= fit.n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < fit.n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (fit.n > 2) {
        double ss = 0;
        for (int i = 0; i < fit.n; ++i) {
            double rres = ly[i] - fit.intercept - fit.slope * lx[i];
            ss += rres * rres;
        }
        fit.stderr_slope = std::sqrt(ss / (fit.n - 2) / sxx);
    }
    return fit;
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

} // namespace

int run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::path out(cfg.out_dir);
    std::filesystem::create_directories(out);
    write_text(out / "config_echo.txt", cfg.to_text());

    Problem pb = setup_problem(cfg);
    if (cfg.mode == "export") {
        export_structured(pb.v, (out / "v.grid").string());
        export_structured(pb.w, (out / "w.grid").string());
        export_structured(pb.A, (out / "A.grid").string());
        export_structured(pb.f, (out / "f.grid").string());
        return 0;
    }

    if (cfg.mode == "stage" || cfg.mode == "sweep") {
        StageParams p;
        p.l = cfg.l; p.M = cfg.M; p.gamma = cfg.gamma; p.beta = cfg.beta; p.r0 = cfg.r0;
        std::ostringstream csv;
        csv << StageReport::csv_header() << "\n";
        std::vector<double> xs, def, hess, floors;
        Field vt, wt;
        for (double lambda : cfg.lambdas) {
            p.lambda = lambda;
            auto [sv, sw, rep] = run_stage(pb.v, pb.w, pb.A, p, cfg.k);
            csv << rep.csv_row() << "\n";
            xs.push_back(lambda * cfg.l);
            def.push_back(rep.out_deficit);
            hess.push_back(rep.out_hess_v);
            floors.push_back(rep.moll_error_A);
            std::ostringstream name;
            name << "stage_lambda_" << lambda << ".txt";
            write_text(out / name.str(), rep.to_kv());
            vt = std::move(sv);
            wt = std::move(sw);
        }
        write_text(out / (cfg.mode == "sweep" ? "sweep.csv" : "stage_report.csv"), csv.str());
        if (cfg.mode == "sweep" && xs.size() >= 2) {
            std::vector<double> adj(def.size());
            for (size_t i = 0; i < def.size(); ++i) adj[i] = std::max(def[i] - floors[i], 1e-300);
            RateFit fd_fit = fit_loglog(xs, adj);
            RateFit fh_fit = fit_loglog(xs, hess);
            nlohmann::json j;
            j["deficit_slope"] = fd_fit.slope;
            j["deficit_stderr"] = fd_fit.stderr_slope;
            j["hessian_slope"] = fh_fit.slope;
            j["hessian_stderr"] = fh_fit.stderr_slope;
            j["n"] = fd_fit.n;
            j["lambda_l"] = xs;
            j["deficit"] = def;
            j["hessian"] = hess;
            write_text(out / "ratefit.json", j.dump(2));
        }
        if (cfg.export_fields) {
            export_structured(vt, (out / "v_out.grid").string());
            export_structured(wt, (out / "w_out.grid").string());
        }
        return 0;
    }

    // flex | verify
    FlexOptions fo;
    fo.schedule.l0 = cfg.nk_l0;
    fo.schedule.lambda0 = cfg.nk_lambda0;
    fo.schedule.ratio_l = cfg.nk_ratio_l;
    fo.schedule.ratio_lambda = cfg.nk_ratio_lambda;
    fo.schedule.iters = cfg.nk_iters;
    fo.nk.gamma = cfg.gamma;
    fo.nk.beta = cfg.beta;
    fo.nk.r0 = cfg.r0;
    fo.nk.deficit_target = cfg.deficit_target;
    fo.nk.alphas = cfg.alphas;
    fo.target_rel = cfg.target_rel;
    fo.first_step_zeta = cfg.first_step_zeta;
    fo.first_step_lambda0 = cfg.first_step_lambda0;
    fo.smoothing_l = cfg.smoothing_l;
    auto [vt, wt, rep] = full_flexibility(pb.v, pb.w, pb.A, cfg.eps, cfg.alpha, cfg.k, fo);
    write_text(out / "flex.json", rep.json());
    if (!rep.short_circuit) write_text(out / "nk.csv", rep.nk.csv());
    if (cfg.mode == "verify" || cfg.source == "f") {
        MaResiduals mr = verify_ma(vt, wt, pb.A, pb.f);
        nlohmann::json j;
        j["vk_residual"] = mr.vk_residual;
        j["weak_ma_residual"] = mr.weak_ma_residual;
        j["battery_version"] = kMaBatteryVersion;
        j["battery_mass"] = kMaBatteryMass;
        write_text(out / "verify.json", j.dump(2));
    }
    if (cfg.export_fields) {
        export_structured(vt, (out / "v_out.grid").string());
        export_structured(wt, (out / "w_out.grid").string());
    }
    return 0;
}

} // namespace vk
