#include "vk/experiment.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace vk;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("vk_test_" + tag);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("config text round trip") {
    ExperimentConfig cfg;
    cfg.resolution = 128;
    cfg.k = 1;
    cfg.mode = "sweep";
    cfg.lambdas = {20, 40, 80};
    cfg.alphas = {0.15, 0.5};
    cfg.out_dir = "somewhere";
    std::istringstream in(cfg.to_text());
    ExperimentConfig back = ExperimentConfig::parse(in);
    CHECK(back.to_text() == cfg.to_text());
    CHECK(back.lambdas == cfg.lambdas);
    CHECK(back.mode == "sweep");
}

TEST_CASE("config parse and validation errors") {
    auto parse_str = [](const std::string& s) {
        std::istringstream in(s);
        return ExperimentConfig::parse(in);
    };
    CHECK_THROWS(parse_str("[domain]\nbogus_key 3\n"));
    CHECK_THROWS(parse_str("[domain]\nresolution\n"));
    ExperimentConfig cfg = parse_str("[domain]\nresolution 32\n");
    CHECK_THROWS(cfg.validate());
    cfg = parse_str("[output]\nalphas 0.2,1.5\n");
    CHECK_THROWS(cfg.validate());
    cfg = parse_str("[mode]\nmode nonsense\n");
    CHECK_THROWS(cfg.validate());
    // comments and '=' separators are accepted
    ExperimentConfig ok = parse_str("# comment\n[problem]\nk = 3\n[stage]\nlambdas 10,20\n");
    CHECK(ok.k == 3);
    CHECK(ok.lambdas == std::vector<double>{10, 20});
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("shipped presets load and validate") {
    for (const char* name : {"stage-sweep-k2", "ma-density-k1", "flex-k2"}) {
        ExperimentConfig cfg = ExperimentConfig::preset(name);
        CHECK_NOTHROW(cfg.validate());
    }
    CHECK_THROWS(ExperimentConfig::preset("no-such-preset"));
}

TEST_CASE("density lift inverts the double curl") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 257, 257, 0.0);
    const double pi = 3.14159265358979323846;
    Field f(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            f.at(0, ix, iy) = std::sin(pi * g.x(ix)) * std::sin(pi * g.y(iy));
    Field A = f_to_A(f, 0.2);
    Field r = curl_curl(A) + f;
    CHECK(sup_norm(r) <= 50 * g.h * g.h);
    CHECK(A.at(1, 10, 10) == 0);
    CHECK(A.at(0, 10, 10) == A.at(3, 10, 10));
}

TEST_CASE("weak-form battery is normalized and consistent") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 192, 192, 0.1);
    std::vector<Field> bat = ma_battery(g);
    REQUIRE(bat.size() >= 3);
    double h2 = g.h * g.h;
    for (const Field& b : bat) {
        REQUIRE(b.comps() == 4);
        double mass = 0;
        for (long i = 0; i < g.nodes(); ++i)
            mass += h2 * (std::abs(b.comp(1)[i]) + 2 * std::abs(b.comp(2)[i]) +
                          std::abs(b.comp(3)[i]));
        CHECK(mass == doctest::Approx(kMaBatteryMass).epsilon(1e-9));
        // psi is compactly supported inside the grid
        for (int ix = 0; ix < g.nx; ++ix) {
            CHECK(b.at(0, ix, 0) == 0);
            CHECK(b.at(0, ix, g.ny - 1) == 0);
        }
        // stored cofactor entries match finite differences of psi
        Field psi(g, 1, 1);
        for (long i = 0; i < g.nodes(); ++i) psi.comp(0)[i] = b.comp(0)[i];
        Field H = fd_hessian(psi);
        double scale = 1 + sup_norm(H);
        double err = 0;
        for (long i = 0; i < g.nodes(); ++i) {
            err = std::max(err, std::abs(b.comp(1)[i] - H.comp(3)[i]));
            err = std::max(err, std::abs(b.comp(2)[i] + H.comp(1)[i]));
            err = std::max(err, std::abs(b.comp(3)[i] - H.comp(0)[i]));
        }
        CHECK(err <= 1e-8 * scale);
    }
}

TEST_CASE("weak determinant residual oracles") {
    Grid2 g = Grid2::make(0, 1, 0, 1, 192, 192, 0.1);
    // affine pair: both residuals vanish
    Field v(g, 2, 1), w(g, 2, 1), A(g, 2, 2), f(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            w.at(0, ix, iy) = 0.3 * g.x(ix);
            w.at(1, ix, iy) = 0.3 * g.y(iy);
            A.at(0, ix, iy) = 0.3;
            A.at(3, ix, iy) = 0.3;
        }
    MaResiduals r = verify_ma(v, w, A, f);
    CHECK(r.vk_residual <= 1e-12);
    CHECK(r.weak_ma_residual <= 1e-8);

    // quadratic oracle: v = (x*y, 0), A = strain of v, f = -1
    Field v2(g, 2, 1), w2(g, 2, 1), A2(g, 2, 2), f2(g, 1, 1);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double x = g.x(ix), y = g.y(iy);
            v2.at(0, ix, iy) = x * y;
            A2.at(0, ix, iy) = 0.5 * y * y;
            A2.at(1, ix, iy) = 0.5 * x * y;
            A2.at(2, ix, iy) = 0.5 * x * y;
            A2.at(3, ix, iy) = 0.5 * x * x;
            f2.at(0, ix, iy) = -1.0;
        }
    MaResiduals r2 = verify_ma(v2, w2, A2, f2);
    CHECK(r2.vk_residual <= 1e-9);
    CHECK(r2.weak_ma_residual <= 1e-5);
}

TEST_CASE("log-log slope fit") {
    std::vector<double> x{1, 2, 4, 8, 16}, y;
    for (double xi : x) y.push_back(3.0 / (xi * xi));
    RateFit fit = fit_loglog(x, y);
    CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(fit.n == 5);
    CHECK(fit.stderr_slope <= 1e-10);
}

TEST_CASE("export mode writes the problem fields") {
    ExperimentConfig cfg;
    cfg.resolution = 64;
    cfg.margin = 0.1;
    cfg.mode = "export";
    fs::path out = fresh_dir("export");
    cfg.out_dir = out.string();
    REQUIRE(run_experiment(cfg) == 0);
    for (const char* n : {"config_echo.txt", "v.grid", "w.grid", "A.grid", "f.grid"})
        CHECK(fs::exists(out / n));
    Field A = import_structured((out / "A.grid").string());
    CHECK(sup_norm(A) == doctest::Approx(cfg.a_const));
    fs::remove_all(out);
}

TEST_CASE("stage runs are byte reproducible") {
    ExperimentConfig cfg;
    cfg.resolution = 128;
    cfg.margin = 0.11;
    cfg.mode = "stage";
    cfg.l = 0.05;
    cfg.lambdas = {24};
    cfg.export_fields = false;
    std::string first, second;
    for (std::string* s : {&first, &second}) {
        fs::path out = fresh_dir("repro");
        cfg.out_dir = out.string();
        REQUIRE(run_experiment(cfg) == 0);
        *s = slurp(out / "stage_report.csv");
        fs::remove_all(out);
    }
    CHECK(!first.empty());
    CHECK(first == second);
}
