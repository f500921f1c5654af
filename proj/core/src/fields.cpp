#include "vk/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vk {

Grid2 Grid2::make(double x_min, double x_max, double y_min, double y_max,
                  int core_nx, int core_ny, double margin) {
    if (core_nx < 2 || core_ny < 2) throw std::invalid_argument("grid: core resolution too small");
    if (x_max <= x_min || y_max <= y_min) throw std::invalid_argument("grid: empty rectangle");
    if (margin < 0) throw std::invalid_argument("grid: negative margin");
    Grid2 g;
    g.x_min = x_min; g.x_max = x_max; g.y_min = y_min; g.y_max = y_max;
    g.h = (x_max - x_min) / (core_nx - 1);
    double hy = (y_max - y_min) / (core_ny - 1);
    if (std::abs(g.h - hy) > 1e-12 * std::max(g.h, hy))
        throw std::invalid_argument("grid: spacing must be uniform in both axes");
    g.margin_cells = static_cast<int>(std::ceil(margin / g.h - 1e-9));
    if (g.margin_cells < 0) g.margin_cells = 0;
    g.nx = core_nx + 2 * g.margin_cells;
    g.ny = core_ny + 2 * g.margin_cells;
    if (g.nx < 8 || g.ny < 8) throw std::invalid_argument("grid: fewer than 8 nodes per axis");
    return g;
}

Grid2 Grid2::shrink_cells(int cells) const {
    if (cells < 0 || cells > margin_cells) throw std::invalid_argument("grid: shrink out of range");
    Grid2 g = *this;
    g.margin_cells = margin_cells - cells;
    g.nx = nx - 2 * cells;
    g.ny = ny - 2 * cells;
    if (g.nx < 8 || g.ny < 8) throw std::invalid_argument("grid: shrink below 8 nodes per axis");
    return g;
}

Grid2 Grid2::shrink(double new_margin) const {
    if (new_margin < 0 || new_margin > margin() + 1e-12) throw std::invalid_argument("grid: shrink out of range");
    int keep = std::min(margin_cells, static_cast<int>(std::ceil(new_margin / h - 1e-9)));
    return shrink_cells(margin_cells - keep);
}

bool Grid2::same_layout(const Grid2& o) const {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * (1 + std::abs(a) + std::abs(b)); };
    return nx == o.nx && ny == o.ny && margin_cells == o.margin_cells &&
           close(h, o.h) && close(x0(), o.x0()) && close(y0(), o.y0());
}

Field::Field(const Grid2& g, int m_, int n_) : grid(g), m(m_), n(n_) {
    if (m < 1 || n < 1) throw std::invalid_argument("field: bad shape");
    data.assign(static_cast<size_t>(grid.nodes()) * comps(), 0.0);
}

Field Field::constant(const Grid2& g, int m_, int n_, double value) {
    Field f(g, m_, n_);
    std::fill(f.data.begin(), f.data.end(), value);
    return f;
}

Field Field::restrict_to(const Grid2& sub) const {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * (1 + std::abs(a) + std::abs(b)); };
    if (!close(sub.h, grid.h) || sub.margin_cells > grid.margin_cells ||
        !close(sub.x_min, grid.x_min) || !close(sub.y_min, grid.y_min))
        throw std::invalid_argument("field: restriction target is not an aligned subgrid");
    int off = grid.margin_cells - sub.margin_cells;
    Field out(sub, m, n);
    for (int c = 0; c < comps(); ++c)
        for (int iy = 0; iy < sub.ny; ++iy)
            for (int ix = 0; ix < sub.nx; ++ix)
                out.at(c, ix, iy) = at(c, ix + off, iy + off);
    return out;
}

bool Field::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

static void require_same(const Field& a, const Field& b) {
    if (!a.grid.same_layout(b.grid) || a.m != b.m || a.n != b.n)
        throw std::invalid_argument("field: operands live on different grids or shapes");
}

Field& Field::operator+=(const Field& o) {
    require_same(*this, o);
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
}
Field& Field::operator-=(const Field& o) {
    require_same(*this, o);
    for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
}
Field& Field::operator*=(double c) {
    for (double& v : data) v *= c;
    return *this;
}
Field operator+(Field a, const Field& b) { a += b; return a; }
Field operator-(Field a, const Field& b) { a -= b; return a; }
Field operator*(double c, Field a) { a *= c; return a; }

// 1D first derivative along a contiguous line with stride.
static void d1_line(const double* f, double* out, int n, long stride, double h) {
    out[0] = (-3 * f[0] + 4 * f[stride] - f[2 * stride]) / (2 * h);
    for (int i = 1; i < n - 1; ++i)
        out[static_cast<long>(i)] = (f[(i + 1) * stride] - f[(i - 1) * stride]) / (2 * h);
    out[static_cast<long>(n - 1)] =
        (3 * f[(n - 1) * stride] - 4 * f[(n - 2) * stride] + f[(n - 3) * stride]) / (2 * h);
}

// 1D second derivative, one-sided second order at the ends.
static void d2_line(const double* f, double* out, int n, long stride, double h) {
    double h2 = h * h;
    out[0] = (2 * f[0] - 5 * f[stride] + 4 * f[2 * stride] - f[3 * stride]) / h2;
    for (int i = 1; i < n - 1; ++i)
        out[static_cast<long>(i)] = (f[(i + 1) * stride] - 2 * f[i * stride] + f[(i - 1) * stride]) / h2;
    out[static_cast<long>(n - 1)] = (2 * f[(n - 1) * stride] - 5 * f[(n - 2) * stride] +
                                     4 * f[(n - 3) * stride] - f[(n - 4) * stride]) / h2;
}

enum class Axis { X, Y };
enum class Order { First, Second };

static void derive_plane(const double* src, double* dst, const Grid2& g, Axis ax, Order ord) {
    int nx = g.nx, ny = g.ny;
    if (ax == Axis::X) {
#pragma omp parallel for schedule(static)
        for (int iy = 0; iy < ny; ++iy) {
            const double* row = src + static_cast<long>(iy) * nx;
            double* orow = dst + static_cast<long>(iy) * nx;
            if (ord == Order::First) d1_line(row, orow, nx, 1, g.h);
            else d2_line(row, orow, nx, 1, g.h);
        }
    } else {
#pragma omp parallel for schedule(static)
        for (int ix = 0; ix < nx; ++ix) {
            std::vector<double> col(ny);
            if (ord == Order::First) d1_line(src + ix, col.data(), ny, nx, g.h);
            else d2_line(src + ix, col.data(), ny, nx, g.h);
            for (int iy = 0; iy < ny; ++iy) dst[static_cast<long>(iy) * nx + ix] = col[iy];
        }
    }
}

Field fd_gradient(const Field& f) {
    if (f.grid.nx < 3 || f.grid.ny < 3) throw std::invalid_argument("fd_gradient: grid too small");
    Field g(f.grid, f.comps(), 2);
    for (int c = 0; c < f.comps(); ++c) {
        derive_plane(f.comp(c), g.comp(c * 2 + 0), f.grid, Axis::X, Order::First);
        derive_plane(f.comp(c), g.comp(c * 2 + 1), f.grid, Axis::Y, Order::First);
    }
    return g;
}

Field fd_hessian(const Field& f) {
    if (f.grid.nx < 4 || f.grid.ny < 4) throw std::invalid_argument("fd_hessian: grid too small");
    Field h(f.grid, f.comps() * 2, 2); // per input comp: (d11, d12, d21, d22)
    std::vector<double> tmp(f.grid.nodes());
    for (int c = 0; c < f.comps(); ++c) {
        derive_plane(f.comp(c), h.comp(c * 4 + 0), f.grid, Axis::X, Order::Second);
        derive_plane(f.comp(c), h.comp(c * 4 + 3), f.grid, Axis::Y, Order::Second);
        derive_plane(f.comp(c), tmp.data(), f.grid, Axis::X, Order::First);
        derive_plane(tmp.data(), h.comp(c * 4 + 1), f.grid, Axis::Y, Order::First);
        std::copy(h.comp(c * 4 + 1), h.comp(c * 4 + 1) + f.grid.nodes(), h.comp(c * 4 + 2));
    }
    return h;
}

Field sym_grad(const Field& w) {
    if (w.comps() != 2) throw std::invalid_argument("sym_grad: field must be R^2-valued");
    Field g = fd_gradient(w); // comps: (d1 w1, d2 w1, d1 w2, d2 w2)
    Field s(w.grid, 2, 2);
    long N = w.grid.nodes();
    const double *g11 = g.comp(0), *g12 = g.comp(1), *g21 = g.comp(2), *g22 = g.comp(3);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < N; ++i) {
        s.comp(0)[i] = g11[i];
        s.comp(3)[i] = g22[i];
        double off = 0.5 * (g12[i] + g21[i]);
        s.comp(1)[i] = off;
        s.comp(2)[i] = off;
    }
    return s;
}

Field vk_metric(const Field& v, const Field& w) {
    if (!v.grid.same_layout(w.grid)) throw std::invalid_argument("vk_metric: grid mismatch");
    Field s = sym_grad(w);
    Field g = fd_gradient(v);
    long N = v.grid.nodes();
    int k = v.comps();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < N; ++i) {
        double q11 = 0, q12 = 0, q22 = 0;
        for (int c = 0; c < k; ++c) {
            double a = g.comp(c * 2 + 0)[i], b = g.comp(c * 2 + 1)[i];
            q11 += a * a; q12 += a * b; q22 += b * b;
        }
        s.comp(0)[i] += 0.5 * q11;
        s.comp(1)[i] += 0.5 * q12;
        s.comp(2)[i] += 0.5 * q12;
        s.comp(3)[i] += 0.5 * q22;
    }
    return s;
}

Field deficit(const Field& v, const Field& w, const Field& A) {
    if (A.comps() != 4) throw std::invalid_argument("deficit: A must be 2x2");
    Field d = A;
    d -= vk_metric(v, w);
    return d;
}

Field det_hessian(const Field& v) {
    Field h = fd_hessian(v);
    Field out(v.grid, 1, 1);
    long N = v.grid.nodes();
    int k = v.comps();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < N; ++i) {
        double acc = 0;
        for (int c = 0; c < k; ++c) {
            double d11 = h.comp(c * 4 + 0)[i], d12 = h.comp(c * 4 + 1)[i], d22 = h.comp(c * 4 + 3)[i];
            acc += d11 * d22 - d12 * d12;
        }
        out.comp(0)[i] = acc;
    }
    return out;
}

Field curl_curl(const Field& A) {
    if (A.comps() != 4) throw std::invalid_argument("curl_curl: field must be 2x2");
    Field h = fd_hessian(A);
    Field out(A.grid, 1, 1);
    long N = A.grid.nodes();
    const double* a11_d22 = h.comp(0 * 4 + 3);
    const double* a12_d12 = h.comp(1 * 4 + 1);
    const double* a22_d11 = h.comp(3 * 4 + 0);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < N; ++i)
        out.comp(0)[i] = a11_d22[i] - 2 * a12_d12[i] + a22_d11[i];
    return out;
}

double sup_norm(const Field& f) {
    double s = 0;
    for (double v : f.data) s = std::max(s, std::abs(v));
    return s;
}

static double holder_seminorm(const Field& f, double gamma) {
    const int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    const Grid2& g = f.grid;
    double best = 0;
    for (int c = 0; c < f.comps(); ++c) {
        const double* p = f.comp(c);
        for (auto& d : dirs) {
            double len = g.h * std::sqrt(static_cast<double>(d[0] * d[0] + d[1] * d[1]));
            for (int s = 1; s < std::max(g.nx, g.ny); s *= 2) {
                int sx = d[0] * s, sy = d[1] * s;
                if (std::abs(sx) >= g.nx || std::abs(sy) >= g.ny) break;
                double dist = len * s;
                double w = std::pow(dist, -gamma);
                double m = 0;
                int y_lo = std::max(0, -sy), y_hi = std::min(g.ny, g.ny - sy);
#pragma omp parallel for reduction(max : m) schedule(static)
                for (int iy = y_lo; iy < y_hi; ++iy) {
                    const double* row = p + static_cast<long>(iy) * g.nx;
                    const double* srow = p + static_cast<long>(iy + sy) * g.nx + sx;
                    int x_lo = std::max(0, -sx), x_hi = std::min(g.nx, g.nx - sx);
                    for (int ix = x_lo; ix < x_hi; ++ix)
                        m = std::max(m, std::abs(srow[ix] - row[ix]));
                }
                best = std::max(best, m * w);
            }
        }
    }
    return best;
}

NormReport norms(const Field& f, const std::vector<double>& exponents) {
    NormReport r;
    r.c0 = sup_norm(f);
    r.c1 = std::max(r.c0, sup_norm(fd_gradient(f)));
    r.c2 = std::max(r.c1, sup_norm(fd_hessian(f)));
    for (double g : exponents) {
        if (!(g > 0 && g <= 1)) throw std::invalid_argument("norms: holder exponent outside (0,1]");
        r.holder[g] = holder_seminorm(f, g);
    }
    return r;
}

double NormReport::holder_at(double gamma) const {
    auto it = holder.find(gamma);
    if (it == holder.end()) throw std::out_of_range("norm report: exponent not computed");
    return it->second;
}

void export_csv(const Field& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_csv: cannot open " + path);
    out << "x,y";
    for (int c = 0; c < f.comps(); ++c) out << ",c" << c;
    out << "\n";
    char buf[32];
    for (int iy = 0; iy < f.grid.ny; ++iy)
        for (int ix = 0; ix < f.grid.nx; ++ix) {
            out << f.grid.x(ix) << ',' << f.grid.y(iy);
            for (int c = 0; c < f.comps(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", f.at(c, ix, iy));
                out << ',' << buf;
            }
            out << '\n';
        }
}

void export_structured(const Field& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_structured: cannot open " + path);
    out.precision(17);
    out << f.grid.nx << ' ' << f.grid.ny << ' ' << f.grid.h << ' '
        << f.grid.x0() << ' ' << f.grid.y0() << ' ' << f.grid.margin_cells << ' '
        << f.m << ' ' << f.n << '\n';
    for (int iy = 0; iy < f.grid.ny; ++iy)
        for (int ix = 0; ix < f.grid.nx; ++ix) {
            for (int c = 0; c < f.comps(); ++c) out << (c ? " " : "") << f.at(c, ix, iy);
            out << '\n';
        }
}

Field import_structured(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import_structured: cannot open " + path);
    Grid2 g;
    int m, n;
    double x0, y0;
    if (!(in >> g.nx >> g.ny >> g.h >> x0 >> y0 >> g.margin_cells >> m >> n))
        throw std::runtime_error("import_structured: bad header");
    g.x_min = x0 + g.margin();
    g.y_min = y0 + g.margin();
    g.x_max = x0 + (g.nx - 1 - g.margin_cells) * g.h;
    g.y_max = y0 + (g.ny - 1 - g.margin_cells) * g.h;
    Field f(g, m, n);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            for (int c = 0; c < f.comps(); ++c)
                if (!(in >> f.at(c, ix, iy))) throw std::runtime_error("import_structured: truncated data");
    return f;
}

} // namespace vk
