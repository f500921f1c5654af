#ifndef VK_FIELDS_HPP
#define VK_FIELDS_HPP

#include <map>
#include <string>
#include <vector>

namespace vk {

/** Uniform rectangular grid with a thickening margin around the core
 * rectangle [x_min,x_max]x[y_min,y_max]. The margin is stored in whole
 * cells so that shrinking is always a subset-aligned restriction. */
struct Grid2 {
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    double h = 0;
    int margin_cells = 0;
    int nx = 0, ny = 0; ///< node counts including margin

    double margin() const { return margin_cells * h; }
    double x0() const { return x_min - margin(); }
    double y0() const { return y_min - margin(); }
    double x(int ix) const { return x0() + ix * h; }
    double y(int iy) const { return y0() + iy * h; }
    long nodes() const { return static_cast<long>(nx) * ny; }

    /** Builds a grid whose core rectangle is sampled with core_nx x core_ny
     * nodes; the requested margin is rounded up to whole cells. */
    static Grid2 make(double x_min, double x_max, double y_min, double y_max,
                      int core_nx, int core_ny, double margin = 0.0);

    /** Restriction dropping `cells` margin cells per side. */
    Grid2 shrink_cells(int cells) const;
    /** Restriction to the smallest aligned margin >= new_margin. */
    Grid2 shrink(double new_margin) const;

    bool same_layout(const Grid2& o) const;
};

/** Sampled map grid -> R^{m x n}. Storage is plane-major: component
 * c = r*n + col occupies a contiguous nx*ny row-major plane. */
struct Field {
    Grid2 grid;
    int m = 1, n = 1;
    std::vector<double> data;

    Field() = default;
    Field(const Grid2& g, int m_, int n_);
    static Field zeros(const Grid2& g, int m_, int n_) { return Field(g, m_, n_); }
    static Field constant(const Grid2& g, int m_, int n_, double value);

    int comps() const { return m * n; }
    long plane() const { return grid.nodes(); }
    double* comp(int c) { return data.data() + static_cast<long>(c) * plane(); }
    const double* comp(int c) const { return data.data() + static_cast<long>(c) * plane(); }
    double& at(int c, int ix, int iy) { return comp(c)[static_cast<long>(iy) * grid.nx + ix]; }
    double at(int c, int ix, int iy) const { return comp(c)[static_cast<long>(iy) * grid.nx + ix]; }

    /** Restriction onto an aligned subgrid (same h, margin subset). */
    Field restrict_to(const Grid2& sub) const;

    bool all_finite() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double c);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);

/** Sup-norm style estimates of a field and its FD derivatives. */
struct NormReport {
    double c0 = 0; ///< max node |f| (max over components)
    double c1 = 0; ///< max(c0, sup |grad f|)
    double c2 = 0; ///< max(c1, sup |hessian f|)
    std::map<double, double> holder; ///< dyadic-separation seminorm per exponent

    double holder_at(double gamma) const;
};

/// Central differences inside, one-sided second order at the boundary.
/// Output shape (m*n, 2): component c maps to (c*2 + axis).
Field fd_gradient(const Field& f);

/// Second-order second derivatives; output shape (m*n, 4) storing
/// (d11, d12, d21, d22) per input component, with d21 == d12.
Field fd_hessian(const Field& f);

/// 0.5*(grad w + (grad w)^T) for an R^2-valued field; output shape (2,2).
Field sym_grad(const Field& w);

/// 0.5*(grad v)^T grad v + sym grad w, the quadratic strain of the pair.
Field vk_metric(const Field& v, const Field& w);

/// A - (0.5*(grad v)^T grad v + sym grad w).
Field deficit(const Field& v, const Field& w, const Field& A);

/// <d11 v, d22 v> - |d12 v|^2 for v: grid -> R^k (k = m*n of v).
Field det_hessian(const Field& v);

/// d22 A11 - 2*d12 A12 + d11 A22 for a symmetric 2x2 field.
Field curl_curl(const Field& A);

/// Norm estimates; holder exponents must lie in (0,1].
NormReport norms(const Field& f, const std::vector<double>& exponents = {});

/// Pointwise max of |f| over components.
double sup_norm(const Field& f);

/// CSV export: x, y, then one column per component.
void export_csv(const Field& f, const std::string& path);

/// Plain-text structured grid: "nx ny h x0 y0 m n" header then row-major
/// node values (all components per node on one line).
void export_structured(const Field& f, const std::string& path);

/// Reads the structured text format written by export_structured.
Field import_structured(const std::string& path);

} // namespace vk

#endif
