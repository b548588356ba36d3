#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace ksf {

enum class DerivMethod { Spectral, FiniteDifference };

// Periodic grid on [-L, L]^m.  Axes with a single point are inactive: fields are
// constant along them (symmetry-reduced mode).
class TorusGrid {
public:
    TorusGrid(int m, double L, std::vector<int> dims, DerivMethod method = DerivMethod::Spectral, int fd_order = 4);
    ~TorusGrid();
    TorusGrid(const TorusGrid& other);
    TorusGrid& operator=(const TorusGrid& other);

    int m() const { return m_; }
    double L() const { return L_; }
    const std::vector<int>& dims() const { return dims_; }
    long npts() const { return npts_; }
    DerivMethod method() const { return method_; }
    int fd_order() const { return fd_order_; }
    bool active(int axis) const { return dims_[axis] > 1; }
    int n_active() const { return static_cast<int>(active_.size()); }
    double dx(int axis) const { return 2.0 * L_ / dims_[axis]; }
    double min_dx() const;
    double cell_volume() const;

    double coord(long p, int axis) const;
    Eigen::VectorXd point(long p) const;
    double radius(long p) const { return point(p).norm(); }

    // d/dx^axis applied to each column.
    Eigen::ArrayXXd derivative(const Eigen::ArrayXXd& W, int axis) const;
    Eigen::ArrayXd derivative(const Eigen::ArrayXd& f, int axis) const;
    // One array per axis; zero for inactive axes.
    std::vector<Eigen::ArrayXXd> gradient(const Eigen::ArrayXXd& W) const;
    // Mixed partial with exponents b[axis].
    Eigen::ArrayXXd partial(const Eigen::ArrayXXd& W, const std::vector<int>& b) const;

    // Spectral helpers for Fourier-diagonal solves (active axes only).
    long n_modes() const { return nmodes_; }
    std::vector<std::complex<double>> forward(const double* f) const;
    void backward(const std::vector<std::complex<double>>& fh, double* out) const;
    // Physical wavenumber vector (length m) of a complex mode; nyquist flags any Nyquist component.
    Eigen::VectorXd wavevector(long mode, bool* nyquist = nullptr) const;

    nlohmann::json to_json() const;
    static TorusGrid from_json(const nlohmann::json& j, int m);

private:
    void make_plans();
    void destroy_plans();
    void fd_derivative(const double* in, double* out, int axis) const;

    int m_;
    double L_;
    std::vector<int> dims_;
    std::vector<int> active_;
    std::vector<long> stride_;
    long npts_;
    long nmodes_ = 0;
    DerivMethod method_;
    int fd_order_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

struct Region {
    std::optional<double> ball_radius;  // empty: whole torus
    static Region torus() { return {}; }
    static Region ball(double r) { return Region{r}; }
};

Eigen::ArrayXd region_mask(const TorusGrid& g, const Region& r);

// Discrete H^k norm (sum over |b| <= k of integral |d^b u|^2)^{1/2}, all columns.
double sobolev_norm(const Eigen::ArrayXXd& field, const TorusGrid& g, int k, const Region& region = Region::torus());

struct ConeDomain {
    double t0 = 1.0;
    double t1 = 0.0;
    double rho0 = 1.0;
    double rho1 = 0.1;
    double eps = 0.5;

    void validate(double L) const;
    double rho_tilde0() const;  // radius limit as t -> 0
    double rho_of_t(double t) const;
    Eigen::VectorXd boundary_normal(double t, const Eigen::VectorXd& x) const;
};

void to_json(nlohmann::json& j, const ConeDomain& c);
void from_json(const nlohmann::json& j, ConeDomain& c);

// C^infinity cutoff: 1 for r <= r0, 0 for r >= r1.
double smooth_cutoff(double r, double r0, double r1);

// chi * field + (1 - chi) * background with chi = 1 on |x| <= rho0 and 0 beyond (rho0 + L)/2.
Eigen::ArrayXXd extend_initial_data(const Eigen::ArrayXXd& field, const Eigen::ArrayXXd& background,
                                    const TorusGrid& g, double rho0);

}  // namespace ksf
