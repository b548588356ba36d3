#include "ksf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "ksf/parallel.hpp"

namespace ksf {

namespace {
// FFTW planning is not thread safe.
std::mutex g_plan_mutex;

const std::vector<std::vector<double>>& fd_weights() {
    static const std::vector<std::vector<double>> w = {
        {},
        {0.5},
        {2.0 / 3.0, -1.0 / 12.0},
        {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0},
    };
    return w;
}
}  // namespace

struct TorusGrid::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

TorusGrid::TorusGrid(int m, double L, std::vector<int> dims, DerivMethod method, int fd_order)
    : m_(m), L_(L), dims_(std::move(dims)), method_(method), fd_order_(fd_order) {
    if (static_cast<int>(dims_.size()) != m_) throw std::invalid_argument("grid dims must have one entry per spatial axis");
    if (!(L_ > 0.0)) throw std::invalid_argument("grid half-period L must be positive");
    if (method_ == DerivMethod::FiniteDifference && (fd_order_ != 2 && fd_order_ != 4 && fd_order_ != 6))
        throw std::invalid_argument("finite-difference order must be 2, 4 or 6");
    npts_ = 1;
    stride_.assign(m_, 1);
    for (int a = m_ - 1; a >= 0; --a) {
        if (dims_[a] < 1) throw std::invalid_argument("grid dims must be positive");
        if (dims_[a] > 1 && dims_[a] < 8) throw std::invalid_argument("active axes need at least 8 points");
        stride_[a] = npts_;
        npts_ *= dims_[a];
    }
    for (int a = 0; a < m_; ++a)
        if (dims_[a] > 1) active_.push_back(a);
    make_plans();
}

TorusGrid::~TorusGrid() { destroy_plans(); }

TorusGrid::TorusGrid(const TorusGrid& o)
    : m_(o.m_), L_(o.L_), dims_(o.dims_), active_(o.active_), stride_(o.stride_), npts_(o.npts_),
      method_(o.method_), fd_order_(o.fd_order_) {
    make_plans();
}

TorusGrid& TorusGrid::operator=(const TorusGrid& o) {
    if (this == &o) return *this;
    destroy_plans();
    m_ = o.m_;
    L_ = o.L_;
    dims_ = o.dims_;
    active_ = o.active_;
    stride_ = o.stride_;
    npts_ = o.npts_;
    method_ = o.method_;
    fd_order_ = o.fd_order_;
    make_plans();
    return *this;
}

void TorusGrid::make_plans() {
    plans_ = std::make_unique<Plans>();
    if (active_.empty()) {
        nmodes_ = 1;
        return;
    }
    std::vector<int> nd;
    for (int a : active_) nd.push_back(dims_[a]);
    nmodes_ = npts_ / nd.back() * (nd.back() / 2 + 1);
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    double* in = fftw_alloc_real(npts_);
    fftw_complex* out = fftw_alloc_complex(nmodes_);
    plans_->fwd = fftw_plan_dft_r2c(static_cast<int>(nd.size()), nd.data(), in, out, FFTW_ESTIMATE);
    plans_->bwd = fftw_plan_dft_c2r(static_cast<int>(nd.size()), nd.data(), out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
}

void TorusGrid::destroy_plans() {
    if (!plans_) return;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
    if (plans_->bwd) fftw_destroy_plan(plans_->bwd);
    plans_.reset();
}

double TorusGrid::min_dx() const {
    double h = 2.0 * L_;
    for (int a : active_) h = std::min(h, dx(a));
    return h;
}

double TorusGrid::cell_volume() const { return std::pow(2.0 * L_, m_) / static_cast<double>(npts_); }

double TorusGrid::coord(long p, int axis) const {
    const long i = (p / stride_[axis]) % dims_[axis];
    return dims_[axis] == 1 ? 0.0 : -L_ + 2.0 * L_ * static_cast<double>(i) / dims_[axis];
}

Eigen::VectorXd TorusGrid::point(long p) const {
    Eigen::VectorXd x(m_);
    for (int a = 0; a < m_; ++a) x[a] = coord(p, a);
    return x;
}

Eigen::VectorXd TorusGrid::wavevector(long mode, bool* nyquist) const {
    Eigen::VectorXd k = Eigen::VectorXd::Zero(m_);
    bool nyq = false;
    long rem = mode;
    const int na = n_active();
    for (int j = na - 1; j >= 0; --j) {
        const int a = active_[j];
        const long len = (j == na - 1) ? dims_[a] / 2 + 1 : dims_[a];
        long idx = rem % len;
        rem /= len;
        long kk = idx;
        if (j != na - 1 && idx > dims_[a] / 2) kk = idx - dims_[a];
        if (2 * std::abs(kk) == dims_[a]) nyq = true;
        k[a] = M_PI / L_ * static_cast<double>(kk);
    }
    if (nyquist) *nyquist = nyq;
    return k;
}

std::vector<std::complex<double>> TorusGrid::forward(const double* f) const {
    std::vector<std::complex<double>> out(nmodes_);
    if (active_.empty()) {
        out[0] = f[0];
        return out;
    }
    double* in = fftw_alloc_real(npts_);
    std::memcpy(in, f, sizeof(double) * npts_);
    fftw_execute_dft_r2c(plans_->fwd, in, reinterpret_cast<fftw_complex*>(out.data()));
    fftw_free(in);
    return out;
}

void TorusGrid::backward(const std::vector<std::complex<double>>& fh, double* out) const {
    if (active_.empty()) {
        out[0] = fh[0].real();
        return;
    }
    fftw_complex* tmp = fftw_alloc_complex(nmodes_);
    std::memcpy(tmp, fh.data(), sizeof(fftw_complex) * nmodes_);
    double* res = fftw_alloc_real(npts_);
    fftw_execute_dft_c2r(plans_->bwd, tmp, res);
    const double scale = 1.0 / static_cast<double>(npts_);
    for (long p = 0; p < npts_; ++p) out[p] = res[p] * scale;
    fftw_free(tmp);
    fftw_free(res);
}

void TorusGrid::fd_derivative(const double* in, double* out, int axis) const {
    const auto& w = fd_weights()[fd_order_ / 2];
    const long d = dims_[axis], s = stride_[axis];
    const double inv_h = 1.0 / dx(axis);
    for (long p = 0; p < npts_; ++p) {
        const long i = (p / s) % d;
        const long base = p - i * s;
        double acc = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const long off = static_cast<long>(k) + 1;
            acc += w[k] * (in[base + ((i + off) % d) * s] - in[base + ((i - off + d) % d) * s]);
        }
        out[p] = acc * inv_h;
    }
}

Eigen::ArrayXXd TorusGrid::partial(const Eigen::ArrayXXd& W, const std::vector<int>& b) const {
    Eigen::ArrayXXd out(W.rows(), W.cols());
    int total = 0;
    for (int a = 0; a < m_; ++a) {
        if (b[a] > 0 && !active(a)) {
            out.setZero();
            return out;
        }
        total += b[a];
    }
    if (total == 0) return W;
    if (method_ == DerivMethod::FiniteDifference) {
        out = W;
        for (int a = 0; a < m_; ++a)
            for (int r = 0; r < b[a]; ++r) {
                Eigen::ArrayXXd tmp(W.rows(), W.cols());
                for (long c = 0; c < W.cols(); ++c) fd_derivative(&out(0, c), &tmp(0, c), a);
                out.swap(tmp);
            }
        return out;
    }
    // i^|b| prod k_a^{b_a}, Nyquist removed for odd orders along that axis
    std::vector<std::complex<double>> mult(nmodes_);
    std::complex<double> ipow(1.0, 0.0);
    for (int r = 0; r < total; ++r) ipow *= std::complex<double>(0.0, 1.0);
    for (long k = 0; k < nmodes_; ++k) {
        Eigen::VectorXd kv = wavevector(k);
        double f = 1.0;
        for (int a = 0; a < m_; ++a) {
            if (b[a] == 0) continue;
            const double nyq = M_PI / L_ * (dims_[a] / 2);
            if (b[a] % 2 == 1 && std::abs(std::abs(kv[a]) - nyq) < 1e-9 * nyq) f = 0.0;
            f *= std::pow(kv[a], b[a]);
        }
        mult[k] = ipow * f;
    }
    parallel_for(
        W.cols(),
        [&](long c0, long c1) {
            for (long c = c0; c < c1; ++c) {
                auto fh = forward(&W(0, c));
                for (long k = 0; k < nmodes_; ++k) fh[k] *= mult[k];
                backward(fh, &out(0, c));
            }
        },
        1);
    return out;
}

Eigen::ArrayXXd TorusGrid::derivative(const Eigen::ArrayXXd& W, int axis) const {
    if (axis < 0 || axis >= m_) throw std::out_of_range("derivative axis out of range");
    std::vector<int> b(m_, 0);
    b[axis] = 1;
    return partial(W, b);
}

Eigen::ArrayXd TorusGrid::derivative(const Eigen::ArrayXd& f, int axis) const {
    Eigen::ArrayXXd W = f;
    return derivative(W, axis).col(0);
}

std::vector<Eigen::ArrayXXd> TorusGrid::gradient(const Eigen::ArrayXXd& W) const {
    std::vector<Eigen::ArrayXXd> g(m_);
    for (int a = 0; a < m_; ++a) {
        if (active(a)) {
            g[a] = derivative(W, a);
        } else {
            g[a] = Eigen::ArrayXXd::Zero(W.rows(), W.cols());
        }
    }
    return g;
}

nlohmann::json TorusGrid::to_json() const {
    return {{"L", L_},
            {"dims", dims_},
            {"method", method_ == DerivMethod::Spectral ? "spectral" : "fd"},
            {"fd_order", fd_order_}};
}

TorusGrid TorusGrid::from_json(const nlohmann::json& j, int m) {
    const double L = j.value("L", M_PI);
    std::vector<int> dims;
    if (j.contains("dims")) {
        dims = j.at("dims").get<std::vector<int>>();
    } else {
        const int N = j.value("points", 24);
        const bool reduced = j.value("symmetry_reduced", false);
        dims.assign(m, reduced ? 1 : N);
        dims[0] = N;
    }
    if (static_cast<int>(dims.size()) != m)
        throw std::invalid_argument("grid.dims has " + std::to_string(dims.size()) + " entries, expected " + std::to_string(m));
    const std::string meth = j.value("method", "spectral");
    DerivMethod dm;
    if (meth == "spectral") dm = DerivMethod::Spectral;
    else if (meth == "fd") dm = DerivMethod::FiniteDifference;
    else throw std::invalid_argument("grid.method must be 'spectral' or 'fd'");
    return TorusGrid(m, L, dims, dm, j.value("fd_order", 4));
}

Eigen::ArrayXd region_mask(const TorusGrid& g, const Region& r) {
    Eigen::ArrayXd mask = Eigen::ArrayXd::Ones(g.npts());
    if (!r.ball_radius) return mask;
    for (long p = 0; p < g.npts(); ++p) mask[p] = g.radius(p) <= *r.ball_radius ? 1.0 : 0.0;
    return mask;
}

namespace {
void multi_indices(int m, int order, std::vector<int>& cur, int axis, std::vector<std::vector<int>>& out) {
    if (axis == m) {
        int s = 0;
        for (int v : cur) s += v;
        if (s == order) out.push_back(cur);
        return;
    }
    for (int v = 0; v <= order; ++v) {
        cur[axis] = v;
        multi_indices(m, order, cur, axis + 1, out);
    }
    cur[axis] = 0;
}
}  // namespace

double sobolev_norm(const Eigen::ArrayXXd& field, const TorusGrid& g, int k, const Region& region) {
    if (k < 0) throw std::invalid_argument("Sobolev order must be non-negative");
    const Eigen::ArrayXd mask = region_mask(g, region);
    double total = 0.0;
    for (int order = 0; order <= k; ++order) {
        std::vector<std::vector<int>> idx;
        std::vector<int> cur(g.m(), 0);
        multi_indices(g.m(), order, cur, 0, idx);
        for (const auto& b : idx) {
            bool trivial = false;
            for (int a = 0; a < g.m(); ++a)
                if (b[a] > 0 && !g.active(a)) trivial = true;
            if (trivial) continue;
            const Eigen::ArrayXXd d = g.partial(field, b);
            total += (d.square().rowwise().sum() * mask).sum();
        }
    }
    return std::sqrt(total * g.cell_volume());
}

void ConeDomain::validate(double L) const {
    if (!(rho0 > 0.0 && rho0 < L)) throw std::invalid_argument("cone rho0 must lie in (0, L)");
    if (!(rho1 > 0.0)) throw std::invalid_argument("cone rho1 must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("cone exponent must lie in (0, 1)");
    if (!(rho_tilde0() > 0.0))
        throw std::invalid_argument("cone violates rho0 - rho1 t0^(1-eps)/(1-eps) > 0 (value " +
                                    std::to_string(rho_tilde0()) + ")");
}

double ConeDomain::rho_tilde0() const { return rho0 - rho1 * std::pow(t0, 1.0 - eps) / (1.0 - eps); }

double ConeDomain::rho_of_t(double t) const {
    if (!(t > t1 && t <= t0 * (1.0 + 1e-12))) throw std::out_of_range("time outside the cone interval");
    return rho1 * (std::pow(t, 1.0 - eps) - std::pow(t0, 1.0 - eps)) / (1.0 - eps) + rho0;
}

Eigen::VectorXd ConeDomain::boundary_normal(double t, const Eigen::VectorXd& x) const {
    const double r = x.norm();
    if (r == 0.0) throw std::invalid_argument("boundary normal undefined at the origin");
    Eigen::VectorXd nrm(x.size() + 1);
    nrm[0] = -rho1 * std::pow(t, -eps);
    nrm.tail(x.size()) = x / r;
    return nrm;
}

void to_json(nlohmann::json& j, const ConeDomain& c) {
    j = {{"t0", c.t0}, {"t1", c.t1}, {"rho0", c.rho0}, {"rho1", c.rho1}, {"eps", c.eps}};
}

void from_json(const nlohmann::json& j, ConeDomain& c) {
    c.t0 = j.value("t0", 1.0);
    c.t1 = j.value("t1", 0.0);
    c.rho0 = j.at("rho0").get<double>();
    c.rho1 = j.at("rho1").get<double>();
    c.eps = j.value("eps", 0.5);
}

double smooth_cutoff(double r, double r0, double r1) {
    if (r <= r0) return 1.0;
    if (r >= r1) return 0.0;
    const double s = (r - r0) / (r1 - r0);
    const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return b / (a + b);
}

Eigen::ArrayXXd extend_initial_data(const Eigen::ArrayXXd& field, const Eigen::ArrayXXd& background,
                                    const TorusGrid& g, double rho0) {
    if (!(rho0 > 0.0 && rho0 < g.L())) throw std::invalid_argument("extension ball exceeds the torus");
    const double r1 = 0.5 * (rho0 + g.L());
    Eigen::ArrayXXd out(field.rows(), field.cols());
    for (long p = 0; p < g.npts(); ++p) {
        const double chi = smooth_cutoff(g.radius(p), rho0, r1);
        out.row(p) = chi * field.row(p) + (1.0 - chi) * background.row(p);
    }
    return out;
}

}  // namespace ksf
