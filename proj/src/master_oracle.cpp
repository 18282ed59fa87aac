#include "atomdiode/master_oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "atomdiode/fft.hpp"

namespace atomdiode {

namespace {

using std::complex;
constexpr complex<double> im{0.0, 1.0};

// 8-node Gauss-Legendre rule on [-1, 1].
constexpr double gl_x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                            0.7966664774136267,  0.9602898564975363};
constexpr double gl_w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                            0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                            0.2223810344533745, 0.1012285362903763};

class MasterSolver {
  public:
    explicit MasterSolver(const MasterParams& p)
        : p_(p), n_(p.grid.n), dim_(3 * p.grid.n), fft_(p.grid.n), buf_(p.grid.n) {
        if (n_ < 8 || n_ > 256)
            throw std::invalid_argument("master oracle: grid must have 8..256 points");
        require_grid_resolution(p.grid, p.units, p.v_abs_max);

        kin_.resize(n_);
        for (int j = 0; j < n_; ++j) {
            const double k = p.grid.k(j);
            kin_[j] = k * k / (2.0 * p.units.m_over_hbar);
        }

        pot_.assign(static_cast<size_t>(n_) * 9, 0.0);
        double umax = 0.0;
        for (int j = 0; j < n_; ++j) {
            const Eigen::MatrixXd u = p.spec(p.grid.x(j));
            for (int r = 0; r < 3; ++r) {
                umax = std::max(umax, u.row(r).cwiseAbs().sum());
                for (int c = 0; c < 3; ++c) pot_[j * 9 + r * 3 + c] = u(r, c);
            }
        }

        // Recoil kernel G(j,l) = Integral du (3/8)(1+u^2) exp(i kappa u (x_j - x_l)).
        const double kappa = p.units.m_over_hbar * p.v_rec;
        kernel_.resize(n_, n_);
        for (int j = 0; j < n_; ++j)
            for (int l = 0; l < n_; ++l) {
                const double s = p.grid.x(j) - p.grid.x(l);
                complex<double> g{0.0, 0.0};
                for (int q = 0; q < 8; ++q)
                    g += gl_w[q] * 0.375 * (1.0 + gl_x[q] * gl_x[q]) *
                         std::exp(im * (kappa * gl_x[q] * s));
                kernel_(j, l) = g;
            }

        dt_ = p.dt;
        if (dt_ <= 0.0) {
            // Accuracy is governed by the populated scales, stability by the
            // fastest mode in the system (grid Nyquist kinetic energy).
            const double freq = std::max({umax, p.units.kinetic_frequency(p.v_abs_max), 1e-12});
            double kin_nyq = 0.0;
            for (int j = 0; j < n_; ++j) kin_nyq = std::max(kin_nyq, kin_[j]);
            dt_ = std::min(0.05 / freq, 1.0 / std::max(kin_nyq + umax, 1e-12));
        }
        steps_ = std::max<long>(1, std::lround(std::ceil(p.t_max / dt_)));
        dt_ = p.t_max / steps_;
    }

    double dt() const { return dt_; }
    long steps() const { return steps_; }

    // (K M): spectral kinetic multiplication along the row index, per channel
    // segment of each column.
    void kinetic_left(Eigen::MatrixXcd& m) const {
        for (int col = 0; col < static_cast<int>(m.cols()); ++col)
            for (int c = 0; c < 3; ++c) {
                complex<double>* seg = m.col(col).data() + c * n_;
                std::copy(seg, seg + n_, buf_.begin());
                fft_.forward(buf_.data());
                for (int j = 0; j < n_; ++j) buf_[j] *= kin_[j] / static_cast<double>(n_);
                fft_.backward(buf_.data());
                std::copy(buf_.begin(), buf_.end(), seg);
            }
    }

    // (U M) with the position-diagonal channel-coupling potential.
    void potential_left(const Eigen::MatrixXcd& m, Eigen::MatrixXcd& out) const {
        for (int col = 0; col < static_cast<int>(m.cols()); ++col)
            for (int j = 0; j < n_; ++j) {
                const double* u = pot_.data() + j * 9;
                const complex<double> a = m(j, col), b = m(n_ + j, col), c = m(2 * n_ + j, col);
                out(j, col) = u[0] * a + u[1] * b + u[2] * c;
                out(n_ + j, col) = u[3] * a + u[4] * b + u[5] * c;
                out(2 * n_ + j, col) = u[6] * a + u[7] * b + u[8] * c;
            }
    }

    Eigen::MatrixXcd rhs(const Eigen::MatrixXcd& rho) const {
        Eigen::MatrixXcd hrho = rho;
        kinetic_left(hrho);
        Eigen::MatrixXcd urho(dim_, dim_);
        potential_left(rho, urho);
        hrho += urho;
        // -i [H, rho] with Hermitian H and rho: H rho - (H rho)^dag
        Eigen::MatrixXcd d = -im * (hrho - hrho.adjoint().eval());

        if (p_.gamma > 0.0) {
            d.topLeftCorner(n_, n_) +=
                p_.gamma * kernel_.cwiseProduct(rho.bottomRightCorner(n_, n_));
            d.bottomRows(n_) -= (0.5 * p_.gamma) * rho.bottomRows(n_);
            d.rightCols(n_) -= (0.5 * p_.gamma) * rho.rightCols(n_);
        }
        return d;
    }

    Eigen::MatrixXcd evolve(Eigen::MatrixXcd rho) const {
        for (long s = 0; s < steps_; ++s) {
            const Eigen::MatrixXcd k1 = rhs(rho);
            const Eigen::MatrixXcd k2 = rhs(rho + (0.5 * dt_) * k1);
            const Eigen::MatrixXcd k3 = rhs(rho + (0.5 * dt_) * k2);
            const Eigen::MatrixXcd k4 = rhs(rho + dt_ * k3);
            rho += (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return rho;
    }

  private:
    MasterParams p_;
    int n_;
    int dim_;
    Fft fft_;
    mutable CplxVector buf_;
    std::vector<double> kin_;
    std::vector<double> pot_;
    Eigen::MatrixXcd kernel_;
    double dt_ = 0.0;
    long steps_ = 0;
};

}  // namespace

double master_p_r(const Eigen::MatrixXcd& rho, const Grid& grid, int channels) {
    const int n = grid.n;
    Fft fft(n);
    double pos = 0.0, total = 0.0;
    Eigen::MatrixXcd block(n, n), w(n, n);
    CplxVector buf(n);
    for (int c = 0; c < channels; ++c) {
        block = rho.block(c * n, c * n, n, n);
        // diag(F B F^dag) = conj(diag(F (F B)^dag)) for Hermitian B
        for (int pass = 0; pass < 2; ++pass) {
            for (int col = 0; col < n; ++col) {
                std::copy(block.col(col).data(), block.col(col).data() + n, buf.begin());
                fft.forward(buf.data());
                std::copy(buf.begin(), buf.end(), w.col(col).data());
            }
            if (pass == 0) block = w.adjoint();
        }
        for (int j = 0; j < n; ++j) {
            const double weight = std::real(w(j, j));
            total += weight;
            if (j >= 1 && j < n / 2 && c != 1) pos += weight;
        }
    }
    return total > 0.0 ? pos / total : 0.0;
}

MasterResult evolve_master(const MasterParams& params, const WavePacket& psi0) {
    if (psi0.channels != 3 || psi0.grid.n != params.grid.n)
        throw std::invalid_argument("master oracle: initial state does not match the grid");
    MasterSolver solver(params);
    const int dim = 3 * params.grid.n;
    Eigen::Map<const Eigen::VectorXcd> psi(psi0.psi.data(), dim);
    Eigen::MatrixXcd rho = psi * psi.adjoint();
    rho = solver.evolve(std::move(rho));

    MasterResult out;
    out.rho = std::move(rho);
    out.trace = std::real(out.rho.trace()) * params.grid.dx();
    out.trace_drift = std::abs(out.trace - 1.0);
    out.p_r = master_p_r(out.rho, params.grid, 3);
    const int n = params.grid.n;
    for (int c = 0; c < 3; ++c)
        out.channel_populations.push_back(
            std::real(out.rho.block(c * n, c * n, n, n).trace()) * params.grid.dx());
    return out;
}

}  // namespace atomdiode
