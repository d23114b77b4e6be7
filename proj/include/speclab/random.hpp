#pragma once

#include <cmath>
#include <cstdint>

#include "speclab/types.hpp"

namespace speclab {

// Counter-based generator (splitmix64 core). All experiment randomness flows
// from a single seeded instance so runs are reproducible across platforms;
// no std:: distributions, whose streams are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in (0,1)
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

    cplx cnormal() { return {normal(), normal()}; }

    // Derive an independent stream, e.g. one per trial index.
    Rng fork(std::uint64_t salt) {
        std::uint64_t s = next_u64();
        return Rng(s ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Band-limited random complex field on R^n: a bump envelope times a sum of
// random plane waves. Being a fixed continuum function of the seed, it can be
// sampled on any grid, which keeps refinement studies comparable.
struct RandomField {
    Eigen::MatrixXd wavevectors;  // n_modes x dim
    CVec coeffs;
    double envelope_radius = 1.0;

    static RandomField make(Rng& rng, int dim, int n_modes, double kmax,
                            double envelope_radius) {
        RandomField f;
        f.wavevectors.resize(n_modes, dim);
        f.coeffs.resize(n_modes);
        f.envelope_radius = envelope_radius;
        for (int m = 0; m < n_modes; ++m) {
            // direction by normalized gaussian, radius by cube-root-free uniform
            double r2 = 0.0;
            Eigen::VectorXd dir(dim);
            for (int d = 0; d < dim; ++d) {
                dir[d] = rng.normal();
                r2 += dir[d] * dir[d];
            }
            dir /= std::sqrt(std::max(r2, 1e-300));
            double rad = kmax * std::pow(rng.uniform(), 1.0 / dim);
            f.wavevectors.row(m) = (rad * dir).transpose();
            f.coeffs[m] = rng.cnormal();
        }
        return f;
    }

    // Smooth compactly supported envelope (1 - (r/R)^2)^3 on r < R.
    double envelope(const Eigen::VectorXd& x) const {
        double r2 = x.squaredNorm() / (envelope_radius * envelope_radius);
        if (r2 >= 1.0) return 0.0;
        double u = 1.0 - r2;
        return u * u * u;
    }

    cplx operator()(const Eigen::VectorXd& x) const {
        double env = envelope(x);
        if (env == 0.0) return {0.0, 0.0};
        cplx s{0.0, 0.0};
        for (int m = 0; m < wavevectors.rows(); ++m) {
            double phase = wavevectors.row(m).dot(x);
            s += coeffs[m] * std::polar(1.0, phase);
        }
        return env * s;
    }
};

}  // namespace speclab
