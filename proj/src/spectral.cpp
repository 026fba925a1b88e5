#include "spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <random>

#include "atlas.hpp"

namespace curvetomo {

namespace {

// FFTW planning is not thread safe.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

using cplx = std::complex<double>;

std::vector<cplx> fft2(const ImageGrid& img, int sign) {
    const int nx = static_cast<int>(img.nx), ny = static_cast<int>(img.ny);
    std::vector<cplx> buf(img.size());
    for (std::size_t k = 0; k < img.size(); ++k) buf[k] = img.values[k];
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_2d(ny, nx, reinterpret_cast<fftw_complex*>(buf.data()),
                                reinterpret_cast<fftw_complex*>(buf.data()), sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    return buf;
}

void ifft2_inplace(std::vector<cplx>& buf, std::size_t nx, std::size_t ny) {
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), reinterpret_cast<fftw_complex*>(buf.data()),
                                reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / static_cast<double>(nx * ny);
    for (auto& v : buf) v *= scale;
}

double signed_freq(std::size_t i, std::size_t n) {
    return i <= n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
}

double shell(std::size_t ix, std::size_t iy, std::size_t nx, std::size_t ny) {
    return std::hypot(signed_freq(ix, nx), signed_freq(iy, ny));
}

}  // namespace

std::vector<double> radial_spectrum(const ImageGrid& img) {
    const auto F = fft2(img, FFTW_FORWARD);
    const std::size_t nk = img.nx / 2 + 1;
    std::vector<double> sum(nk, 0.0), cnt(nk, 0.0);
    for (std::size_t iy = 0; iy < img.ny; ++iy)
        for (std::size_t ix = 0; ix < img.nx; ++ix) {
            const auto k = static_cast<std::size_t>(std::lround(shell(ix, iy, img.nx, img.ny)));
            if (k >= nk) continue;
            sum[k] += std::abs(F[iy * img.nx + ix]);
            cnt[k] += 1.0;
        }
    for (std::size_t k = 0; k < nk; ++k) sum[k] = cnt[k] > 0 ? sum[k] / cnt[k] : 0.0;
    return sum;
}

ImageGrid band_project(const ImageGrid& img, double k_lo, double k_hi) {
    auto F = fft2(img, FFTW_FORWARD);
    for (std::size_t iy = 0; iy < img.ny; ++iy)
        for (std::size_t ix = 0; ix < img.nx; ++ix) {
            const double k = shell(ix, iy, img.nx, img.ny);
            if (k < k_lo || k > k_hi) F[iy * img.nx + ix] = 0.0;
        }
    ifft2_inplace(F, img.nx, img.ny);
    ImageGrid out = img.zeros_like();
    for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = F[k].real();
    return out;
}

ImageGrid band_limited_field(const GridSpec& grid, double k_lo, double k_hi, double radius, std::uint64_t seed) {
    ImageGrid f = ImageGrid::zeros(grid);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (auto& v : f.values) v = nd(rng);
    f = band_project(f, k_lo, k_hi);
    for (std::size_t k = 0; k < f.size(); ++k) f.values[k] *= cutoff_taper(norm(f.center(k)) / radius);
    f.enforce_support();
    const double n = image_norm(f);
    if (n > 0)
        for (auto& v : f.values) v /= n;
    return f;
}

ImageGrid gaussian_image(const GridSpec& grid, double sigma, Vec2 center) {
    ImageGrid f = ImageGrid::zeros(grid);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Vec2 d = f.center(k) - center;
        f.values[k] = std::exp(-dot(d, d) / (2 * sigma * sigma));
    }
    return f;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Sinogram random_smooth_sinogram(const SinogramSpec& spec, std::uint64_t seed, int s_modes, int t_modes) {
    Sinogram g = Sinogram::zeros(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> a(static_cast<std::size_t>(s_modes * (2 * t_modes + 1)));
    for (auto& v : a) v = nd(rng);
    const double L = spec.s_max - spec.s_min;
    const double period = spec.t_range.length();
    for (std::size_t j = 0; j < g.nt; ++j) {
        const double t = g.t_at(j);
        for (std::size_t i = 0; i < g.ns; ++i) {
            const double u = (g.s_at(i) - spec.s_min) / L;
            double v = 0.0;
            std::size_t c = 0;
            for (int p = 1; p <= s_modes; ++p) {
                const double sp = std::sin(kPi * p * u) / p;
                for (int q = -t_modes; q <= t_modes; ++q, ++c) {
                    const double arg = kTwoPi * q * (t - spec.t_range.lo) / period;
                    v += a[c] * sp * (q >= 0 ? std::cos(arg) : std::sin(arg));
                }
            }
            g.at(i, j) = v;
        }
    }
    const double n = sino_norm(g);
    if (n > 0)
        for (auto& v : g.values) v /= n;
    return g;
}

}  // namespace curvetomo
