#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "nurf/activation.hpp"
#include "nurf/error.hpp"

namespace nurf {

/// Grid points per unit of delta used when tabulating the weight kernels.
inline constexpr int psi_points_per_delta = 16;

/// Relative size allowed for the kernel at either end of its table.
inline constexpr double psi_end_decay_tolerance = 1e-8;

/// c_d with 1/c_d = 2 (2 pi)^(d-1).
inline double radon_inversion_constant(int d)
{
    return 1.0 / (2.0 * std::pow(2.0 * std::numbers::pi, d - 1));
}

/// Tabulated Radon-representation weight kernel
///     psi_{m,delta} = c_d (-d/db)^m Lambda^(d-1) eta_delta
/// on the uniform grid b_j = -half_width + j * spacing.
struct PsiTable {
    int m = 0;
    int d = 1;
    double delta = 0.0;
    double spacing = 0.0;
    double half_width = 0.0;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double node(std::size_t j) const noexcept { return -half_width + static_cast<double>(j) * spacing; }

    /// Linear interpolation; zero outside [-half_width, half_width].
    double operator()(double t) const noexcept
    {
        if (!(std::abs(t) <= half_width)) {
            return 0.0;
        }
        const double pos = (t + half_width) / spacing;
        auto j = static_cast<std::size_t>(pos);
        if (j + 1 >= values.size()) {
            return values.back();
        }
        const double frac = pos - static_cast<double>(j);
        return values[j] + frac * (values[j + 1] - values[j]);
    }

    /// Parity of the kernel in b: psi(-b) = parity() * psi(b).
    int parity() const noexcept { return m % 2 == 0 ? 1 : -1; }
};

inline double eval_psi(const PsiTable& table, double t) { return table(t); }

/// Spectral construction on a periodic grid: the bump spectrum is multiplied
/// by c_d |xi|^(d-1) (-i xi)^m and transformed back.
/// Throws grid_resolution if the tabulated kernel has not decayed at the ends.
inline PsiTable build_psi_table(int m, int d, double delta, double half_width)
{
    if (m < 0 || m > 2) {
        throw Error(ErrorKind::invalid_argument, "psi derivative order must be 0, 1 or 2");
    }
    if (d < 1) {
        throw Error(ErrorKind::invalid_argument, "dimension must be >= 1");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw Error(ErrorKind::invalid_argument, "psi table requires delta > 0");
    }
    if (!(half_width >= 10.0 * delta) || !std::isfinite(half_width)) {
        throw Error(ErrorKind::invalid_argument, "psi half width must be at least 10 delta");
    }

    const double h = delta / psi_points_per_delta;
    const auto n_half = static_cast<std::size_t>(std::ceil(half_width / h - 1e-9));
    const std::size_t n_nodes = 2 * n_half + 1;

    // At least twice the table length, so periodic images sit beyond 3T.
    std::size_t fft_len = 64;
    while (fft_len < 2 * n_nodes) {
        fft_len *= 2;
    }

    const auto len = static_cast<std::ptrdiff_t>(fft_len);
    auto wrapped = [len](std::ptrdiff_t q) { return q < len / 2 ? q : q - len; };

    // The bump's Fourier transform is known in closed form, pi delta xi / sinh(pi delta xi).
    // Using it directly avoids transforming the sampled bump, whose round-off
    // would be amplified by the |xi|^(d-1+m) multiplier at high frequencies.
    auto bump_transform = [delta](double xi) {
        const double u = std::numbers::pi * delta * std::abs(xi);
        return u < 1e-8 ? 1.0 : u / std::sinh(u);
    };

    const double c_d = radon_inversion_constant(d);
    const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(fft_len) * h);
    std::vector<std::complex<double>> spectrum(fft_len);
    for (std::ptrdiff_t q = 0; q < len; ++q) {
        if (q == len / 2) {
            continue;
        }
        const double xi = static_cast<double>(wrapped(q)) * dxi;
        std::complex<double> multiplier = c_d * std::pow(std::abs(xi), d - 1) * bump_transform(xi) / h;
        for (int k = 0; k < m; ++k) {
            multiplier *= std::complex<double>(0.0, -xi);
        }
        spectrum[static_cast<std::size_t>(q)] = multiplier;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> signal;
    fft.inv(signal, spectrum);

    PsiTable table;
    table.m = m;
    table.d = d;
    table.delta = delta;
    table.spacing = h;
    table.half_width = static_cast<double>(n_half) * h;
    table.values.resize(n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j) {
        std::ptrdiff_t q = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(n_half);
        if (q < 0) {
            q += len;
        }
        table.values[j] = signal[static_cast<std::size_t>(q)].real();
    }

    // Project onto the exact parity to remove round-off asymmetry.
    const double p = table.parity();
    for (std::size_t j = 0; j < n_half; ++j) {
        const std::size_t mirror = n_nodes - 1 - j;
        const double sym = 0.5 * (table.values[j] + p * table.values[mirror]);
        table.values[j] = sym;
        table.values[mirror] = p * sym;
    }
    if (p < 0) {
        table.values[n_half] = 0.0;
    }

    double peak = 0.0;
    for (double v : table.values) {
        peak = std::max(peak, std::abs(v));
    }
    const double ends = std::max(std::abs(table.values.front()), std::abs(table.values.back()));
    if (!(ends <= psi_end_decay_tolerance * peak)) {
        throw Error(ErrorKind::grid_resolution,
                    "psi table not decayed at |b| = " + std::to_string(table.half_width) +
                        " (end/peak = " + std::to_string(ends / peak) + ")");
    }
    return table;
}

/// Default half width R + 10 delta, widened (by doubling) until the end
/// decay holds. Only even d, whose kernels decay algebraically, needs widening.
inline PsiTable build_psi_table_adaptive(int m, int d, double delta, double radius)
{
    double half_width = radius + 10.0 * delta;
    const double limit = 1e6 * delta;
    for (;;) {
        try {
            return build_psi_table(m, d, delta, half_width);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::grid_resolution || half_width * 2.0 > limit) {
                throw;
            }
            half_width *= 2.0;
        }
    }
}

} // namespace nurf
