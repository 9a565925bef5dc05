#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nurf/activation.hpp"
#include "nurf/dataset.hpp"
#include "nurf/error.hpp"
#include "nurf/geometry.hpp"
#include "nurf/psi_table.hpp"
#include "nurf/regression.hpp"
#include "nurf/rng.hpp"

namespace nurf {

enum class SamplerKind {
    uniform,
    active_subspace,
    local_gradient,
    nonlocal_gradient,
    nonlocal_hessian,
    integral_density,
    residual,
};

enum class RhoMode { constant, known };

inline std::string_view sampler_kind_name(SamplerKind kind)
{
    switch (kind) {
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::active_subspace: return "active_subspace";
    case SamplerKind::local_gradient: return "local_gradient";
    case SamplerKind::nonlocal_gradient: return "nonlocal_gradient";
    case SamplerKind::nonlocal_hessian: return "nonlocal_hessian";
    case SamplerKind::integral_density: return "integral_density";
    case SamplerKind::residual: return "residual";
    }
    return "unknown";
}

inline SamplerKind parse_sampler_kind(std::string_view name)
{
    for (SamplerKind kind : {SamplerKind::uniform, SamplerKind::active_subspace, SamplerKind::local_gradient,
                             SamplerKind::nonlocal_gradient, SamplerKind::nonlocal_hessian,
                             SamplerKind::integral_density, SamplerKind::residual}) {
        if (sampler_kind_name(kind) == name) {
            return kind;
        }
    }
    throw Error(ErrorKind::config, "unknown sampler kind '" + std::string(name) + "'");
}

/// Sampling strategy plus its hyperparameters. A delta_w of 0 means "not set";
/// the experiment layer fills in its default. The residual strategy wraps a
/// gradient sampler selected by base_kind.
struct SamplerSpec {
    SamplerKind kind = SamplerKind::uniform;
    double delta_w = 0.0;
    int order_m = 0;
    double safety = 1.5;
    double kappa = 2.0;
    int n0 = 10;
    SamplerKind base_kind = SamplerKind::local_gradient;
    RhoMode rho_mode = RhoMode::constant;

    SamplerSpec base() const
    {
        SamplerSpec out = *this;
        out.kind = base_kind;
        return out;
    }

    void validate() const
    {
        const bool nonlocal = kind == SamplerKind::nonlocal_gradient || kind == SamplerKind::nonlocal_hessian ||
                              (kind == SamplerKind::residual && base_kind == SamplerKind::nonlocal_gradient);
        if (nonlocal && !(delta_w > 0.0)) {
            throw Error(ErrorKind::invalid_argument, "nonlocal samplers need delta_w > 0");
        }
        if (!(safety >= 1.0)) {
            throw Error(ErrorKind::invalid_argument, "rejection safety factor must be >= 1");
        }
        if (kind == SamplerKind::residual) {
            if (!(kappa > 1.0)) {
                throw Error(ErrorKind::invalid_argument, "residual growth factor must exceed 1");
            }
            if (n0 < 1) {
                throw Error(ErrorKind::invalid_argument, "residual initial count must be >= 1");
            }
            if (base_kind != SamplerKind::local_gradient && base_kind != SamplerKind::nonlocal_gradient) {
                throw Error(ErrorKind::invalid_argument, "residual base must be a local or nonlocal gradient sampler");
            }
        }
        if (order_m < 0 || order_m > 2) {
            throw Error(ErrorKind::invalid_argument, "integral density order must be 0, 1 or 2");
        }
    }
};

namespace detail {

/// Draws indices with probability proportional to nonnegative weights.
class Categorical {
  public:
    explicit Categorical(const std::vector<double>& weights) : cumulative_(weights.size())
    {
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            total += weights[i];
            cumulative_[i] = total;
        }
    }

    double total() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

    std::size_t operator()(RngStream& rng) const
    {
        const double u = rng.uniform() * total();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        auto index = static_cast<std::size_t>(it - cumulative_.begin());
        // A round-off draw at the very top lands past the end; step back to the
        // last entry with positive weight.
        index = std::min(index, cumulative_.size() - 1);
        while (index > 0 && cumulative_[index] == cumulative_[index - 1]) {
            --index;
        }
        return index;
    }

  private:
    std::vector<double> cumulative_;
};

inline bool is_zero_vector(const Eigen::Ref<const Vector>& g)
{
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    return !(g.norm() > 1e-14 * scale);
}

inline const Matrix& require_gradients(const DataSet& ds)
{
    const Matrix& g = ds.gradients();
    if (g.rows() == 0) {
        throw Error(ErrorKind::all_zero_gradients, "data set is empty");
    }
    return g;
}

/// Nonlocal weight exp(-|x - x'| / (2 delta_w)); values below 1e-6 become 0.
inline double nonlocal_weight(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                              double delta_w)
{
    const double w = std::exp(-(x - y).norm() / (2.0 * delta_w));
    return w < 1e-6 ? 0.0 : w;
}

} // namespace detail

/// Optional results a sampler produces alongside its neurons.
struct SampleResult {
    std::vector<Neuron> neurons;
    double accept_rate = std::numeric_limits<double>::quiet_NaN();
    std::optional<std::pair<RidgeModel, FitReport>> fit;
    std::size_t envelope_restarts = 0;
};

inline std::vector<Neuron> sample_uniform(const DataSet& ds, std::size_t n, RngStream& rng)
{
    std::vector<Neuron> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Neuron neuron{sample_unit_sphere(ds.dim(), rng), 0.0};
        neuron.b = rng.uniform(-ds.R, ds.R);
        out.push_back(std::move(neuron));
    }
    return out;
}

inline std::vector<Neuron> sample_active_subspace(const DataSet& ds, std::size_t n, RngStream& rng)
{
    const Matrix& g = detail::require_gradients(ds);
    if (g.cwiseAbs().maxCoeff() == 0.0) {
        throw Error(ErrorKind::all_zero_gradients, "every gradient is zero");
    }
    const GaussianFactor factor = GaussianFactor::from_columns(g.transpose());
    std::vector<Neuron> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Neuron neuron{sample_acg(factor, rng), 0.0};
        neuron.b = rng.uniform(-ds.R, ds.R);
        out.push_back(std::move(neuron));
    }
    return out;
}

/// Hyperplanes through data points, normal to the gradient there, with the
/// point drawn proportionally to |g_k| and a random orientation.
class LocalGradientSampler {
  public:
    explicit LocalGradientSampler(const DataSet& ds) : ds_(&ds), pick_(weights(ds)) {}

    std::vector<Neuron> draw(std::size_t n, RngStream& rng) const
    {
        std::vector<Neuron> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<Eigen::Index>(pick_(rng));
            Neuron neuron = hyperplane_from_point_gradient(ds_->X.row(k).transpose(), ds_->G->row(k).transpose());
            out.push_back(rng.sign() > 0 ? neuron : neuron.flipped());
        }
        return out;
    }

    /// Probability that a draw uses data point k as its source.
    double probability(Eigen::Index k) const
    {
        const Matrix& g = *ds_->G;
        return detail::is_zero_vector(g.row(k).transpose()) ? 0.0 : g.row(k).norm() / pick_.total();
    }

  private:
    static std::vector<double> weights(const DataSet& ds)
    {
        const Matrix& g = detail::require_gradients(ds);
        std::vector<double> w(static_cast<std::size_t>(g.rows()));
        bool any = false;
        for (Eigen::Index k = 0; k < g.rows(); ++k) {
            if (!detail::is_zero_vector(g.row(k).transpose())) {
                w[static_cast<std::size_t>(k)] = g.row(k).norm();
                any = true;
            }
        }
        if (!any) {
            throw Error(ErrorKind::all_zero_gradients, "every gradient is zero");
        }
        return w;
    }

    const DataSet* ds_;
    detail::Categorical pick_;
};

inline std::vector<Neuron> sample_local_gradient(const DataSet& ds, std::size_t n, RngStream& rng)
{
    return LocalGradientSampler(ds).draw(n, rng);
}

/// Mixture over points k of angular central Gaussians whose covariance
/// aggregates nearby gradients (or Hessians) with weights w_{k,k'}. The
/// weight matrix is never stored; each draw recomputes one row.
class NonlocalSampler {
  public:
    NonlocalSampler(const DataSet& ds, double delta_w, bool hessian) : ds_(&ds), delta_w_(delta_w), hessian_(hessian)
    {
        if (!(delta_w > 0.0)) {
            throw Error(ErrorKind::invalid_argument, "nonlocal sampler needs delta_w > 0");
        }
        const Eigen::Index k_count = ds.size();
        Vector energy(k_count);
        if (hessian) {
            const auto& h = ds.hessians();
            for (Eigen::Index k = 0; k < k_count; ++k) {
                energy(k) = h[static_cast<std::size_t>(k)].squaredNorm();
            }
        } else {
            energy = detail::require_gradients(ds).rowwise().squaredNorm();
        }
        std::vector<double> mixture(static_cast<std::size_t>(k_count), 0.0);
        bool any = false;
        for (Eigen::Index k = 0; k < k_count; ++k) {
            double trace = 0.0;
            for (Eigen::Index j = 0; j < k_count; ++j) {
                if (energy(j) == 0.0) {
                    continue;
                }
                const double w = detail::nonlocal_weight(ds.X.row(k).transpose(), ds.X.row(j).transpose(), delta_w);
                trace += w * w * energy(j);
            }
            mixture[static_cast<std::size_t>(k)] = std::sqrt(trace);
            any = any || trace > 0.0;
        }
        if (!any) {
            if (!hessian && energy.maxCoeff() == 0.0) {
                throw Error(ErrorKind::all_zero_gradients, "every gradient is zero");
            }
            throw Error(ErrorKind::zero_trace, "all mixture covariances have zero trace");
        }
        pick_ = detail::Categorical(mixture);
    }

    std::vector<Neuron> draw(std::size_t n, RngStream& rng) const
    {
        const Eigen::Index d = ds_->dim();
        std::vector<Neuron> out;
        out.reserve(n);
        Vector direction(d);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<Eigen::Index>(pick_(rng));
            const Vector xk = ds_->X.row(k).transpose();
            double norm = 0.0;
            do {
                direction.setZero();
                for (Eigen::Index j = 0; j < ds_->size(); ++j) {
                    const double w = detail::nonlocal_weight(xk, ds_->X.row(j).transpose(), delta_w_);
                    if (w == 0.0) {
                        continue;
                    }
                    if (hessian_) {
                        Vector xi(d);
                        for (Eigen::Index q = 0; q < d; ++q) {
                            xi(q) = rng.normal();
                        }
                        direction += w * ((*ds_->H)[static_cast<std::size_t>(j)] * xi);
                    } else {
                        direction += (w * rng.normal()) * ds_->G->row(j).transpose();
                    }
                }
                norm = direction.norm();
            } while (!(norm >= 1e-300));
            Neuron neuron{direction / norm, 0.0};
            neuron.b = -neuron.a.dot(xk) + delta_w_ * rng.normal();
            out.push_back(std::move(neuron));
        }
        return out;
    }

  private:
    const DataSet* ds_;
    double delta_w_;
    bool hessian_;
    detail::Categorical pick_{std::vector<double>{}};
};

inline std::vector<Neuron> sample_nonlocal_gradient(const DataSet& ds, std::size_t n, double delta_w, RngStream& rng)
{
    return NonlocalSampler(ds, delta_w, false).draw(n, rng);
}

inline std::vector<Neuron> sample_nonlocal_hessian(const DataSet& ds, std::size_t n, double delta_w, RngStream& rng)
{
    return NonlocalSampler(ds, delta_w, true).draw(n, rng);
}

/// Monte Carlo estimate |(1/K) sum_k (a.g_k) psi(a.x_k + b) / rho(x_k)| of the
/// exact coefficient density.
inline double eval_integral_density(const DataSet& ds, const PsiTable& psi, const Vector& a, double b,
                                    RhoMode rho_mode = RhoMode::constant)
{
    const Matrix& g = ds.gradients();
    if (rho_mode == RhoMode::known && !ds.rho) {
        throw Error(ErrorKind::missing_rho, "density mode 'known' requires rho values");
    }
    const Vector slope = g * a;
    const Vector offset = ds.X * a;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < ds.size(); ++k) {
        if (slope(k) == 0.0) {
            continue;
        }
        double term = slope(k) * psi(offset(k) + b);
        if (rho_mode == RhoMode::known) {
            term /= (*ds.rho)(k);
        }
        sum += term;
    }
    return std::abs(sum / static_cast<double>(ds.size()));
}

struct RejectionResult {
    std::vector<Neuron> neurons;
    double accept_rate = 0.0;
    double envelope = 0.0;
    std::size_t restarts = 0;
};

inline constexpr std::size_t rejection_pilot_size = 10000;
inline constexpr std::size_t rejection_window = 1000000;
inline constexpr double rejection_min_rate = 1e-4;

/// Rejection sampling against uniform proposals on S^{d-1} x [-R, R]. The
/// envelope is safety times the largest density seen in a pilot run drawn
/// from a sub-stream; it doubles (and sampling restarts) whenever a proposal
/// exceeds it.
inline RejectionResult sample_rejection(const DataSet& ds, const std::function<double(const Neuron&)>& density,
                                        std::size_t n, double safety, RngStream& rng)
{
    if (!(safety >= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "rejection safety factor must be >= 1");
    }
    RngStream pilot_rng = rng.substream(stable_hash("rejection-pilot"));
    double pilot_max = 0.0;
    for (const Neuron& proposal : sample_uniform(ds, rejection_pilot_size, pilot_rng)) {
        pilot_max = std::max(pilot_max, density(proposal));
    }
    if (!(pilot_max > 0.0) || !std::isfinite(pilot_max)) {
        throw Error(ErrorKind::acceptance_collapse, "density vanishes on every pilot proposal");
    }

    RejectionResult result;
    result.envelope = safety * pilot_max;
    std::size_t proposals = 0;
    std::size_t window_proposals = 0;
    std::size_t window_accepts = 0;
    while (result.neurons.size() < n) {
        Neuron proposal{sample_unit_sphere(ds.dim(), rng), rng.uniform(-ds.R, ds.R)};
        const double u = rng.uniform();
        const double value = density(proposal);
        ++proposals;
        ++window_proposals;
        if (value > result.envelope) {
            result.envelope *= 2.0;
            result.neurons.clear();
            ++result.restarts;
            proposals = 0;
            window_proposals = 0;
            window_accepts = 0;
            continue;
        }
        if (u * result.envelope < value) {
            result.neurons.push_back(std::move(proposal));
            ++window_accepts;
        }
        if (window_proposals == rejection_window) {
            if (static_cast<double>(window_accepts) < rejection_min_rate * static_cast<double>(rejection_window)) {
                throw Error(ErrorKind::acceptance_collapse,
                            "acceptance rate below 1e-4 over " + std::to_string(rejection_window) + " proposals");
            }
            window_proposals = 0;
            window_accepts = 0;
        }
    }
    result.accept_rate = proposals == 0 ? 1.0 : static_cast<double>(n) / static_cast<double>(proposals);
    return result;
}

inline RejectionResult sample_integral_density(const DataSet& ds, const PsiTable& psi, std::size_t n, double safety,
                                               RngStream& rng, RhoMode rho_mode = RhoMode::constant)
{
    ds.gradients();
    if (psi.d != ds.dim()) {
        throw Error(ErrorKind::invalid_argument, "psi table dimension does not match data");
    }
    if (rho_mode == RhoMode::known && !ds.rho) {
        throw Error(ErrorKind::missing_rho, "density mode 'known' requires rho values");
    }
    return sample_rejection(
        ds, [&](const Neuron& w) { return eval_integral_density(ds, psi, w.a, w.b, rho_mode); }, n, safety, rng);
}

/// Cumulative neuron counts min(ceil(kappa^i n0), n_target) until n_target.
inline std::vector<std::size_t> residual_schedule(std::size_t n_target, double kappa, std::size_t n0)
{
    if (!(kappa > 1.0) || n0 < 1 || n_target < 1) {
        throw Error(ErrorKind::invalid_argument, "residual schedule needs kappa > 1, n0 >= 1, target >= 1");
    }
    std::vector<std::size_t> counts;
    for (int i = 0;; ++i) {
        const double raw = std::ceil(std::pow(kappa, i) * static_cast<double>(n0) - 1e-9);
        const auto count = static_cast<std::size_t>(std::min(raw, static_cast<double>(n_target)));
        if (counts.empty() || count > counts.back()) {
            counts.push_back(count);
        }
        if (count >= n_target) {
            return counts;
        }
    }
}

using FitCallback = std::function<std::pair<RidgeModel, FitReport>(const std::vector<Neuron>&)>;

/// Draws from the base gradient sampler on data whose gradients are given.
inline std::vector<Neuron> sample_gradient_base(const DataSet& ds, const SamplerSpec& base, std::size_t n,
                                                RngStream& rng)
{
    if (base.kind == SamplerKind::nonlocal_gradient) {
        return sample_nonlocal_gradient(ds, n, base.delta_w, rng);
    }
    return sample_local_gradient(ds, n, rng);
}

/// Stagewise sampling from residual gradients g - grad S of the current fit.
/// Residual gradients that are zero up to round-off end the sampling early
/// with the current model.
inline SampleResult sample_residual(const DataSet& ds, const SamplerSpec& spec, std::size_t n_target,
                                    const ActivationSpec& activation, const FitCallback& fit, RngStream& rng)
{
    if (activation.delta == 0.0) {
        throw Error(ErrorKind::delta_zero, "residual sampling requires a smooth activation");
    }
    spec.validate();
    const Matrix& g0 = ds.gradients();
    const SamplerSpec base = spec.base();
    const auto schedule = residual_schedule(n_target, spec.kappa, static_cast<std::size_t>(spec.n0));
    const double zero_level = 1e-12 * std::max(g0.rowwise().norm().maxCoeff(), 1e-300);

    SampleResult result;
    result.neurons = sample_gradient_base(ds, base, schedule.front(), rng);
    for (std::size_t stage = 1; stage < schedule.size(); ++stage) {
        auto current = fit(result.neurons);
        Matrix residual = g0 - eval_model_gradient(current.first, ds.X);
        for (Eigen::Index k = 0; k < residual.rows(); ++k) {
            if (residual.row(k).norm() <= zero_level) {
                residual.row(k).setZero();
            }
        }
        const DataSet residual_ds = ds.with_gradients(std::move(residual));
        try {
            auto fresh = sample_gradient_base(residual_ds, base, schedule[stage] - schedule[stage - 1], rng);
            result.neurons.insert(result.neurons.end(), fresh.begin(), fresh.end());
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::all_zero_gradients) {
                throw;
            }
            result.fit = std::move(current);
            return result;
        }
    }
    result.fit = fit(result.neurons);
    return result;
}

/// Everything a sampler may need beyond data and counts.
struct SamplingContext {
    ActivationSpec activation;
    std::shared_ptr<const PsiTable> psi;  // integral density; built on demand when null
    FitCallback fit;                      // residual sampler
};

/// Uniform interface over all strategies.
inline SampleResult sample_neurons(const DataSet& ds, const SamplerSpec& spec, std::size_t n,
                                   const SamplingContext& ctx, RngStream& rng)
{
    spec.validate();
    SampleResult result;
    switch (spec.kind) {
    case SamplerKind::uniform: result.neurons = sample_uniform(ds, n, rng); break;
    case SamplerKind::active_subspace: result.neurons = sample_active_subspace(ds, n, rng); break;
    case SamplerKind::local_gradient: result.neurons = sample_local_gradient(ds, n, rng); break;
    case SamplerKind::nonlocal_gradient: result.neurons = sample_nonlocal_gradient(ds, n, spec.delta_w, rng); break;
    case SamplerKind::nonlocal_hessian: result.neurons = sample_nonlocal_hessian(ds, n, spec.delta_w, rng); break;
    case SamplerKind::integral_density: {
        std::shared_ptr<const PsiTable> psi = ctx.psi;
        if (!psi) {
            if (!(ctx.activation.delta > 0.0)) {
                throw Error(ErrorKind::delta_zero, "integral density needs delta > 0");
            }
            psi = std::make_shared<const PsiTable>(
                build_psi_table_adaptive(spec.order_m, static_cast<int>(ds.dim()), ctx.activation.delta, ds.R));
        }
        RejectionResult rej = sample_integral_density(ds, *psi, n, spec.safety, rng, spec.rho_mode);
        result.neurons = std::move(rej.neurons);
        result.accept_rate = rej.accept_rate;
        result.envelope_restarts = rej.restarts;
        break;
    }
    case SamplerKind::residual:
        if (!ctx.fit) {
            throw Error(ErrorKind::invalid_argument, "residual sampler needs a regression callback");
        }
        return sample_residual(ds, spec, n, ctx.activation, ctx.fit, rng);
    }
    return result;
}

/// One neuron per line, "a_1 ... a_d b", 17 significant digits.
inline void write_weights(std::ostream& out, const std::vector<Neuron>& neurons)
{
    char buffer[32];
    for (const Neuron& neuron : neurons) {
        for (Eigen::Index i = 0; i < neuron.a.size(); ++i) {
            std::snprintf(buffer, sizeof buffer, "%.17g", neuron.a(i));
            out << buffer << ' ';
        }
        std::snprintf(buffer, sizeof buffer, "%.17g", neuron.b);
        out << buffer << '\n';
    }
}

} // namespace nurf
