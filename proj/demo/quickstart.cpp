// Fits the 1-D Gaussian bump with uniform and gradient-based weight sampling
// and prints the test error of each.

#include <iostream>

#include "nurf/nurf.hpp"

int main()
{
    const nurf::Benchmark bench = nurf::make_benchmark("gauss1d");

    nurf::DataOptions options;
    options.K = 1000;
    options.sampling = nurf::PointSampling::grid;
    options.noise_sigma = bench.noise_sigma;
    nurf::RngStream data_rng(42, nurf::stable_hash("quickstart-data"));
    const nurf::DataSplits data = nurf::generate_dataset(bench, options, data_rng);

    const nurf::ActivationSpec activation{1, 1.0 / 80.0};
    const auto alphas = nurf::log_alpha_grid();

    for (auto kind : {nurf::SamplerKind::uniform, nurf::SamplerKind::local_gradient}) {
        nurf::SamplerSpec spec;
        spec.kind = kind;
        nurf::SamplingContext ctx;
        ctx.activation = activation;
        nurf::RngStream rng(42, nurf::stable_hash(nurf::sampler_kind_name(kind)));

        const auto drawn = nurf::sample_neurons(data.train, spec, 30, ctx, rng);
        const auto [model, report] = nurf::cross_validate(data.train, data.val, drawn.neurons, activation, alphas);
        const double test = nurf::rmse(nurf::eval_model(model, data.test.X), data.test.y);

        std::cout << nurf::sampler_kind_name(kind) << ": N=30 alpha=" << report.alpha << " test RMSE=" << test
                  << "\n";
    }
    return 0;
}
