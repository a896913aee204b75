// Benchmark: serial reference vs OpenMP ensemble runner on a mid-size
// strong-noise configuration. Prints wall times and the speedup.

#include <chrono>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nhlat/ensemble.hpp"

using namespace nhlat;

namespace {

EnsembleConfig bench_config(int n_realizations) {
    EnsembleConfig ec;
    ec.base.model = HoppingModel::from_pairs({{1, 0.7}, {-1, 1.0}, {2, 0.8}, {-2, 1.0}});
    ec.base.L = 100;
    ec.base.scat = ScatteringWindow{10.0, 10, 2.0, 4.0, 1};
    ec.base.noise = OUParams{5.0, 10.0};
    ec.base.dt = 0.1;
    ec.base.t_max = 50.0;
    ec.base.sample_stride = 10;
    ec.base.init.e_target = cxd{-0.35, 0.1};
    ec.n_realizations = n_realizations;
    ec.master_seed = 77;
    ec.reduction = Reduction::Deterministic;
    return ec;
}

double timed(EnsembleRecord (*runner)(const EnsembleConfig&), const EnsembleConfig& ec,
             double* checksum) {
    const auto t0 = std::chrono::steady_clock::now();
    const EnsembleRecord rec = runner(ec);
    const auto t1 = std::chrono::steady_clock::now();
    *checksum = rec.log_norm_phi_sq.mean.back();
    return std::chrono::duration<double>(t1 - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    int n = 40;
    if (argc > 1) n = std::atoi(argv[1]);

#ifdef _OPENMP
    std::cout << "threads available: " << omp_get_max_threads() << "\n";
#else
    std::cout << "built without OpenMP\n";
#endif
    std::cout << "realizations: " << n << "\n";

    const EnsembleConfig ec = bench_config(n);
    double sum_serial = 0.0, sum_parallel = 0.0;
    const double t_serial = timed(run_ensemble_serial, ec, &sum_serial);
    const double t_parallel = timed(run_ensemble, ec, &sum_parallel);

    std::cout << "serial reference: " << t_serial << " s\n";
    std::cout << "openmp runner:    " << t_parallel << " s\n";
    std::cout << "speedup:          " << t_serial / t_parallel << "x\n";
    std::cout << "results identical: " << (sum_serial == sum_parallel ? "yes" : "NO") << "\n";
    return sum_serial == sum_parallel ? 0 : 1;
}
