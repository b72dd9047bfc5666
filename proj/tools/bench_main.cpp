// Benchmark of the OpenMP likelihood kernels against the serial reference.
// Prints wall times, speedup, and the worst numerical gap between the two.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dcm/design.hpp"
#include "dcm/draws.hpp"
#include "dcm/model.hpp"
#include "dcm/rrm.hpp"
#include "dcm/rum.hpp"
#include "dcm/synth.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct BenchCase {
  std::string name;
  dcm::ModelKind kind;
  bool mixed;
};

}  // namespace

int main(int argc, char** argv) {
  int n = 20000;
  int draws = 200;
  int reps = 5;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const int value = std::atoi(argv[i + 1]);
    if (flag == "--n") n = value;
    if (flag == "--draws") draws = value;
    if (flag == "--reps") reps = value;
  }

  dcm::ModelSpec spec;
  spec.terms = {{"b_cost", "shipping_cost", ""},
                {"b_time", "delivery_time", ""},
                {"b_track", "tracking", ""}};
  spec.constant_alts = {2, 3};
  dcm::ParameterVector truth = dcm::ParameterVector::zeros(spec);
  truth.set("b_cost", -0.15);
  truth.set("b_time", -0.03);
  truth.set("b_track", 0.5);
  truth.set("asc_2", 0.3);
  truth.set("asc_3", -0.2);

  const auto design =
      dcm::generate_design(dcm::DesignGrid::courier_grid(), n, 4, 7, 2);
  const auto ds = dcm::simulate_choices(design, spec, truth, dcm::ModelKind::RUM, 7);

  dcm::ModelSpec mixed_spec = spec;
  mixed_spec.random_coefficients = {{"b_cost"}};
  const auto dm = dcm::DrawMatrix::halton(ds, draws, 1);

  const BenchCase cases[] = {
      {"rum fixed", dcm::ModelKind::RUM, false},
      {"rum mixed", dcm::ModelKind::RUM, true},
      {"rrm fixed", dcm::ModelKind::RRM, false},
  };

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("situations: %d, draws: %d, reps: %d\n\n", n, draws, reps);
  std::printf("%-10s %12s %12s %9s %12s\n", "kernel", "serial[s]", "parallel[s]",
              "speedup", "max|diff|");

  for (const auto& c : cases) {
    const auto& use_spec = c.mixed ? mixed_spec : spec;
    const auto data = dcm::compile(use_spec, ds);
    std::vector<double> theta(data.cs.n_params(), 0.0);
    for (int i = 0; i < data.cs.n_params(); ++i) {
      const auto& nm = data.cs.param_names[i];
      theta[i] = truth.index_of(nm) >= 0 ? truth.get(nm) : 0.05;
    }
    const dcm::DrawMatrix* d = c.mixed ? &dm : nullptr;

    auto run = [&](dcm::Exec exec) {
      return c.kind == dcm::ModelKind::RUM
                 ? dcm::kernel::rum_log_likelihood(data, theta, d, exec)
                 : dcm::kernel::rrm_log_likelihood(data, theta, d, exec);
    };

    run(dcm::Exec::Serial);  // warm-up
    auto t0 = Clock::now();
    dcm::LoglikResult serial;
    for (int r = 0; r < reps; ++r) serial = run(dcm::Exec::Serial);
    const double t_serial = seconds_since(t0) / reps;

    t0 = Clock::now();
    dcm::LoglikResult parallel;
    for (int r = 0; r < reps; ++r) parallel = run(dcm::Exec::Parallel);
    const double t_parallel = seconds_since(t0) / reps;

    double max_diff = std::abs(serial.loglik - parallel.loglik) /
                      std::max(1.0, std::abs(serial.loglik));
    for (size_t i = 0; i < serial.gradient.size(); ++i)
      max_diff = std::max(max_diff,
                          std::abs(serial.gradient[i] - parallel.gradient[i]) /
                              std::max(1.0, std::abs(serial.gradient[i])));

    std::printf("%-10s %12.4f %12.4f %8.2fx %12.3e\n", c.name.c_str(), t_serial,
                t_parallel, t_serial / t_parallel, max_diff);
  }
  return 0;
}
