// Command-line driver: runs seed sweeps and ablations and writes tidy CSVs.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "experiments.hpp"
#include "incfed/error.hpp"

int main(int argc, char** argv) {
  namespace ex = incfed::experiments;
  const std::vector<std::string> args(argv + 1, argv + argc);

  ex::ExperimentSpec spec;
  try {
    spec = ex::parse_config(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << ex::usage();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << ex::usage();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const ex::Report report = ex::run(spec);
    fmt::print("{:<10} {:>16} {:>12} {:>16} {:>14} {:>7}\n", "variant",
               spec.dataset ? "final_reward" : "final_regret", "std", "comm_scalars", "payment",
               "seeds");
    for (const auto& v : report.variants) {
      fmt::print("{:<10} {:>16.6f} {:>12.6f} {:>16.1f} {:>14.6f} {:>7}\n", v.variant, v.mean_final,
                 v.std_final, v.mean_comm, v.mean_payment, v.n_seeds);
    }
    fmt::print("results written to {}\n", spec.output_dir.string());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
