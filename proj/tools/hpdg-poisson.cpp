#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include <hpdg/benchmark.hpp>

int main(int argc, char **argv)
{
  CLI::App app{"hp-adaptive SIPG solver for the reentrant-corner Poisson benchmark"};

  hpdg::BenchmarkConfig config;
  std::string grid = "quad";
  double etaStar = -1.0, etaUpper = -1.0;

  app.add_option("--grid", grid, "macro grid type: quad | simplex")
      ->check(CLI::IsMember({"quad", "simplex"}))
      ->capture_default_str();
  app.add_option("--tol", config.tol, "stopping tolerance for the global estimator")
      ->capture_default_str();
  app.add_option("--gamma", config.gamma, "interior penalty constant")->capture_default_str();
  app.add_option("--kmin", config.kMin, "minimum local polynomial degree")->capture_default_str();
  app.add_option("--kmax", config.kMax, "maximum local polynomial degree")->capture_default_str();
  app.add_option("--max-iter", config.maxIterations, "iteration cap")->capture_default_str();
  app.add_option("--solver-tol", config.solverTol, "relative CG tolerance")->capture_default_str();
  app.add_option("--out", config.outputDir, "output directory for table.csv and mesh_<iter>.vtk");
  app.add_option("--macro", config.macroFile, "macro grid file overriding the built-in L-shape");
  app.add_option("--eta-star", etaStar, "coarsening threshold override (default TOL/|G|)");
  app.add_option("--eta-upper", etaUpper, "refinement threshold override (default TOL/sqrt(|G|))");

  CLI11_PARSE(app, argc, argv);

  config.grid = grid == "simplex" ? hpdg::CellType::Triangle : hpdg::CellType::Quad;
  if (etaStar > 0.0)
    config.etaStar = etaStar;
  if (etaUpper > 0.0)
    config.etaUpper = etaUpper;
  config.log = &std::cerr;

  try {
    const auto records = hpdg::runBenchmark(config);
    std::cout << hpdg::formatTable(records);
  }
  catch (const std::exception &error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
