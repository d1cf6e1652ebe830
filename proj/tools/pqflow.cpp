#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pqflow/labcli.hpp"

int main(int argc, char **argv)
{
  using namespace pqflow::labcli;

  CLI::App app{"pqflow: first (p,q)-eigenvalue along Ricci-harmonic flows"};
  app.require_subcommand(1);

  std::vector<std::string> run_files;
  auto *run = app.add_subcommand("run", "run one or more scenarios, write CSV traces and verdicts");
  run->add_option("files", run_files, "scenario files")->required();

  std::string eigen_file;
  auto *eigen = app.add_subcommand("eigen", "single eigensolve on the initial state of a scenario");
  eigen->add_option("file", eigen_file, "scenario file")->required();

  auto *check = app.add_subcommand("check", "built-in invariant suite");

  std::string csv, svg;
  std::vector<std::string> cols;
  auto *plot = app.add_subcommand("plot", "SVG plot of trace columns against t");
  plot->add_option("csv", csv, "trace written by run")->required();
  plot->add_option("--cols", cols, "columns to draw")->delimiter(',')->required();
  plot->add_option("-o,--output", svg, "output SVG")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParseError;
  }

  if (*run)
  {
    return cmd_run(run_files, std::cout, std::cerr);
  }
  if (*eigen)
  {
    return cmd_eigen(eigen_file, std::cout, std::cerr);
  }
  if (*check)
  {
    return cmd_check(std::cout);
  }
  return cmd_plot(csv, cols, svg, std::cerr);
}
