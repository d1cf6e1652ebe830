#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pqflow/geomflow.hpp"
#include "pqflow/monitor.hpp"
#include "pqflow/pqeigen.hpp"

namespace pqflow::labcli
{

// Exit codes of the command-line front end.
enum ExitCode : int
{
  kOk = 0,
  kVerdictFailed = 1,
  kParseError = 2,
  kFlowFailure = 3,
  kEigenFailure = 4
};

enum class Manifold
{
  ConformalTorus,
  GeneralTorus,
  Circle,
  EinsteinAnalytic
};

// One Fourier term amp * kind(2 pi (kx x / L1 + ky y / L2)), kind in
// {cos, sin, const}. Written as "amp kind kx ky" and separated by ';'.
struct FourierTerm
{
  double amp = 0.0;
  enum Kind
  {
    Cos,
    Sin,
    Const
  } kind = Const;
  int kx = 0;
  int ky = 0;
};

struct EinsteinSpec
{
  double a = 1.0;
  int m = 2;
  double lambda0 = 0.0;
  double volume0 = 1.0;
  int samples = 20;
};

struct Scenario
{
  std::string name;
  Manifold manifold = Manifold::ConformalTorus;
  int n = 64;
  double L1 = 0.0;
  double L2 = 0.0;
  std::vector<FourierTerm> u0;
  std::vector<FourierTerm> g11, g12, g22;
  std::vector<FourierTerm> phi;
  geomflow::FlowConfig flow;
  pqeigen::EigenParams eigen;
  EinsteinSpec einstein;
  std::string csv_path;
  std::string eigen_prefix;
  std::uint64_t seed = 0;
};

// Flat "key = value" text with dotted keys and '#' comments. Throws
// ParseError with the line number on malformed input, unknown or repeated
// keys, and on any constraint violation of the resulting scenario.
Scenario parse_scenario(const std::string &text, const std::string &name = "scenario");
Scenario load_scenario(const std::string &path);

// Initial (g, phi) on the grid; not available for einstein_analytic.
CoupledState initial_state(const Scenario &s);

// Closed-form trace of the homothetic Einstein family.
monitor::Trace einstein_trace(const Scenario &s);
std::vector<monitor::Verdict> einstein_verdicts(const Scenario &s, const monitor::Trace &trace);

// Columns in file order.
extern const std::vector<std::string> kCsvColumns;
std::string format_double(double v);
void write_csv(std::ostream &out, const std::vector<monitor::TraceRecord> &records);

using Table = std::map<std::string, std::vector<double>>;
// Throws ParseError on ragged rows or non-numeric cells.
Table read_csv(std::istream &in, std::vector<std::string> *header = nullptr);

// Self-contained SVG of the given columns against t.
std::string render_svg(const Table &table, const std::vector<std::string> &columns);

int cmd_run(const std::vector<std::string> &files, std::ostream &out, std::ostream &err);
int cmd_eigen(const std::string &file, std::ostream &out, std::ostream &err);
int cmd_check(std::ostream &out);
int cmd_plot(const std::string &csv, const std::vector<std::string> &columns, const std::string &svg,
             std::ostream &err);

// Worker count for cmd_run: PQFLOW_THREADS when set, else hardware threads.
unsigned worker_threads();

}  // namespace pqflow::labcli
