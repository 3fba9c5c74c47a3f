#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "igeom/flowline.hpp"
#include "igeom/gff.hpp"
#include "igeom/harness.hpp"
#include "igeom/render.hpp"
#include "igeom/sle.hpp"

using namespace igeom;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Point parse_point(const std::vector<double>& v) {
  if (v.size() != 2) throw ValidationError("start: expected two coordinates");
  return {v[0], v[1]};
}

// Field from --field, or a fresh sample with zero boundary data.
DiscreteField load_field(const std::string& file, int n, double kappa, std::uint64_t seed) {
  if (!file.empty()) return read_field_file(file);
  const DerivedConstants c = derive_constants(kappa);
  const TriangulatedGrid grid(n);
  const DirichletOperator op(grid);
  return sample_field(op, seed, BoundaryTrace::constant(grid, 0.0), c.chi);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imaginary geometry of the Gaussian free field"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::uint64_t seed = 1;
  std::string out;
  std::string config;
  std::size_t runs = 0;
  int jobs = 1;

  // sample-gff
  int n = 100;
  double kappa = 2.0;
  std::string boundaryFile;
  auto* sample = app.add_subcommand("sample-gff", "sample a GFF on the square grid");
  sample->add_option("--n", n, "vertices per side")->check(CLI::Range(3, 4000));
  sample->add_option("--kappa", kappa, "sets chi stored with the field")->check(CLI::PositiveNumber);
  sample->add_option("--boundary", boundaryFile, "boundary arcs JSON")->check(CLI::ExistingFile);
  sample->add_option("--seed", seed);
  sample->add_option("--out", out, "IGF1 field file")->required();

  // trace / fan / lightcone
  std::string fieldFile;
  std::vector<double> start{0.0, 0.0};
  double theta = 0.0;
  double step = 0.0;
  double maxLen = 0.0;
  std::vector<double> angles;
  std::vector<double> changeTimes;
  auto addFieldOpts = [&](CLI::App* c) {
    c->add_option("--field", fieldFile, "IGF1 field file")->check(CLI::ExistingFile);
    c->add_option("--n", n, "grid size when sampling a fresh field");
    c->add_option("--kappa", kappa);
    c->add_option("--seed", seed);
    c->add_option("--start", start, "x y")->expected(2);
    c->add_option("--step", step, "0 means half the spacing");
    c->add_option("--out", out)->required();
  };
  auto* trace = app.add_subcommand("trace", "trace a flow line");
  addFieldOpts(trace);
  trace->add_option("--theta", theta);
  trace->add_option("--max-len", maxLen);
  trace->add_option("--angles", angles, "angle schedule");
  trace->add_option("--change-times", changeTimes, "arclengths at which the angle changes");

  int angleCount = 12;
  auto* fanCmd = app.add_subcommand("fan", "flow lines over a range of angles");
  addFieldOpts(fanCmd);
  fanCmd->add_option("--angles", angleCount)->check(CLI::PositiveNumber);
  fanCmd->add_option("--max-len", maxLen);

  LightConeOptions lo;
  auto* cone = app.add_subcommand("lightcone", "light cone of angle-varying flow lines");
  addFieldOpts(cone);
  cone->add_option("--iterations", lo.iterations)->check(CLI::PositiveNumber);
  cone->add_option("--seed-every", lo.seedEvery)->check(CLI::PositiveNumber);
  cone->add_option("--paths-out", config, "also write the traced paths");

  // drive / curve
  std::string paramsFile;
  double dt = 1e-3;
  double T = 1.0;
  auto* drive = app.add_subcommand("drive", "simulate an SLE_kappa(rho) driver");
  drive->add_option("--params", paramsFile, "params JSON")->required()->check(CLI::ExistingFile);
  drive->add_option("--dt", dt)->check(CLI::PositiveNumber);
  drive->add_option("--T", T)->check(CLI::PositiveNumber);
  drive->add_option("--seed", seed);
  drive->add_option("--out", out)->required();

  std::string driverFile;
  double tip = 0.0;
  std::size_t stride = 1;
  auto* curve = app.add_subcommand("curve", "extract the trace of a driver");
  curve->add_option("--driver", driverFile, "driver CSV")->required()->check(CLI::ExistingFile);
  curve->add_option("--tip", tip, "0 means sqrt(dt)/4");
  curve->add_option("--stride", stride)->check(CLI::PositiveNumber);
  curve->add_option("--out", out)->required();

  // experiment
  std::string name;
  bool seedGiven = false;
  auto* exp = app.add_subcommand("experiment", "run a named experiment");
  exp->add_option("name", name, "experiment name");
  exp->add_option("--config", config, "experiment config JSON")->check(CLI::ExistingFile);
  auto* seedOpt = exp->add_option("--seed", seed);
  exp->add_option("--out", out, "output directory");
  exp->add_option("--runs", runs, "override the run count");
  exp->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  bool list = false;
  exp->add_flag("--list", list, "list experiment names and presets");

  // render
  std::vector<std::string> inputs;
  int size = 600;
  auto* render = app.add_subcommand("render", "render path or curve CSV files to PNG");
  render->add_option("inputs", inputs, "path CSV (t,x,y,theta) or curve CSV (t,x,y)")->required();
  render->add_option("--size", size)->check(CLI::Range(16, 8000));
  std::vector<double> window;
  render->add_option("--window", window, "xmin xmax ymin ymax")->expected(4);
  render->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) {
      const TriangulatedGrid grid(n);
      const DirichletOperator op(grid);
      const BoundaryTrace b =
          boundaryFile.empty() ? BoundaryTrace::constant(grid, 0.0) : boundary_from_json(grid, slurp(boundaryFile));
      write_field_file(out, sample_field(op, seed, b, derive_constants(kappa).chi));
    } else if (*trace) {
      const DiscreteField f = load_field(fieldFile, n, kappa, seed);
      TraceOptions o;
      o.step = step;
      o.maxLen = maxLen;
      FlowPath p;
      if (angles.empty()) {
        p = trace_flow_line(f, parse_point(start), theta, o);
      } else {
        AngleSchedule s{angles, changeTimes, false};
        p = trace_angle_varying(f, parse_point(start), s, o);
      }
      write_path_csv(out, p);
      std::cout << "points " << p.points.size() << " termination " << termination_name(p.termination) << '\n';
    } else if (*fanCmd) {
      const DiscreteField f = load_field(fieldFile, n, kappa, seed);
      TraceOptions o;
      o.step = step;
      o.maxLen = maxLen;
      const auto paths = fan(f, parse_point(start), angleCount, o);
      write_paths_csv(out, paths);
    } else if (*cone) {
      const DiscreteField f = load_field(fieldFile, n, kappa, seed);
      lo.step = step;
      const LightConeSet set = light_cone(f, parse_point(start), lo);
      write_light_cone_csv(out, set);
      if (!config.empty()) write_paths_csv(config, set.paths);
      std::cout << "points " << set.size() << " paths " << set.paths.size() << '\n';
    } else if (*drive) {
      const SleParams p = params_from_json(slurp(paramsFile));
      const DriverPath d = simulate_driver(p, dt, T, seed);
      write_driver_csv(out, d);
      if (d.thresholdTime) std::cout << "continuation threshold at t = " << *d.thresholdTime << '\n';
    } else if (*curve) {
      const DriverPath d = read_driver_csv(driverFile);
      write_curve_csv(out, extract_curve(d, tip > 0.0 ? tip : 0.25 * std::sqrt(d.dt), stride));
    } else if (*exp) {
      if (list) {
        for (const auto& e : experiment_names()) std::cout << e << ' ' << experiment_preset(e).dump() << '\n';
        return 0;
      }
      seedGiven = seedOpt->count() > 0;
      ExperimentConfig c;
      if (!config.empty()) {
        json j = json::parse(slurp(config));
        if (!name.empty()) j["experiment"] = name;
        c = ExperimentConfig::from_json(j);
      } else {
        if (name.empty()) throw ValidationError("experiment: give a name or --config");
        c.experiment = name;
      }
      if (seedGiven) c.seed = seed;
      if (runs > 0) c.runs = runs;
      c.jobs = jobs;
      if (!out.empty()) c.outDir = out;
      c.validate();
      const RunManifest m = run_experiment(c);
      std::cout << m.report.dump(2) << '\n';
      std::cout << c.experiment << ": " << (m.pass ? "pass" : "fail") << '\n';
      return m.pass ? 0 : 2;
    } else if (*render) {
      std::vector<FlowPath> paths;
      std::vector<CurvePolyline> curves;
      for (const auto& in : inputs) {
        std::ifstream f(in);
        std::string header;
        std::getline(f, header);
        if (header.rfind("t,x,y,theta", 0) == 0) {
          for (auto& p : read_paths_csv(in)) paths.push_back(std::move(p));
        } else if (header.rfind("t,x,y", 0) == 0) {
          CurvePolyline c;
          std::string line;
          while (std::getline(f, line)) {
            double t, x, y;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &x, &y) == 3) {
              c.times.push_back(t);
              c.vertices.emplace_back(x, y);
            }
          }
          curves.push_back(std::move(c));
        } else {
          throw ValidationError(in + ": unrecognised CSV header");
        }
      }
      RenderSpec spec;
      spec.width = spec.height = size;
      if (window.size() == 4) {
        spec.xmin = window[0];
        spec.xmax = window[1];
        spec.ymin = window[2];
        spec.ymax = window[3];
      }
      write_png(out, paths.empty() ? render_curves(curves, spec) : render_paths(paths, spec));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
