#include "fcl/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "fcl/domain.hpp"
#include "fcl/energy.hpp"
#include "fcl/extension.hpp"
#include "fcl/kernel.hpp"
#include "fcl/lemmas.hpp"
#include "fcl/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fcl {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

const Config& default_config() {
  static const Config d = {
      {"domain.n", "2"},
      {"domain.dims", "32"},
      {"domain.L", "1"},
      {"domain.mode", "periodic"},
      {"domain.s", "0.5"},
      {"kernel.cutoff", "3"},
      {"kernel.tailTolerance", "1e-3"},
      {"kernel.autoRaise", "true"},
      {"solver.N", "1"},
      {"solver.targets", ""},
      {"solver.seed", "0"},
      {"solver.maxIters", "200"},
      {"solver.energyTol", "1e-10"},
      {"solver.repairBudget", "0.05"},
      {"solver.repairC", "50"},
      {"solver.annealIters", "0"},
      {"solver.annealT0", "0"},
      {"solver.annealT1", "0"},
      {"solver.binarize", "true"},
      {"solver.repair", "true"},
      {"solver.polish", "true"},
      {"init.kind", "balls"},
      {"init.centers", ""},
      {"init.seed", "0"},
      {"constants.Lambda", "0"},
      {"constants.r0", "1"},
      {"constants.xi", "0"},
      {"constants.sigma0", "0"},
      {"check.c0", "0.05"},
      {"check.c1", "0.95"},
      {"check.radii", ""},
      {"check.tol", "1e-6"},
      {"check.trials", "20"},
      {"nucleate.eps", "0"},
      {"nucleate.chamber", "1"},
      {"truncate.tau", "0"},
      {"phi.radii", ""},
      {"blowup.scales", ""},
      {"threads", "1"},
  };
  return d;
}

double to_d(const Config& c, const std::string& k) {
  return std::stod(c.at(k));
}
long long to_i(const Config& c, const std::string& k) {
  return std::stoll(c.at(k));
}
bool to_b(const Config& c, const std::string& k) {
  const auto& v = c.at(k);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: boolean expected for " + k);
}
std::vector<double> to_dvec(const Config& c, const std::string& k) {
  std::istringstream in(c.at(k));
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}
std::vector<int> to_ivec(const Config& c, const std::string& k) {
  std::istringstream in(c.at(k));
  std::vector<int> out;
  int v;
  while (in >> v) out.push_back(v);
  return out;
}

DomainSpec domain_from_config(const Config& c) {
  int n = (int)to_i(c, "domain.n");
  auto dims = to_ivec(c, "domain.dims");
  if ((int)dims.size() == 1)
    dims.assign(n, dims[0]);
  return make_domain(n, dims, to_d(c, "domain.L"),
                     parse_mode(c.at("domain.mode")), to_d(c, "domain.s"));
}

KernelOptions kernel_opts_from_config(const Config& c) {
  KernelOptions o;
  o.latticeCutoff = (int)to_i(c, "kernel.cutoff");
  o.tailTolerance = to_d(c, "kernel.tailTolerance");
  o.autoRaiseCutoff = to_b(c, "kernel.autoRaise");
  return o;
}

KernelTensor load_or_build_kernel(const DomainSpec& d, const Config& c,
                                  const std::string& kernelPath) {
  if (!kernelPath.empty()) return read_kernel_file(kernelPath, d);
  return build_kernel(d, kernel_opts_from_config(c));
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string());
  out << text;
}

void write_resolved(const fs::path& dir, const Config& c) {
  fs::create_directories(dir);
  write_text(dir / "config.txt", config_to_text(c));
}

EstimateConstants constants_from_config(const Config& c, int n, double s, int N) {
  auto pc = estimate_constants(n, s, N, to_d(c, "constants.Lambda"),
                            to_d(c, "constants.r0"), to_d(c, "constants.xi"));
  double sig = to_d(c, "constants.sigma0");
  if (sig > 0.0) pc.sigma0 = sig;
  return pc;
}

std::vector<double> check_radii(const Config& c, const DomainSpec& d) {
  auto r = to_dvec(c, "check.radii");
  if (!r.empty()) return r;
  double h = d.cellSize;
  return {8.0 * h, std::min(d.L / 8.0, 16.0 * h), d.L / 4.0};
}

json report_json(const CheckReport& r) { return json::parse(r.to_json()); }

int emit_reports(const std::vector<CheckReport>& reports,
                 const std::string& outDir, const Config& cfg) {
  std::ostringstream nd;
  bool failed = false;
  for (const auto& r : reports) {
    nd << r.to_json() << "\n";
    std::cout << r.to_json() << "\n";
    if (!r.pass && !r.diagnostic) failed = true;
  }
  if (!outDir.empty()) {
    fs::path dir(outDir);
    write_resolved(dir, cfg);
    write_text(dir / "reports.ndjson", nd.str());
    write_text(dir / "reports.csv", reports_to_csv(reports));
  }
  return failed ? 1 : 0;
}

int cmd_kernel(const Config& cfg, const std::string& outDir) {
  auto t0 = std::chrono::steady_clock::now();
  auto d = domain_from_config(cfg);
  auto k = build_kernel(d, kernel_opts_from_config(cfg));
  fs::path dir(outDir);
  write_resolved(dir, cfg);
  write_kernel_file(k, (dir / "kernel.fclk").string());
  json j;
  j["tailBound"] = k.tailBound;
  j["latticeCutoff"] = k.opts.latticeCutoff;
  j["wallSeconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_text(dir / "summary.json", j.dump(2) + "\n");
  return 0;
}

int cmd_energy(const Config& cfg, const std::string& gridPath,
               const std::string& kernelPath, const std::string& outDir) {
  auto g = read_grid_file(gridPath);
  auto k = load_or_build_kernel(g.domain, cfg, kernelPath);
  auto eb = cluster_perimeter(g, k);
  std::cout << "total " << fmt17(eb.total) << "\n";
  if (!outDir.empty()) {
    fs::path dir(outDir);
    write_resolved(dir, cfg);
    write_text(dir / "breakdown.json", eb.to_json() + "\n");
    write_text(dir / "breakdown.csv", eb.to_csv());
  }
  return 0;
}

int cmd_minimize(const Config& cfg, const std::string& kernelPath,
                 const std::string& outDir) {
  auto d = domain_from_config(cfg);
  auto k = load_or_build_kernel(d, cfg, kernelPath);
  SolveConfig sc;
  sc.N = (int)to_i(cfg, "solver.N");
  sc.targets = to_dvec(cfg, "solver.targets");
  if ((int)sc.targets.size() != sc.N)
    throw std::invalid_argument("solver.targets must list one volume per "
                                "chamber");
  sc.seed = (std::uint64_t)to_i(cfg, "solver.seed");
  sc.maxIters = (int)to_i(cfg, "solver.maxIters");
  sc.energyTol = to_d(cfg, "solver.energyTol");
  sc.repairBudget = to_d(cfg, "solver.repairBudget");
  sc.repairC = to_d(cfg, "solver.repairC");
  sc.anneal.iters = to_i(cfg, "solver.annealIters");
  sc.anneal.t0 = to_d(cfg, "solver.annealT0");
  sc.anneal.t1 = to_d(cfg, "solver.annealT1");
  sc.doBinarize = to_b(cfg, "solver.binarize");
  sc.doRepair = to_b(cfg, "solver.repair");
  sc.doPolish = to_b(cfg, "solver.polish");
  sc.init.kind = cfg.at("init.kind") == "random" ? SeedDescriptor::Kind::Random
                                                 : SeedDescriptor::Kind::Balls;
  sc.init.volumes = sc.targets;
  sc.init.seed = (std::uint64_t)to_i(cfg, "init.seed");
  auto centers = to_dvec(cfg, "init.centers");
  if (!centers.empty()) {
    if ((int)centers.size() != sc.N * d.n)
      throw std::invalid_argument("init.centers must list n coordinates per "
                                  "chamber");
    for (int h = 0; h < sc.N; ++h) {
      std::array<double, 3> x{0, 0, 0};
      for (int a = 0; a < d.n; ++a) x[a] = centers[h * d.n + a];
      sc.init.centers.push_back(x);
    }
  }

  auto res = minimize(sc, k);

  fs::path dir(outDir);
  write_resolved(dir, cfg);
  write_grid_file(res.grid, (dir / "result.fclg").string());
  write_soft_file(res.soft, (dir / "soft.fcls").string());
  std::ostringstream tr;
  tr << "iteration,energy,residual,step\n";
  for (const auto& t : res.trace)
    tr << t.iter << "," << fmt17(t.energy) << "," << fmt17(t.residual) << ","
       << fmt17(t.step) << "\n";
  write_text(dir / "trace.csv", tr.str());

  json j;
  j["finalEnergy"] = res.finalEnergy;
  j["achieved"] = res.achieved;
  j["targets"] = sc.targets;
  j["termination"] = res.termination;
  j["repairDeltaE"] = res.repairDeltaE;
  j["repairBoundHolds"] = res.repairBoundHolds;
  j["iterations"] = res.trace.empty() ? 0 : res.trace.back().iter;
  j["wallSeconds"] = res.wallSeconds;
  write_text(dir / "summary.json", j.dump(2) + "\n");
  std::cout << "energy " << fmt17(res.finalEnergy) << " (" << res.termination
            << ")\n";
  return 0;
}

int cmd_check(const Config& cfg, const std::string& suite,
              const std::string& gridPath, const std::string& kernelPath,
              const std::string& outDir) {
  auto g = read_grid_file(gridPath);
  const auto& d = g.domain;
  auto k = load_or_build_kernel(d, cfg, kernelPath);
  auto pc = constants_from_config(cfg, d.n, d.s, g.N);
  auto radii = check_radii(cfg, d);
  std::vector<CheckReport> reports;

  bool all = suite == "all";
  if ((all && g.N >= 2) || suite == "sandwich") {
    std::vector<Mask> sets;
    for (int h = 1; h <= g.N; ++h) sets.push_back(chamber_mask(g, h));
    if (sets.size() < 2)
      throw std::invalid_argument("check sandwich: need at least 2 chambers");
    reports.push_back(check_sandwich(sets, k));
  }
  if (all || suite == "isoperimetric") {
    for (int h = 1; h <= g.N; ++h) {
      auto rep = check_isoperimetric(chamber_mask(g, h), k, pc.PsB,
                                     to_d(cfg, "check.tol"));
      rep.context += ", chamber " + std::to_string(h);
      reports.push_back(rep);
    }
  }
  if (all || suite == "density") {
    auto cb = cluster_boundary(g);
    int cell = -1;
    for (int i = 0; i < d.cells(); ++i)
      if (cb[i]) {
        cell = i;
        break;
      }
    if (cell < 0) throw std::invalid_argument("check density: empty boundary");
    reports.push_back(check_density(g, cell, radii, pc, to_d(cfg, "check.c0"),
                                    to_d(cfg, "check.c1")));
  }
  if (all || suite == "infiltration") {
    reports.push_back(check_infiltration(g, pc, radii, k));
  }
  if (all || suite == "stability") {
    reports.push_back(local_stability(g, pc.Lambda, pc.r0,
                                      (int)to_i(cfg, "check.trials"),
                                      (std::uint64_t)to_i(cfg, "solver.seed"),
                                      k));
  }
  if (reports.empty())
    throw std::invalid_argument("unknown check suite: " + suite);
  return emit_reports(reports, outDir, cfg);
}

int cmd_nucleate(const Config& cfg, const std::string& gridPath,
                 double eps, const std::string& kernelPath,
                 const std::string& outDir) {
  auto g = read_grid_file(gridPath);
  auto k = load_or_build_kernel(g.domain, cfg, kernelPath);
  auto pc = constants_from_config(cfg, g.domain.n, g.domain.s, g.N);
  if (eps <= 0.0) eps = to_d(cfg, "nucleate.eps");
  int chamber = (int)to_i(cfg, "nucleate.chamber");
  auto E = chamber_mask(g, chamber);
  auto res = nucleate(E, eps, k, pc);
  json j;
  j["eps"] = eps;
  j["chamber"] = chamber;
  j["residual"] = res.residual;
  j["densityThreshold"] = res.densityThreshold;
  j["cardinalityBound"] = res.cardinalityBound;
  auto pts = json::array();
  for (const auto& p : res.points) {
    json q = json::array();
    for (int a = 0; a < g.domain.n; ++a) q.push_back(p[a]);
    pts.push_back(q);
  }
  j["points"] = pts;
  std::cout << "points " << res.points.size() << " residual "
            << fmt17(res.residual) << "\n";
  if (!outDir.empty()) {
    fs::path dir(outDir);
    write_resolved(dir, cfg);
    write_text(dir / "nucleation.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_truncate(const Config& cfg, const std::string& gridPath,
                 const std::string& refPath, double tau,
                 const std::string& kernelPath, const std::string& outDir) {
  auto g = read_grid_file(gridPath);
  auto ref = read_grid_file(refPath);
  if (!(ref.domain == g.domain))
    throw std::invalid_argument("truncate: reference grid domain mismatch");
  Mask F(g.domain.cells(), 0);
  for (int i = 0; i < g.domain.cells(); ++i)
    if (ref.labels[i] >= 1) F[i] = 1;
  auto k = load_or_build_kernel(g.domain, cfg, kernelPath);
  auto pc = constants_from_config(cfg, g.domain.n, g.domain.s, g.N);
  if (tau <= 0.0) tau = to_d(cfg, "truncate.tau");
  auto res = truncate_cluster(g, F, tau, k, pc);
  json j;
  j["tau"] = tau;
  j["r0"] = res.r0;
  j["degenerate"] = res.degenerate;
  j["lhs"] = res.lhs;
  j["rhs"] = res.rhs;
  std::cout << "r0 " << fmt17(res.r0) << (res.degenerate ? " (degenerate)" : "")
            << "\n";
  if (!outDir.empty()) {
    fs::path dir(outDir);
    write_resolved(dir, cfg);
    write_grid_file(res.truncated, (dir / "truncated.fclg").string());
    write_text(dir / "summary.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_phi(const Config& cfg, const std::string& gridPath, int cell,
            const std::string& outDir) {
  auto g = read_grid_file(gridPath);
  auto radii = to_dvec(cfg, "phi.radii");
  if (radii.empty()) {
    double lo = 4.0 * g.domain.cellSize, hi = g.domain.L / 3.0;
    if (hi <= lo) throw std::invalid_argument("phi: grid too small");
    for (int i = 0; i < 6; ++i)
      radii.push_back(lo * std::pow(hi / lo, i / 5.0));
  }
  if (cell < 0) {
    auto cb = cluster_boundary(g);
    for (int i = 0; i < g.domain.cells(); ++i)
      if (cb[i]) {
        cell = i;
        break;
      }
  }
  auto p = phi_profile(g, cell, radii);
  auto rep = check_monotonicity(p, p.lambdaPrime);
  std::cout << rep.to_json() << "\n";
  if (!outDir.empty()) {
    fs::path dir(outDir);
    write_resolved(dir, cfg);
    write_text(dir / "phi.csv", p.to_csv());
    write_text(dir / "reports.ndjson", rep.to_json() + "\n");
  }
  return rep.pass ? 0 : 1;
}

int cmd_blowup(const Config& cfg, const std::string& gridPath, int cell,
               const std::string& outDir) {
  auto g = read_grid_file(gridPath);
  auto scales = to_dvec(cfg, "blowup.scales");
  if (scales.empty()) {
    double h = g.domain.cellSize;
    scales = {4.0 * h, 8.0 * h, 16.0 * h};
  }
  auto rep = blowup(g, cell, scales);
  json j;
  j["classification"] = rep.classification;
  auto arr = json::array();
  for (const auto& s : rep.scales)
    arr.push_back({{"r", s.r},
                   {"occupancy", s.occupancy},
                   {"flatness", s.flatness},
                   {"chamberA", s.chamberA},
                   {"chamberB", s.chamberB}});
  j["scales"] = arr;
  std::cout << rep.classification << "\n";
  if (!outDir.empty()) {
    fs::path dir(outDir);
    write_resolved(dir, cfg);
    write_text(dir / "blowup.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_render(const std::string& gridPath, const std::string& outFile,
               int sliceAxis, int sliceIndex) {
  auto g = read_grid_file(gridPath);
  const auto& d = g.domain;
  if (d.n == 1)
    throw std::invalid_argument("render: one-dimensional grids have no "
                                "image form; export CSV instead");
  int ax0, ax1;  // image rows, columns
  std::array<int, 3> base{0, 0, 0};
  if (d.n == 2) {
    ax0 = 0;
    ax1 = 1;
  } else {
    if (sliceAxis < 0 || sliceIndex < 0)
      throw std::invalid_argument(
          "render: three-dimensional grids need --slice-axis and "
          "--slice-index");
    if (sliceAxis > 2 || sliceIndex >= d.dims[sliceAxis])
      throw std::invalid_argument("render: slice out of range");
    ax0 = sliceAxis == 0 ? 1 : 0;
    ax1 = sliceAxis == 2 ? 1 : 2;
    base[sliceAxis] = sliceIndex;
  }
  int rows = d.dims[ax0], cols = d.dims[ax1];
  std::ofstream out(outFile, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + outFile);
  out << "P5\n" << cols << " " << rows << "\n255\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      auto idx = base;
      idx[ax0] = r;
      idx[ax1] = c;
      unsigned char gray =
          (unsigned char)((255 * g.labels[d.index(idx)]) / g.N);
      out.put((char)gray);
    }
  return 0;
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineNo) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineNo) +
                                  ": empty key");
    c[key] = val;
  }
  return c;
}

Config resolve_config(const Config& given) {
  Config c = default_config();
  for (const auto& [k, v] : given) {
    if (!c.count(k))
      throw std::invalid_argument("unknown config key: " + k);
    c[k] = v;
  }
  return c;
}

std::string config_to_text(const Config& resolved) {
  std::ostringstream os;
  for (const auto& [k, v] : resolved) os << k << " = " << v << "\n";
  return os.str();
}

int cli_run(int argc, char** argv) {
  CLI::App app{
      "fracluster: fractional perimeter energies, isoperimetric cluster "
      "minimization, and quantitative geometric checks on grids"};
  app.require_subcommand(1);

  std::string configPath, outDir, gridPath, kernelPath, refPath, suite,
      outFile;
  std::vector<std::string> sets;
  int threads = 1, cell = -1, sliceAxis = -1, sliceIndex = -1;
  double eps = 0.0, tau = 0.0;

  app.add_option("--threads", threads, "bound on internal parallelism");

  auto addCommon = [&](CLI::App* sub) {
    sub->add_option("--config", configPath, "config file (key = value lines)");
    sub->add_option("--set", sets, "config override key=value (repeatable)");
  };

  auto* sKernel = app.add_subcommand("kernel", "build and store the kernel");
  addCommon(sKernel);
  sKernel->add_option("--out", outDir, "output directory")->required();

  auto* sEnergy = app.add_subcommand("energy", "cluster energy of a grid");
  addCommon(sEnergy);
  sEnergy->add_option("--grid", gridPath, "FCLG grid file")->required();
  sEnergy->add_option("--kernel", kernelPath, "FCLK kernel cache");
  sEnergy->add_option("--out", outDir, "output directory");

  auto* sMin = app.add_subcommand("minimize", "volume-constrained solve");
  addCommon(sMin);
  sMin->add_option("--kernel", kernelPath, "FCLK kernel cache");
  sMin->add_option("--out", outDir, "output directory")->required();

  auto* sCheck = app.add_subcommand("check", "quantitative check suites");
  addCommon(sCheck);
  sCheck->add_option("--suite", suite,
                     "sandwich|isoperimetric|density|infiltration|stability|"
                     "all")
      ->required();
  sCheck->add_option("--grid", gridPath, "FCLG grid file")->required();
  sCheck->add_option("--kernel", kernelPath, "FCLK kernel cache");
  sCheck->add_option("--out", outDir, "output directory");

  auto* sNuc = app.add_subcommand("nucleate", "unit-ball volume capture");
  addCommon(sNuc);
  sNuc->add_option("--grid", gridPath, "FCLG grid file")->required();
  sNuc->add_option("--eps", eps, "volume residual target");
  sNuc->add_option("--kernel", kernelPath, "FCLK kernel cache");
  sNuc->add_option("--out", outDir, "output directory");

  auto* sTrunc = app.add_subcommand("truncate", "distance-level truncation");
  addCommon(sTrunc);
  sTrunc->add_option("--grid", gridPath, "FCLG grid file")->required();
  sTrunc->add_option("--ref", refPath, "reference grid (chambers form F)")
      ->required();
  sTrunc->add_option("--tau", tau, "volume budget");
  sTrunc->add_option("--kernel", kernelPath, "FCLK kernel cache");
  sTrunc->add_option("--out", outDir, "output directory");

  auto* sPhi = app.add_subcommand("phi", "monotonicity profile at a boundary "
                                         "cell");
  addCommon(sPhi);
  sPhi->add_option("--grid", gridPath, "FCLG grid file")->required();
  sPhi->add_option("--cell", cell, "boundary cell index (default: first)");
  sPhi->add_option("--out", outDir, "output directory");

  auto* sBlow = app.add_subcommand("blowup", "multi-scale boundary profile");
  addCommon(sBlow);
  sBlow->add_option("--grid", gridPath, "FCLG grid file")->required();
  sBlow->add_option("--cell", cell, "boundary cell index")->required();
  sBlow->add_option("--out", outDir, "output directory");

  auto* sRender = app.add_subcommand("render", "PGM image of a label grid");
  sRender->add_option("--grid", gridPath, "FCLG grid file")->required();
  sRender->add_option("--out", outFile, "output PGM file")->required();
  sRender->add_option("--slice-axis", sliceAxis, "slice axis (n = 3)");
  sRender->add_option("--slice-index", sliceIndex, "slice index (n = 3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config given;
    if (!configPath.empty()) {
      std::ifstream in(configPath, std::ios::binary);
      if (!in)
        throw std::invalid_argument("cannot read config: " + configPath);
      std::ostringstream ss;
      ss << in.rdbuf();
      given = parse_config_text(ss.str());
    }
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value");
      given[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }
    Config cfg = resolve_config(given);

    if (sKernel->parsed()) return cmd_kernel(cfg, outDir);
    if (sEnergy->parsed()) return cmd_energy(cfg, gridPath, kernelPath, outDir);
    if (sMin->parsed()) return cmd_minimize(cfg, kernelPath, outDir);
    if (sCheck->parsed())
      return cmd_check(cfg, suite, gridPath, kernelPath, outDir);
    if (sNuc->parsed())
      return cmd_nucleate(cfg, gridPath, eps, kernelPath, outDir);
    if (sTrunc->parsed())
      return cmd_truncate(cfg, gridPath, refPath, tau, kernelPath, outDir);
    if (sPhi->parsed()) return cmd_phi(cfg, gridPath, cell, outDir);
    if (sBlow->parsed()) return cmd_blowup(cfg, gridPath, cell, outDir);
    if (sRender->parsed())
      return cmd_render(gridPath, outFile, sliceAxis, sliceIndex);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fcl
