// eh-glue command-line front end.
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <set>

#include "ehglue/report.hpp"
#include "ehglue/suites.hpp"

using namespace ehglue;
namespace su = ehglue::suites;

namespace {

struct Globals {
  std::string output;
  std::string config;
  std::string cache_dir;
  int threads = 0;
  bool timing = false;
};

struct Params {
  su::OmegaParams omega;
  su::BackgroundParams background;
  su::FluxParams flux;
  su::ZTermParams zterm;
  su::ProjectParams project;
  su::DistLaplaceParams dist;
  su::GlueScanParams scan;
  su::HeatParams heat;
  su::FlowParams flow;
  su::VerifyEhParams verify_eh;
  su::VerifyGlueParams verify_glue;
  std::string csv;
  std::vector<std::string> tasks{"omega", "verify-eh", "verify-glue", "heat", "dist-laplace", "flow"};
};

const std::set<std::string> kReportTasks{"omega",        "background", "flux", "zterm", "project",    "dist-laplace",
                                         "glue-scan",    "heat",       "flow", "verify-eh", "verify-glue"};

// All subcommands and their flags. Returns the app; `Params` is filled on parse.
std::unique_ptr<CLI::App> build(Globals& g, Params& p) {
  auto app = std::make_unique<CLI::App>("Ricci-flat gluing checks for Eguchi-Hanson lattices", "eh-glue");
  app->set_version_flag("--version", kVersion);
  app->require_subcommand(1);
  app->fallthrough();
  app->add_option("--output,-o", g.output, "report path (stdout if absent)");
  app->add_option("--config", g.config, "key=value file; flags override")->check(CLI::ExistingFile);
  app->add_option("--threads", g.threads, "worker threads")->check(CLI::NonNegativeNumber);
  app->add_flag("--timing", g.timing, "attach wall clock to the report");
  app->add_option("--cache-dir", g.cache_dir, "lattice cache directory (else EH_GLUE_CACHE_DIR)");

  auto* o = app->add_subcommand("omega", "lattice constant from cube partial sums");
  o->add_option("--cutoff", p.omega.cutoff);

  auto* b = app->add_subcommand("background", "background coefficient tables");
  b->add_option("--cutoff", p.background.cutoff);
  b->add_option("--degree", p.background.degree);

  auto* f = app->add_subcommand("flux", "flux integral of the glued metric");
  f->add_option("--epsilon", p.flux.epsilon);
  f->add_option("--delta", p.flux.delta);
  f->add_option("--order", p.flux.order);
  f->add_option("--cutoff", p.flux.cutoff);

  auto* z = app->add_subcommand("zterm", "Z-term size and structure");
  z->add_option("--epsilon", p.zterm.epsilon);
  z->add_option("--delta", p.zterm.delta);
  z->add_option("--order", p.zterm.order);
  z->add_option("--cutoff", p.zterm.cutoff);

  auto* pr = app->add_subcommand("project", "o1 projection of Ric and its eps exponent");
  pr->add_option("--epsilons", p.project.epsilons)->delimiter(',');
  pr->add_option("--delta", p.project.delta);
  pr->add_option("--cutoff", p.project.cutoff);
  pr->add_option("--order", p.project.order);
  pr->add_option("--radial-points", p.project.quad.radial_points);
  pr->add_option("--sphere-order", p.project.quad.sphere_order);
  pr->add_option("--shoulder-points", p.project.quad.shoulder_points);
  pr->add_option("--outer-shells", p.project.quad.outer_shells);
  pr->add_option("--corner-points", p.project.quad.corner_points);

  auto* d = app->add_subcommand("dist-laplace", "distributional Laplacian identity");
  d->add_option("--deltas", p.dist.deltas)->delimiter(',');
  d->add_option("--order", p.dist.order);
  d->add_option("--radial-points", p.dist.radial_points);

  auto* s = app->add_subcommand("glue-scan", "Ricci decay scan across the gluing annulus");
  s->add_option("--epsilon", p.scan.epsilon);
  s->add_option("--delta", p.scan.delta);
  s->add_option("--cutoff", p.scan.cutoff);
  s->add_option("--sphere-order", p.scan.sphere_order);
  s->add_option("--radii", p.scan.radii)->delimiter(',');

  auto* h = app->add_subcommand("heat", "heat kernel convergence");
  h->add_option("--t-min", p.heat.t_min);
  h->add_option("--t-max", p.heat.t_max);
  h->add_option("--t-step", p.heat.t_step);
  h->add_option("--grid", p.heat.grid);

  auto* w = app->add_subcommand("flow", "modulation ODE, assumption, blow-up rate");
  w->add_option("--lambda", p.flow.Lambda);
  w->add_option("--omega", p.flow.omega, "0 selects the lattice value");
  w->add_option("--t0", p.flow.t0);
  w->add_option("--steps", p.flow.steps);
  w->add_option("--assumption-points", p.flow.assumption_points);
  w->add_option("--t-far", p.flow.t_far);
  w->add_option("--proxy-times", p.flow.proxy_times)->delimiter(',');
  w->add_option("--proxy-cutoff", p.flow.proxy_cutoff);
  w->add_option("--proxy-corner-points", p.flow.proxy_corner_points);
  w->add_option("--csv", p.csv, "time series t,epsilon,pred_sup_rm,ric_proxy");

  auto* v = app->add_subcommand("verify", "structural suites");
  v->require_subcommand(1);
  v->fallthrough();
  auto* ve = v->add_subcommand("eh", "Eguchi-Hanson identities");
  ve->add_flag("--fast", p.verify_eh.fast);
  ve->add_option("--points", p.verify_eh.points);
  auto* vg = v->add_subcommand("glue", "glued metric structure");
  vg->add_flag("--fast", p.verify_glue.fast);
  vg->add_option("--epsilon", p.verify_glue.epsilon);
  vg->add_option("--delta", p.verify_glue.delta);
  vg->add_option("--cutoff", p.verify_glue.cutoff);
  auto* va = v->add_subcommand("all", "both suites");
  va->add_flag("--fast", p.verify_eh.fast);

  auto* r = app->add_subcommand("report", "several suites with default parameters in one document");
  r->add_option("--tasks", p.tasks)->delimiter(',');
  return app;
}

// Deepest parsed subcommand chain, outermost first.
std::vector<CLI::App*> chain(CLI::App* app) {
  std::vector<CLI::App*> c{app};
  for (CLI::App* cur = app; !cur->get_subcommands().empty();) {
    cur = cur->get_subcommands().front();
    c.push_back(cur);
  }
  return c;
}

CLI::Option* find_flag(const std::vector<CLI::App*>& c, const std::string& key) {
  for (auto it = c.rbegin(); it != c.rend(); ++it)
    if (CLI::Option* o = (*it)->get_option_no_throw("--" + key)) return o;
  return nullptr;
}

void name_failures(const std::vector<Report>& reports) {
  for (const Report& r : reports)
    for (const std::string& c : r.failing()) std::cerr << "eh-glue: suite " << r.task() << ": check " << c << " failed\n";
}

void emit(const Globals& g, const std::string& text) {
  if (g.output.empty())
    std::cout << text;
  else
    atomic_write(g.output, text);
}

Report run_task(const std::string& name, const Params& p) {
  if (name == "omega") return su::run_omega(p.omega);
  if (name == "background") return su::run_background(p.background);
  if (name == "flux") return su::run_flux(p.flux);
  if (name == "zterm") return su::run_zterm(p.zterm);
  if (name == "project") return su::run_project(p.project);
  if (name == "dist-laplace") return su::run_dist_laplace(p.dist);
  if (name == "glue-scan") return su::run_glue_scan(p.scan);
  if (name == "heat") return su::run_heat(p.heat);
  if (name == "flow") return su::run_flow(p.flow);
  if (name == "verify-eh") return su::run_verify_eh(p.verify_eh);
  if (name == "verify-glue") return su::run_verify_glue(p.verify_glue);
  throw ConfigError("tasks", "unknown task " + name);
}

void validate_task(const std::string& name, const Params& p) {
  if (name == "omega") p.omega.validate();
  else if (name == "background") p.background.validate();
  else if (name == "flux") p.flux.validate();
  else if (name == "zterm") p.zterm.validate();
  else if (name == "project") p.project.validate();
  else if (name == "dist-laplace") p.dist.validate();
  else if (name == "glue-scan") p.scan.validate();
  else if (name == "heat") p.heat.validate();
  else if (name == "flow") p.flow.validate();
  else if (name == "verify-eh") p.verify_eh.validate();
  else if (name == "verify-glue") p.verify_glue.validate();
  else throw ConfigError("tasks", "unknown task " + name);
}

int main_impl(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const std::vector<std::string> given = args;
  std::reverse(args.begin(), args.end());  // CLI11 consumes vectors from the back

  Globals g;
  Params p;
  auto app = build(g, p);
  try {
    app->parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app->exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (!g.config.empty()) {
    // config entries become flags the user did not already give; reparse
    const ConfigEntries entries = read_config_file(g.config);
    const auto c = chain(app.get());
    std::vector<std::string> extra;
    for (const auto& [key, value] : entries) {
      CLI::Option* o = find_flag(c, key);
      if (o == nullptr || key == "config") throw ConfigError(key, "unknown configuration key");
      if (o->count() == 0) extra.push_back("--" + key + "=" + value);
    }
    std::vector<std::string> merged = given;
    merged.insert(merged.end(), extra.begin(), extra.end());
    std::reverse(merged.begin(), merged.end());
    g = Globals{};
    p = Params{};
    app = build(g, p);
    try {
      app->parse(merged);
    } catch (const CLI::ParseError& e) {
      std::cerr << "eh-glue: config " << g.config << ": " << e.what() << "\n";
      return kExitConfig;
    }
  }

  const auto c = chain(app.get());
  std::string task = c.at(1)->get_name();
  if (task == "verify") task += "-" + c.at(2)->get_name();
  std::vector<std::string> tasks;
  if (task == "report") {
    for (const auto& t : p.tasks)
      if (!kReportTasks.count(t)) throw ConfigError("tasks", "unknown task " + t);
    tasks = p.tasks;
  } else if (task == "verify-all") {
    p.verify_glue.fast = p.verify_eh.fast;
    tasks = {"verify-eh", "verify-glue"};
  } else {
    tasks = {task};
  }
  // nothing runs until every parameter block is valid
  for (const auto& t : tasks) validate_task(t, p);
  if (!p.csv.empty() && task != "flow") throw ConfigError("csv", "only the flow task writes a time series");

  if (g.threads > 0) set_worker_threads(g.threads);
  if (!g.cache_dir.empty()) ::setenv("EH_GLUE_CACHE_DIR", g.cache_dir.c_str(), 1);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Report> reports;
  std::vector<std::vector<double>> csv;
  for (const auto& t : tasks) {
    if (t == "flow") {
      su::FlowRun fr = su::run_flow_with_csv(p.flow);
      csv = std::move(fr.csv);
      reports.push_back(std::move(fr.report));
    } else {
      reports.push_back(run_task(t, p));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string text;
  if (reports.size() == 1) {
    if (g.timing) reports[0].attach_wall_clock(seconds);
    text = reports[0].canonical();
  } else {
    Json doc = combine(reports);
    doc["task"] = task;
    if (g.timing) doc["wall_clock_seconds"] = seconds;
    text = canonical_json(doc);
  }
  emit(g, text);
  if (!p.csv.empty()) atomic_write(p.csv, csv_text(flow_csv_header(), csv));

  bool pass = true;
  for (const Report& r : reports) pass = pass && r.all_pass();
  if (!pass) {
    name_failures(reports);
    return kExitBudget;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "eh-glue: invalid " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "eh-glue: " << e.what() << "\n";
    return 1;
  }
}
