// Copyright 2026 The qzanneal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qzanneal command-line driver.
//
//   qzanneal <gen|sweep|compare|transfer|efficiency|diagnose|digitize> -c config.json [-o dir]
//
// Every experiment writes results.csv (reproducible), timing.csv (wall
// clock), cells.jsonl, summary.json and a plot_<experiment>.py script that
// reads those files. The exit status is 1 if any cell failed and 2 on a
// usage or configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "qzanneal/bench.hpp"
#include "qzanneal/digitizer.hpp"
#include "qzanneal/sat_io.hpp"

namespace fs = std::filesystem;
using namespace qzanneal;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::vector<Problem> training_pool(const ExperimentConfig& cfg) {
  if (!cfg.train_instances) throw InvalidArgument("this experiment needs a train_instances section");
  return resolve_instances(*cfg.train_instances, cfg.seed);
}

nlohmann::json mean_by_optimizer(const ResultTable& t) {
  std::map<std::string, std::vector<double>> succ, en, q;
  for (const auto& r : t.rows) {
    succ[r.optimizer].push_back(r.success.value_or(0.0));
    en[r.optimizer].push_back(r.energy);
    q[r.optimizer].push_back(static_cast<double>(r.queries));
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : succ)
    out[k] = {{"mean_success", detail::mean_of(v)},
              {"median_success", median(v)},
              {"mean_energy", detail::mean_of(en[k])},
              {"mean_queries", detail::mean_of(q[k])},
              {"rows", v.size()}};
  return out;
}

// Writes the common files and returns the number of failed cells.
int emit_table(const fs::path& dir, const std::string& experiment, const ResultTable& t, nlohmann::json summary) {
  write_file(dir / "results.csv", t.to_csv());
  write_file(dir / "timing.csv", t.timing_csv());
  write_file(dir / "cells.jsonl", t.to_jsonl());
  summary["experiment"] = experiment;
  summary["by_optimizer"] = mean_by_optimizer(t);
  summary["failed_cells"] = t.failures.size();
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  for (const auto& f : t.failures) std::cerr << "failed cell " << f.cell << ": " << f.message << '\n';
  return static_cast<int>(t.failures.size());
}

// --------------------------------------------------------- plot scripts

const char* kPlotHeader = R"py(# Generated by qzanneal. Run from this directory: python3 %s
import json
import pandas as pd
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

df = pd.read_csv("results.csv")
)py";

std::string plot_script(const std::string& name, const std::string& body) {
  std::string head = kPlotHeader;
  head.replace(head.find("%s"), 2, name);
  return head + body;
}

const char* kSweepPlot = R"py(
fig, ax = plt.subplots(figsize=(6, 4))
for opt, g in df.groupby("optimizer"):
    m = g.groupby("T")["success"].mean()
    ax.plot(m.index, m.values, marker="o", label=opt)
ax.set_xlabel("annealing time T")
ax.set_ylabel("mean success probability")
ax.legend()
fig.tight_layout()
fig.savefig("sweep.png", dpi=150)
)py";

const char* kComparePlot = R"py(
fig, ax = plt.subplots(figsize=(6, 4))
opts = [o for o in ["mcts", "sd", "sd_mean"] if o in set(df.optimizer)]
for i, T in enumerate(sorted(df["T"].unique())):
    sub = df[df["T"] == T]
    data = [sub[sub.optimizer == o]["success"].dropna() for o in opts]
    pos = [i * (len(opts) + 1) + k for k in range(len(opts))]
    ax.boxplot(data, positions=pos, widths=0.8)
ax.set_xticks([i * (len(opts) + 1) + (len(opts) - 1) / 2 for i in range(df["T"].nunique())])
ax.set_xticklabels([str(t) for t in sorted(df["T"].unique())])
ax.set_xlabel("T (boxes: " + ", ".join(opts) + ")")
ax.set_ylabel("best success probability")
fig.tight_layout()
fig.savefig("compare.png", dpi=150)
)py";

const char* kTransferPlot = R"py(
fig, ax = plt.subplots(figsize=(6, 4))
for opt, g in df.groupby("optimizer"):
    ax.hist(g["success"].dropna(), bins=20, range=(0, 1), alpha=0.5, label=opt)
ax.set_xlabel("success probability on test instances")
ax.set_ylabel("count")
ax.legend()
fig.tight_layout()
fig.savefig("transfer.png", dpi=150)
)py";

const char* kEfficiencyPlot = R"py(
curves = [json.loads(l) for l in open("curves.jsonl")]
fig, ax = plt.subplots(figsize=(6, 4))
colors = {}
for c in curves:
    pts = c["points"]
    if not pts:
        continue
    q = [p[0] for p in pts]
    e = [p[1] for p in pts]
    col = colors.setdefault(c["method"], "C%d" % len(colors))
    ax.step(q, e, where="post", color=col, alpha=0.4,
            label=c["method"] if c["seed_index"] == 0 and c["instance"] == curves[0]["instance"] else None)
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("queries")
ax.set_ylabel("best energy so far")
ax.legend()
fig.tight_layout()
fig.savefig("efficiency.png", dpi=150)
)py";

const char* kDiagnosePlot = R"py(
gaps = pd.read_csv("gaps.csv")
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
axes[0].hist(gaps["s_at_min_gap"], bins=20, range=(0, 1))
axes[0].set_xlabel("s at minimum gap")
axes[0].set_ylabel("instances")
import glob, os
for path in sorted(glob.glob("traces/*.csv"))[:9]:
    t = pd.read_csv(path)
    axes[1].plot(t["t"], t["energy"] - t["E0"], label=os.path.basename(path)[:-4])
axes[1].set_xlabel("t")
axes[1].set_ylabel("E(t) - E0(t)")
axes[1].legend(fontsize=6)
fig.tight_layout()
fig.savefig("diagnose.png", dpi=150)
)py";

const char* kDigitizePlot = R"py(
d = pd.read_csv("digitization.csv")
fig, ax = plt.subplots(figsize=(6, 4))
ax.loglog(d["K"], d["error"].clip(lower=1e-16), marker="o")
ax.set_xlabel("slices K")
ax.set_ylabel("|E_digitized - E_continuous|")
fig.tight_layout()
fig.savefig("digitize.png", dpi=150)
)py";

// ---------------------------------------------------------- subcommands

int cmd_gen(const ExperimentConfig& cfg, const fs::path& dir) {
  std::ostringstream index;
  index << "id,seed,n,m,solution\n";
  auto dump = [&](const std::vector<Problem>& pool) {
    for (const auto& p : pool) {
      std::optional<std::uint64_t> sol;
      if (p.solution.satisfiable && p.solution.solutions.size() == 1) sol = p.solution.solutions.front();
      write_file(dir / "instances" / (p.id + ".cnf"), emit_dimacs(p.instance, "qzanneal " + p.id));
      write_file(dir / "instances" / (p.id + ".json"), instance_to_json({p.instance, p.seed, sol}).dump(2) + "\n");
      index << p.id << ',' << (p.seed ? std::to_string(*p.seed) : "") << ',' << p.instance.num_vars() << ','
            << p.instance.num_clauses() << ',' << (sol ? bitstring(*sol, p.instance.num_vars()) : "") << '\n';
    }
  };
  dump(resolve_instances(cfg.instances, cfg.seed));
  if (cfg.train_instances) dump(training_pool(cfg));
  write_file(dir / "instances.csv", index.str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& dir, bool compare) {
  const auto pool = resolve_instances(cfg.instances, cfg.seed);
  const auto table = compare ? run_compare(cfg, pool) : run_sweep(cfg, pool);
  const std::string name = compare ? "compare" : "sweep";
  write_file(dir / ("plot_" + name + ".py"), plot_script("plot_" + name + ".py", compare ? kComparePlot : kSweepPlot));
  return emit_table(dir, name, table, {{"T", cfg.T}, {"instances", pool.size()}});
}

int cmd_transfer(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto train = training_pool(cfg);
  const auto test = resolve_instances(cfg.instances, cfg.seed);
  const auto rep = run_transfer(cfg, train, test, true);
  write_file(dir / "plot_transfer.py", plot_script("plot_transfer.py", kTransferPlot));
  nlohmann::json s = {{"T", cfg.T.front()},
                      {"single_x", rep.single_x.x},
                      {"average_x", rep.average_x.x},
                      {"single_train_objective", rep.single_train_objective},
                      {"average_train_objective", rep.average_train_objective},
                      {"mean_success", rep.mean_success}};
  return emit_table(dir, "transfer", rep.table, s);
}

int cmd_efficiency(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto train = training_pool(cfg);
  const auto test = resolve_instances(cfg.instances, cfg.seed);
  const auto rep = run_efficiency(cfg, train, test);
  std::ostringstream curves;
  for (const auto& c : rep.curves) curves << to_json(c).dump() << '\n';
  write_file(dir / "curves.jsonl", curves.str());
  write_file(dir / "plot_efficiency.py", plot_script("plot_efficiency.py", kEfficiencyPlot));
  nlohmann::json med = nlohmann::json::object();
  for (const auto& [k, v] : rep.median_queries_to_win)
    med[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf");
  return emit_table(dir, "efficiency", rep.table,
                    {{"T", cfg.T.front()}, {"median_queries_to_win", med}, {"wins", rep.wins}});
}

int cmd_diagnose(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto pool = resolve_instances(cfg.instances, cfg.seed);
  std::optional<std::vector<Problem>> train;
  if (cfg.train_instances) train = training_pool(cfg);
  const auto rep = run_diagnostics(cfg, pool, train ? &*train : nullptr, true);
  std::ostringstream gaps;
  gaps.precision(17);
  gaps << "instance,min_gap,s_at_min_gap\n";
  for (const auto& g : rep.gaps) gaps << g.instance << ',' << g.min_gap << ',' << g.s_at_min_gap << '\n';
  write_file(dir / "gaps.csv", gaps.str());
  for (const auto& t : rep.traces)
    write_file(dir / "traces" / (t.instance + "_" + t.schedule + ".csv"), t.trace.to_csv());
  write_file(dir / "plot_diagnose.py", plot_script("plot_diagnose.py", kDiagnosePlot));
  return emit_table(dir, "diagnose", rep.table,
                    {{"T", cfg.T.front()},
                     {"median_gap_location", rep.median_gap_location},
                     {"qzero_peak_excess_not_above_sd", rep.qzero_beats_sd},
                     {"compared", rep.compared}});
}

int cmd_digitize(const ExperimentConfig& cfg, const fs::path& dir) {
  auto pool = resolve_instances(cfg.instances, cfg.seed);
  if (pool.empty()) throw InvalidArgument("digitize needs at least one instance");
  const auto& p = pool.front();
  const double T = cfg.T.front();
  const Schedule sched(cfg.schedule.value_or(linear_params(cfg.grid.size())), T, cfg.anneal.clamp);
  const auto study = digitization_study(p.h, sched, cfg.digitize_K);
  std::ostringstream csv;
  csv.precision(17);
  csv << "K,energy,error,norm_drift\n";
  for (const auto& pt : study.points) {
    csv << pt.K << ',' << pt.energy << ',' << pt.error << ',' << pt.norm_drift << '\n';
    write_file(dir / "qaoa" / ("K" + std::to_string(pt.K) + ".json"),
               export_qaoa(digitize(sched, pt.K)).dump(2) + "\n");
  }
  write_file(dir / "digitization.csv", csv.str());
  write_file(dir / "plot_digitize.py", "# Generated by qzanneal. Run from this directory: python3 plot_digitize.py\n"
                                       "import pandas as pd\nimport matplotlib\nmatplotlib.use(\"Agg\")\n"
                                       "import matplotlib.pyplot as plt\n" +
                                           std::string(kDigitizePlot));
  nlohmann::json s = {{"experiment", "digitize"},
                      {"instance", p.id},
                      {"T", T},
                      {"schedule_hash", hash_hex(schedule_hash(sched))},
                      {"continuous_energy", study.continuous_energy},
                      {"failed_cells", 0}};
  write_file(dir / "summary.json", s.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Annealing-schedule search toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_override;
  int threads = 0;

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"gen", "Generate instances as DIMACS and JSON"},
      {"sweep", "Linear, MCTS and SD success versus T"},
      {"compare", "MCTS versus SD at matched query budgets"},
      {"transfer", "Schedules transferred from a training pool to test instances"},
      {"efficiency", "Queries-to-win for MCTS and QZero with and without pre-training"},
      {"diagnose", "Minimum-gap survey and excess-energy traces"},
      {"digitize", "Digitization error and QAOA parameter export"}};
  for (const auto& [name, help] : subs) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out_override, "Output directory (overrides output_dir)");
    sub->add_option("-j,--threads", threads, "Worker threads (overrides threads)")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    auto cfg = load_config(config_path);
    if (threads > 0) cfg.threads = static_cast<unsigned>(threads);
    const fs::path dir = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
    fs::create_directories(dir);
    int failed = 0;
    if (cmd == "gen") failed = cmd_gen(cfg, dir);
    else if (cmd == "sweep") failed = cmd_sweep(cfg, dir, false);
    else if (cmd == "compare") failed = cmd_sweep(cfg, dir, true);
    else if (cmd == "transfer") failed = cmd_transfer(cfg, dir);
    else if (cmd == "efficiency") failed = cmd_efficiency(cfg, dir);
    else if (cmd == "diagnose") failed = cmd_diagnose(cfg, dir);
    else if (cmd == "digitize") failed = cmd_digitize(cfg, dir);
    std::cout << cmd << ": wrote " << dir.string() << (failed ? ", " + std::to_string(failed) + " failed cells" : "")
              << '\n';
    return failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "qzanneal " << cmd << ": " << e.what() << '\n';
    return 2;
  }
}
