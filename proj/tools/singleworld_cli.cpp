#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "singleworld/cli.hpp"

namespace cli = singleworld::cli;

int main(int argc, char** argv) {
  CLI::App app{"Single-world intervention graphs and regime kernels over finite models"};
  app.require_subcommand(1);

  cli::SplitOptions split;
  auto* s = app.add_subcommand("split", "Split a graph into its SWIG");
  s->add_option("--graph", split.graph, "graph file")->required();
  s->add_option("--assign", split.assign, "fixed values, e.g. X0=0,X1=1");
  s->add_option("--labeling", split.labeling, "uniform, temporal or ancestral")
      ->check(CLI::IsMember({"uniform", "temporal", "ancestral"}));
  s->add_option("--format", split.format, "dot or json")->check(CLI::IsMember({"dot", "json"}));

  cli::DsepOptions dsep;
  auto* d = app.add_subcommand("dsep", "d-separation query in the SWIG (fixed nodes as fixed:X)");
  d->add_option("--graph", dsep.graph, "graph file")->required();
  d->add_option("--assign", dsep.assign, "fixed values");
  d->add_option("--x", dsep.x, "comma-separated nodes")->required();
  d->add_option("--y", dsep.y, "comma-separated nodes")->required();
  d->add_option("--z", dsep.z, "comma-separated conditioning nodes");

  cli::MarkovOptions markov;
  auto* m = app.add_subcommand("markov", "List the local Markov statements of a graph");
  m->add_option("--graph", markov.graph, "graph file")->required();
  m->add_option("--side", markov.side, "swig or augmented")->check(CLI::IsMember({"swig", "augmented"}));
  m->add_option("--format", markov.format, "table or json")->check(CLI::IsMember({"table", "json"}));

  cli::CheckOptions check;
  auto* c = app.add_subcommand("check", "Check a family or kernel file");
  auto* fam = c->add_option("--family", check.family, "family file");
  auto* ker = c->add_option("--kernel", check.kernel, "kernel file");
  fam->excludes(ker);
  c->add_option("--mode", check.mode, "which check to run")
      ->check(CLI::IsMember({"consistency", "swig-markov", "augmented-markov", "observed-markov", "complete-graph",
                             "dawid-ab", "all"}));
  c->add_option("--natural", check.natural, "natural-value column (dawid-ab)");
  c->add_option("--applied", check.applied, "applied-treatment column (dawid-ab)");
  c->add_option("--outcome", check.outcome, "outcome columns (dawid-ab)");

  cli::GformulaOptions gf;
  auto* g = app.add_subcommand("gformula", "Interventional distribution by the extended g-formula");
  g->add_option("--graph", gf.graph, "graph file")->required();
  g->add_option("--dist", gf.dist, "observed distribution file")->required();
  g->add_option("--intervene", gf.intervene, "e.g. X0=0");
  g->add_option("--out", gf.out, "write the distribution here");

  std::string demo;
  auto* dm = app.add_subcommand("demo", "Run a bundled construction");
  dm->add_option("name", demo, "intersection, frontdoor or move-to-idle")
      ->required()
      ->check(CLI::IsMember({"intersection", "frontdoor", "move-to-idle"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cli::CommandResult result;
  if (s->parsed()) result = cli::cmd_split(split);
  if (d->parsed()) result = cli::cmd_dsep(dsep);
  if (m->parsed()) result = cli::cmd_markov(markov);
  if (c->parsed()) result = cli::cmd_check(check);
  if (g->parsed()) result = cli::cmd_gformula(gf);
  if (dm->parsed()) result = cli::cmd_demo(demo);

  std::cout << result.output;
  if (result.verdict == cli::Verdict::error) std::cerr << "singleworld: " << result.message << "\n";
  return result.exit_code();
}
