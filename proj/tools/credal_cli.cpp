// credal: experiment runner and certificate tool.
//
//   credal <experiment> --config <file> --out <dir> [--seed N] [--preset paper|desk]
//                       [--delta D] [--jobs K]
//   credal certificate --annotations <file> [--delta D] [--regime R] [--eps-star E]
//   credal generate --out <file> [--n N] [--mean M] [--std S] [--labeler kind]
//                   [--params a b ...] [--kappa K] [--noise E] [--kind hard|soft] [--seed N]
//   credal show-config <experiment> [--preset paper|desk]

#include <iostream>

#include "CLI11.hpp"

#include "credal/annotations.hpp"
#include "credal/estimation.hpp"
#include "credal/harness.hpp"
#include "credal/parallel.hpp"
#include "credal/synthgen.hpp"

namespace h = credal::harness;

namespace {

enum Exit { ok = 0, failure = 1, bad_config = 2, numerical = 3 };

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  std::optional<double> delta;
  std::optional<int> jobs;
  // certificate shortcut
  std::string annotations;
  std::string regime;
  std::optional<double> eps_star;
};

void add_run_options(CLI::App* sub, RunArgs& a) {
  sub->add_option("--config", a.config, "Experiment config (JSON, schema_version required)");
  sub->add_option("--out", a.out, "Output directory");
  sub->add_option("--seed", a.seed, "Master seed (overrides the config)");
  sub->add_option("--preset", a.preset, "Preset defaults")->check(CLI::IsMember({"paper", "desk"}));
  sub->add_option("--delta", a.delta, "Failure probability for concentration radii")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--jobs", a.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

int run_experiment(const std::string& name, const RunArgs& a) {
  if (a.config.empty() || a.out.empty()) {
    std::cerr << "credal " << name << ": --config and --out are required\n";
    return bad_config;
  }
  if (a.jobs) credal::set_threads(*a.jobs);
  const auto cfg = h::resolve_config(name, h::load_json_file(a.config), {a.seed, a.preset, a.delta});
  std::cerr << "credal " << name << ": preset=" << cfg.preset << " seed=" << cfg.seed << " hash=" << cfg.hash()
            << " threads=" << credal::max_threads() << '\n';
  return h::run_and_write(cfg, a.out);
}

int run_certificate_file(const RunArgs& a) {
  const auto table = credal::read_annotations_file(a.annotations);
  const auto m = credal::empirical_disagreement(table);
  credal::Regime regime = table.kind() == credal::LabelKind::soft ? credal::Regime::exact_soft
                                                                   : credal::Regime::conservative_stochastic_hard;
  if (!a.regime.empty()) regime = credal::regime_from_string(a.regime);
  const auto c = credal::certificate(m, a.delta.value_or(0.05), regime, a.eps_star);
  std::cout << h::certificate_json(c, m).dump(2) << '\n';
  return ok;
}

struct GenArgs {
  std::string out;
  std::size_t n = 1000;
  double mean = 0.0;
  double std = 1.0;
  std::string labeler = "threshold";
  std::vector<double> params{-1.0, 1.0};
  double kappa = 1.0;
  double noise = 0.0;
  std::string kind = "hard";
  std::uint64_t seed = 1;
};

int run_generate(const GenArgs& g) {
  std::vector<credal::Labeler> labs;
  for (double t : g.params) {
    if (g.labeler == "threshold") labs.push_back(credal::Labeler::threshold(t));
    else if (g.labeler == "probit") labs.push_back(credal::Labeler::probit(g.kappa, -g.kappa * t));
    else labs.push_back(credal::Labeler::sigmoid(g.kappa, -g.kappa * t));
    if (g.noise > 0.0) labs.back() = credal::Labeler::noisy(labs.back(), g.noise);
  }
  const auto kind = g.kind == "soft" ? credal::LabelKind::soft : credal::LabelKind::hard;
  const auto t = credal::sample_annotated(credal::Environment::gaussian(g.mean, g.std), labs, g.n, kind,
                                          credal::GenSeed{g.seed, 0});
  credal::write_annotations_file(g.out, t);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured credal sets: diameters, certificates and min-max learning"};
  app.require_subcommand(1);

  std::map<std::string, RunArgs> run_args;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : h::experiment_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    add_run_options(sub, run_args[name]);
    subs[name] = sub;
  }
  auto& cert = run_args["certificate"];
  subs["certificate"]->add_option("--annotations", cert.annotations, "Annotation file; prints the certificate as JSON");
  subs["certificate"]->add_option("--regime", cert.regime, "Override the regime tag");
  subs["certificate"]->add_option("--eps-star", cert.eps_star, "Statistical error term to add to the bound");

  GenArgs gen;
  auto* gsub = app.add_subcommand("generate", "Write a synthetic annotation file");
  gsub->add_option("--out", gen.out, "Output file")->required();
  gsub->add_option("--n", gen.n, "Samples")->check(CLI::PositiveNumber);
  gsub->add_option("--mean", gen.mean, "Gaussian environment mean");
  gsub->add_option("--std", gen.std, "Gaussian environment std")->check(CLI::PositiveNumber);
  gsub->add_option("--labeler", gen.labeler, "Labeler family")->check(CLI::IsMember({"threshold", "probit", "sigmoid"}));
  gsub->add_option("--params", gen.params, "Labeler locations")->delimiter(',');
  gsub->add_option("--kappa", gen.kappa, "Slope for probit/sigmoid labelers");
  gsub->add_option("--noise", gen.noise, "Symmetric flip rate for threshold labelers")->check(CLI::Range(0.0, 0.5));
  gsub->add_option("--kind", gen.kind, "Label kind")->check(CLI::IsMember({"hard", "soft"}));
  gsub->add_option("--seed", gen.seed, "Seed");

  std::string show_name, show_preset = "desk";
  auto* show = app.add_subcommand("show-config", "Print the preset config for an experiment");
  show->add_option("experiment", show_name, "Experiment name")->required()->check(CLI::IsMember(h::experiment_names()));
  show->add_option("--preset", show_preset, "Preset")->check(CLI::IsMember({"paper", "desk"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gsub) return run_generate(gen);
    if (*show) {
      std::cout << h::preset_document(show_name, show_preset).dump(2) << '\n';
      return ok;
    }
    for (const auto& [name, sub] : subs) {
      if (!*sub) continue;
      const auto& a = run_args[name];
      if (name == "certificate" && !a.annotations.empty()) return run_certificate_file(a);
      return run_experiment(name, a);
    }
  } catch (const h::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return bad_config;
  } catch (const h::ReplicationError& ex) {
    std::cerr << "numerical failure in group '" << ex.group() << "', replication " << ex.replication() << ": "
              << ex.what() << '\n';
    return numerical;
  } catch (const credal::QuadratureError& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return numerical;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return failure;
  }
  return failure;
}
