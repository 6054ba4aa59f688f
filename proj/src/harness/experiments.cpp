#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>

#include "credal/dro.hpp"
#include "credal/estimation.hpp"
#include "credal/harness.hpp"
#include "credal/kernels.hpp"
#include "credal/synthgen.hpp"

namespace credal::harness {
namespace {

using Metrics = std::vector<std::pair<std::string, double>>;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream for replication `rep` of `group`; independent of group order.
GenSeed rep_seed(const ExperimentConfig& cfg, const std::string& group, std::int64_t rep) {
  return GenSeed{cfg.seed, fnv1a(group)}.child(static_cast<std::uint64_t>(rep));
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string env_label(const Environment& e) {
  const auto& g = e.as_gaussian();
  return "N(" + num(g.mean) + ";" + num(g.std) + ")";
}

Environment env_from(const json& j) { return Environment::gaussian(j.at("mean").get<double>(), j.at("std").get<double>()); }

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("grid sizes must be at least 1");
  if (n == 1) return {0.5 * (lo + hi)};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return out;
}

/// Runs `fn(group_index, replication, seed)` for every (group, replication)
/// and returns rows in canonical order. Failures report the first failing
/// coordinates in that order, whatever the schedule.
template <class Fn>
std::vector<ResultRow> replicate(const ExperimentConfig& cfg, const std::vector<std::string>& groups,
                                 std::int64_t reps, Fn&& fn) {
  const std::string hash = cfg.hash();
  const auto total = static_cast<std::int64_t>(groups.size()) * reps;
  std::vector<ResultRow> rows(static_cast<std::size_t>(total));
  std::mutex mu;
  std::int64_t fail_at = total;
  std::string fail_msg;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t t = 0; t < total; ++t) {
    const auto g = static_cast<std::size_t>(t / reps);
    const std::int64_t r = t % reps;
    try {
      ResultRow row;
      row.experiment = cfg.experiment;
      row.config_hash = hash;
      row.group = groups[g];
      row.group_index = g;
      row.replication = r;
      row.seed = cfg.seed;
      row.metrics = fn(g, r, rep_seed(cfg, groups[g], r));
      rows[static_cast<std::size_t>(t)] = std::move(row);
    } catch (const std::exception& ex) {
      std::lock_guard<std::mutex> lock(mu);
      if (t < fail_at) {
        fail_at = t;
        fail_msg = ex.what();
      }
    }
  }
  if (fail_at < total) {
    const auto g = static_cast<std::size_t>(fail_at / reps);
    throw ReplicationError(fail_msg, groups[g], fail_at % reps);
  }
  return rows;
}

/// Groups rows by name preserving emission order.
std::vector<std::pair<std::string, std::vector<const ResultRow*>>> by_group(const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::string, std::vector<const ResultRow*>>> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, fresh] = index.try_emplace(r.group, out.size());
    if (fresh) out.push_back({r.group, {}});
    out[it->second].second.push_back(&r);
  }
  return out;
}

std::vector<double> column(const std::vector<const ResultRow*>& rows, const std::string& name) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto* r : rows)
    if (const auto m = r->metric(name)) v.push_back(*m);
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sorted_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, q);
}

/// Table columns for a concentration study: quantiles of the absolute
/// error, the union Hoeffding radius, violation rate with Wilson interval
/// and the tightness ratio eps / q95.
json concentration_columns(const std::vector<const ResultRow*>& rows) {
  const auto err = column(rows, "abs_err");
  const auto viol = column(rows, "violation");
  const auto eps = column(rows, "eps_hoeff");
  const auto k = static_cast<std::size_t>(std::count(viol.begin(), viol.end(), 1.0));
  const auto [lo, hi] = wilson_interval(k, viol.size());
  const double q95 = sorted_quantile(err, 0.95);
  return {{"replications", err.size()},
          {"q50_err", sorted_quantile(err, 0.5)},
          {"q95_err", q95},
          {"eps_hoeff", eps.front()},
          {"p_viol", static_cast<double>(k) / static_cast<double>(viol.size())},
          {"wilson_low", lo},
          {"wilson_high", hi},
          {"tightness_ratio", q95 > 0.0 ? eps.front() / q95 : std::numeric_limits<double>::infinity()},
          {"mean_eta_hat", mean_of(column(rows, "eta_hat"))},
          {"eta_true", column(rows, "eta_true").front()}};
}

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

double pairwise_eta_star(const Environment& env, const std::vector<Labeler>& labs, const QuadratureConfig& q) {
  double best = 0.0;
  for (std::size_t j = 0; j < labs.size(); ++j)
    for (std::size_t l = j + 1; l < labs.size(); ++l)
      best = std::max(best, expected_conditional_tv(env, labs[j], labs[l], q));
  return best;
}

/// Labelers named by kind: threshold -> 1(x > t); probit -> Phi(kappa (x - t));
/// sigmoid -> logistic(kappa (x - t)).
std::vector<Labeler> make_labelers(const std::string& kind, const std::vector<double>& ts, double kappa) {
  std::vector<Labeler> out;
  for (double t : ts) {
    if (kind == "threshold") out.push_back(Labeler::threshold(t));
    else if (kind == "probit") out.push_back(Labeler::probit(kappa, -kappa * t));
    else if (kind == "sigmoid") out.push_back(Labeler::sigmoid(kappa, -kappa * t));
    else throw ConfigError("labeler: expected threshold, probit or sigmoid, got '" + kind + "'");
  }
  if (out.size() < 2) throw ConfigError("labeler_params: need at least two labelers");
  return out;
}

// ------------------------------------------------------------ experiments

RunOutput gating_curve(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto centers = linspace(p["center_lo"], p["center_hi"], p["points"]);
  const double sd = p["window_std"], shift = p["shift"], slope = p["slope"];
  const auto ts = p["thresholds"].get<std::vector<double>>();
  if (ts.size() != 2) throw ConfigError("params.thresholds: expected exactly two values");
  const auto l1 = Labeler::sigmoid(slope, -slope * ts[0]);
  const auto l2 = Labeler::sigmoid(slope, -slope * ts[1]);
  const double tol = 2.0 * cfg.quad.abs_tol;

  RunOutput out;
  out.rows = replicate(cfg, {"gating"}, static_cast<std::int64_t>(centers.size()),
                       [&](std::size_t, std::int64_t r, GenSeed) {
                         const double c = centers[static_cast<std::size_t>(r)];
                         const CredalSpec spec({Environment::gaussian(c - shift / 2, sd),
                                                Environment::gaussian(c + shift / 2, sd)},
                                               {l1, l2});
                         const auto b = pairwise_bounds(spec, {0, 0}, {1, 1}, cfg.quad, true);
                         return Metrics{{"center", c},
                                        {"mean_a", c - shift / 2},
                                        {"mean_b", c + shift / 2},
                                        {"cov_tv", b.cov_dist},
                                        {"exp_dis_a", b.exp_dis_a},
                                        {"exp_dis_b", b.exp_dis_b},
                                        {"label_tv_at_center", conditional_tv(l1, l2, c)},
                                        {"joint_tv", *b.exact},
                                        {"lower", b.lower},
                                        {"upper", b.upper},
                                        {"upper_dominates", b.upper + tol >= *b.exact ? 1.0 : 0.0}};
                       });
  const auto g = by_group(out.rows);
  const auto cov = column(g[0].second, "cov_tv");
  const auto joint = column(g[0].second, "joint_tv");
  const auto dom = column(g[0].second, "upper_dominates");
  const auto peak = static_cast<std::size_t>(std::max_element(joint.begin(), joint.end()) - joint.begin());
  out.derived = {{"cov_tv_min", *std::min_element(cov.begin(), cov.end())},
                 {"cov_tv_max", *std::max_element(cov.begin(), cov.end())},
                 {"joint_tv_peak", joint[peak]},
                 {"joint_tv_peak_center", centers[peak]},
                 {"upper_dominates_everywhere", std::all_of(dom.begin(), dom.end(), [](double v) { return v == 1.0; })}};
  return out;
}

RunOutput bounds_sweep(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  std::vector<Environment> envs;
  for (double m : linspace(p["grid_lo"], p["grid_hi"], p["grid_envs"]))
    envs.push_back(Environment::gaussian(m, p["grid_std"]));
  auto rng = GenSeed{cfg.seed, fnv1a("random_envs")}.engine();
  const int n_random = p["random_envs"];
  json random_envs = json::array();
  for (int k = 0; k < n_random; ++k) {
    const double m = p["random_mean_lo"].get<double>() +
                     (p["random_mean_hi"].get<double>() - p["random_mean_lo"].get<double>()) * draw_unit(rng);
    const double s = p["random_std_lo"].get<double>() +
                     (p["random_std_hi"].get<double>() - p["random_std_lo"].get<double>()) * draw_unit(rng);
    envs.push_back(Environment::gaussian(m, s));
    random_envs.push_back({{"mean", m}, {"std", s}});
  }
  const auto ts = linspace(p["labeler_lo"], p["labeler_hi"], p["labelers"]);
  const double slope = p["slope"];
  const double tol = 2.0 * cfg.quad.abs_tol;
  static const char* kClasses[] = {"joint_shift", "fixed_covariate", "fixed_labeler", "identical"};

  RunOutput out;
  const std::string hash = cfg.hash();
  json per_family = json::object();
  std::size_t family_index = 0;
  for (const auto& fam_j : p["families"]) {
    const std::string fam = fam_j.get<std::string>();
    std::vector<Labeler> labs;
    for (double t : ts) {
      if (fam == "soft") labs.push_back(Labeler::sigmoid(slope, -slope * t));
      else if (fam == "hard") labs.push_back(Labeler::threshold(t));
      else throw ConfigError("params.families: expected soft or hard, got '" + fam + "'");
    }
    const CredalSpec spec(envs, labs);
    const auto pairs = spec.distinct_pairs();
    std::vector<double> exact;
    try {
      exact = kernels::joint_tv_pairs(spec, pairs, cfg.quad, Exec::parallel);
    } catch (const std::exception& ex) {
      throw ReplicationError(ex.what(), fam, -1);
    }
    const std::size_t v = spec.vertex_count();
    std::vector<double> ex_mat(v * v, 0.0);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto a = spec.flat(pairs[k].a), b = spec.flat(pairs[k].b);
      ex_mat[a * v + b] = ex_mat[b * v + a] = exact[k];
    }
    std::vector<ResultRow> rows(v * v);
    std::mutex mu;
    std::string fail;
    std::int64_t fail_at = -1;
    const auto vv = static_cast<std::ptrdiff_t>(v * v);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t t = 0; t < vv; ++t) {
      const auto ia = static_cast<std::size_t>(t) / v, ib = static_cast<std::size_t>(t) % v;
      try {
        const auto a = spec.vertex(ia), b = spec.vertex(ib);
        const int cls = ia == ib ? 3 : a.env == b.env ? 1 : a.lab == b.lab ? 2 : 0;
        const auto pb = pairwise_bounds(spec, a, b, cfg.quad, false);
        const double ex = ex_mat[static_cast<std::size_t>(t)];
        ResultRow row;
        row.experiment = cfg.experiment;
        row.config_hash = hash;
        row.group = fam + "/" + kClasses[cls];
        row.group_index = family_index * 4 + static_cast<std::size_t>(cls);
        row.replication = t;
        row.seed = cfg.seed;
        const bool viol = ex < pb.lower - tol || ex > pb.upper + tol;
        // Upper bound before clamping to 1.
        const double upper_raw = cls == 0 ? pb.cov_dist + std::min(pb.exp_dis_a, pb.exp_dis_b) : pb.upper;
        row.metrics = {{"env_a", static_cast<double>(a.env)}, {"lab_a", static_cast<double>(a.lab)},
                       {"env_b", static_cast<double>(b.env)}, {"lab_b", static_cast<double>(b.lab)},
                       {"exact", ex},                         {"lower", pb.lower},
                       {"upper", pb.upper},                   {"gap_low", ex - pb.lower},
                       {"gap_up", pb.upper - ex},             {"upper_raw", upper_raw},
                       {"gap_up_raw", upper_raw - ex},        {"violation", viol ? 1.0 : 0.0}};
        rows[static_cast<std::size_t>(t)] = std::move(row);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(mu);
        if (fail_at < 0 || t < fail_at) {
          fail_at = t;
          fail = ex.what();
        }
      }
    }
    if (fail_at >= 0) throw ReplicationError(fail, fam, fail_at);

    json classes = json::object();
    for (int c = 0; c < 4; ++c) {
      std::vector<const ResultRow*> sel;
      for (const auto& r : rows)
        if (r.group_index == family_index * 4 + static_cast<std::size_t>(c)) sel.push_back(&r);
      if (sel.empty()) continue;
      const auto lo = column(sel, "gap_low"), up = column(sel, "gap_up"), vi = column(sel, "violation");
      const auto up_raw = column(sel, "gap_up_raw");
      const double nv = std::count(vi.begin(), vi.end(), 1.0);
      classes[kClasses[c]] = {{"pairs", sel.size()},
                              {"gap_low_mean", mean_of(lo)},
                              {"gap_low_min", *std::min_element(lo.begin(), lo.end())},
                              {"gap_low_max", *std::max_element(lo.begin(), lo.end())},
                              {"gap_up_mean", mean_of(up)},
                              {"gap_up_min", *std::min_element(up.begin(), up.end())},
                              {"gap_up_max", *std::max_element(up.begin(), up.end())},
                              {"gap_up_raw_mean", mean_of(up_raw)},
                              {"gap_up_raw_max", *std::max_element(up_raw.begin(), up_raw.end())},
                              {"violations", nv},
                              {"coverage", 1.0 - nv / static_cast<double>(sel.size())}};
    }
    per_family[fam] = classes;
    out.rows.insert(out.rows.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
    ++family_index;
  }
  std::size_t total_viol = 0;
  for (const auto& r : out.rows) total_viol += r.metric("violation").value_or(0.0) == 1.0;
  out.derived = {{"families", per_family}, {"ordered_pairs", out.rows.size()}, {"violations", total_viol},
                 {"tolerance", tol}};
  out.metadata = {{"random_envs", random_envs},
                  {"note", "random environment parameters are drawn from seeded uniform ranges; "
                           "results for them are config-sensitive"}};
  return out;
}

RunOutput diameter_ablation(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const int n_env = p["environments"];
  const auto n = p["n"].get<std::size_t>();
  const auto ts = p["thresholds"].get<std::vector<double>>();
  auto rng = GenSeed{cfg.seed, fnv1a("environments")}.engine();
  std::vector<Environment> envs;
  for (int e = 0; e < n_env; ++e) {
    const double m = p["mean_lo"].get<double>() + (p["mean_hi"].get<double>() - p["mean_lo"].get<double>()) * draw_unit(rng);
    const double s = p["std_lo"].get<double>() + (p["std_hi"].get<double>() - p["std_lo"].get<double>()) * draw_unit(rng);
    envs.push_back(Environment::gaussian(m, s));
  }
  struct Group {
    std::string name;
    std::vector<Labeler> labs;
    LabelKind kind;
    std::vector<double> eta;  // per environment
  };
  std::vector<Group> groups;
  for (const auto& f : p["families"]) {
    if (f == "threshold") {
      groups.push_back({"threshold", make_labelers("threshold", ts, 1.0), LabelKind::hard, {}});
    } else if (f == "probit") {
      for (double k : p["kappas"].get<std::vector<double>>())
        groups.push_back({"probit_kappa=" + num(k), make_labelers("probit", ts, k), LabelKind::soft, {}});
    } else {
      throw ConfigError("params.families: expected threshold or probit");
    }
  }
  std::vector<std::string> names;
  for (auto& g : groups) {
    for (const auto& e : envs) g.eta.push_back(pairwise_eta_star(e, g.labs, cfg.quad));
    names.push_back(g.name);
  }
  const std::int64_t reps = cfg.replications;
  RunOutput out;
  out.rows = replicate(cfg, names, static_cast<std::int64_t>(n_env) * reps,
                       [&](std::size_t gi, std::int64_t r, GenSeed seed) {
                         const auto& g = groups[gi];
                         const auto e = static_cast<std::size_t>(r / reps);
                         const auto t = sample_annotated(envs[e], g.labs, n, g.kind, seed);
                         const double hat = empirical_disagreement(t, Exec::serial).eta_hat;
                         const double gap = hat - g.eta[e];
                         return Metrics{{"environment", static_cast<double>(e)},
                                        {"eta_true", g.eta[e]},
                                        {"eta_hat", hat},
                                        {"gap", gap},
                                        {"abs_gap", std::abs(gap)},
                                        {"sq_gap", gap * gap}};
                       });
  json derived = json::object();
  for (const auto& [name, rows] : by_group(out.rows)) {
    const auto gap = column(rows, "gap"), abs_gap = column(rows, "abs_gap"), sq = column(rows, "sq_gap");
    derived[name] = {{"mean_abs_gap", mean_of(abs_gap)},
                     {"median_abs_gap", sorted_quantile(abs_gap, 0.5)},
                     {"rmse", std::sqrt(mean_of(sq))},
                     {"mean_signed_gap", mean_of(gap)},
                     {"q90_abs_gap", sorted_quantile(abs_gap, 0.9)},
                     {"q95_abs_gap", sorted_quantile(abs_gap, 0.95)},
                     {"q99_abs_gap", sorted_quantile(abs_gap, 0.99)},
                     {"mean_eta_true", mean_of(column(rows, "eta_true"))},
                     {"mean_eta_hat", mean_of(column(rows, "eta_hat"))}};
  }
  out.derived = derived;
  out.metadata = {{"note", "environment parameter ranges are not stated in the source tables; "
                           "seeded uniform draws, config-sensitive"}};
  return out;
}

RunOutput noise_ablation(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto eps_max = p["eps_max"].get<std::vector<double>>();
  const int k = p["annotators"];
  if (k < 2) throw ConfigError("params.annotators: need at least two");
  const auto n = p["n"].get<std::size_t>();
  const auto env = env_from(p["env"]);
  const auto base = Labeler::threshold(p["base_threshold"].get<double>());
  std::vector<std::string> names;
  for (double e : eps_max) {
    if (!(e >= 0.0 && e <= 0.5)) throw ConfigError("params.eps_max: values must lie in [0, 0.5]");
    names.push_back("eps_max=" + num(e));
  }
  RunOutput out;
  out.rows = replicate(cfg, names, cfg.replications, [&](std::size_t gi, std::int64_t, GenSeed seed) {
    auto rng = seed.child(0).engine();
    std::vector<double> eps(static_cast<std::size_t>(k));
    std::vector<Labeler> labs;
    for (auto& e : eps) {
      e = eps_max[gi] * draw_unit(rng);
      labs.push_back(Labeler::noisy(base, e));
    }
    const auto cf = noisy_closed_form(eps);
    const double em = eps_max[gi];
    const auto t = sample_annotated(env, labs, n, LabelKind::hard, seed.child(1));
    const double hat = empirical_disagreement(t, Exec::serial).eta_hat;
    return Metrics{{"eta_true", cf.eta_star},
                   {"bound", cf.bound},
                   {"bound_nominal", 2.0 * em - 2.0 * em * em},
                   {"eta_hat", hat},
                   {"gap", hat - cf.eta_star},
                   {"abs_gap", std::abs(hat - cf.eta_star)},
                   {"bound_violation", hat > cf.bound ? 1.0 : 0.0},
                   {"slack_to_bound", hat - cf.bound}};
  });
  json derived = json::object();
  for (const auto& [name, rows] : by_group(out.rows)) {
    const auto gap = column(rows, "gap");
    std::vector<double> sq;
    for (double g : gap) sq.push_back(g * g);
    derived[name] = {{"mean_eta_true", mean_of(column(rows, "eta_true"))},
                     {"mean_eta_hat", mean_of(column(rows, "eta_hat"))},
                     {"mean_bound", mean_of(column(rows, "bound"))},
                     {"mean_signed_gap", mean_of(gap)},
                     {"mean_abs_gap", mean_of(column(rows, "abs_gap"))},
                     {"rmse", std::sqrt(mean_of(sq))},
                     {"bound_violation_rate", mean_of(column(rows, "bound_violation"))}};
  }
  out.derived = derived;
  out.metadata = {{"note", "per-annotator flip rates are drawn uniformly from [0, eps_max]; the bound column "
                           "uses the realized maximum, bound_nominal uses eps_max"}};
  return out;
}

RunOutput sample_complexity(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const std::string kind = p["labeler"];
  const auto labs = make_labelers(kind, p["labeler_params"].get<std::vector<double>>(), p["kappa"]);
  const auto lkind = kind == "threshold" ? LabelKind::hard : LabelKind::soft;
  const auto ns = p["n_list"].get<std::vector<std::size_t>>();
  const int k = static_cast<int>(labs.size());
  std::vector<Environment> envs;
  std::vector<double> etas;
  std::vector<std::string> names;
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (const auto& ej : p["environments"]) {
    envs.push_back(env_from(ej));
    etas.push_back(pairwise_eta_star(envs.back(), labs, cfg.quad));
  }
  for (std::size_t e = 0; e < envs.size(); ++e)
    for (std::size_t i = 0; i < ns.size(); ++i) {
      if (ns[i] < 1) throw ConfigError("params.n_list: sample sizes must be positive");
      names.push_back(env_label(envs[e]) + "/n=" + std::to_string(ns[i]));
      coords.emplace_back(e, i);
    }
  RunOutput out;
  out.rows = replicate(cfg, names, cfg.replications, [&](std::size_t gi, std::int64_t, GenSeed seed) {
    const auto [e, i] = coords[gi];
    const auto t = sample_annotated(envs[e], labs, ns[i], lkind, seed);
    const double hat = empirical_disagreement(t, Exec::serial).eta_hat;
    const double eps = hoeffding_epsilon(ns[i], k, cfg.delta);
    const double err = std::abs(hat - etas[e]);
    return Metrics{{"n", static_cast<double>(ns[i])}, {"eta_true", etas[e]}, {"eta_hat", hat},
                   {"abs_err", err},                   {"eps_hoeff", eps},    {"violation", err > eps ? 1.0 : 0.0}};
  });
  json tables = json::object();
  const auto groups = by_group(out.rows);
  for (std::size_t e = 0; e < envs.size(); ++e) {
    json table = json::array();
    std::vector<double> xs, med;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto& rows = groups[e * ns.size() + i].second;
      json row = concentration_columns(rows);
      row["n"] = ns[i];
      xs.push_back(static_cast<double>(ns[i]));
      med.push_back(row["q50_err"]);
      table.push_back(row);
    }
    tables[env_label(envs[e])] = {{"eta_true", etas[e]}, {"rows", table}, {"loglog_slope_median", loglog_slope(xs, med)}};
  }
  out.derived = {{"environments", tables}, {"delta", cfg.delta}, {"labelers", k}};
  return out;
}

RunOutput mechanism_complexity(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto n = p["n"].get<std::size_t>();
  const auto nys = p["n_y_list"].get<std::vector<int>>();
  struct Group {
    std::string method;
    int n_y;
    Environment env;
    MechanismFamily fam;
  };
  std::vector<Group> groups;
  std::vector<std::string> names;
  for (const auto& mj : p["methods"]) {
    const std::string m = mj;
    for (int ny : nys) {
      try {
        if (m == "interval") {
          const auto env = env_from(p["interval_env"]);
          groups.push_back({m, ny, env, interval_mechanisms(ny, env, p["pinned_mass"], p["rest_ratio"])});
        } else if (m == "block") {
          const auto env = env_from(p["block_env"]);
          groups.push_back({m, ny, env,
                            block_mechanisms(ny, env, {p["block_initial"], p["block_log_growth"], p["block_max_mass"]})});
        } else {
          throw ConfigError("params.methods: expected interval or block, got '" + m + "'");
        }
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("mechanism construction failed: ") + ex.what());
      }
      names.push_back(m + "/N_Y=" + std::to_string(ny));
    }
  }
  RunOutput out;
  out.rows = replicate(cfg, names, cfg.replications, [&](std::size_t gi, std::int64_t, GenSeed seed) {
    const auto& g = groups[gi];
    const auto t = sample_annotated(g.env, g.fam.labelers, n, LabelKind::hard, seed);
    const double hat = empirical_disagreement(t, Exec::serial).eta_hat;
    const double eps = hoeffding_epsilon(n, g.n_y, cfg.delta);
    const double err = std::abs(hat - g.fam.implied_eta_star);
    return Metrics{{"n_y", static_cast<double>(g.n_y)}, {"eta_true", g.fam.implied_eta_star}, {"eta_hat", hat},
                   {"abs_err", err}, {"eps_hoeff", eps}, {"violation", err > eps ? 1.0 : 0.0}};
  });
  json methods = json::object();
  const auto grouped = by_group(out.rows);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    json row = concentration_columns(grouped[gi].second);
    row["n_y"] = groups[gi].n_y;
    methods[groups[gi].method].push_back(row);
  }
  out.derived = {{"methods", methods}, {"n", n}, {"delta", cfg.delta}};
  json fams = json::array();
  for (const auto& g : groups)
    fams.push_back({{"group", g.method + "/N_Y=" + std::to_string(g.n_y)},
                    {"implied_eta_star", g.fam.implied_eta_star},
                    {"block_masses_head",
                     std::vector<double>(g.fam.block_masses.begin(),
                                         g.fam.block_masses.begin() + std::min<std::size_t>(4, g.fam.block_masses.size()))}});
  out.metadata = {{"families", fams},
                  {"note", "block masses are an artifact choice (anchor pair of pinned mass plus equal "
                           "cells); value-level table matches are approximate"}};
  return out;
}

RunOutput minimax_demo(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto etas = p["etas"].get<std::vector<double>>();
  const auto env = env_from(p["env"]);
  const auto grid = linspace(p["grid_lo"], p["grid_hi"], p["grid_points"]);
  std::vector<std::string> names;
  std::vector<CredalSpec> specs;
  for (double e : etas) {
    names.push_back("eta=" + num(e));
    specs.push_back(minimax_instance(e, env));
  }
  // Hypotheses: every grid threshold in both orientations, then h = 0.
  const auto reps = static_cast<std::int64_t>(2 * grid.size() + 1);
  RunOutput out;
  out.rows = replicate(cfg, names, reps, [&](std::size_t gi, std::int64_t r, GenSeed) {
    const auto idx = static_cast<std::size_t>(r);
    Hypothesis h = idx < 2 * grid.size()
                       ? Hypothesis(ThresholdClassifier{grid[idx % grid.size()], idx < grid.size() ? 1 : -1})
                       : Hypothesis(LinearLogistic{0.0, -1.0});
    const auto wr = world_risks(h, specs[gi], cfg.quad);
    const double sum = wr.risks[0] + wr.risks[1];
    const auto params = parameters(h);
    return Metrics{{"theta", idx < 2 * grid.size() ? params[0] : std::numeric_limits<double>::infinity()},
                   {"orientation", idx < grid.size() ? 1.0 : -1.0},
                   {"risk_1", wr.risks[0]},
                   {"risk_2", wr.risks[1]},
                   {"risk_sum", sum},
                   {"sum_minus_eta", sum - etas[gi]},
                   {"worst", wr.worst_value}};
  });
  json derived = json::object();
  const auto grouped = by_group(out.rows);
  for (std::size_t gi = 0; gi < etas.size(); ++gi) {
    const auto& rows = grouped[gi].second;
    const auto sums = column(rows, "risk_sum");
    const auto worst = column(rows, "worst");
    const auto below = std::count_if(sums.begin(), sums.end(), [&](double s) { return s < etas[gi] - 1e-9; });
    derived[names[gi]] = {{"eta", etas[gi]},
                          {"min_risk_sum", *std::min_element(sums.begin(), sums.end())},
                          {"identity_violations", below},
                          {"minimax_risk", *std::min_element(worst.begin(), worst.end())},
                          {"floor", etas[gi] / 2.0},
                          {"zero_hypothesis_risk_sum", sums.back()},
                          {"exact_diameter", *diameter_bounds(specs[gi], cfg.quad, true).exact}};
  }
  out.derived = derived;
  return out;
}

RunOutput dro_train(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  std::vector<Environment> envs;
  for (const auto& e : p["environments"]) envs.push_back(env_from(e));
  std::vector<Labeler> labs;
  for (double t : p["thresholds"].get<std::vector<double>>()) labs.push_back(Labeler::threshold(t));
  const CredalSpec spec(envs, labs);
  const auto grid = linspace(p["oracle_lo"], p["oracle_hi"], p["oracle_points"]);
  const auto oracle = brute_force_minimax(spec, grid, cfg.quad);
  const auto erm = brute_force_average(spec, grid, cfg.quad);
  const double erm_worst = world_risks(erm.h, spec, cfg.quad).worst_value;

  struct Group {
    std::string name;
    TrainMode mode;
    std::optional<double> tau;
  };
  std::vector<Group> groups;
  for (const auto& m : p["modes"]) {
    const auto mode = train_mode_from_string(m);
    if (mode == TrainMode::greedy) groups.push_back({"greedy", mode, std::nullopt});
    else
      for (double t : p["taus"].get<std::vector<double>>()) groups.push_back({"lse_tau=" + num(t), mode, t});
  }
  std::vector<std::string> names;
  for (const auto& g : groups) names.push_back(g.name);

  RunOutput out;
  out.rows = replicate(cfg, names, cfg.replications, [&](std::size_t gi, std::int64_t, GenSeed seed) {
    TrainConfig tc;
    tc.mode = groups[gi].mode;
    tc.tau = groups[gi].tau;
    tc.steps = p["steps"];
    tc.step_size = p["step_size"];
    tc.smoothing = p["smoothing"];
    tc.sample_size = p["sample_size"].get<std::size_t>();
    tc.seed = splitmix64(seed.master ^ seed.substream);
    const auto res = train(spec, tc, cfg.quad);
    bool sandwich = true;
    const double w = static_cast<double>(spec.vertex_count());
    for (const auto& s : res.trace)
      if (s.lse_value && (*s.lse_value < s.worst_value - 1e-12 || *s.lse_value > s.worst_value + *tc.tau * std::log(w) + 1e-12))
        sandwich = false;
    // Final state is judged on population risks even when trained on samples.
    const auto fin = world_risks(res.h, spec, cfg.quad);
    const auto par = parameters(res.h);
    return Metrics{{"theta", par[0]},
                   {"worst_value", fin.worst_value},
                   {"oracle_value", oracle.worst_value},
                   {"gap_to_oracle", fin.worst_value - oracle.worst_value},
                   {"erm_worst_value", erm_worst},
                   {"steps", static_cast<double>(res.trace.size() - 1)},
                   {"lse_value", res.trace.back().lse_value.value_or(fin.worst_value)},
                   {"lse_sandwich_ok", sandwich ? 1.0 : 0.0}};
  });
  json derived = {{"oracle_theta", oracle.h.theta},
                  {"oracle_orientation", oracle.h.orientation},
                  {"oracle_value", oracle.worst_value},
                  {"erm_theta", erm.h.theta},
                  {"erm_worst_value", erm_worst}};
  for (const auto& [name, rows] : by_group(out.rows)) {
    const auto gap = column(rows, "gap_to_oracle");
    derived["groups"][name] = {{"max_gap_to_oracle", *std::max_element(gap.begin(), gap.end())},
                               {"mean_worst_value", mean_of(column(rows, "worst_value"))}};
  }
  out.derived = derived;
  return out;
}

Regime auto_regime(LabelKind kind, const std::vector<Labeler>& labs, double noise) {
  if (kind == LabelKind::soft) return Regime::exact_soft;
  if (noise > 0.0) return Regime::closed_form_noisy;
  for (const auto& l : labs)
    if (!l.is_deterministic()) return Regime::conservative_stochastic_hard;
  return Regime::exact_hard_deterministic;
}

RunOutput certificate_experiment(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const std::string path = p["annotations"];
  std::optional<AnnotationTable> table;
  Regime regime = Regime::conservative_stochastic_hard;
  json source;
  if (!path.empty()) {
    table = read_annotations_file(path);
    regime = table->kind() == LabelKind::soft ? Regime::exact_soft : Regime::conservative_stochastic_hard;
    source = {{"annotations", path}};
  } else {
    const auto kind = p["kind"] == "soft" ? LabelKind::soft : LabelKind::hard;
    auto labs = make_labelers(p["labeler"], p["labeler_params"].get<std::vector<double>>(), p["kappa"]);
    const double noise = p["noise"];
    if (noise > 0.0)
      for (auto& l : labs) l = Labeler::noisy(l, noise);
    regime = auto_regime(kind, labs, noise);
    table = sample_annotated(env_from(p["env"]), labs, p["n"].get<std::size_t>(), kind,
                             GenSeed{cfg.seed, fnv1a("certificate")});
    source = {{"generated", true}};
  }
  if (p["regime"] != "auto") regime = regime_from_string(p["regime"]);
  std::optional<double> eps_star;
  if (!p["eps_star"].is_null()) eps_star = p["eps_star"].get<double>();
  const auto m = empirical_disagreement(*table);
  const auto c = certificate(m, cfg.delta, regime, eps_star);
  RunOutput out;
  ResultRow row;
  row.experiment = cfg.experiment;
  row.config_hash = cfg.hash();
  row.group = "certificate";
  row.seed = cfg.seed;
  row.metrics = {{"n", static_cast<double>(c.n)}, {"k", static_cast<double>(c.k)}, {"eta_hat", c.eta_hat},
                 {"epsilon", c.epsilon},          {"penalty_upper", c.penalty_upper}};
  if (c.total_bound) row.metrics.emplace_back("total_bound", *c.total_bound);
  out.rows.push_back(std::move(row));
  out.derived = {{"certificate", certificate_json(c, m)}, {"source", source}};
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

json certificate_json(const Certificate& c, const DisagreementMatrix& m) {
  json values = json::array();
  for (int j = 0; j < m.k; ++j) {
    json row = json::array();
    for (int l = 0; l < m.k; ++l) row.push_back(m.at(j, l));
    values.push_back(row);
  }
  json out = {{"eta_hat", c.eta_hat},
              {"epsilon", c.epsilon},
              {"delta", c.delta},
              {"n", c.n},
              {"k", c.k},
              {"regime", to_string(c.regime)},
              {"conservative", c.conservative()},
              {"penalty_upper", c.penalty_upper},
              {"eps_star_input", c.eps_star_input ? json(*c.eps_star_input) : json(nullptr)},
              {"argmax", {m.argmax.first, m.argmax.second}},
              {"label_kind", to_string(m.kind)},
              {"disagreement", values}};
  if (c.total_bound) out["total_bound"] = *c.total_bound;
  return out;
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
  const auto& e = cfg.experiment;
  RunOutput out;
  if (e == "gating_curve") out = gating_curve(cfg);
  else if (e == "bounds_sweep") out = bounds_sweep(cfg);
  else if (e == "diameter_ablation") out = diameter_ablation(cfg);
  else if (e == "noise_ablation") out = noise_ablation(cfg);
  else if (e == "sample_complexity") out = sample_complexity(cfg);
  else if (e == "mechanism_complexity") out = mechanism_complexity(cfg);
  else if (e == "minimax_demo") out = minimax_demo(cfg);
  else if (e == "dro_train") out = dro_train(cfg);
  else if (e == "certificate") out = certificate_experiment(cfg);
  else throw ConfigError("unknown experiment '" + e + "'");
  out.metadata["quadrature_abs_tol"] = cfg.quad.abs_tol;
  out.metadata["quadrature_method"] = to_string(cfg.quad.method);
  return out;
}

int run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto start = std::chrono::steady_clock::now();
  auto out = run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string stem = cfg.experiment;
  write_csv(out_dir / (stem + ".csv"), out.rows,
            "credal " + stem + " preset=" + cfg.preset + " config_hash=" + cfg.hash() + " generated " + utc_timestamp());
  json summary = summarize(out.rows);
  summary["config_hash"] = cfg.hash();
  summary["seed"] = cfg.seed;
  summary["preset"] = cfg.preset;
  summary["config"] = cfg.to_json();
  summary["derived"] = out.derived;
  summary["metadata"] = out.metadata;
  summary["wall_seconds"] = secs;
  std::ofstream(out_dir / (stem + ".summary.json")) << summary.dump(2) << '\n';
  std::ofstream(out_dir / (stem + ".config.json")) << cfg.to_json().dump(2) << '\n';
  return 0;
}

}  // namespace credal::harness
