#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "credal/dro.hpp"
#include "oracles.hpp"

using namespace credal;
using doctest::Approx;

namespace {

CredalSpec two_thresholds() {
  return CredalSpec({Environment::gaussian(0.0, 1.0)}, {Labeler::threshold(-1.0), Labeler::threshold(1.0)});
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return g;
}

// Direct 0-1 risk of a threshold rule under a discrete law and a tabular
// class-1 probability, both given on the same grid.
double direct_risk(const ThresholdClassifier& h, const std::vector<double>& grid, const std::vector<double>& w,
                   const std::vector<double>& p1) {
  double r = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const bool one = h.orientation * (grid[k] - h.theta) > 0.0;
    r += w[k] * (one ? 1.0 - p1[k] : p1[k]);
  }
  return r;
}

std::vector<std::vector<double>> binary_rows(const std::vector<double>& p1) {
  std::vector<std::vector<double>> rows;
  for (double p : p1) rows.push_back({1.0 - p, p});
  return rows;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("world risks of threshold rules") {
  const auto spec = two_thresholds();
  const auto off = world_risks(ThresholdClassifier{-1.0, 1}, spec);
  CHECK(off.at(0, 0) == Approx(0.0).epsilon(1e-8));
  CHECK(off.at(0, 1) == Approx(oracle::phi(1.0) - oracle::phi(-1.0)).epsilon(1e-7));
  CHECK(off.at(0, 1) == Approx(0.6827).epsilon(1e-4));
  CHECK(off.worst_world.lab == 1);
  CHECK(off.worst_value == off.at(0, 1));

  const auto mid = world_risks(ThresholdClassifier{0.0, 1}, spec);
  CHECK(mid.at(0, 0) == Approx(0.3413).epsilon(1e-4));
  CHECK(mid.at(0, 1) == Approx(mid.at(0, 0)).epsilon(1e-8));

  const auto flipped = world_risks(ThresholdClassifier{-1.0, -1}, spec);
  CHECK(flipped.at(0, 0) == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("world risk of a hypothesis that matches a labeler is zero") {
  const CredalSpec spec({Environment::gaussian(0.5, 2.0), Environment::gaussian(-1.0, 0.5)},
                        {Labeler::threshold(0.3)});
  const auto r = world_risks(ThresholdClassifier{0.3, 1}, spec);
  for (double v : r.risks) CHECK(v == Approx(0.0).epsilon(1e-8));
  const auto lin = world_risks(LinearLogistic{2.0, -0.6}, spec);
  for (double v : lin.risks) CHECK(v == Approx(0.0).epsilon(1e-8));
}

TEST_CASE("world risks against a direct discrete sum") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto grid = linspace(-2.0, 2.0, 9);
    std::vector<std::vector<double>> ws, ps;
    std::vector<Environment> envs;
    std::vector<Labeler> labs;
    for (int i = 0; i < 2; ++i) {
      ws.push_back(oracle::random_simplex(rng, grid.size()));
      envs.push_back(Environment::discrete(grid, ws.back()));
    }
    for (int j = 0; j < 3; ++j) {
      std::vector<double> p1(grid.size());
      for (auto& p : p1) p = u(rng);
      ps.push_back(p1);
      labs.push_back(Labeler::tabular(grid, binary_rows(p1)));
    }
    const CredalSpec spec(envs, labs);
    const ThresholdClassifier h{4.0 * u(rng) - 2.0, u(rng) < 0.5 ? 1 : -1};
    const auto r = world_risks(h, spec);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(r.at(i, j) == Approx(direct_risk(h, grid, ws[i], ps[j])).epsilon(1e-12));
  }
}

TEST_CASE("worst world is the lexicographically first maximiser") {
  const auto r = make_world_risk(2, 2, {0.1, 0.4, 0.4, 0.2});
  CHECK(r.worst_world.env == 0);
  CHECK(r.worst_world.lab == 1);
  CHECK(r.worst_value == 0.4);
  CHECK_THROWS(make_world_risk(2, 2, {0.1, 0.2, 0.3}));
}

TEST_CASE("log-sum-exp examples") {
  const std::vector<double> r{0.0, 0.6827};
  const auto sharp = lse_objective(r, 0.01);
  CHECK(sharp.value == Approx(0.6827).epsilon(1e-6));
  CHECK(sharp.weights[0] < 1e-20);
  CHECK(sharp.weights[1] == Approx(1.0));

  const std::vector<double> eq(5, 0.3);
  const auto flat = lse_objective(eq, 0.2);
  CHECK(flat.value == Approx(0.3 + 0.2 * std::log(5.0)).epsilon(1e-14));
  for (double w : flat.weights) CHECK(w == Approx(0.2).epsilon(1e-14));

  const auto wide = lse_objective(r, 1e9);
  CHECK(wide.weights[0] == Approx(0.5).epsilon(1e-8));
  CHECK(wide.weights[1] == Approx(0.5).epsilon(1e-8));

  CHECK_THROWS_AS(lse_objective(r, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lse_objective(r, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(lse_objective(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST_CASE("log-sum-exp sandwich and limit") {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + trial % 12);
    for (auto& v : r) v = u(rng);
    const double mx = *std::max_element(r.begin(), r.end());
    const double tau = std::pow(10.0, -4.0 * u(rng));
    const auto l = lse_objective(r, tau);
    CHECK(l.value >= mx);
    CHECK(l.value <= mx + tau * std::log(static_cast<double>(r.size())) + 1e-15);
    double s = 0.0;
    for (double w : l.weights) s += w;
    CHECK(s == Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(lse_objective(r, 1e-6).value - mx) <= 1e-4);
  }
}

TEST_CASE("surrogate gradients match finite differences") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QuadratureConfig quad;
  quad.abs_tol = 1e-12;
  int states = 0;
  while (states < 20) {
    const CredalSpec spec({Environment::gaussian(2.0 * u(rng) - 1.0, 0.5 + u(rng)),
                           Environment::gaussian(2.0 * u(rng) - 1.0, 0.5 + u(rng))},
                          {Labeler::sigmoid(1.0 + 4.0 * u(rng), 2.0 * u(rng) - 1.0),
                           Labeler::probit(0.5 + 2.0 * u(rng), 2.0 * u(rng) - 1.0)});
    TrainConfig cfg;
    cfg.mode = TrainMode::lse;
    cfg.tau = 0.02 + 0.2 * u(rng);
    cfg.smoothing = 0.2 + 0.3 * u(rng);
    const Hypothesis h = states % 2 == 0
                             ? Hypothesis{ThresholdClassifier{2.0 * u(rng) - 1.0, u(rng) < 0.5 ? 1 : -1}}
                             : Hypothesis{LinearLogistic{4.0 * u(rng) - 2.0, 2.0 * u(rng) - 1.0}};
    const auto s = surrogate_objective(h, spec, cfg, quad);
    const auto p = parameters(h);
    for (std::size_t d = 0; d < p.size(); ++d) {
      const auto f = [&](double v) {
        auto q = p;
        q[d] = v;
        return surrogate_objective(with_parameters(h, q), spec, cfg, quad).value;
      };
      const double fd = central_difference(f, p[d], 1e-4);
      INFO("state ", states, " param ", d, " analytic ", s.grad[d], " fd ", fd);
      CHECK(std::abs(s.grad[d] - fd) <= 1e-4 * std::max(std::abs(fd), 1e-3));
    }
    ++states;
  }
}

TEST_CASE("greedy surrogate gradient is the worst world's") {
  const auto spec = two_thresholds();
  TrainConfig cfg;
  cfg.smoothing = 0.1;
  const Hypothesis h = ThresholdClassifier{0.4, 1};
  const auto s = surrogate_objective(h, spec, cfg);
  const auto sr = smoothed_risks(h, spec, cfg.smoothing);
  const std::size_t worst = sr.values[0] > sr.values[1] ? 0 : 1;
  CHECK(s.value == sr.values[worst]);
  CHECK(s.grad == sr.grads[worst]);
}

TEST_CASE("grid oracle examples") {
  const auto spec = two_thresholds();
  const std::vector<double> coarse{-1.0, 0.0, 1.0};
  const auto sol = brute_force_minimax(spec, coarse);
  CHECK(sol.h.theta == 0.0);
  CHECK(sol.h.orientation == 1);
  CHECK(sol.worst_value == Approx(0.3413).epsilon(1e-4));

  const auto fine = brute_force_minimax(spec, linspace(-2.0, 2.0, 401));
  CHECK(fine.worst_value <= sol.worst_value + 1e-12);
  CHECK(std::abs(fine.h.theta) < 1e-9);

  const CredalSpec single({Environment::gaussian(0.0, 1.0)}, {Labeler::threshold(0.5)});
  const auto s1 = brute_force_minimax(single, linspace(-1.0, 1.0, 21));
  CHECK(s1.h.theta == Approx(0.5).epsilon(1e-12));
  CHECK(s1.worst_value == Approx(0.0).epsilon(1e-8));

  CHECK_THROWS_AS(brute_force_minimax(spec, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("grid refinement never raises the minimax value") {
  const CredalSpec spec({Environment::gaussian(-0.5, 1.0), Environment::gaussian(1.0, 0.7)},
                        {Labeler::sigmoid(3.0, 0.2), Labeler::threshold(0.6)});
  double prev = 2.0;
  for (int n : {3, 5, 9, 17, 33, 65}) {
    const auto sol = brute_force_minimax(spec, linspace(-2.0, 2.0, n));
    CHECK(sol.worst_value <= prev + 1e-12);
    prev = sol.worst_value;
  }
}

TEST_CASE("training reaches the minimax threshold") {
  const auto spec = two_thresholds();
  const auto oracle_value = brute_force_minimax(spec, linspace(-2.0, 2.0, 401)).worst_value;
  for (auto mode : {TrainMode::greedy, TrainMode::lse}) {
    TrainConfig cfg;
    cfg.mode = mode;
    if (mode == TrainMode::lse) cfg.tau = 0.01;
    cfg.seed = 5;
    const auto res = train(spec, cfg);
    CHECK(res.trace.size() >= 2);
    CHECK(res.trace.back().worst_value - oracle_value <= 0.01);
    if (mode == TrainMode::lse) CHECK(res.trace.back().lse_value.has_value());
  }
}

TEST_CASE("training on a single world is risk minimisation") {
  const CredalSpec spec({Environment::gaussian(0.3, 1.2)}, {Labeler::sigmoid(6.0, -1.2)});
  TrainConfig cfg;
  cfg.seed = 9;
  const auto res = train(spec, cfg);
  const auto best = brute_force_minimax(spec, linspace(-2.0, 2.0, 801));
  CHECK(res.trace.back().worst_value - best.worst_value <= 0.01);
}

TEST_CASE("minimax training is no worse than average-risk training in the worst world") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto grid = linspace(-3.0, 3.0, 601);
  for (int trial = 0; trial < 5; ++trial) {
    const CredalSpec spec({Environment::gaussian(2.0 * u(rng) - 1.0, 0.6 + u(rng)),
                           Environment::gaussian(2.0 * u(rng) - 1.0, 0.6 + u(rng))},
                          {Labeler::threshold(2.0 * u(rng) - 1.0), Labeler::threshold(2.0 * u(rng) - 1.0)});
    const auto erm = brute_force_average(spec, grid);
    const double erm_worst = world_risks(erm.h, spec).worst_value;
    TrainConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.steps = 400;
    const auto res = train(spec, cfg);
    INFO("trial ", trial, " dro ", res.trace.back().worst_value, " erm ", erm_worst);
    CHECK(res.trace.back().worst_value <= erm_worst + 1e-3);
  }
}

TEST_CASE("training configuration errors") {
  const auto spec = two_thresholds();
  TrainConfig cfg;
  cfg.mode = TrainMode::lse;
  CHECK_THROWS_AS(train(spec, cfg), std::invalid_argument);
  cfg.mode = TrainMode::greedy;
  cfg.tau = 0.1;
  CHECK_THROWS_AS(train(spec, cfg), std::invalid_argument);
  cfg.tau.reset();
  cfg.loss = TrainLoss::zero_one;
  CHECK_THROWS_AS(train(spec, cfg), std::invalid_argument);
  cfg.loss = TrainLoss::logistic;
  cfg.backoff = 1.0;
  CHECK_THROWS_AS(train(spec, cfg), std::invalid_argument);
  cfg.backoff = 0.5;
  cfg.orientation = 0;
  CHECK_THROWS_AS(train(spec, cfg), std::invalid_argument);
  cfg.orientation = 1;
  const CredalSpec three({Environment::gaussian(0.0, 1.0)},
                         {Labeler::tabular({0.0}, {{0.2, 0.3, 0.5}})});
  CHECK_THROWS_AS(train(three, cfg), std::invalid_argument);
  CHECK(train_mode_from_string(to_string(TrainMode::lse)) == TrainMode::lse);
  CHECK_THROWS(train_mode_from_string("adam"));
}

TEST_CASE("training is deterministic given the seed") {
  const CredalSpec spec({Environment::gaussian(0.0, 1.0), Environment::gaussian(1.0, 1.0)},
                        {Labeler::threshold(-0.5), Labeler::sigmoid(4.0, -2.0)});
  TrainConfig cfg;
  cfg.seed = 17;
  cfg.sample_size = 300;
  cfg.steps = 50;
  const auto a = train(spec, cfg);
  const auto b = train(spec, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) CHECK(a.trace[k].risks == b.trace[k].risks);
  CHECK(describe(a.h) == describe(b.h));
}

TEST_CASE("worst case over mixtures is attained at a vertex") {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto grid = linspace(-3.0, 3.0, 13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_env = 1 + trial % 3, n_lab = 1 + (trial / 3) % 3;
    std::vector<std::vector<double>> ws, ps;
    std::vector<Environment> envs;
    std::vector<Labeler> labs;
    for (std::size_t i = 0; i < n_env; ++i) {
      ws.push_back(oracle::random_simplex(rng, grid.size()));
      envs.push_back(Environment::discrete(grid, ws.back()));
    }
    for (std::size_t j = 0; j < n_lab; ++j) {
      std::vector<double> p1(grid.size());
      for (auto& p : p1) p = u(rng);
      ps.push_back(p1);
      labs.push_back(Labeler::tabular(grid, binary_rows(p1)));
    }
    const CredalSpec spec(envs, labs);
    const ThresholdClassifier h{6.0 * u(rng) - 3.0, u(rng) < 0.5 ? 1 : -1};
    const double vertex_max = world_risks(h, spec).worst_value;

    const auto a = oracle::random_simplex(rng, n_env);
    const auto b = oracle::random_simplex(rng, n_lab);
    std::vector<double> w(grid.size(), 0.0), p1(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      for (std::size_t i = 0; i < n_env; ++i) w[k] += a[i] * ws[i][k];
      for (std::size_t j = 0; j < n_lab; ++j) p1[k] += b[j] * ps[j][k];
    }
    CHECK(direct_risk(h, grid, w, p1) <= vertex_max + 1e-12);
  }
}

TEST_CASE("decision labeler follows the rule") {
  const auto lab = decision_labeler(ThresholdClassifier{0.5, 1});
  CHECK(lab.prob_one(0.4) == 0.0);
  CHECK(lab.prob_one(0.5) == 0.0);
  CHECK(lab.prob_one(0.6) == 1.0);
  const auto neg = decision_labeler(ThresholdClassifier{0.5, -1});
  CHECK(neg.prob_one(0.4) == 1.0);
  CHECK(neg.prob_one(0.6) == 0.0);
  const auto lin = decision_labeler(LinearLogistic{-2.0, 1.0});
  CHECK(lin.prob_one(0.4) == 1.0);
  CHECK(lin.prob_one(0.6) == 0.0);
  CHECK(describe(ThresholdClassifier{0.25, -1}).find("orientation=-1") != std::string::npos);
  CHECK(parameters(LinearLogistic{2.0, 3.0}) == std::vector{2.0, 3.0});
  const auto moved = with_parameters(ThresholdClassifier{0.0, -1}, std::vector{1.5});
  CHECK(std::get<ThresholdClassifier>(moved).theta == 1.5);
  CHECK(std::get<ThresholdClassifier>(moved).orientation == -1);
}
