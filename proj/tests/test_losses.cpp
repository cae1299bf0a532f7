#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "herdmetric/error.hpp"
#include "herdmetric/losses.hpp"
#include "herdmetric/rng.hpp"

using namespace herdmetric;

namespace {

// Central finite differences on a loss of up to three vectors.
template <typename Value, typename Grad>
void fd_check(Value value, Grad grad, std::vector<Vec> inputs, double h = 1e-6) {
  std::vector<Vec> analytic(inputs.size(), Vec(inputs[0].size(), 0.0));
  grad(inputs, analytic);
  for (std::size_t v = 0; v < inputs.size(); ++v) {
    for (std::size_t i = 0; i < inputs[v].size(); ++i) {
      const double saved = inputs[v][i];
      inputs[v][i] = saved + h;
      const double up = value(inputs);
      inputs[v][i] = saved - h;
      const double dn = value(inputs);
      inputs[v][i] = saved;
      const double fd = (up - dn) / (2 * h);
      const double err = std::abs(analytic[v][i] - fd) /
                         std::max({std::abs(analytic[v][i]), std::abs(fd), 1e-6});
      CHECK(err <= 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("contrastive loss hand values") {
  LossConfig cfg;
  cfg.margin = 1.0;
  const Vec a = {1, 0}, same = {1, 0};
  CHECK(contrastive(a, same, 0, cfg) == 0.0);

  // dissimilar pair at distance >= margin costs nothing
  const Vec far = {1, 3.0};
  CHECK(contrastive(a, far, 1, cfg) == 0.0);

  // similar at d=2 -> 1.0; dissimilar at d=0.5 with margin 1 -> 0.25
  CHECK(contrastive({0, 0}, {0, 2}, 0, cfg) == doctest::Approx(1.0));
  CHECK(contrastive({0, 0}, {0, 0.5}, 1, cfg) == doctest::Approx(0.25));
  CHECK_THROWS_AS(contrastive({0, 0}, {0}, 0, cfg), DimensionError);
}

TEST_CASE("triplet loss hand values") {
  LossConfig cfg;
  cfg.margin = 1.0;
  // d(a,p)=1, d(a,n)=2 with margin 1 sits exactly on the hinge
  CHECK(triplet({0, 0}, {1, 0}, {2, 0}, cfg) == doctest::Approx(0.0));
  // d(a,p)=1, d(a,n)=1.5 -> 0.5
  CHECK(triplet({0, 0}, {1, 0}, {1.5, 0}, cfg) == doctest::Approx(0.5));
  // perfect positive, satisfied margin
  CHECK(triplet({3, 3}, {3, 3}, {3, 4.5}, cfg) == doctest::Approx(0.0));
}

TEST_CASE("reciprocal triplet loss hand values") {
  LossConfig cfg;
  // d(a,p)=1, d(a,n)=2 -> 1 + 1/2
  CHECK(reciprocal_triplet({0, 0}, {1, 0}, {2, 0}, cfg) ==
        doctest::Approx(1.5).epsilon(1e-7));
  // perfect triplet tends to zero
  CHECK(reciprocal_triplet({0, 0}, {0, 0}, {1e9, 0}, cfg) ==
        doctest::Approx(0.0).epsilon(1e-8));
  // the guard keeps the collapsed negative finite
  const double v = reciprocal_triplet({0, 0}, {1, 0}, {0, 0}, cfg);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1.0 + 1.0 / cfg.epsilon));
}

TEST_CASE("softmax cross-entropy hand values") {
  CHECK(softmax_ce({0, 0}, 0) == doctest::Approx(std::log(2.0)));
  CHECK(softmax_ce({100, 0, 0}, 0) == doctest::Approx(0.0).epsilon(1e-9));
  const Vec uniform(7, 1.3);
  CHECK(softmax_ce(uniform, 3) == doctest::Approx(std::log(7.0)));
  CHECK_THROWS_AS(softmax_ce({0, 0}, 2), DimensionError);
}

TEST_CASE("combined loss is softmax plus lambda times metric") {
  LossConfig cfg;
  cfg.lambda = 0.01;
  CHECK(combined(0.6931, 1.5, cfg) == doctest::Approx(0.7081));
  CHECK(combined(0.25, 0.0, cfg) == doctest::Approx(0.25));
  cfg.lambda = 0.0;
  CHECK(combined(0.42, 123.0, cfg) == doctest::Approx(0.42));
}

TEST_CASE("losses are non-negative on random inputs") {
  Rng rng(17);
  LossConfig cfg;
  for (int t = 0; t < 300; ++t) {
    const std::size_t d = 1 + rng.uniform_int(8);
    Vec a(d), p(d), n(d);
    for (std::size_t i = 0; i < d; ++i) {
      a[i] = rng.uniform(-3, 3);
      p[i] = rng.uniform(-3, 3);
      n[i] = rng.uniform(-3, 3);
    }
    CHECK(contrastive(a, p, static_cast<int>(rng.uniform_int(2)), cfg) >= 0.0);
    CHECK(triplet(a, p, n, cfg) >= 0.0);
    CHECK(reciprocal_triplet(a, p, n, cfg) >= 0.0);
    Vec logits(3);
    for (double& v : logits) v = rng.uniform(-10, 10);
    CHECK(softmax_ce(logits, rng.uniform_int(3)) >= 0.0);
  }
}

TEST_CASE("triplet loss is translation invariant") {
  Rng rng(19);
  LossConfig cfg;
  for (int t = 0; t < 100; ++t) {
    Vec a(4), p(4), n(4), shift(4);
    for (int i = 0; i < 4; ++i) {
      a[i] = rng.uniform(-2, 2);
      p[i] = rng.uniform(-2, 2);
      n[i] = rng.uniform(-2, 2);
      shift[i] = rng.uniform(-5, 5);
    }
    const double before = triplet(a, p, n, cfg);
    for (int i = 0; i < 4; ++i) {
      a[i] += shift[i];
      p[i] += shift[i];
      n[i] += shift[i];
    }
    CHECK(triplet(a, p, n, cfg) == doctest::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("rtl is monotone in both distances") {
  LossConfig cfg;
  double prev = reciprocal_from_distances(1.0, 0.25, cfg);
  for (double dn = 0.5; dn <= 4.0; dn += 0.25) {
    const double cur = reciprocal_from_distances(1.0, dn, cfg);
    CHECK(cur < prev);
    prev = cur;
  }
  prev = reciprocal_from_distances(0.1, 2.0, cfg);
  for (double dp = 0.3; dp <= 3.0; dp += 0.2) {
    const double cur = reciprocal_from_distances(dp, 2.0, cfg);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("analytic gradients match finite differences away from kinks") {
  Rng rng(23);
  LossConfig cfg;
  cfg.margin = 1.0;
  int checked = 0;
  while (checked < 120) {
    const std::size_t d = 2 + rng.uniform_int(6);
    Vec a(d), p(d), n(d);
    for (std::size_t i = 0; i < d; ++i) {
      a[i] = rng.uniform(-2, 2);
      p[i] = rng.uniform(-2, 2);
      n[i] = rng.uniform(-2, 2);
    }
    const double dap = euclidean_distance(a, p);
    const double dan = euclidean_distance(a, n);
    // keep clear of the hinge kinks and the d=0 singularities
    if (dap < 1e-2 || dan < 1e-2) continue;
    if (std::abs(dap - dan + cfg.margin) < 1e-2) continue;
    if (std::abs(cfg.margin - dan) < 1e-2 || std::abs(cfg.margin - dap) < 1e-2) continue;
    ++checked;

    fd_check(
        [&](const std::vector<Vec>& in) { return triplet(in[0], in[1], in[2], cfg); },
        [&](const std::vector<Vec>& in, std::vector<Vec>& g) {
          triplet_grad(in[0], in[1], in[2], cfg, g[0], g[1], g[2]);
        },
        {a, p, n});
    fd_check(
        [&](const std::vector<Vec>& in) {
          return reciprocal_triplet(in[0], in[1], in[2], cfg);
        },
        [&](const std::vector<Vec>& in, std::vector<Vec>& g) {
          reciprocal_triplet_grad(in[0], in[1], in[2], cfg, g[0], g[1], g[2]);
        },
        {a, p, n});
    fd_check(
        [&](const std::vector<Vec>& in) { return contrastive(in[0], in[1], 0, cfg); },
        [&](const std::vector<Vec>& in, std::vector<Vec>& g) {
          contrastive_grad(in[0], in[1], 0, cfg, g[0], g[1]);
        },
        {a, p});
    fd_check(
        [&](const std::vector<Vec>& in) { return contrastive(in[0], in[1], 1, cfg); },
        [&](const std::vector<Vec>& in, std::vector<Vec>& g) {
          contrastive_grad(in[0], in[1], 1, cfg, g[0], g[1]);
        },
        {a, n});
    fd_check(
        [&](const std::vector<Vec>& in) { return softmax_ce(in[0], 1); },
        [&](const std::vector<Vec>& in, std::vector<Vec>& g) {
          Vec tmp(in[0].size(), 0.0);
          softmax_ce_grad(in[0], 1, tmp);
          g[0] = tmp;
        },
        {a});
  }
}

TEST_CASE("loss kind helpers") {
  CHECK(parse_loss_kind("softmax-rtl") == LossKind::softmax_rtl);
  CHECK(loss_kind_name(LossKind::tl) == "tl");
  CHECK_THROWS_AS(parse_loss_kind("bogus"), ConfigError);
  CHECK(loss_uses_head(LossKind::softmax_tl));
  CHECK_FALSE(loss_uses_head(LossKind::rtl));
  CHECK(loss_uses_mining(LossKind::contrastive));
  CHECK_FALSE(loss_uses_mining(LossKind::softmax));
  CHECK(loss_is_rtl_family(LossKind::softmax_rtl));
  CHECK_FALSE(loss_is_rtl_family(LossKind::softmax_tl));
}
