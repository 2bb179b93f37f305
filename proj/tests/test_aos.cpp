#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ocl/aos.hpp"
#include "ocl/rng.hpp"
#include "ocl/serialize.hpp"

using namespace ocl;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d_i = 3;
  cfg.d_h = 6;
  cfg.n_enc = 1;
  cfg.n_dec = 1;
  cfg.vocab = 4;
  cfg.ctc_weight = 0.3;
  cfg.max_len = 6;
  return cfg;
}

struct OwnedBatch {
  std::vector<Utterance> utts;
  LearnerBatch view() const {
    LearnerBatch v;
    for (const Utterance& u : utts) {
      v.items.push_back(BatchItem{&u.frames, &u.targets});
      v.frames_total += u.frames.rows();
      v.tokens_total += static_cast<long long>(u.targets.size());
    }
    return v;
  }
};

OwnedBatch make_batch(const ModelConfig& cfg, uint64_t seed, int n_utts, int frames,
                      int tokens) {
  Xoshiro256 rng(seed);
  OwnedBatch b;
  for (int i = 0; i < n_utts; ++i) {
    Utterance u;
    u.frames = Tensor::zeros({frames, cfg.d_i});
    for (double& v : u.frames.data) v = rng.uniform(-1.0, 1.0);
    u.targets.resize(tokens);
    for (int& t : u.targets) t = rng.uniform_int(0, cfg.vocab - 1);
    b.utts.push_back(std::move(u));
  }
  return b;
}

double max_abs_delta(const ParamSet& a, const ParamSet& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i)
    for (size_t k = 0; k < a[i].value.data.size(); ++k)
      m = std::max(m, std::abs(a[i].value.data[k] - b[i].value.data[k]));
  return m;
}

}  // namespace

// ---- eta schedule ------------------------------------------------------------

TEST_CASE("eta: exact reference points") {
  CHECK(eta_enc(100, 900, 1.0) == 0.1);
  CHECK(eta_enc(100, 900, 2.0) == 200.0 / 1100.0);
  CHECK(eta_enc(50, 0, 1.0) == 1.0);  // first-ever batch adopts the adapted model
  CHECK(eta_dec(20, 180, 1.0) == 0.1);
}

TEST_CASE("eta: encoder/decoder symmetry at equal ratios and plasticity") {
  CHECK(eta_enc(100, 900, 2.0) == eta_dec(10, 90, 2.0));
  CHECK(eta_enc(300, 2700, 1.5) == eta_dec(30, 270, 1.5));
}

TEST_CASE("eta: asymptotic freeze as the seen count grows") {
  CHECK(eta_dec(20, 2'000'000'000'000ll, 1.0) < 1e-9);
}

TEST_CASE("eta: domain errors") {
  CHECK_THROWS_AS(eta_enc(0, 10, 1.0), ConfigError);
  CHECK_THROWS_AS(eta_enc(-5, 10, 1.0), ConfigError);
  CHECK_THROWS_AS(eta_enc(5, -1, 1.0), ConfigError);
  CHECK_THROWS_AS(eta_enc(5, 10, 0.5), ConfigError);
}

TEST_CASE("eta: monotone in seen count, batch count and plasticity; range (0,1]") {
  Xoshiro256 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const long long F = rng.uniform_int(1, 1000);
    const long long seen = rng.uniform_int(0, 1'000'000);
    const double tau = 1.0 + 7.0 * rng.uniform();
    const double e = eta_enc(F, seen, tau);
    CHECK(e > 0.0);
    CHECK(e <= 1.0);
    CHECK(eta_enc(F, seen + 1 + rng.uniform_int(0, 1000), tau) < e);
    CHECK(eta_enc(F + 1 + rng.uniform_int(0, 1000), seen + 1, tau) >
          eta_enc(F, seen + 1, tau));
    CHECK(eta_enc(F, seen + 1, tau + 0.5) > eta_enc(F, seen + 1, tau));
  }
}

// ---- configuration -------------------------------------------------------------

TEST_CASE("default and optimized hyper-parameter presets") {
  const AosConfig d = aos_default_config();
  CHECK(d.tau == 1.0);
  CHECK(d.lambda == 0.1);
  CHECK(d.tau2 == 1.0);
  CHECK(d.alpha == 0.01);
  CHECK(d.ctc_weight == 0.3);
  const AosConfig o = aos_optimized_config();
  CHECK(o.tau == 2.0);
  CHECK(o.lambda == 0.1);
  CHECK(o.tau2 == 1.0);
}

TEST_CASE("config validation") {
  AosConfig c = aos_default_config();
  c.tau = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = aos_default_config();
  c.lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

// ---- aos_step -------------------------------------------------------------------

TEST_CASE("aos_step: zero counters adopt the adapted model bit-exactly") {
  const ModelConfig cfg = tiny_config();
  const AosState s0 = aos_init(init_params(cfg, 1), 0, 0);
  const OwnedBatch b = make_batch(cfg, 2, 2, 7, 2);
  const AosState s1 = aos_step(s0, b.view(), aos_default_config(), cfg);
  CHECK(s1.final_model.same_bits(s1.adapted));
  CHECK_FALSE(s1.adapted.same_bits(s0.adapted));
  CHECK(s1.F_seen == 14);
  CHECK(s1.W_seen == 4);
  CHECK(s1.step == 1);
}

TEST_CASE("aos_step: self-distillation fixed point (lambda=1, adapted==final)") {
  const ModelConfig cfg = tiny_config();
  const AosState s0 = aos_init(init_params(cfg, 5), 100, 20);
  AosConfig ac = aos_default_config();
  ac.lambda = 1.0;
  const OwnedBatch b = make_batch(cfg, 6, 2, 7, 2);
  const AosState s1 = aos_step(s0, b.view(), ac, cfg);
  CHECK(max_abs_delta(s1.adapted, s0.adapted) < 1e-12);
  CHECK(max_abs_delta(s1.final_model, s0.final_model) < 1e-12);
}

TEST_CASE("aos_step: telescoped closed form of the running average") {
  const ModelConfig cfg = tiny_config();
  const long long F0 = 400, W0 = 60;
  AosState s = aos_init(init_params(cfg, 9), F0, W0);
  const ParamSet theta0 = s.final_model;
  AosConfig ac = aos_default_config();  // tau = tau2 = 1

  const int n = 10;
  const int frames = 8, tokens = 2, utts = 2;
  const long long F = static_cast<long long>(frames) * utts;
  const long long W = static_cast<long long>(tokens) * utts;
  ParamSet adapted_sum = theta0.zeros_like();
  for (int i = 0; i < n; ++i) {
    const OwnedBatch b = make_batch(cfg, 100 + i, utts, frames, tokens);
    s = aos_step(s, b.view(), ac, cfg);
    for (int e = 0; e < adapted_sum.size(); ++e)
      for (size_t k = 0; k < adapted_sum[e].value.data.size(); ++k)
        adapted_sum[e].value.data[k] += s.adapted[e].value.data[k];
  }
  for (int e = 0; e < s.final_model.size(); ++e) {
    const bool dec = s.final_model[e].group == Group::decoder;
    const double mass0 = static_cast<double>(dec ? W0 : F0);
    const double mass = static_cast<double>(dec ? W : F);
    for (size_t k = 0; k < s.final_model[e].value.data.size(); ++k) {
      const double want = (mass0 * theta0[e].value.data[k] + mass * adapted_sum[e].value.data[k]) /
                          (mass0 + n * mass);
      CHECK(s.final_model[e].value.data[k] == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("aos_step: averaging is convex and matches the per-group lerp form") {
  const ModelConfig cfg = tiny_config();
  const AosState s0 = aos_init(init_params(cfg, 21), 500, 80);
  const AosConfig ac{2.0, 1.0, 0.1, 0.05, 0.3};
  const OwnedBatch b = make_batch(cfg, 22, 3, 7, 2);
  const AosState s1 = aos_step(s0, b.view(), ac, cfg);

  const double eta_e = eta_enc(b.view().frames_total, 500, ac.tau);
  const double eta_d = eta_dec(b.view().tokens_total, 80, ac.tau2);
  for (int e = 0; e < s1.final_model.size(); ++e) {
    const double eta = s1.final_model[e].group == Group::decoder ? eta_d : eta_e;
    for (size_t k = 0; k < s1.final_model[e].value.data.size(); ++k) {
      const double f0 = s0.final_model[e].value.data[k];
      const double a1 = s1.adapted[e].value.data[k];
      CHECK(s1.final_model[e].value.data[k] == std::lerp(f0, a1, eta));
      CHECK(s1.final_model[e].value.data[k] >= std::min(f0, a1));
      CHECK(s1.final_model[e].value.data[k] <= std::max(f0, a1));
      CHECK(s1.final_model[e].value.data[k] - f0 ==
            doctest::Approx(eta * (a1 - f0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("aos_step: norm-flagged entries follow their group's eta") {
  const ModelConfig cfg = tiny_config();
  const AosState s0 = aos_init(init_params(cfg, 31), 1000, 50);
  AosConfig ac = aos_default_config();
  ac.tau = 4.0;  // makes eta_e and eta_d clearly different
  const OwnedBatch b = make_batch(cfg, 32, 2, 8, 2);
  const AosState s1 = aos_step(s0, b.view(), ac, cfg);
  const double eta_e = eta_enc(b.view().frames_total, 1000, ac.tau);
  const double eta_d = eta_dec(b.view().tokens_total, 50, ac.tau2);
  for (int e = 0; e < s1.final_model.size(); ++e) {
    if (!s1.final_model[e].norm_flag) continue;
    const double eta = s1.final_model[e].group == Group::decoder ? eta_d : eta_e;
    for (size_t k = 0; k < s1.final_model[e].value.data.size(); ++k) {
      CHECK(s1.final_model[e].value.data[k] ==
            std::lerp(s0.final_model[e].value.data[k], s1.adapted[e].value.data[k], eta));
    }
  }
}

TEST_CASE("aos_step: deterministic; failing batch leaves the learner untouched") {
  const ModelConfig cfg = tiny_config();
  const AosState s0 = aos_init(init_params(cfg, 41), 300, 40);
  const OwnedBatch b = make_batch(cfg, 42, 2, 7, 2);
  const AosState a = aos_step(s0, b.view(), aos_default_config(), cfg);
  const AosState c = aos_step(s0, b.view(), aos_default_config(), cfg);
  CHECK(a.final_model.same_bits(c.final_model));
  CHECK(a.adapted.same_bits(c.adapted));

  AosLearner learner(init_params(cfg, 41), 300, 40, aos_default_config(), cfg);
  const ParamSet before = learner.inference_params();
  OwnedBatch poisoned = make_batch(cfg, 43, 1, 7, 2);
  poisoned.utts[0].frames.data[3] = std::nan("");
  CHECK_THROWS_AS(learner.step(poisoned.view()), NumericError);
  CHECK(learner.inference_params().same_bits(before));
  CHECK(learner.state().step == 0);
}

TEST_CASE("aos_step: empty batch rejected") {
  const ModelConfig cfg = tiny_config();
  const AosState s0 = aos_init(init_params(cfg, 51), 10, 5);
  LearnerBatch empty;
  CHECK_THROWS_AS(aos_step(s0, empty, aos_default_config(), cfg), ConfigError);
}

// ---- checkpointing ---------------------------------------------------------------

TEST_CASE("checkpoint: aos state round-trips bit-exactly") {
  const ModelConfig cfg = tiny_config();
  AosState s = aos_init(init_params(cfg, 61), 250, 31);
  const OwnedBatch b = make_batch(cfg, 62, 2, 7, 2);
  s = aos_step(s, b.view(), aos_default_config(), cfg);

  Checkpoint ck;
  ck.final_model = s.final_model;
  ck.has_adapted = true;
  ck.adapted = s.adapted;
  ck.F_seen = s.F_seen;
  ck.W_seen = s.W_seen;
  ck.step = s.step;

  const std::string base =
      (std::filesystem::temp_directory_path() / "ocl_aos_ckpt").string();
  save_checkpoint(base, ck);
  const Checkpoint r = load_checkpoint(base);
  CHECK(r.final_model.same_bits(s.final_model));
  CHECK(r.has_adapted);
  CHECK(r.adapted.same_bits(s.adapted));
  CHECK(r.F_seen == s.F_seen);
  CHECK(r.W_seen == s.W_seen);
  CHECK(r.step == s.step);
  // group tags and norm flags survive the round-trip
  for (int i = 0; i < r.final_model.size(); ++i) {
    CHECK(r.final_model[i].group == s.final_model[i].group);
    CHECK(r.final_model[i].norm_flag == s.final_model[i].norm_flag);
  }
}
